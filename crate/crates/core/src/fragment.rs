//! Fragment closure: the smallest set containing a formula and closed under
//! subformula-templates and one layer of negation per member.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::formula::{Formula, IndexFamily};

/// Computes the closure of `f` under subformula-templates and negation.
/// Infinite families contribute their template as a single member;
/// instances are not enumerated. The negation of a member `¬g` is `g`
/// (double negations are not stacked), so the result is finite and closed:
/// every member's subformula-templates and negation are again members.
pub fn fragment_closure(f: &Formula) -> BTreeSet<Formula> {
    let mut members = BTreeSet::new();
    let mut work: Vec<Formula> = Vec::new();
    work.push(f.clone());
    while let Some(g) = work.pop() {
        if !members.insert(g.clone()) {
            continue;
        }
        let neg = match &g {
            Formula::Not(inner) => (**inner).clone(),
            other => Formula::Not(Box::new(other.clone())),
        };
        work.push(neg);
        for sub in immediate_subformulas(&g) {
            work.push(sub);
        }
    }
    members
}

fn immediate_subformulas(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Atomic(_) => Vec::new(),
        Formula::Not(g) => alloc::vec![(**g).clone()],
        Formula::And(fs) | Formula::Or(fs) => fs.clone(),
        Formula::InfAnd(fam) | Formula::InfOr(fam) => match fam {
            IndexFamily::FiniteList(fs) => fs.clone(),
            IndexFamily::NatIndexed { template, .. }
            | IndexFamily::NatPairIndexed { template, .. } => alloc::vec![(**template).clone()],
        },
        Formula::Exists(_, g) | Formula::Forall(_, g) => alloc::vec![(**g).clone()],
    }
}
