//! Quantifier-alternation classification.
//!
//! Two hierarchies are computed. The existential/universal ranks count
//! alternating quantifier blocks only: infinite conjunctions and
//! disjunctions quantify over all family members without raising the rank.
//! The sigma/pi ranks additionally count an infinite disjunction as an
//! existential block and an infinite conjunction as a universal block.
//! Classes are cumulative: a formula of universal rank n also has
//! existential rank at most n + 1, witnessed by a vacuous leading block.

use crate::formula::{Formula, IndexFamily};

/// Minimal alternation ranks of a formula. A quantifier-free formula has
/// all ranks 0. The sigma/pi ranks are `None` when no finite level
/// contains the formula; this cannot occur for families given by a single
/// template, whose instances all share one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantClass {
    pub exists_rank: u32,
    pub forall_rank: u32,
    pub sigma_rank: Option<u32>,
    pub pi_rank: Option<u32>,
}

/// A (rank starting existentially, rank starting universally) pair under
/// one counting discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ranks {
    e: u32,
    a: u32,
}

impl Ranks {
    const ATOMIC: Ranks = Ranks { e: 0, a: 0 };

    fn negate(self) -> Ranks {
        Ranks { e: self.a, a: self.e }
    }

    fn join(self, other: Ranks) -> Ranks {
        Ranks { e: self.e.max(other.e), a: self.a.max(other.a) }
    }

    /// Ranks after prefixing an existential block: the block merges into a
    /// leading existential block, or sits above a universal body as one
    /// more alternation, whichever is smaller.
    fn exists_block(self) -> Ranks {
        let e = self.e.max(1).min(self.a + 1);
        Ranks { e, a: e + 1 }
    }

    fn forall_block(self) -> Ranks {
        let a = self.a.max(1).min(self.e + 1);
        Ranks { e: a + 1, a }
    }
}

/// Computes the minimal ranks of a well-formed formula, bottom-up.
pub fn classify(f: &Formula) -> QuantClass {
    let ea = rank(f, false);
    let sp = rank(f, true);
    QuantClass {
        exists_rank: ea.e,
        forall_rank: ea.a,
        sigma_rank: Some(sp.e),
        pi_rank: Some(sp.a),
    }
}

fn rank(f: &Formula, count_infinite: bool) -> Ranks {
    match f {
        Formula::Atomic(_) => Ranks::ATOMIC,
        Formula::Not(g) => rank(g, count_infinite).negate(),
        Formula::And(fs) | Formula::Or(fs) => fs
            .iter()
            .map(|g| rank(g, count_infinite))
            .fold(Ranks::ATOMIC, Ranks::join),
        Formula::InfAnd(fam) => {
            let body = family_rank(fam, count_infinite);
            if count_infinite {
                body.forall_block()
            } else {
                body
            }
        }
        Formula::InfOr(fam) => {
            let body = family_rank(fam, count_infinite);
            if count_infinite {
                body.exists_block()
            } else {
                body
            }
        }
        Formula::Exists(_, g) => rank(g, count_infinite).exists_block(),
        Formula::Forall(_, g) => rank(g, count_infinite).forall_block(),
    }
}

fn family_rank(fam: &IndexFamily, count_infinite: bool) -> Ranks {
    match fam {
        IndexFamily::FiniteList(fs) => fs
            .iter()
            .map(|g| rank(g, count_infinite))
            .fold(Ranks::ATOMIC, Ranks::join),
        IndexFamily::NatIndexed { template, .. }
        | IndexFamily::NatPairIndexed { template, .. } => rank(template, count_infinite),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::psi_blocks;
    use crate::formula::{formal_negate, Atom, IndexExpr, RelName, Term};
    use alloc::boxed::Box;
    use alloc::vec;

    fn p_i(arg: &str) -> Formula {
        Formula::Atomic(Atom {
            rel: RelName::Indexed { base: "P".into(), indices: vec![IndexExpr::Var("i".into())] },
            args: vec![Term::Var(arg.into())],
        })
    }

    #[test]
    fn atomic_ranks_are_zero() {
        let qc = classify(&Formula::plain_atom("Q", &["x"]));
        assert_eq!(
            qc,
            QuantClass {
                exists_rank: 0,
                forall_rank: 0,
                sigma_rank: Some(0),
                pi_rank: Some(0)
            }
        );
    }

    #[test]
    fn infinite_conjunction_of_existentials() {
        // A conjunction over i of (exists x) P_i(x): the infinite
        // conjunction does not count an alternation, so the formula stays
        // existential of rank 1; in the sigma/pi counting the conjunction
        // acts as a universal block over the rank-1 members.
        let f = Formula::inf_and_nat("i", Formula::exists(&["x"], p_i("x")));
        let qc = classify(&f);
        assert_eq!(qc.exists_rank, 1);
        assert_eq!(qc.forall_rank, 2);
        assert_eq!(qc.pi_rank, Some(2));
        // Existential of rank 1 but not sigma of rank 1.
        assert!(qc.sigma_rank.unwrap() > 1);
        assert_eq!(qc.sigma_rank, Some(3));
    }

    #[test]
    fn block_sentence_ranks() {
        let qc = classify(&psi_blocks());
        assert_eq!(qc.forall_rank, 2);
        assert_eq!(qc.exists_rank, 3);
        assert_eq!(qc.pi_rank, Some(3));
        assert_eq!(qc.sigma_rank, Some(4));
    }

    #[test]
    fn negation_swaps_ranks() {
        let samples = vec![
            Formula::exists(&["x"], Formula::plain_atom("Q", &["x"])),
            Formula::forall(&["x"], Formula::exists(&["y"], Formula::plain_atom("R", &["x", "y"]))),
            psi_blocks(),
            Formula::inf_or_nat("i", p_i("y")),
        ];
        for f in samples {
            let qc = classify(&f);
            let neg = classify(&Formula::not(f.clone()));
            assert_eq!(neg.exists_rank, qc.forall_rank);
            assert_eq!(neg.forall_rank, qc.exists_rank);
            assert_eq!(neg.sigma_rank, qc.pi_rank);
            assert_eq!(neg.pi_rank, qc.sigma_rank);
            // Formal negation has the same ranks as plain negation.
            let fneg = classify(&formal_negate(&f));
            assert_eq!(fneg.exists_rank, neg.exists_rank);
            assert_eq!(fneg.forall_rank, neg.forall_rank);
        }
    }

    #[test]
    fn monotone_between_hierarchies() {
        let samples = vec![
            psi_blocks(),
            Formula::inf_and_nat("i", Formula::exists(&["x"], p_i("x"))),
            Formula::exists(&["x"], Formula::inf_or_nat("i", p_i("x"))),
        ];
        for f in samples {
            let qc = classify(&f);
            assert!(qc.exists_rank <= qc.sigma_rank.unwrap());
            assert!(qc.forall_rank <= qc.pi_rank.unwrap());
        }
    }

    #[test]
    fn quantifier_free_infinitary_ranks() {
        let f = Formula::inf_or_nat("i", p_i("x"));
        let qc = classify(&f);
        assert_eq!((qc.exists_rank, qc.forall_rank), (0, 0));
        assert_eq!(qc.sigma_rank, Some(1));
        assert_eq!(qc.pi_rank, Some(2));
    }
}
