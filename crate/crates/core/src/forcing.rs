//! Unified front for weak-forcing queries, dispatching to the applicable
//! route: closed-form family oracles for the built-in sentences, the
//! weak-forcing recursion on finite structures, and the elementary-formula
//! route for auditing.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::elementary::{eval_elementary, force};
use crate::families::{
    block_forces_psi, find_reachable_cycle, psi_blocks, psi_tree, BlockConfig, FamilyError,
    TreeSpec,
};
use crate::formula::Formula;
use crate::model::{satisfies, weak_force_finite, Assignment, EvalError, FiniteStructure, TruthValue};

/// The structure a forcing query is about.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureRef {
    Finite(FiniteStructure),
    Tree(TreeSpec),
    Block(BlockConfig),
}

/// A weak-forcing question: does the structure weakly force the formula
/// under the assignment?
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingQuery {
    pub structure: StructureRef,
    pub formula: Formula,
    pub assignment: Assignment,
    pub budget: u64,
}

/// Which route decided a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteTag {
    FiniteCollapse,
    ForceElementary,
    TreeOracle,
    BlockOracle,
}

impl fmt::Display for RouteTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RouteTag::FiniteCollapse => "finite-collapse",
            RouteTag::ForceElementary => "force-elementary",
            RouteTag::TreeOracle => "tree-oracle",
            RouteTag::BlockOracle => "block-oracle",
        };
        write!(f, "{s}")
    }
}

/// A witness surfaced by the deciding route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A realizing tuple for a top-level existential.
    Tuple(Vec<String>),
    /// The nodes of a reachable cycle certifying an infinite path.
    Cycle(Vec<String>),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Tuple(t) => write!(f, "[{}]", t.join(" ")),
            Witness::Cycle(c) => write!(f, "[cycle {}]", c.join(" ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcingVerdict {
    pub value: TruthValue,
    pub route: RouteTag,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingError {
    Eval(EvalError),
    Family(FamilyError),
    /// The (structure kind, formula) pair has no implemented route.
    Unsupported(String),
}

impl fmt::Display for ForcingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingError::Eval(e) => write!(f, "{e}"),
            ForcingError::Family(e) => write!(f, "{e}"),
            ForcingError::Unsupported(what) => write!(f, "unsupported query: {what}"),
        }
    }
}

impl From<EvalError> for ForcingError {
    fn from(e: EvalError) -> Self {
        ForcingError::Eval(e)
    }
}

impl From<FamilyError> for ForcingError {
    fn from(e: FamilyError) -> Self {
        ForcingError::Family(e)
    }
}

/// Answers a weak-forcing query. Family oracles handle their built-in
/// sentences in closed form; finite structures go through the
/// weak-forcing recursion. Unknown arises only from budget exhaustion on
/// the finite-structure route.
pub fn weak_forces(q: &ForcingQuery) -> Result<ForcingVerdict, ForcingError> {
    match &q.structure {
        StructureRef::Tree(spec) => {
            if q.formula != psi_tree() {
                return Err(ForcingError::Unsupported(
                    "the tree oracle only answers the built-in tree sentence".to_string(),
                ));
            }
            let cycle = find_reachable_cycle(spec)?;
            Ok(ForcingVerdict {
                value: TruthValue::from_bool(cycle.is_some()),
                route: RouteTag::TreeOracle,
                witness: cycle.map(Witness::Cycle),
            })
        }
        StructureRef::Block(config) => {
            if q.formula != psi_blocks() {
                return Err(ForcingError::Unsupported(
                    "the block oracle only answers the built-in block sentence".to_string(),
                ));
            }
            let forced = block_forces_psi(config)?;
            Ok(ForcingVerdict {
                value: TruthValue::from_bool(forced),
                route: RouteTag::BlockOracle,
                witness: None,
            })
        }
        StructureRef::Finite(st) => {
            let value = weak_force_finite(st, &q.formula, &q.assignment, q.budget)?;
            let witness = match (&value, &q.formula) {
                (TruthValue::True, Formula::Exists(vars, body)) => {
                    find_witness(st, vars, body, &q.assignment, q.budget)
                }
                _ => None,
            };
            Ok(ForcingVerdict { value, route: RouteTag::FiniteCollapse, witness })
        }
    }
}

/// First tuple witnessing a top-level existential, in universe order.
fn find_witness(
    st: &FiniteStructure,
    vars: &[String],
    body: &Formula,
    asg: &Assignment,
    budget: u64,
) -> Option<Witness> {
    let n = st.universe().len();
    let k = vars.len();
    let mut counter = alloc::vec![0usize; k];
    loop {
        let mut asg2 = asg.clone();
        let tuple: Vec<String> = counter.iter().map(|&c| st.universe()[c].clone()).collect();
        for (v, e) in vars.iter().zip(&tuple) {
            asg2 = asg2.bind(v, e);
        }
        if satisfies(st, body, &asg2, budget).ok()?.is_true() {
            return Some(Witness::Tuple(tuple));
        }
        let mut i = 0;
        loop {
            if i == k {
                return None;
            }
            counter[i] += 1;
            if counter[i] < n {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
}

/// One route's verdict inside an audit report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub route: RouteTag,
    pub value: TruthValue,
}

/// The verdicts of every applicable route, and whether all decided
/// verdicts coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
    pub agreement: bool,
}

/// Runs every applicable route and reports agreement. Only finite
/// structures are decidable by more than one route: the weak-forcing
/// recursion and evaluation of the forcing-defining elementary formula.
pub fn audit(q: &ForcingQuery) -> Result<AuditReport, ForcingError> {
    let st = match &q.structure {
        StructureRef::Finite(st) => st,
        _ => {
            return Err(ForcingError::Unsupported(format!(
                "audit requires a query decidable by at least two routes; {} queries have one",
                match &q.structure {
                    StructureRef::Tree(_) => "tree",
                    StructureRef::Block(_) => "block",
                    StructureRef::Finite(_) => unreachable!(),
                }
            )))
        }
    };
    let collapse = weak_force_finite(st, &q.formula, &q.assignment, q.budget)?;
    let elementary = eval_elementary(st, &force(&q.formula), &q.assignment, q.budget)?;
    let entries = alloc::vec![
        AuditEntry { route: RouteTag::FiniteCollapse, value: collapse.clone() },
        AuditEntry { route: RouteTag::ForceElementary, value: elementary.clone() },
    ];
    let decided: Vec<&TruthValue> =
        entries.iter().map(|e| &e.value).filter(|v| v.is_decided()).collect();
    let agreement = decided.windows(2).all(|w| w[0] == w[1]);
    Ok(AuditReport { entries, agreement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{psi_blocks, BlockConfig, TreeSpec};
    use crate::model::DEFAULT_BUDGET;
    use crate::parse::parse_formula;
    use crate::testutil::{all_structures, structure, test_sig};

    fn query(structure: StructureRef, formula: Formula) -> ForcingQuery {
        ForcingQuery { structure, formula, assignment: Assignment::new(), budget: DEFAULT_BUDGET }
    }

    #[test]
    fn finite_route_matches_satisfaction_on_finitary_sentences() {
        let st = structure(&["a"], &[("Q", &["a"])]);
        let f = parse_formula("(exists (x) (atom Q x))", &test_sig()).unwrap();
        let verdict = weak_forces(&query(StructureRef::Finite(st.clone()), f.clone())).unwrap();
        assert_eq!(verdict.route, RouteTag::FiniteCollapse);
        assert_eq!(verdict.value, satisfies(&st, &f, &Assignment::new(), DEFAULT_BUDGET).unwrap());
        assert_eq!(verdict.witness, Some(Witness::Tuple(vec!["a".to_string()])));
    }

    #[test]
    fn tree_route_produces_cycle_certificate() {
        let spec = TreeSpec::RegularTree {
            nodes: vec!["r".into()],
            root: "r".into(),
            edges: vec![("r".into(), 0, "r".into())],
        };
        let verdict =
            weak_forces(&query(StructureRef::Tree(spec), crate::families::psi_tree())).unwrap();
        assert_eq!(verdict.route, RouteTag::TreeOracle);
        assert!(verdict.value.is_true());
        assert_eq!(verdict.witness, Some(Witness::Cycle(vec!["r".to_string()])));
    }

    #[test]
    fn tree_route_rejects_other_formulas() {
        let spec = TreeSpec::FiniteTree { nodes: vec![vec![]] };
        let err = weak_forces(&query(StructureRef::Tree(spec), psi_blocks())).unwrap_err();
        assert!(matches!(err, ForcingError::Unsupported(_)));
    }

    #[test]
    fn block_route_forces_while_truth_fails() {
        let config = BlockConfig::initial();
        assert!(!crate::families::block_satisfies_psi(&config));
        let verdict = weak_forces(&query(StructureRef::Block(config), psi_blocks())).unwrap();
        assert_eq!(verdict.route, RouteTag::BlockOracle);
        assert!(verdict.value.is_true());
    }

    #[test]
    fn audit_agrees_on_quantifier_free_formulas() {
        let st = structure(&["a", "b"], &[("R", &["a", "b"])]);
        let f = parse_formula("(or (atom R x y) (atom Q x))", &test_sig()).unwrap();
        let q = ForcingQuery {
            structure: StructureRef::Finite(st),
            formula: f,
            assignment: Assignment::new().bind("x", "a").bind("y", "b"),
            budget: DEFAULT_BUDGET,
        };
        let report = audit(&q).unwrap();
        assert!(report.agreement);
        assert_eq!(report.entries.len(), 2);
    }

    #[test]
    fn audit_sweep_over_small_structures() {
        let formulas = [
            "(forall (x) (exists (y) (atom R x y)))",
            "(exists (x) (and (atom Q x) (not (atom R x x))))",
            "(not (exists (x) (atom Q x)))",
        ];
        for st in all_structures(&["0", "1"]) {
            for src in formulas {
                let q = query(
                    StructureRef::Finite(st.clone()),
                    parse_formula(src, &test_sig()).unwrap(),
                );
                let report = audit(&q).unwrap();
                assert!(report.agreement, "{src}");
            }
        }
    }

    #[test]
    fn audit_requires_multiple_routes() {
        let q = query(StructureRef::Tree(TreeSpec::FiniteTree { nodes: vec![vec![]] }),
            crate::families::psi_tree());
        assert!(matches!(audit(&q), Err(ForcingError::Unsupported(_))));
    }

    #[test]
    fn negation_law_at_the_front_door() {
        let st = structure(&["a", "b"], &[("Q", &["b"]), ("R", &["b", "a"])]);
        let formulas = [
            "(exists (x) (atom Q x))",
            "(forall (x) (exists (y) (atom R x y)))",
        ];
        for src in formulas {
            let f = parse_formula(src, &test_sig()).unwrap();
            let pos = weak_forces(&query(StructureRef::Finite(st.clone()), f.clone())).unwrap();
            let neg =
                weak_forces(&query(StructureRef::Finite(st.clone()), Formula::not(f))).unwrap();
            assert_eq!(pos.value.negate(), neg.value, "{src}");
        }
    }

    #[test]
    fn upward_transfer_of_low_rank_existentials() {
        // For substructures, truth of rank-1 existential formulas moves up.
        let b = structure(&["a", "b"], &[("Q", &["a"]), ("R", &["a", "b"])]);
        let a = b.restrict_to(&["a".to_string()]).unwrap();
        let f = parse_formula("(exists (x) (atom Q x))", &test_sig()).unwrap();
        assert_eq!(crate::classify::classify(&f).exists_rank, 1);
        let on_a = weak_forces(&query(StructureRef::Finite(a), f.clone())).unwrap();
        let on_b = weak_forces(&query(StructureRef::Finite(b), f)).unwrap();
        assert!(on_a.value.is_true());
        assert!(on_b.value.is_true());
    }
}
