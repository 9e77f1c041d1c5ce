//! Symbolic toolkit for finitary and infinitary first-order formulas over
//! relational signatures.
//!
//! The crate provides:
//!
//! * a formula language with infinite conjunctions and disjunctions over
//!   symbolic index families ([`formula`], [`parse`]),
//! * quantifier-alternation classification ([`classify`]) and fragment
//!   closure ([`fragment`]),
//! * explicit finite relational structures with three-valued satisfaction,
//!   the alternating-game decider for n-elementary substructures, and a
//!   weak-forcing evaluator specialized to finite structures ([`model`],
//!   [`game`]),
//! * the syntax-directed construction of the elementary formula defining
//!   weak forcing, with enumeration and evaluation ([`elementary`]),
//! * finite presentations of two infinite structure families with exact
//!   closed-form forcing/satisfaction oracles ([`families`]),
//! * Borel-set codes over a finite sentence basis and the code-to-formula
//!   compiler ([`borel`]),
//! * a unified forcing front end that dispatches queries to the applicable
//!   route and reports which route decided ([`forcing`]).
//!
//! All values are immutable after construction and all operations are pure,
//! so shared structures can be evaluated from multiple threads. Index
//! families are countable (naturals and pairs of naturals); cardinal
//! parameters beyond that have no runtime representation.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(test)]
pub(crate) mod testutil;

pub mod borel;
pub mod classify;
pub mod elementary;
pub mod families;
pub mod formula;
pub mod forcing;
pub mod fragment;
pub mod game;
pub mod model;
pub mod parse;

pub use classify::{classify, QuantClass};
pub use elementary::{
    elementary_leaves, eval_elementary, force, parse_elementary, render_elementary,
    ElementaryFormula, Tag,
};
pub use formula::{
    formal_negate, free_vars, wellformed, Atom, Formula, IndexExpr, IndexFamily, RelName,
    Signature, Term, Violation,
};
pub use forcing::{audit, weak_forces, ForcingQuery, ForcingVerdict, RouteTag, StructureRef};
pub use fragment::fragment_closure;
pub use game::n_elementary;
pub use model::{
    is_substructure, satisfies, type_realized, weak_force_finite, Assignment, FiniteStructure,
    TruthValue, DEFAULT_BUDGET,
};
pub use parse::{parse_formula, render_formula, ParseError};
