//! The formula language: signatures, terms, symbolic index families, the
//! formula AST, free variables, formal negation, and well-formedness.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// A relational signature: plain relations, indexed relation families, and
/// constants. No function symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    relations: BTreeMap<String, usize>,
    /// base name -> (index arity, relation arity); index arity is 1 or 2.
    indexed: BTreeMap<String, (usize, usize)>,
    constants: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignatureError {
    DuplicateName(String),
    ZeroArity(String),
    BadIndexArity { base: String, index_arity: usize },
}

impl fmt::Display for SignatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureError::DuplicateName(n) => write!(f, "duplicate symbol name `{n}`"),
            SignatureError::ZeroArity(n) => write!(f, "relation `{n}` must have positive arity"),
            SignatureError::BadIndexArity { base, index_arity } => {
                write!(f, "indexed family `{base}` has index arity {index_arity}, expected 1 or 2")
            }
        }
    }
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    /// Builds a signature, checking that all names are distinct across
    /// categories and arities are positive.
    pub fn build(
        relations: impl IntoIterator<Item = (String, usize)>,
        indexed: impl IntoIterator<Item = (String, usize, usize)>,
        constants: impl IntoIterator<Item = String>,
    ) -> Result<Self, SignatureError> {
        let mut sig = Signature::new();
        for (name, arity) in relations {
            sig.add_relation(name, arity)?;
        }
        for (base, index_arity, arity) in indexed {
            sig.add_indexed_family(base, index_arity, arity)?;
        }
        for name in constants {
            sig.add_constant(name)?;
        }
        Ok(sig)
    }

    fn check_fresh(&self, name: &str) -> Result<(), SignatureError> {
        if self.relations.contains_key(name)
            || self.indexed.contains_key(name)
            || self.constants.contains(name)
        {
            return Err(SignatureError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    pub fn add_relation(&mut self, name: String, arity: usize) -> Result<(), SignatureError> {
        self.check_fresh(&name)?;
        if arity == 0 {
            return Err(SignatureError::ZeroArity(name));
        }
        self.relations.insert(name, arity);
        Ok(())
    }

    pub fn add_indexed_family(
        &mut self,
        base: String,
        index_arity: usize,
        arity: usize,
    ) -> Result<(), SignatureError> {
        self.check_fresh(&base)?;
        if arity == 0 {
            return Err(SignatureError::ZeroArity(base));
        }
        if index_arity != 1 && index_arity != 2 {
            return Err(SignatureError::BadIndexArity { base, index_arity });
        }
        self.indexed.insert(base, (index_arity, arity));
        Ok(())
    }

    pub fn add_constant(&mut self, name: String) -> Result<(), SignatureError> {
        self.check_fresh(&name)?;
        self.constants.insert(name);
        Ok(())
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn indexed_family(&self, base: &str) -> Option<(usize, usize)> {
        self.indexed.get(base).copied()
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn indexed_families(&self) -> impl Iterator<Item = (&str, usize, usize)> {
        self.indexed.iter().map(|(n, (i, a))| (n.as_str(), *i, *a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(|s| s.as_str())
    }
}

/// A term is a variable or a constant from the ambient signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

/// An index expression in an indexed atom: a bound index variable or a
/// natural-number literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexExpr {
    Var(String),
    Lit(u64),
}

/// A relation symbol occurrence: a plain relation or a member of an indexed
/// family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelName {
    Plain(String),
    Indexed { base: String, indices: Vec<IndexExpr> },
}

impl RelName {
    pub fn base(&self) -> &str {
        match self {
            RelName::Plain(n) => n,
            RelName::Indexed { base, .. } => base,
        }
    }
}

/// An atomic formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub rel: RelName,
    pub args: Vec<Term>,
}

/// A symbolic family of formulas under an infinite conjunction or
/// disjunction. Index variables range over the naturals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexFamily {
    /// An explicit finite list of member formulas.
    FiniteList(Vec<Formula>),
    /// A template with one index variable ranging over the naturals.
    NatIndexed { var: String, template: Box<Formula> },
    /// A template with two index variables ranging over pairs of naturals.
    NatPairIndexed { var1: String, var2: String, template: Box<Formula> },
}

impl IndexFamily {
    /// The index variables bound by this family.
    pub fn bound_index_vars(&self) -> Vec<&str> {
        match self {
            IndexFamily::FiniteList(_) => vec![],
            IndexFamily::NatIndexed { var, .. } => vec![var.as_str()],
            IndexFamily::NatPairIndexed { var1, var2, .. } => {
                vec![var1.as_str(), var2.as_str()]
            }
        }
    }
}

/// The formula AST. Infinite connectives carry symbolic index families;
/// quantifier blocks are nonempty, repetition-free variable lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atomic(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    InfAnd(IndexFamily),
    InfOr(IndexFamily),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: RelName, args: Vec<Term>) -> Self {
        Formula::Atomic(Atom { rel, args })
    }

    pub fn plain_atom(name: &str, args: &[&str]) -> Self {
        Formula::Atomic(Atom {
            rel: RelName::Plain(name.to_string()),
            args: args.iter().map(|a| Term::Var(a.to_string())).collect(),
        })
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn exists(vars: &[&str], body: Formula) -> Self {
        Formula::Exists(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    pub fn forall(vars: &[&str], body: Formula) -> Self {
        Formula::Forall(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    pub fn inf_and_nat(var: &str, template: Formula) -> Self {
        Formula::InfAnd(IndexFamily::NatIndexed {
            var: var.to_string(),
            template: Box::new(template),
        })
    }

    pub fn inf_or_nat(var: &str, template: Formula) -> Self {
        Formula::InfOr(IndexFamily::NatIndexed {
            var: var.to_string(),
            template: Box::new(template),
        })
    }

    /// True if the formula contains no infinite connectives.
    pub fn is_finitary(&self) -> bool {
        match self {
            Formula::Atomic(_) => true,
            Formula::Not(f) => f.is_finitary(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_finitary()),
            Formula::InfAnd(_) | Formula::InfOr(_) => false,
            Formula::Exists(_, f) | Formula::Forall(_, f) => f.is_finitary(),
        }
    }

    /// True if the formula contains no quantifiers (infinite connectives
    /// allowed).
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Atomic(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_quantifier_free()),
            Formula::InfAnd(fam) | Formula::InfOr(fam) => match fam {
                IndexFamily::FiniteList(fs) => fs.iter().all(|f| f.is_quantifier_free()),
                IndexFamily::NatIndexed { template, .. } => template.is_quantifier_free(),
                IndexFamily::NatPairIndexed { template, .. } => template.is_quantifier_free(),
            },
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// True if the given index variable occurs in an index position of some
    /// atom, outside any inner family re-binding the same name.
    pub fn mentions_index_var(&self, var: &str) -> bool {
        match self {
            Formula::Atomic(a) => match &a.rel {
                RelName::Plain(_) => false,
                RelName::Indexed { indices, .. } => indices
                    .iter()
                    .any(|ix| matches!(ix, IndexExpr::Var(v) if v == var)),
            },
            Formula::Not(f) => f.mentions_index_var(var),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(|f| f.mentions_index_var(var)),
            Formula::InfAnd(fam) | Formula::InfOr(fam) => {
                if fam.bound_index_vars().contains(&var) {
                    return false;
                }
                match fam {
                    IndexFamily::FiniteList(fs) => fs.iter().any(|f| f.mentions_index_var(var)),
                    IndexFamily::NatIndexed { template, .. }
                    | IndexFamily::NatPairIndexed { template, .. } => {
                        template.mentions_index_var(var)
                    }
                }
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) => f.mentions_index_var(var),
        }
    }

    /// Substitutes a natural-number literal for an index variable. Stops at
    /// inner families that re-bind the same name.
    pub fn instantiate_index(&self, var: &str, value: u64) -> Formula {
        match self {
            Formula::Atomic(a) => {
                let rel = match &a.rel {
                    RelName::Plain(n) => RelName::Plain(n.clone()),
                    RelName::Indexed { base, indices } => RelName::Indexed {
                        base: base.clone(),
                        indices: indices
                            .iter()
                            .map(|ix| match ix {
                                IndexExpr::Var(v) if v == var => IndexExpr::Lit(value),
                                other => other.clone(),
                            })
                            .collect(),
                    },
                };
                Formula::Atomic(Atom { rel, args: a.args.clone() })
            }
            Formula::Not(f) => Formula::not(f.instantiate_index(var, value)),
            Formula::And(fs) => {
                Formula::And(fs.iter().map(|f| f.instantiate_index(var, value)).collect())
            }
            Formula::Or(fs) => {
                Formula::Or(fs.iter().map(|f| f.instantiate_index(var, value)).collect())
            }
            Formula::InfAnd(fam) => Formula::InfAnd(instantiate_family(fam, var, value)),
            Formula::InfOr(fam) => Formula::InfOr(instantiate_family(fam, var, value)),
            Formula::Exists(vs, f) => {
                Formula::Exists(vs.clone(), Box::new(f.instantiate_index(var, value)))
            }
            Formula::Forall(vs, f) => {
                Formula::Forall(vs.clone(), Box::new(f.instantiate_index(var, value)))
            }
        }
    }
}

fn instantiate_family(fam: &IndexFamily, var: &str, value: u64) -> IndexFamily {
    if fam.bound_index_vars().contains(&var) {
        return fam.clone();
    }
    match fam {
        IndexFamily::FiniteList(fs) => {
            IndexFamily::FiniteList(fs.iter().map(|f| f.instantiate_index(var, value)).collect())
        }
        IndexFamily::NatIndexed { var: v, template } => IndexFamily::NatIndexed {
            var: v.clone(),
            template: Box::new(template.instantiate_index(var, value)),
        },
        IndexFamily::NatPairIndexed { var1, var2, template } => IndexFamily::NatPairIndexed {
            var1: var1.clone(),
            var2: var2.clone(),
            template: Box::new(template.instantiate_index(var, value)),
        },
    }
}

/// The free object variables of a formula. Always finite: templates
/// contribute their own free variables, index variables are not object
/// variables.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match f {
        Formula::Atomic(a) => {
            for t in &a.args {
                if let Term::Var(v) = t {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.clone());
                    }
                }
            }
        }
        Formula::Not(g) => collect_free(g, bound, out),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_free(g, bound, out);
            }
        }
        Formula::InfAnd(fam) | Formula::InfOr(fam) => match fam {
            IndexFamily::FiniteList(fs) => {
                for g in fs {
                    collect_free(g, bound, out);
                }
            }
            IndexFamily::NatIndexed { template, .. }
            | IndexFamily::NatPairIndexed { template, .. } => collect_free(template, bound, out),
        },
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            let depth = bound.len();
            bound.extend(vs.iter().cloned());
            collect_free(g, bound, out);
            bound.truncate(depth);
        }
    }
}

/// Formal negation: the de Morgan dual with negations pushed to atoms.
/// Connectives and quantifiers are dualized, index-family templates are
/// negated pointwise, and the output contains `Not` only directly above
/// atoms.
pub fn formal_negate(f: &Formula) -> Formula {
    negate_nnf(f)
}

fn negate_nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atomic(a) => Formula::not(Formula::Atomic(a.clone())),
        Formula::Not(g) => to_nnf(g),
        Formula::And(fs) => Formula::Or(fs.iter().map(negate_nnf).collect()),
        Formula::Or(fs) => Formula::And(fs.iter().map(negate_nnf).collect()),
        Formula::InfAnd(fam) => Formula::InfOr(negate_family(fam)),
        Formula::InfOr(fam) => Formula::InfAnd(negate_family(fam)),
        Formula::Exists(vs, g) => Formula::Forall(vs.clone(), Box::new(negate_nnf(g))),
        Formula::Forall(vs, g) => Formula::Exists(vs.clone(), Box::new(negate_nnf(g))),
    }
}

fn negate_family(fam: &IndexFamily) -> IndexFamily {
    match fam {
        IndexFamily::FiniteList(fs) => IndexFamily::FiniteList(fs.iter().map(negate_nnf).collect()),
        IndexFamily::NatIndexed { var, template } => IndexFamily::NatIndexed {
            var: var.clone(),
            template: Box::new(negate_nnf(template)),
        },
        IndexFamily::NatPairIndexed { var1, var2, template } => IndexFamily::NatPairIndexed {
            var1: var1.clone(),
            var2: var2.clone(),
            template: Box::new(negate_nnf(template)),
        },
    }
}

fn to_nnf(f: &Formula) -> Formula {
    match f {
        Formula::Atomic(a) => Formula::Atomic(a.clone()),
        Formula::Not(g) => negate_nnf(g),
        Formula::And(fs) => Formula::And(fs.iter().map(to_nnf).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(to_nnf).collect()),
        Formula::InfAnd(fam) => Formula::InfAnd(nnf_family(fam)),
        Formula::InfOr(fam) => Formula::InfOr(nnf_family(fam)),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(to_nnf(g))),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(to_nnf(g))),
    }
}

fn nnf_family(fam: &IndexFamily) -> IndexFamily {
    match fam {
        IndexFamily::FiniteList(fs) => IndexFamily::FiniteList(fs.iter().map(to_nnf).collect()),
        IndexFamily::NatIndexed { var, template } => {
            IndexFamily::NatIndexed { var: var.clone(), template: Box::new(to_nnf(template)) }
        }
        IndexFamily::NatPairIndexed { var1, var2, template } => IndexFamily::NatPairIndexed {
            var1: var1.clone(),
            var2: var2.clone(),
            template: Box::new(to_nnf(template)),
        },
    }
}

/// A well-formedness violation found by [`wellformed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownRelation { name: String },
    ArityMismatch { relation: String, expected: usize, got: usize },
    IndexArityMismatch { base: String, expected: usize, got: usize },
    UnknownConstant { name: String },
    UnboundIndexVar { var: String },
    DuplicateIndexVar { var: String },
    EmptyQuantifierBlock,
    RepeatedBlockVariable { var: String },
    /// An object variable depends on an in-scope index variable, so the
    /// family would free a fresh variable per index.
    IndexDependentVariable { var: String, index_var: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownRelation { name } => write!(f, "unknown relation `{name}`"),
            Violation::ArityMismatch { relation, expected, got } => {
                write!(f, "relation `{relation}` expects {expected} argument(s), got {got}")
            }
            Violation::IndexArityMismatch { base, expected, got } => {
                write!(f, "family `{base}` expects {expected} index(es), got {got}")
            }
            Violation::UnknownConstant { name } => write!(f, "unknown constant `{name}`"),
            Violation::UnboundIndexVar { var } => write!(f, "unbound index variable `{var}`"),
            Violation::DuplicateIndexVar { var } => {
                write!(f, "index variable `{var}` shadows an enclosing binding")
            }
            Violation::EmptyQuantifierBlock => write!(f, "empty quantifier block"),
            Violation::RepeatedBlockVariable { var } => {
                write!(f, "variable `{var}` repeated in quantifier block")
            }
            Violation::IndexDependentVariable { var, index_var } => write!(
                f,
                "object variable `{var}` depends on index variable `{index_var}`; \
                 the family would free a fresh variable per index"
            ),
        }
    }
}

/// Validates a formula against a signature. Returns all violations found
/// rather than stopping at the first.
pub fn wellformed(f: &Formula, sig: &Signature) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    check(f, sig, &mut Vec::new(), &mut violations);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn check(f: &Formula, sig: &Signature, index_vars: &mut Vec<String>, out: &mut Vec<Violation>) {
    match f {
        Formula::Atomic(a) => check_atom(a, sig, index_vars, out),
        Formula::Not(g) => check(g, sig, index_vars, out),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                check(g, sig, index_vars, out);
            }
        }
        Formula::InfAnd(fam) | Formula::InfOr(fam) => {
            let bound = fam.bound_index_vars();
            for v in &bound {
                if index_vars.iter().any(|b| b == v) {
                    out.push(Violation::DuplicateIndexVar { var: v.to_string() });
                }
            }
            if let IndexFamily::NatPairIndexed { var1, var2, .. } = fam {
                if var1 == var2 {
                    out.push(Violation::DuplicateIndexVar { var: var1.clone() });
                }
            }
            let depth = index_vars.len();
            index_vars.extend(bound.iter().map(|v| v.to_string()));
            match fam {
                IndexFamily::FiniteList(fs) => {
                    for g in fs {
                        check(g, sig, index_vars, out);
                    }
                }
                IndexFamily::NatIndexed { template, .. }
                | IndexFamily::NatPairIndexed { template, .. } => {
                    check(template, sig, index_vars, out);
                }
            }
            index_vars.truncate(depth);
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            if vs.is_empty() {
                out.push(Violation::EmptyQuantifierBlock);
            }
            let mut seen = BTreeSet::new();
            for v in vs {
                if !seen.insert(v) {
                    out.push(Violation::RepeatedBlockVariable { var: v.clone() });
                }
            }
            check(g, sig, index_vars, out);
        }
    }
}

fn check_atom(a: &Atom, sig: &Signature, index_vars: &[String], out: &mut Vec<Violation>) {
    let arity = match &a.rel {
        RelName::Plain(name) => match sig.relation_arity(name) {
            Some(ar) => Some(ar),
            None => {
                out.push(Violation::UnknownRelation { name: name.clone() });
                None
            }
        },
        RelName::Indexed { base, indices } => match sig.indexed_family(base) {
            Some((index_arity, arity)) => {
                if indices.len() != index_arity {
                    out.push(Violation::IndexArityMismatch {
                        base: base.clone(),
                        expected: index_arity,
                        got: indices.len(),
                    });
                }
                for ix in indices {
                    if let IndexExpr::Var(v) = ix {
                        if !index_vars.iter().any(|b| b == v) {
                            out.push(Violation::UnboundIndexVar { var: v.clone() });
                        }
                    }
                }
                Some(arity)
            }
            None => {
                out.push(Violation::UnknownRelation { name: base.clone() });
                None
            }
        },
    };
    if let Some(expected) = arity {
        if a.args.len() != expected {
            out.push(Violation::ArityMismatch {
                relation: a.rel.base().to_string(),
                expected,
                got: a.args.len(),
            });
        }
    }
    for t in &a.args {
        match t {
            Term::Const(name) => {
                if !sig.has_constant(name) {
                    out.push(Violation::UnknownConstant { name: name.clone() });
                }
            }
            Term::Var(v) => {
                // An object variable whose name is, or is suffixed by, an
                // in-scope index variable would be a fresh variable per
                // index instance; the family's free variables would then
                // be infinite.
                for ix in index_vars {
                    let suffixed = v
                        .rsplit_once('_')
                        .map(|(_, suffix)| suffix == ix)
                        .unwrap_or(false);
                    if v == ix || suffixed {
                        out.push(Violation::IndexDependentVariable {
                            var: v.clone(),
                            index_var: ix.clone(),
                        });
                    }
                }
            }
        }
    }
}

/// The concrete relation key a ground indexed atom resolves to, e.g.
/// `P_3` or `R_0,1`. Plain relations use their name unchanged.
pub fn concrete_rel_name(rel: &RelName) -> Option<String> {
    match rel {
        RelName::Plain(n) => Some(n.clone()),
        RelName::Indexed { base, indices } => {
            let mut parts = Vec::with_capacity(indices.len());
            for ix in indices {
                match ix {
                    IndexExpr::Lit(n) => parts.push(n.to_string()),
                    IndexExpr::Var(_) => return None,
                }
            }
            Some(format!("{base}_{}", parts.join(",")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{blocks_signature, psi_blocks};
    use crate::model::{satisfies, Assignment, DEFAULT_BUDGET};
    use crate::testutil::{all_structures, test_sig};

    fn p_n_of(var: &str, arg: &str) -> Formula {
        Formula::Atomic(Atom {
            rel: RelName::Indexed {
                base: "P".into(),
                indices: vec![IndexExpr::Var(var.into())],
            },
            args: vec![Term::Var(arg.into())],
        })
    }

    #[test]
    fn free_vars_atomic() {
        let f = Formula::plain_atom("R", &["x", "y"]);
        let fv = free_vars(&f);
        assert_eq!(fv.into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
    }

    #[test]
    fn free_vars_of_block_sentence_is_empty() {
        assert!(free_vars(&psi_blocks()).is_empty());
    }

    #[test]
    fn free_vars_of_template_family() {
        // Conjunction over n of not-P_n(y): the template's free variables
        // minus the index variable.
        let f = Formula::inf_and_nat("n", Formula::not(p_n_of("n", "y")));
        assert_eq!(free_vars(&f).into_iter().collect::<Vec<_>>(), vec!["y"]);
        // Instantiating the index never changes the free variables.
        if let Formula::InfAnd(IndexFamily::NatIndexed { template, .. }) = &f {
            for n in 0..=5 {
                let inst = template.instantiate_index("n", n);
                assert_eq!(free_vars(&inst).into_iter().collect::<Vec<_>>(), vec!["y"]);
            }
        } else {
            unreachable!()
        }
    }

    #[test]
    fn formal_negate_atom() {
        let p = Formula::plain_atom("Q", &["x"]);
        assert_eq!(formal_negate(&p), Formula::not(p.clone()));
    }

    #[test]
    fn formal_negate_dualizes_family_layers() {
        // Conjunction over a of disjunction over b of W_{a,b}(x) dualizes to
        // disjunction over a of conjunction over b of the negated atom.
        let theta = Formula::Atomic(Atom {
            rel: RelName::Indexed {
                base: "W".into(),
                indices: vec![IndexExpr::Var("a".into()), IndexExpr::Var("b".into())],
            },
            args: vec![Term::Var("x".into())],
        });
        let inner = Formula::InfOr(IndexFamily::NatIndexed {
            var: "b".into(),
            template: Box::new(theta.clone()),
        });
        let f = Formula::InfAnd(IndexFamily::NatIndexed {
            var: "a".into(),
            template: Box::new(inner),
        });
        let expected = Formula::InfOr(IndexFamily::NatIndexed {
            var: "a".into(),
            template: Box::new(Formula::InfAnd(IndexFamily::NatIndexed {
                var: "b".into(),
                template: Box::new(Formula::not(theta)),
            })),
        });
        assert_eq!(formal_negate(&f), expected);
    }

    #[test]
    fn formal_negate_swaps_quantifiers() {
        let f = Formula::forall(
            &["x"],
            Formula::exists(&["y"], Formula::plain_atom("R", &["x", "y"])),
        );
        let expected = Formula::exists(
            &["x"],
            Formula::forall(&["y"], Formula::not(Formula::plain_atom("R", &["x", "y"]))),
        );
        assert_eq!(formal_negate(&f), expected);
    }

    #[test]
    fn formal_negate_involution_up_to_atom_double_negation() {
        let f = Formula::forall(
            &["x"],
            Formula::Or(vec![
                Formula::not(Formula::plain_atom("Q", &["x"])),
                Formula::exists(&["y"], Formula::plain_atom("R", &["x", "y"])),
            ]),
        );
        assert_eq!(formal_negate(&formal_negate(&f)), f);
    }

    #[test]
    fn formal_negate_is_extensional_on_small_structures() {
        // Every structure over {Q, R} with up to 3 elements disagrees with
        // the formal negation exactly where it agrees with the formula.
        let f = Formula::forall(
            &["x"],
            Formula::exists(&["y"], Formula::plain_atom("R", &["x", "y"])),
        );
        let neg = formal_negate(&f);
        let asg = Assignment::new();
        for st in all_structures(&["0", "1"]) {
            let direct = satisfies(&st, &f, &asg, DEFAULT_BUDGET).unwrap();
            let dual = satisfies(&st, &neg, &asg, DEFAULT_BUDGET).unwrap();
            assert_eq!(direct.negate(), dual);
        }
    }

    #[test]
    fn wellformed_accepts_block_sentence() {
        assert!(wellformed(&psi_blocks(), &blocks_signature()).is_ok());
    }

    #[test]
    fn wellformed_rejects_wrong_arity() {
        let f = Formula::plain_atom("Q", &["x", "y"]);
        let violations = wellformed(&f, &test_sig()).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ArityMismatch { relation, .. } if relation == "Q")));
    }

    #[test]
    fn wellformed_rejects_index_dependent_variable() {
        // Template P_n(y_n): the object variable varies with the index, so
        // the family would free a fresh variable per member.
        let f = Formula::inf_and_nat("n", p_n_of("n", "y_n"));
        let violations = wellformed(&f, &test_sig()).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::IndexDependentVariable { .. })));
    }

    #[test]
    fn wellformed_rejects_unbound_index_variable() {
        let f = p_n_of("n", "y");
        let violations = wellformed(&f, &test_sig()).unwrap_err();
        assert!(violations.iter().any(|v| matches!(v, Violation::UnboundIndexVar { .. })));
    }

    #[test]
    fn concrete_names() {
        assert_eq!(
            concrete_rel_name(&RelName::Indexed {
                base: "W".into(),
                indices: vec![IndexExpr::Lit(0), IndexExpr::Lit(3)],
            }),
            Some("W_0,3".into())
        );
        assert_eq!(concrete_rel_name(&RelName::Plain("Q".into())), Some("Q".into()));
    }
}
