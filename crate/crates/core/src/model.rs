//! Explicit finite relational structures and their evaluators: three-valued
//! satisfaction, substructure testing, type realization, and the
//! weak-forcing recursion specialized to finite structures.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{free_vars, Atom, Formula, IndexExpr, IndexFamily, RelName, Term};
use crate::parse::render_formula;

/// Default instantiation budget for infinite families.
pub const DEFAULT_BUDGET: u64 = 64;

/// A concrete relation: a plain relation (no indices) or one member of an
/// indexed family, e.g. `P_3` or `R_0,1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelKey {
    pub base: String,
    pub indices: Vec<u64>,
}

impl RelKey {
    pub fn plain(base: &str) -> Self {
        RelKey { base: base.to_string(), indices: Vec::new() }
    }

    pub fn indexed(base: &str, indices: &[u64]) -> Self {
        RelKey { base: base.to_string(), indices: indices.to_vec() }
    }

    /// The textual key used in structure files: `P`, `P_3`, `R_0,1`.
    pub fn concrete_name(&self) -> String {
        if self.indices.is_empty() {
            self.base.clone()
        } else {
            let mut s = self.base.clone();
            s.push('_');
            for (i, ix) in self.indices.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&ix.to_string());
            }
            s
        }
    }

    /// Parses a textual key. A suffix after the first `_` consisting of
    /// comma-separated digits marks an indexed instance; anything else is
    /// a plain relation name.
    pub fn parse_concrete(name: &str) -> Self {
        if let Some((base, rest)) = name.split_once('_') {
            if !base.is_empty()
                && !rest.is_empty()
                && rest.split(',').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
            {
                let indices = rest.split(',').map(|p| p.parse().unwrap()).collect();
                return RelKey { base: base.to_string(), indices };
            }
        }
        RelKey::plain(name)
    }
}

/// Declares that every member of an indexed family matching a pattern
/// holds of the listed tuples. A `None` pattern entry is a wildcard over
/// all naturals. This is the only way a finite structure can give an
/// element infinite support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformDecl {
    pub base: String,
    pub pattern: Vec<Option<u64>>,
    pub tuples: BTreeSet<Vec<String>>,
}

/// An explicit finite relational structure. Relation tables are finite;
/// each element tuple satisfies finitely many indexed relations unless a
/// uniform declaration says otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteStructure {
    universe: Vec<String>,
    relations: BTreeMap<RelKey, BTreeSet<Vec<String>>>,
    constants: BTreeMap<String, String>,
    uniform: Vec<UniformDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureError {
    EmptyUniverse,
    DuplicateElement(String),
    UnknownElement(String),
    ArityInconsistent { relation: String, expected: usize, got: usize },
    SignatureMismatch(String),
}

impl fmt::Display for StructureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureError::EmptyUniverse => write!(f, "universe must be nonempty"),
            StructureError::DuplicateElement(e) => write!(f, "duplicate element `{e}`"),
            StructureError::UnknownElement(e) => write!(f, "element `{e}` not in universe"),
            StructureError::ArityInconsistent { relation, expected, got } => {
                write!(f, "relation `{relation}`: tuple arity {got}, expected {expected}")
            }
            StructureError::SignatureMismatch(what) => write!(f, "signature mismatch: {what}"),
        }
    }
}

impl FiniteStructure {
    pub fn new(universe: Vec<String>) -> Result<Self, StructureError> {
        if universe.is_empty() {
            return Err(StructureError::EmptyUniverse);
        }
        let mut seen = BTreeSet::new();
        for e in &universe {
            if !seen.insert(e.clone()) {
                return Err(StructureError::DuplicateElement(e.clone()));
            }
        }
        Ok(FiniteStructure { universe, ..Default::default() })
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn contains_element(&self, e: &str) -> bool {
        self.universe.iter().any(|u| u == e)
    }

    pub fn add_fact(&mut self, key: RelKey, tuple: Vec<String>) -> Result<(), StructureError> {
        for e in &tuple {
            if !self.contains_element(e) {
                return Err(StructureError::UnknownElement(e.clone()));
            }
        }
        let entry = self.relations.entry(key.clone()).or_default();
        if let Some(first) = entry.iter().next() {
            if first.len() != tuple.len() {
                return Err(StructureError::ArityInconsistent {
                    relation: key.concrete_name(),
                    expected: first.len(),
                    got: tuple.len(),
                });
            }
        }
        entry.insert(tuple);
        Ok(())
    }

    pub fn set_constant(&mut self, name: &str, element: &str) -> Result<(), StructureError> {
        if !self.contains_element(element) {
            return Err(StructureError::UnknownElement(element.to_string()));
        }
        self.constants.insert(name.to_string(), element.to_string());
        Ok(())
    }

    pub fn add_uniform(&mut self, decl: UniformDecl) -> Result<(), StructureError> {
        for t in &decl.tuples {
            for e in t {
                if !self.contains_element(e) {
                    return Err(StructureError::UnknownElement(e.clone()));
                }
            }
        }
        self.uniform.push(decl);
        Ok(())
    }

    pub fn relations(&self) -> impl Iterator<Item = (&RelKey, &BTreeSet<Vec<String>>)> {
        self.relations.iter()
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, &str)> {
        self.constants.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn constant(&self, name: &str) -> Option<&str> {
        self.constants.get(name).map(|s| s.as_str())
    }

    pub fn uniform_decls(&self) -> &[UniformDecl] {
        &self.uniform
    }

    /// Whether a ground relation holds of a tuple, consulting tables and
    /// uniform declarations.
    pub fn rel_holds(&self, key: &RelKey, tuple: &[String]) -> bool {
        if let Some(table) = self.relations.get(key) {
            if table.contains(tuple) {
                return true;
            }
        }
        self.uniform.iter().any(|d| {
            d.base == key.base
                && d.pattern.len() == key.indices.len()
                && d.pattern
                    .iter()
                    .zip(&key.indices)
                    .all(|(p, ix)| p.map(|v| v == *ix).unwrap_or(true))
                && d.tuples.contains(tuple)
        })
    }

    /// The induced substructure on a subset of the universe. Constants not
    /// interpreted inside the subset are dropped.
    pub fn restrict_to(&self, elements: &[String]) -> Result<FiniteStructure, StructureError> {
        let mut sub = FiniteStructure::new(elements.to_vec())?;
        for e in elements {
            if !self.contains_element(e) {
                return Err(StructureError::UnknownElement(e.clone()));
            }
        }
        for (key, table) in &self.relations {
            for tuple in table {
                if tuple.iter().all(|e| sub.contains_element(e)) {
                    sub.add_fact(key.clone(), tuple.clone())?;
                }
            }
        }
        for (name, elem) in &self.constants {
            if sub.contains_element(elem) {
                sub.set_constant(name, elem)?;
            }
        }
        for d in &self.uniform {
            let tuples: BTreeSet<Vec<String>> = d
                .tuples
                .iter()
                .filter(|t| t.iter().all(|e| sub.contains_element(e)))
                .cloned()
                .collect();
            if !tuples.is_empty() {
                sub.add_uniform(UniformDecl { base: d.base.clone(), pattern: d.pattern.clone(), tuples })?;
            }
        }
        Ok(sub)
    }
}

/// A variable assignment into a structure's universe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(pub BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn bind(mut self, var: &str, element: &str) -> Self {
        self.0.insert(var.to_string(), element.to_string());
        self
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(|s| s.as_str())
    }
}

/// Three-valued evaluation result. `Unknown` marks budget exhaustion on an
/// infinite family, carrying the offending subformula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TruthValue {
    True,
    False,
    Unknown { subformula: String },
}

impl TruthValue {
    pub fn is_true(&self) -> bool {
        matches!(self, TruthValue::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, TruthValue::False)
    }

    pub fn is_decided(&self) -> bool {
        !matches!(self, TruthValue::Unknown { .. })
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }

    pub fn negate(self) -> Self {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            u => u,
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthValue::True => write!(f, "true"),
            TruthValue::False => write!(f, "false"),
            TruthValue::Unknown { subformula } => {
                write!(f, "unknown (budget exhausted at {subformula})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnboundVariable(String),
    UnknownConstant(String),
    UnresolvedIndex(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            EvalError::UnknownConstant(c) => write!(f, "constant `{c}` not interpreted"),
            EvalError::UnresolvedIndex(v) => write!(f, "index variable `{v}` not instantiated"),
        }
    }
}

type Env = BTreeMap<String, String>;

fn term_value<'a>(
    st: &'a FiniteStructure,
    env: &'a Env,
    term: &Term,
) -> Result<&'a str, EvalError> {
    match term {
        Term::Var(v) => env
            .get(v)
            .map(|s| s.as_str())
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Term::Const(c) => st
            .constant(c)
            .ok_or_else(|| EvalError::UnknownConstant(c.clone())),
    }
}

fn ground_key(atom: &Atom) -> Result<RelKey, EvalError> {
    match &atom.rel {
        RelName::Plain(n) => Ok(RelKey::plain(n)),
        RelName::Indexed { base, indices } => {
            let mut out = Vec::with_capacity(indices.len());
            for ix in indices {
                match ix {
                    IndexExpr::Lit(n) => out.push(*n),
                    IndexExpr::Var(v) => return Err(EvalError::UnresolvedIndex(v.clone())),
                }
            }
            Ok(RelKey { base: base.clone(), indices: out })
        }
    }
}

fn atom_value(st: &FiniteStructure, atom: &Atom, env: &Env) -> Result<bool, EvalError> {
    let key = ground_key(atom)?;
    let mut tuple = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        tuple.push(term_value(st, env, t)?.to_string());
    }
    Ok(st.rel_holds(&key, &tuple))
}

/// Tarskian satisfaction, three-valued. `True`/`False` are exact. Infinite
/// conjunctions and disjunctions of (possibly negated) indexed literals are
/// decided exactly from the relation tables and uniform declarations;
/// other templates are instantiated for the first `budget` indices and
/// report `Unknown` when undecided.
pub fn satisfies(
    st: &FiniteStructure,
    f: &Formula,
    asg: &Assignment,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    for v in free_vars(f) {
        if asg.get(&v).is_none() {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    let mut env = asg.0.clone();
    sat_rec(st, f, &mut env, budget)
}

fn sat_rec(
    st: &FiniteStructure,
    f: &Formula,
    env: &mut Env,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    match f {
        Formula::Atomic(a) => Ok(TruthValue::from_bool(atom_value(st, a, env)?)),
        Formula::Not(g) => Ok(sat_rec(st, g, env, budget)?.negate()),
        Formula::And(fs) => eval_members(st, fs, env, budget, true, f, &mut sat_rec),
        Formula::Or(fs) => eval_members(st, fs, env, budget, false, f, &mut sat_rec),
        Formula::InfAnd(fam) => eval_inf_family(st, fam, env, budget, true, f, &mut sat_rec),
        Formula::InfOr(fam) => eval_inf_family(st, fam, env, budget, false, f, &mut sat_rec),
        Formula::Exists(vars, body) => {
            eval_quantifier(st, vars, body, env, budget, false, &mut sat_rec)
        }
        Formula::Forall(vars, body) => {
            eval_quantifier(st, vars, body, env, budget, true, &mut sat_rec)
        }
    }
}

type Rec = dyn FnMut(&FiniteStructure, &Formula, &mut Env, u64) -> Result<TruthValue, EvalError>;

fn eval_members(
    st: &FiniteStructure,
    members: &[Formula],
    env: &mut Env,
    budget: u64,
    conjunctive: bool,
    whole: &Formula,
    rec: &mut Rec,
) -> Result<TruthValue, EvalError> {
    let mut unknown = false;
    for g in members {
        match rec(st, g, env, budget)? {
            TruthValue::True if !conjunctive => return Ok(TruthValue::True),
            TruthValue::False if conjunctive => return Ok(TruthValue::False),
            TruthValue::Unknown { .. } => unknown = true,
            _ => {}
        }
    }
    if unknown {
        Ok(TruthValue::Unknown { subformula: render_formula(whole) })
    } else {
        Ok(TruthValue::from_bool(conjunctive))
    }
}

fn eval_quantifier(
    st: &FiniteStructure,
    vars: &[String],
    body: &Formula,
    env: &mut Env,
    budget: u64,
    universal: bool,
    rec: &mut Rec,
) -> Result<TruthValue, EvalError> {
    let mut unknown: Option<String> = None;
    let saved: Vec<Option<String>> = vars.iter().map(|v| env.get(v).cloned()).collect();
    let n = st.universe().len();
    let k = vars.len();
    let mut counter = alloc::vec![0usize; k];
    let result = 'outer: loop {
        for (v, &c) in vars.iter().zip(counter.iter()) {
            env.insert(v.clone(), st.universe()[c].clone());
        }
        match rec(st, body, env, budget)? {
            TruthValue::True if !universal => break 'outer TruthValue::True,
            TruthValue::False if universal => break 'outer TruthValue::False,
            TruthValue::Unknown { subformula } => unknown = Some(subformula),
            _ => {}
        }
        // advance mixed-radix counter
        let mut i = 0;
        loop {
            if i == k {
                break 'outer match unknown {
                    Some(subformula) => TruthValue::Unknown { subformula },
                    None => TruthValue::from_bool(universal),
                };
            }
            counter[i] += 1;
            if counter[i] < n {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    };
    for (v, old) in vars.iter().zip(saved) {
        match old {
            Some(val) => {
                env.insert(v.clone(), val);
            }
            None => {
                env.remove(v);
            }
        }
    }
    Ok(result)
}

/// A literal shape suitable for the finite-support shortcut: a possibly
/// negated indexed atom whose indices mention the family's variables.
struct LiteralPattern<'a> {
    positive: bool,
    base: &'a str,
    indices: &'a [IndexExpr],
    args: &'a [Term],
}

fn as_literal<'a>(template: &'a Formula) -> Option<LiteralPattern<'a>> {
    let (positive, atom) = match template {
        Formula::Atomic(a) => (true, a),
        Formula::Not(inner) => match &**inner {
            Formula::Atomic(a) => (false, a),
            _ => return None,
        },
        _ => return None,
    };
    match &atom.rel {
        RelName::Indexed { base, indices } => {
            Some(LiteralPattern { positive, base, indices, args: &atom.args })
        }
        RelName::Plain(_) => None,
    }
}

fn eval_inf_family(
    st: &FiniteStructure,
    fam: &IndexFamily,
    env: &mut Env,
    budget: u64,
    conjunctive: bool,
    whole: &Formula,
    rec: &mut Rec,
) -> Result<TruthValue, EvalError> {
    match fam {
        IndexFamily::FiniteList(fs) => eval_members(st, fs, env, budget, conjunctive, whole, rec),
        IndexFamily::NatIndexed { var, template } => {
            let fam_vars = [var.as_str()];
            if let Some(v) = literal_shortcut(st, template, &fam_vars, env, conjunctive)? {
                return Ok(v);
            }
            if !template.mentions_index_var(var) {
                let instance = template.instantiate_index(var, 0);
                return rec(st, &instance, env, budget);
            }
            let mut unknown = false;
            for n in 0..budget {
                let instance = template.instantiate_index(var, n);
                match rec(st, &instance, env, budget)? {
                    TruthValue::True if !conjunctive => return Ok(TruthValue::True),
                    TruthValue::False if conjunctive => return Ok(TruthValue::False),
                    TruthValue::Unknown { .. } => unknown = true,
                    _ => {}
                }
            }
            let _ = unknown;
            Ok(TruthValue::Unknown { subformula: render_formula(whole) })
        }
        IndexFamily::NatPairIndexed { var1, var2, template } => {
            let fam_vars = [var1.as_str(), var2.as_str()];
            if let Some(v) = literal_shortcut(st, template, &fam_vars, env, conjunctive)? {
                return Ok(v);
            }
            let mentions =
                template.mentions_index_var(var1) || template.mentions_index_var(var2);
            if !mentions {
                let instance =
                    template.instantiate_index(var1, 0).instantiate_index(var2, 0);
                return rec(st, &instance, env, budget);
            }
            for k in 0..budget {
                let (i, j) = cantor_unpair(k);
                let instance = template.instantiate_index(var1, i).instantiate_index(var2, j);
                match rec(st, &instance, env, budget)? {
                    TruthValue::True if !conjunctive => return Ok(TruthValue::True),
                    TruthValue::False if conjunctive => return Ok(TruthValue::False),
                    _ => {}
                }
            }
            Ok(TruthValue::Unknown { subformula: render_formula(whole) })
        }
    }
}

/// Enumerates pairs of naturals along diagonals: (0,0), (0,1), (1,0), ...
pub fn cantor_unpair(k: u64) -> (u64, u64) {
    let mut d = 0u64;
    let mut acc = 0u64;
    while acc + d + 1 <= k {
        acc += d + 1;
        d += 1;
    }
    let j = k - acc;
    (d - j, j)
}

/// Decides an infinite conjunction/disjunction of indexed literals exactly.
/// Only finitely many family members hold beyond the uniform declarations,
/// so membership across the whole index range is checkable.
fn literal_shortcut(
    st: &FiniteStructure,
    template: &Formula,
    fam_vars: &[&str],
    env: &Env,
    conjunctive: bool,
) -> Result<Option<TruthValue>, EvalError> {
    let lit = match as_literal(template) {
        Some(l) => l,
        None => return Ok(None),
    };
    let uses_var = lit
        .indices
        .iter()
        .any(|ix| matches!(ix, IndexExpr::Var(v) if fam_vars.contains(&v.as_str())));
    if !uses_var {
        // Constant family; let the caller evaluate a single instance.
        return Ok(None);
    }
    let mut tuple = Vec::with_capacity(lit.args.len());
    for t in lit.args {
        tuple.push(term_value(st, env, t)?.to_string());
    }
    // "Some instance holds" and "every instance holds" are both decidable:
    // tables list the finitely many held instances, and a uniform
    // declaration is the only way to cover the whole index range.
    let some_instance_holds = st
        .relations()
        .any(|(key, table)| pattern_matches_key(lit.base, lit.indices, fam_vars, key) && table.contains(&tuple))
        || st.uniform_decls().iter().any(|d| decl_intersects(d, lit.base, lit.indices, fam_vars, &tuple));
    let every_instance_holds =
        st.uniform_decls().iter().any(|d| decl_covers(d, lit.base, lit.indices, fam_vars, &tuple));
    let value = match (conjunctive, lit.positive) {
        (true, true) => every_instance_holds,
        (true, false) => !some_instance_holds,
        (false, true) => some_instance_holds,
        (false, false) => !every_instance_holds,
    };
    Ok(Some(TruthValue::from_bool(value)))
}

/// Does the literal's index pattern match a concrete key for some family
/// valuation? Repeated variables impose equality constraints.
fn pattern_matches_key(
    base: &str,
    indices: &[IndexExpr],
    fam_vars: &[&str],
    key: &RelKey,
) -> bool {
    if key.base != base || key.indices.len() != indices.len() {
        return false;
    }
    let mut bound: BTreeMap<&str, u64> = BTreeMap::new();
    for (ix, val) in indices.iter().zip(&key.indices) {
        match ix {
            IndexExpr::Lit(n) => {
                if n != val {
                    return false;
                }
            }
            IndexExpr::Var(v) if fam_vars.contains(&v.as_str()) => {
                if let Some(prev) = bound.get(v.as_str()) {
                    if prev != val {
                        return false;
                    }
                } else {
                    bound.insert(v, *val);
                }
            }
            // An index variable bound by an enclosing family would have
            // been instantiated before evaluation reached this node.
            IndexExpr::Var(_) => return false,
        }
    }
    true
}

/// Does a uniform declaration intersect the literal's index pattern (some
/// valuation matches both)?
fn decl_intersects(
    d: &UniformDecl,
    base: &str,
    indices: &[IndexExpr],
    fam_vars: &[&str],
    tuple: &[String],
) -> bool {
    if d.base != base || d.pattern.len() != indices.len() || !d.tuples.contains(tuple) {
        return false;
    }
    let mut bound: BTreeMap<&str, u64> = BTreeMap::new();
    for (ix, p) in indices.iter().zip(&d.pattern) {
        match (ix, p) {
            (IndexExpr::Lit(n), Some(v)) if n != v => return false,
            (IndexExpr::Lit(_), _) => {}
            (IndexExpr::Var(name), Some(v)) if fam_vars.contains(&name.as_str()) => {
                if let Some(prev) = bound.get(name.as_str()) {
                    if prev != v {
                        return false;
                    }
                } else {
                    bound.insert(name, *v);
                }
            }
            (IndexExpr::Var(name), None) if fam_vars.contains(&name.as_str()) => {}
            (IndexExpr::Var(_), _) => return false,
        }
    }
    true
}

/// Does a uniform declaration cover every valuation of the literal's index
/// pattern?
fn decl_covers(
    d: &UniformDecl,
    base: &str,
    indices: &[IndexExpr],
    fam_vars: &[&str],
    tuple: &[String],
) -> bool {
    if d.base != base || d.pattern.len() != indices.len() || !d.tuples.contains(tuple) {
        return false;
    }
    indices.iter().zip(&d.pattern).all(|(ix, p)| match ix {
        IndexExpr::Lit(n) => p.map(|v| v == *n).unwrap_or(true),
        IndexExpr::Var(v) if fam_vars.contains(&v.as_str()) => p.is_none(),
        IndexExpr::Var(_) => false,
    })
}

/// Substructure test: same constants, universe containment, and relation
/// tables of `a` equal to the restrictions of `b`'s tables.
pub fn is_substructure(a: &FiniteStructure, b: &FiniteStructure) -> Result<bool, StructureError> {
    let a_consts: BTreeSet<&str> = a.constants().map(|(k, _)| k).collect();
    let b_consts: BTreeSet<&str> = b.constants().map(|(k, _)| k).collect();
    if a_consts != b_consts {
        let missing =
            a_consts.symmetric_difference(&b_consts).next().unwrap_or(&"?").to_string();
        return Err(StructureError::SignatureMismatch(alloc::format!(
            "constant `{missing}` declared in only one structure"
        )));
    }
    for e in a.universe() {
        if !b.contains_element(e) {
            return Ok(false);
        }
    }
    for (name, elem) in a.constants() {
        if b.constant(name) != Some(elem) {
            return Ok(false);
        }
    }
    let keys: BTreeSet<&RelKey> =
        a.relations.keys().chain(b.relations.keys()).collect();
    for key in keys {
        let empty = BTreeSet::new();
        let at = a.relations.get(key).unwrap_or(&empty);
        let bt = b.relations.get(key).unwrap_or(&empty);
        if let (Some(x), Some(y)) = (at.iter().next(), bt.iter().next()) {
            if x.len() != y.len() {
                return Err(StructureError::ArityInconsistent {
                    relation: key.concrete_name(),
                    expected: y.len(),
                    got: x.len(),
                });
            }
        }
        let restricted: BTreeSet<&Vec<String>> =
            bt.iter().filter(|t| t.iter().all(|e| a.contains_element(e))).collect();
        let own: BTreeSet<&Vec<String>> = at.iter().collect();
        if own != restricted {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRealizeError {
    Eval(EvalError),
    /// Some candidate tuple could not be decided within the budget.
    Undecidable { subformula: String },
}

impl fmt::Display for TypeRealizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRealizeError::Eval(e) => write!(f, "{e}"),
            TypeRealizeError::Undecidable { subformula } => {
                write!(f, "type undecidable at budget ({subformula})")
            }
        }
    }
}

impl From<EvalError> for TypeRealizeError {
    fn from(e: EvalError) -> Self {
        TypeRealizeError::Eval(e)
    }
}

/// Searches for a tuple realizing every member of a type. In a finite
/// structure a finitely satisfiable type is realized: candidate tuples are
/// finite, and a tuple satisfying cofinally many finite subsets satisfies
/// all members.
pub fn type_realized(
    st: &FiniteStructure,
    vars: &[String],
    fam: &IndexFamily,
    asg: &Assignment,
    budget: u64,
) -> Result<Option<Vec<String>>, TypeRealizeError> {
    if vars.is_empty() {
        return Err(TypeRealizeError::Eval(EvalError::UnboundVariable(
            "type must have at least one free variable".into(),
        )));
    }
    let conj = Formula::InfAnd(fam.clone());
    let n = st.universe().len();
    let k = vars.len();
    let mut counter = alloc::vec![0usize; k];
    let mut undecided: Option<String> = None;
    loop {
        let mut asg2 = asg.clone();
        let tuple: Vec<String> =
            counter.iter().map(|&c| st.universe()[c].clone()).collect();
        for (v, e) in vars.iter().zip(&tuple) {
            asg2 = asg2.bind(v, e);
        }
        match satisfies(st, &conj, &asg2, budget)? {
            TruthValue::True => return Ok(Some(tuple)),
            TruthValue::False => {}
            TruthValue::Unknown { subformula } => undecided = Some(subformula),
        }
        let mut i = 0;
        loop {
            if i == k {
                return match undecided {
                    Some(subformula) => Err(TypeRealizeError::Undecidable { subformula }),
                    None => Ok(None),
                };
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

/// The weak-forcing recursion over a finite structure. A finite structure
/// has no proper elementary extension (it satisfies an "exactly k
/// elements" sentence), so the extension quantifier in the negation,
/// existential, and universal clauses ranges over the structure itself.
/// Agrees with [`satisfies`] wherever both are decided.
pub fn weak_force_finite(
    st: &FiniteStructure,
    f: &Formula,
    asg: &Assignment,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    for v in free_vars(f) {
        if asg.get(&v).is_none() {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    let mut env = asg.0.clone();
    wff_rec(st, f, &mut env, budget)
}

fn wff_rec(
    st: &FiniteStructure,
    f: &Formula,
    env: &mut Env,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    match f {
        // (1) atomic: forcing is truth
        Formula::Atomic(a) => Ok(TruthValue::from_bool(atom_value(st, a, env)?)),
        // (2') negation: forced iff the body is not weakly forced
        Formula::Not(g) => Ok(wff_rec(st, g, env, budget)?.negate()),
        // (4) conjunction: every member weakly forced
        Formula::And(fs) => eval_members(st, fs, env, budget, true, f, &mut wff_rec),
        Formula::InfAnd(fam) => eval_inf_family(st, fam, env, budget, true, f, &mut wff_rec),
        // (3') disjunction: some member weakly forced
        Formula::Or(fs) => eval_members(st, fs, env, budget, false, f, &mut wff_rec),
        Formula::InfOr(fam) => eval_inf_family(st, fam, env, budget, false, f, &mut wff_rec),
        // (5') existential: witness in some extension; here the structure itself
        Formula::Exists(vars, body) => {
            eval_quantifier(st, vars, body, env, budget, false, &mut wff_rec)
        }
        // (6) universal: every tuple in every extension; here the structure itself
        Formula::Forall(vars, body) => {
            eval_quantifier(st, vars, body, env, budget, true, &mut wff_rec)
        }
    }
}
