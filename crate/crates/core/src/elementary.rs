//! The definability-of-forcing transform: for every formula `f` an
//! elementary formula — a disjunction over tags `alpha` of conjunctions
//! over tags `beta` of finitary leaves — holding in a structure exactly
//! when the structure weakly forces `f`.
//!
//! The representation is proof-shaped: one constructor per case of the
//! construction. The negation case is the disjunction over choice
//! functions picking one inner tag per outer tag of the dual; the
//! conjunction case distributes over choice functions picking an outer
//! tag per family member; the existential case conjoins over finite
//! subsets of the inner family. Choice functions over infinite domains
//! are kept intensional and enumerated as finite partial maps extended by
//! a default, which is sound because a sampled leaf reads finitely many
//! values.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{formal_negate, free_vars, Formula, IndexFamily};
use crate::model::{
    cantor_unpair, satisfies, type_realized, Assignment, EvalError, FiniteStructure, TruthValue,
};
use crate::parse::{ParseError, Parser};

/// A symbolic family of elementary formulas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementaryFamily {
    FiniteList(Vec<ElementaryFormula>),
    NatIndexed { var: String, template: Box<ElementaryFormula> },
    NatPairIndexed { var1: String, var2: String, template: Box<ElementaryFormula> },
}

/// An elementary formula in proof shape. Denotes a two-layer
/// disjunction-of-conjunctions of finitary leaves, addressed by
/// structured tags.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementaryFormula {
    /// A single finitary leaf: singleton outer and inner families.
    Leaf(Formula),
    /// Disjunction over choice functions from the body's outer tags to its
    /// inner tags, of the pointwise formal negations.
    Negation(Box<ElementaryFormula>),
    /// Union of the members' outer families.
    Disjunction(ElementaryFamily),
    /// Disjunction over choice functions picking an outer tag per member,
    /// conjoined over all members and their inner tags.
    Conjunction(ElementaryFamily),
    /// Disjunction over the body's outer tags of conjunctions, over finite
    /// subsets of the body's inner tags, of existentially quantified
    /// finite conjunctions of leaves.
    Existential { vars: Vec<String>, body: Box<ElementaryFormula> },
}

/// A structured tag addressing one disjunct or conjunct of an elementary
/// formula. Tags carry a canonical total order for reproducible
/// enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Unit,
    Nat(u64),
    Pair(Box<Tag>, Box<Tag>),
    /// A finite subset, canonically sorted.
    Set(Vec<Tag>),
    /// A finite partial map extended by a default position. Values are
    /// positions into the relevant tag enumeration.
    Choice { entries: Vec<(Tag, u64)>, default: u64 },
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Unit => write!(f, "*"),
            Tag::Nat(n) => write!(f, "{n}"),
            Tag::Pair(a, b) => write!(f, "({a},{b})"),
            Tag::Set(ts) => {
                write!(f, "{{")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "}}")
            }
            Tag::Choice { entries, default } => {
                write!(f, "[")?;
                for (k, v) in entries {
                    write!(f, "{k}=>{v},")?;
                }
                write!(f, "_=>{default}]")
            }
        }
    }
}

fn nat_pair(i: u64, j: u64) -> Tag {
    Tag::Pair(Box::new(Tag::Nat(i)), Box::new(Tag::Nat(j)))
}

/// Builds the elementary formula defining weak forcing of `f`, case by
/// case: atomic formulas become leaves; negation, disjunction,
/// conjunction, and existential quantification map to their constructors;
/// a universal quantifier is rewritten through negation and the
/// existential case. Nested finite-list families of the same connective
/// are flattened; no other normalization is performed.
pub fn force(f: &Formula) -> ElementaryFormula {
    match f {
        Formula::Atomic(_) => ElementaryFormula::Leaf(f.clone()),
        Formula::Not(g) => ElementaryFormula::Negation(Box::new(force(g))),
        Formula::Or(fs) => {
            ElementaryFormula::Disjunction(ElementaryFamily::FiniteList(flatten_disjuncts(fs)))
        }
        Formula::And(fs) => {
            ElementaryFormula::Conjunction(ElementaryFamily::FiniteList(flatten_conjuncts(fs)))
        }
        Formula::InfOr(fam) => ElementaryFormula::Disjunction(force_family(fam, true)),
        Formula::InfAnd(fam) => ElementaryFormula::Conjunction(force_family(fam, false)),
        Formula::Exists(vars, g) => {
            ElementaryFormula::Existential { vars: vars.clone(), body: Box::new(force(g)) }
        }
        Formula::Forall(vars, g) => {
            // Force of a universal is Force of not-exists-not.
            let negated_body = ElementaryFormula::Negation(Box::new(force(g)));
            ElementaryFormula::Negation(Box::new(ElementaryFormula::Existential {
                vars: vars.clone(),
                body: Box::new(negated_body),
            }))
        }
    }
}

fn flatten_disjuncts(fs: &[Formula]) -> Vec<ElementaryFormula> {
    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        match force(f) {
            ElementaryFormula::Disjunction(ElementaryFamily::FiniteList(inner)) => {
                out.extend(inner)
            }
            other => out.push(other),
        }
    }
    out
}

fn flatten_conjuncts(fs: &[Formula]) -> Vec<ElementaryFormula> {
    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        match force(f) {
            ElementaryFormula::Conjunction(ElementaryFamily::FiniteList(inner)) => {
                out.extend(inner)
            }
            other => out.push(other),
        }
    }
    out
}

fn force_family(fam: &IndexFamily, disjunctive: bool) -> ElementaryFamily {
    match fam {
        IndexFamily::FiniteList(fs) => ElementaryFamily::FiniteList(if disjunctive {
            flatten_disjuncts(fs)
        } else {
            flatten_conjuncts(fs)
        }),
        IndexFamily::NatIndexed { var, template } => ElementaryFamily::NatIndexed {
            var: var.clone(),
            template: Box::new(force(template)),
        },
        IndexFamily::NatPairIndexed { var1, var2, template } => ElementaryFamily::NatPairIndexed {
            var1: var1.clone(),
            var2: var2.clone(),
            template: Box::new(force(template)),
        },
    }
}

impl ElementaryFamily {
    /// Number of members, `None` when infinite.
    fn member_count(&self) -> Option<u64> {
        match self {
            ElementaryFamily::FiniteList(es) => Some(es.len() as u64),
            _ => None,
        }
    }

    /// The member tag at enumeration position `pos`.
    fn member_tag(&self, pos: u64) -> Option<Tag> {
        match self {
            ElementaryFamily::FiniteList(es) => {
                (pos < es.len() as u64).then(|| Tag::Nat(pos))
            }
            ElementaryFamily::NatIndexed { .. } => Some(Tag::Nat(pos)),
            ElementaryFamily::NatPairIndexed { .. } => {
                let (i, j) = cantor_unpair(pos);
                Some(nat_pair(i, j))
            }
        }
    }

    /// The member addressed by a tag.
    fn member_at(&self, tag: &Tag) -> Option<ElementaryFormula> {
        match (self, tag) {
            (ElementaryFamily::FiniteList(es), Tag::Nat(i)) => {
                es.get(*i as usize).cloned()
            }
            (ElementaryFamily::NatIndexed { var, template }, Tag::Nat(i)) => {
                Some(instantiate_elem(template, var, *i))
            }
            (ElementaryFamily::NatPairIndexed { var1, var2, template }, Tag::Pair(a, b)) => {
                match (&**a, &**b) {
                    (Tag::Nat(i), Tag::Nat(j)) => Some(instantiate_elem(
                        &instantiate_elem(template, var1, *i),
                        var2,
                        *j,
                    )),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

/// Substitutes a natural-number literal for an index variable throughout
/// the leaves, stopping at inner families that re-bind the name.
pub fn instantiate_elem(e: &ElementaryFormula, var: &str, value: u64) -> ElementaryFormula {
    match e {
        ElementaryFormula::Leaf(f) => ElementaryFormula::Leaf(f.instantiate_index(var, value)),
        ElementaryFormula::Negation(inner) => {
            ElementaryFormula::Negation(Box::new(instantiate_elem(inner, var, value)))
        }
        ElementaryFormula::Disjunction(fam) => {
            ElementaryFormula::Disjunction(instantiate_family(fam, var, value))
        }
        ElementaryFormula::Conjunction(fam) => {
            ElementaryFormula::Conjunction(instantiate_family(fam, var, value))
        }
        ElementaryFormula::Existential { vars, body } => ElementaryFormula::Existential {
            vars: vars.clone(),
            body: Box::new(instantiate_elem(body, var, value)),
        },
    }
}

fn instantiate_family(fam: &ElementaryFamily, var: &str, value: u64) -> ElementaryFamily {
    match fam {
        ElementaryFamily::FiniteList(es) => ElementaryFamily::FiniteList(
            es.iter().map(|e| instantiate_elem(e, var, value)).collect(),
        ),
        ElementaryFamily::NatIndexed { var: v, template } => {
            if v == var {
                fam.clone()
            } else {
                ElementaryFamily::NatIndexed {
                    var: v.clone(),
                    template: Box::new(instantiate_elem(template, var, value)),
                }
            }
        }
        ElementaryFamily::NatPairIndexed { var1, var2, template } => {
            if var1 == var || var2 == var {
                fam.clone()
            } else {
                ElementaryFamily::NatPairIndexed {
                    var1: var1.clone(),
                    var2: var2.clone(),
                    template: Box::new(instantiate_elem(template, var, value)),
                }
            }
        }
    }
}

impl ElementaryFormula {
    /// Size of the outer (disjunction) tag family; `None` when infinite or
    /// beyond `u64`.
    pub fn outer_size(&self) -> Option<u64> {
        match self {
            ElementaryFormula::Leaf(_) => Some(1),
            ElementaryFormula::Negation(e) => {
                // Choice functions: the product of inner sizes over all
                // outer tags of the dual.
                match e.outer_size() {
                    Some(m) => {
                        let mut total: u64 = 1;
                        for alpha in e.outer_tags(m as usize) {
                            let s = e.inner_size(&alpha)?;
                            total = total.checked_mul(s)?;
                        }
                        Some(total)
                    }
                    None => None,
                }
            }
            ElementaryFormula::Disjunction(fam) => match fam {
                ElementaryFamily::FiniteList(es) => {
                    let mut total: u64 = 0;
                    for e in es {
                        total = total.checked_add(e.outer_size()?)?;
                    }
                    Some(total)
                }
                ElementaryFamily::NatIndexed { template, .. }
                | ElementaryFamily::NatPairIndexed { template, .. } => {
                    if template.outer_size() == Some(0) {
                        Some(0)
                    } else {
                        None
                    }
                }
            },
            ElementaryFormula::Conjunction(fam) => match fam {
                ElementaryFamily::FiniteList(es) => {
                    let mut total: u64 = 1;
                    for e in es {
                        total = total.checked_mul(e.outer_size()?)?;
                    }
                    Some(total)
                }
                ElementaryFamily::NatIndexed { template, .. }
                | ElementaryFamily::NatPairIndexed { template, .. } => {
                    match template.outer_size() {
                        Some(0) => Some(0),
                        Some(1) => Some(1),
                        _ => None,
                    }
                }
            },
            ElementaryFormula::Existential { body, .. } => body.outer_size(),
        }
    }

    /// Size of the inner (conjunction) tag family at an outer tag.
    pub fn inner_size(&self, alpha: &Tag) -> Option<u64> {
        match self {
            ElementaryFormula::Leaf(_) => Some(1),
            ElementaryFormula::Negation(e) => e.outer_size(),
            ElementaryFormula::Disjunction(fam) => match alpha {
                Tag::Pair(m, a) => fam.member_at(m)?.inner_size(a),
                _ => None,
            },
            ElementaryFormula::Conjunction(fam) => match alpha {
                Tag::Choice { .. } => {
                    let count = fam.member_count()?;
                    let mut total: u64 = 0;
                    for pos in 0..count {
                        let mtag = fam.member_tag(pos)?;
                        let member = fam.member_at(&mtag)?;
                        let opos = choice_value(alpha, &mtag);
                        let otag = member.outer_tag_at(opos)?;
                        total = total.checked_add(member.inner_size(&otag)?)?;
                    }
                    Some(total)
                }
                _ => None,
            },
            ElementaryFormula::Existential { body, .. } => {
                let s = body.inner_size(alpha)?;
                if s >= 63 {
                    None
                } else {
                    Some(1u64 << s)
                }
            }
        }
    }

    /// The outer tag at enumeration position `pos`, if it exists.
    fn outer_tag_at(&self, pos: u64) -> Option<Tag> {
        self.outer_tags(pos as usize + 1).into_iter().nth(pos as usize)
    }

    /// The first `limit` outer tags in canonical order.
    pub fn outer_tags(&self, limit: usize) -> Vec<Tag> {
        if limit == 0 {
            return Vec::new();
        }
        match self {
            ElementaryFormula::Leaf(_) => vec![Tag::Unit],
            ElementaryFormula::Negation(e) => {
                choice_tags(limit, e.outer_size(), |pos| e.outer_tag_at(pos), |alpha| {
                    e.inner_size(alpha)
                })
            }
            ElementaryFormula::Disjunction(fam) => {
                // Fair diagonal over (member position, member outer position).
                let mut out = Vec::new();
                let count = fam.member_count();
                let mut weight = 0u64;
                loop {
                    let mut emitted_at_weight = false;
                    for mpos in 0..=weight {
                        if let Some(c) = count {
                            if mpos >= c {
                                continue;
                            }
                        }
                        let apos = weight - mpos;
                        let mtag = match fam.member_tag(mpos) {
                            Some(t) => t,
                            None => continue,
                        };
                        let member = match fam.member_at(&mtag) {
                            Some(m) => m,
                            None => continue,
                        };
                        if let Some(atag) = member.outer_tag_at(apos) {
                            out.push(Tag::Pair(Box::new(mtag), Box::new(atag)));
                            emitted_at_weight = true;
                            if out.len() >= limit {
                                return out;
                            }
                        } else if apos == 0 {
                            // Member with empty outer family contributes
                            // nothing at any weight.
                        } else {
                            emitted_at_weight = emitted_at_weight || apos > 0;
                        }
                    }
                    weight += 1;
                    // Termination: finite families with finite outers run dry.
                    if let Some(c) = count {
                        let all_exhausted = (0..c).all(|mpos| {
                            fam.member_tag(mpos)
                                .and_then(|t| fam.member_at(&t))
                                .and_then(|m| m.outer_size())
                                .map(|s| weight >= c + s)
                                .unwrap_or(false)
                        });
                        if all_exhausted {
                            return out;
                        }
                    }
                    let _ = emitted_at_weight;
                    if weight > (limit as u64) * 4 + 64 {
                        return out;
                    }
                }
            }
            ElementaryFormula::Conjunction(fam) => choice_tags(
                limit,
                fam.member_count(),
                |pos| fam.member_tag(pos),
                |mtag| fam.member_at(mtag).and_then(|m| m.outer_size()),
            ),
            ElementaryFormula::Existential { body, .. } => body.outer_tags(limit),
        }
    }

    /// The first `limit` inner tags at an outer tag, in canonical order.
    pub fn inner_tags(&self, alpha: &Tag, limit: usize) -> Vec<Tag> {
        if limit == 0 {
            return Vec::new();
        }
        match self {
            ElementaryFormula::Leaf(_) => vec![Tag::Unit],
            ElementaryFormula::Negation(e) => e.outer_tags(limit),
            ElementaryFormula::Disjunction(fam) => match alpha {
                Tag::Pair(m, a) => match fam.member_at(m) {
                    Some(member) => member.inner_tags(a, limit),
                    None => Vec::new(),
                },
                _ => Vec::new(),
            },
            ElementaryFormula::Conjunction(fam) => {
                // Diagonal over (member position, inner position at the
                // member's chosen outer tag).
                let mut out = Vec::new();
                let count = fam.member_count();
                let mut weight = 0u64;
                loop {
                    for mpos in 0..=weight {
                        if let Some(c) = count {
                            if mpos >= c {
                                continue;
                            }
                        }
                        let bpos = weight - mpos;
                        let mtag = match fam.member_tag(mpos) {
                            Some(t) => t,
                            None => continue,
                        };
                        let member = match fam.member_at(&mtag) {
                            Some(m) => m,
                            None => continue,
                        };
                        let opos = choice_value(alpha, &mtag);
                        let otag = match member.outer_tag_at(opos) {
                            Some(t) => t,
                            None => continue,
                        };
                        if let Some(btag) =
                            member.inner_tags(&otag, bpos as usize + 1).into_iter().nth(bpos as usize)
                        {
                            out.push(Tag::Pair(Box::new(mtag), Box::new(btag)));
                            if out.len() >= limit {
                                return out;
                            }
                        }
                    }
                    weight += 1;
                    if let Some(total) = self.inner_size(alpha) {
                        if out.len() as u64 >= total {
                            return out;
                        }
                    }
                    if weight > (limit as u64) * 4 + 64 {
                        return out;
                    }
                }
            }
            ElementaryFormula::Existential { body, .. } => {
                // Finite subsets of the body's inner tags, by size then
                // lexicographically on positions.
                let inner_total = body.inner_size(alpha);
                let universe: Vec<Tag> = match inner_total {
                    Some(s) if s <= limit as u64 + 6 => body.inner_tags(alpha, s as usize),
                    _ => body.inner_tags(alpha, limit + 6),
                };
                let mut out = Vec::new();
                'sizes: for size in 0..=universe.len() {
                    for combo in combinations(universe.len(), size) {
                        let mut set: Vec<Tag> =
                            combo.iter().map(|&i| universe[i].clone()).collect();
                        set.sort();
                        out.push(Tag::Set(set));
                        if out.len() >= limit {
                            break 'sizes;
                        }
                    }
                }
                out
            }
        }
    }

    /// Materializes the finitary leaf at a tag pair, if the tags are valid.
    pub fn leaf(&self, alpha: &Tag, beta: &Tag) -> Option<Formula> {
        match self {
            ElementaryFormula::Leaf(f) => Some(f.clone()),
            ElementaryFormula::Negation(e) => {
                // beta is an outer tag of the dual; alpha picks its inner tag.
                let pos = choice_value(alpha, beta);
                let inner = e.inner_tags(beta, pos as usize + 1).into_iter().nth(pos as usize)?;
                Some(formal_negate(&e.leaf(beta, &inner)?))
            }
            ElementaryFormula::Disjunction(fam) => match alpha {
                Tag::Pair(m, a) => fam.member_at(m)?.leaf(a, beta),
                _ => None,
            },
            ElementaryFormula::Conjunction(fam) => match beta {
                Tag::Pair(m, b) => {
                    let member = fam.member_at(m)?;
                    let opos = choice_value(alpha, m);
                    let otag = member.outer_tag_at(opos)?;
                    member.leaf(&otag, b)
                }
                _ => None,
            },
            ElementaryFormula::Existential { vars, body } => match beta {
                Tag::Set(bs) => {
                    let mut conjuncts = Vec::with_capacity(bs.len());
                    for b in bs {
                        conjuncts.push(body.leaf(alpha, b)?);
                    }
                    Some(Formula::Exists(vars.clone(), Box::new(Formula::And(conjuncts))))
                }
                _ => None,
            },
        }
    }

    /// The formula this elementary formula is equivalent to over finite
    /// structures, unfolding each constructor through the equivalence that
    /// introduced it.
    pub fn as_formula(&self) -> Formula {
        match self {
            ElementaryFormula::Leaf(f) => f.clone(),
            ElementaryFormula::Negation(e) => Formula::not(e.as_formula()),
            ElementaryFormula::Disjunction(fam) => family_formula(fam, true),
            ElementaryFormula::Conjunction(fam) => family_formula(fam, false),
            ElementaryFormula::Existential { vars, body } => {
                Formula::Exists(vars.clone(), Box::new(body.as_formula()))
            }
        }
    }
}

fn family_formula(fam: &ElementaryFamily, disjunctive: bool) -> Formula {
    let family = match fam {
        ElementaryFamily::FiniteList(es) => {
            IndexFamily::FiniteList(es.iter().map(|e| e.as_formula()).collect())
        }
        ElementaryFamily::NatIndexed { var, template } => IndexFamily::NatIndexed {
            var: var.clone(),
            template: Box::new(template.as_formula()),
        },
        ElementaryFamily::NatPairIndexed { var1, var2, template } => IndexFamily::NatPairIndexed {
            var1: var1.clone(),
            var2: var2.clone(),
            template: Box::new(template.as_formula()),
        },
    };
    if disjunctive {
        Formula::InfOr(family)
    } else {
        Formula::InfAnd(family)
    }
}

/// Looks up a choice tag's value at a key tag.
fn choice_value(choice: &Tag, key: &Tag) -> u64 {
    match choice {
        Tag::Choice { entries, default } => entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap_or(*default),
        // A non-choice alpha can only address singleton-style families.
        _ => 0,
    }
}

/// Enumerates choice tags over a (possibly infinite) key domain. Keys are
/// addressed by position through `key_at`; `value_size` bounds the value
/// positions per key when known.
fn choice_tags(
    limit: usize,
    domain_size: Option<u64>,
    key_at: impl Fn(u64) -> Option<Tag>,
    value_size: impl Fn(&Tag) -> Option<u64>,
) -> Vec<Tag> {
    let mut out = Vec::new();
    if let Some(m) = domain_size {
        // Finite domain: try full mixed-radix enumeration when every value
        // domain is finite.
        let keys: Vec<Tag> = (0..m).filter_map(&key_at).collect();
        let sizes: Option<Vec<u64>> = keys.iter().map(&value_size).collect();
        if let Some(sizes) = sizes {
            if sizes.iter().any(|&s| s == 0) {
                return Vec::new();
            }
            let mut digits = vec![0u64; keys.len()];
            loop {
                let entries: Vec<(Tag, u64)> = keys
                    .iter()
                    .zip(&digits)
                    .filter(|(_, &d)| d != 0)
                    .map(|(k, &d)| (k.clone(), d))
                    .collect();
                out.push(Tag::Choice { entries, default: 0 });
                if out.len() >= limit {
                    return out;
                }
                // Advance little-endian mixed radix.
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        return out;
                    }
                    digits[i] += 1;
                    if digits[i] < sizes[i] {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }
    }
    // Infinite or unbounded: enumerate by weight over (default, finite
    // partial map). A map entry at key position p with value v weighs
    // p + v + 1; entries with the default value are dropped, keeping the
    // representation canonical.
    let mut weight = 0u64;
    while out.len() < limit && weight <= (limit as u64) * 4 + 16 {
        for default in 0..=weight {
            let budget = weight - default;
            emit_partial_maps(
                budget,
                0,
                default,
                &mut Vec::new(),
                &key_at,
                &value_size,
                domain_size,
                &mut out,
                limit,
            );
            if out.len() >= limit {
                break;
            }
        }
        weight += 1;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn emit_partial_maps(
    budget: u64,
    min_pos: u64,
    default: u64,
    acc: &mut Vec<(Tag, u64)>,
    key_at: &impl Fn(u64) -> Option<Tag>,
    value_size: &impl Fn(&Tag) -> Option<u64>,
    domain_size: Option<u64>,
    out: &mut Vec<Tag>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if budget == 0 {
        out.push(Tag::Choice { entries: acc.clone(), default });
        return;
    }
    // Spend the remaining budget on one more entry at position >= min_pos.
    for pos in min_pos..budget {
        if let Some(ds) = domain_size {
            if pos >= ds {
                break;
            }
        }
        let key = match key_at(pos) {
            Some(k) => k,
            None => break,
        };
        let vmax = budget - pos - 1;
        for val in 0..=vmax {
            if val == default {
                continue;
            }
            if let Some(vs) = value_size(&key) {
                if val >= vs {
                    continue;
                }
            }
            let spent = pos + val + 1;
            acc.push((key.clone(), val));
            emit_partial_maps(
                budget - spent,
                pos + 1,
                default,
                acc,
                key_at,
                value_size,
                domain_size,
                out,
                limit,
            );
            acc.pop();
            if out.len() >= limit {
                return;
            }
        }
    }
}

/// All size-`k` ascending index combinations from `0..n`, lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        out.push(combo.clone());
        if k == 0 {
            return out;
        }
        // Find the rightmost position that can still advance.
        let mut i = k - 1;
        loop {
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
        }
    }
}

/// Enumerates leaves for the first `outer_bound` outer tags and
/// `inner_bound` inner tags per outer tag, under the canonical
/// enumeration. Invalid choice positions are skipped.
pub fn elementary_leaves(
    e: &ElementaryFormula,
    outer_bound: usize,
    inner_bound: usize,
) -> Vec<(Tag, Tag, Formula)> {
    let mut out = Vec::new();
    for alpha in e.outer_tags(outer_bound) {
        for beta in e.inner_tags(&alpha, inner_bound) {
            if let Some(f) = e.leaf(&alpha, &beta) {
                out.push((alpha.clone(), beta, f));
            }
        }
    }
    out
}

/// Inner-family materialization cap for the realized-type route.
const MATERIALIZE_CAP: u64 = 64;

/// Evaluates an elementary formula over a finite structure: true when some
/// outer tag has all its inner leaves true. Works structurally through the
/// constructors; for the existential shape the conjunction over finite
/// subsets is decided exactly through type realization, since a finitely
/// satisfiable type is realized in a finite structure.
pub fn eval_elementary(
    st: &FiniteStructure,
    e: &ElementaryFormula,
    asg: &Assignment,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    for v in free_vars(&e.as_formula()) {
        if asg.get(&v).is_none() {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    eval_rec(st, e, asg, budget)
}

fn eval_rec(
    st: &FiniteStructure,
    e: &ElementaryFormula,
    asg: &Assignment,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    match e {
        ElementaryFormula::Leaf(f) => satisfies(st, f, asg, budget),
        ElementaryFormula::Negation(inner) => Ok(eval_rec(st, inner, asg, budget)?.negate()),
        ElementaryFormula::Disjunction(fam) => eval_family(st, fam, asg, budget, false),
        ElementaryFormula::Conjunction(fam) => eval_family(st, fam, asg, budget, true),
        ElementaryFormula::Existential { vars, body } => {
            eval_existential(st, vars, body, asg, budget)
        }
    }
}

fn eval_family(
    st: &FiniteStructure,
    fam: &ElementaryFamily,
    asg: &Assignment,
    budget: u64,
    conjunctive: bool,
) -> Result<TruthValue, EvalError> {
    match fam {
        ElementaryFamily::FiniteList(es) => {
            let mut unknown = false;
            for e in es {
                match eval_rec(st, e, asg, budget)? {
                    TruthValue::True if !conjunctive => return Ok(TruthValue::True),
                    TruthValue::False if conjunctive => return Ok(TruthValue::False),
                    TruthValue::Unknown { .. } => unknown = true,
                    _ => {}
                }
            }
            if unknown {
                Ok(unknown_here(fam, conjunctive))
            } else {
                Ok(TruthValue::from_bool(conjunctive))
            }
        }
        ElementaryFamily::NatIndexed { var, template } => {
            if let Some(f) = literal_equivalent(template) {
                // Literal templates inherit the finite-support shortcut.
                let formula = if conjunctive {
                    Formula::inf_and_nat(var, f)
                } else {
                    Formula::inf_or_nat(var, f)
                };
                return satisfies(st, &formula, asg, budget);
            }
            for n in 0..budget {
                let inst = instantiate_elem(template, var, n);
                match eval_rec(st, &inst, asg, budget)? {
                    TruthValue::True if !conjunctive => return Ok(TruthValue::True),
                    TruthValue::False if conjunctive => return Ok(TruthValue::False),
                    _ => {}
                }
            }
            Ok(unknown_here(fam, conjunctive))
        }
        ElementaryFamily::NatPairIndexed { var1, var2, template } => {
            if let Some(f) = literal_equivalent(template) {
                let family = IndexFamily::NatPairIndexed {
                    var1: var1.clone(),
                    var2: var2.clone(),
                    template: Box::new(f),
                };
                let formula = if conjunctive {
                    Formula::InfAnd(family)
                } else {
                    Formula::InfOr(family)
                };
                return satisfies(st, &formula, asg, budget);
            }
            for k in 0..budget {
                let (i, j) = cantor_unpair(k);
                let inst = instantiate_elem(&instantiate_elem(template, var1, i), var2, j);
                match eval_rec(st, &inst, asg, budget)? {
                    TruthValue::True if !conjunctive => return Ok(TruthValue::True),
                    TruthValue::False if conjunctive => return Ok(TruthValue::False),
                    _ => {}
                }
            }
            Ok(unknown_here(fam, conjunctive))
        }
    }
}

/// A leaf or negated leaf as the formula it denotes, so literal families
/// reach the finite-support shortcut of the satisfaction evaluator.
fn literal_equivalent(template: &ElementaryFormula) -> Option<Formula> {
    match template {
        ElementaryFormula::Leaf(f) => Some(f.clone()),
        ElementaryFormula::Negation(inner) => match &**inner {
            ElementaryFormula::Leaf(f) => Some(Formula::not(f.clone())),
            _ => None,
        },
        _ => None,
    }
}

fn unknown_here(fam: &ElementaryFamily, conjunctive: bool) -> TruthValue {
    let e = if conjunctive {
        ElementaryFormula::Conjunction(fam.clone())
    } else {
        ElementaryFormula::Disjunction(fam.clone())
    };
    TruthValue::Unknown { subformula: render_elementary(&e) }
}

fn eval_existential(
    st: &FiniteStructure,
    vars: &[String],
    body: &ElementaryFormula,
    asg: &Assignment,
    budget: u64,
) -> Result<TruthValue, EvalError> {
    // A finitely satisfiable type is realized by one of the finitely many
    // candidate tuples, so witness search is exact when the body decides.
    let n = st.universe().len();
    let k = vars.len();
    let mut counter = vec![0usize; k];
    let mut undecided = false;
    'outer: loop {
        let mut asg2 = asg.clone();
        for (v, &c) in vars.iter().zip(counter.iter()) {
            asg2 = asg2.bind(v, &st.universe()[c]);
        }
        match eval_rec(st, body, &asg2, budget)? {
            TruthValue::True => return Ok(TruthValue::True),
            TruthValue::False => {}
            TruthValue::Unknown { .. } => undecided = true,
        }
        let mut i = 0;
        loop {
            if i == k {
                break 'outer;
            }
            counter[i] += 1;
            if counter[i] < n {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
    }
    if !undecided {
        return Ok(TruthValue::False);
    }
    // Budget-limited candidate evaluation was inconclusive; try realizing
    // the partial type of some outer tag directly.
    for alpha in body.outer_tags(budget as usize) {
        if let Some(fam) = materialize_inner_family(body, &alpha) {
            match type_realized(st, vars, &fam, asg, budget) {
                Ok(Some(_)) => return Ok(TruthValue::True),
                _ => continue,
            }
        }
    }
    Ok(TruthValue::Unknown {
        subformula: render_elementary(&ElementaryFormula::Existential {
            vars: vars.to_vec(),
            body: Box::new(body.clone()),
        }),
    })
}

/// The inner leaf family at an outer tag as a formula family, when it can
/// be written down: either a small finite list, or a uniform
/// naturals-indexed template arising from a constant-default choice over a
/// naturals-indexed conjunction with singleton inner families.
fn materialize_inner_family(e: &ElementaryFormula, alpha: &Tag) -> Option<IndexFamily> {
    if let Some(s) = e.inner_size(alpha) {
        if s <= MATERIALIZE_CAP {
            let tags = e.inner_tags(alpha, s as usize);
            let members: Option<Vec<Formula>> = tags.iter().map(|b| e.leaf(alpha, b)).collect();
            return Some(IndexFamily::FiniteList(members?));
        }
    }
    match (e, alpha) {
        (
            ElementaryFormula::Conjunction(ElementaryFamily::NatIndexed { var, template }),
            Tag::Choice { entries, default },
        ) if entries.is_empty() => {
            let base_alpha = template.outer_tag_at(*default)?;
            if template.inner_size(&base_alpha) != Some(1) {
                return None;
            }
            let beta = template.inner_tags(&base_alpha, 1).into_iter().next()?;
            // Computed on the template itself, so the index variable stays
            // free in the resulting member formula.
            let generic = template.leaf(&base_alpha, &beta)?;
            Some(IndexFamily::NatIndexed { var: var.clone(), template: Box::new(generic) })
        }
        _ => None,
    }
}

/// Renders an elementary formula in the extended s-expression grammar:
/// plain formulas are leaves, `(OrFam ...)` / `(AndFam ...)` carry a tag
/// specifier (`finite`, `(nat VAR)`, `(natpair VAR VAR)`, `choicefn`, or
/// `finsubsets` with the quantified variables).
pub fn render_elementary(e: &ElementaryFormula) -> String {
    let mut out = String::new();
    write_elem(e, &mut out);
    out
}

fn write_elem(e: &ElementaryFormula, out: &mut String) {
    match e {
        ElementaryFormula::Leaf(f) => crate::parse::write_formula(f, out),
        ElementaryFormula::Negation(inner) => {
            out.push_str("(OrFam choicefn ");
            write_elem(inner, out);
            out.push(')');
        }
        ElementaryFormula::Disjunction(fam) => write_fam(fam, "OrFam", out),
        ElementaryFormula::Conjunction(fam) => write_fam(fam, "AndFam", out),
        ElementaryFormula::Existential { vars, body } => {
            out.push_str("(AndFam finsubsets (");
            out.push_str(&vars.join(" "));
            out.push_str(") ");
            write_elem(body, out);
            out.push(')');
        }
    }
}

fn write_fam(fam: &ElementaryFamily, head: &str, out: &mut String) {
    out.push('(');
    out.push_str(head);
    match fam {
        ElementaryFamily::FiniteList(es) => {
            out.push_str(" finite");
            for e in es {
                out.push(' ');
                write_elem(e, out);
            }
        }
        ElementaryFamily::NatIndexed { var, template } => {
            out.push_str(" (nat ");
            out.push_str(var);
            out.push_str(") ");
            write_elem(template, out);
        }
        ElementaryFamily::NatPairIndexed { var1, var2, template } => {
            out.push_str(" (natpair ");
            out.push_str(var1);
            out.push(' ');
            out.push_str(var2);
            out.push_str(") ");
            write_elem(template, out);
        }
    }
    out.push(')');
}

/// Parses the extended elementary-formula grammar. Inverse of
/// [`render_elementary`].
pub fn parse_elementary(
    text: &str,
    sig: &crate::formula::Signature,
) -> Result<ElementaryFormula, ParseError> {
    let mut p = Parser::new(text, sig)?;
    let e = parse_elem(&mut p)?;
    if !p.at_end() {
        return Err(ParseError {
            position: p.position(),
            message: "trailing input after elementary formula".to_string(),
        });
    }
    Ok(e)
}

fn parse_elem(p: &mut Parser<'_>) -> Result<ElementaryFormula, ParseError> {
    match p.peek_head() {
        Some("OrFam") | Some("AndFam") => {}
        _ => return Ok(ElementaryFormula::Leaf(p.parse_formula()?)),
    }
    p.expect_lparen()?;
    let (hpos, head) = p.expect_symbol()?;
    let disjunctive = head == "OrFam";
    // Tag specifier: a bare keyword or a parenthesized binder.
    let e = match p.peek_head() {
        Some("nat") | Some("natpair") => {
            p.expect_lparen()?;
            let (_, kind) = p.expect_symbol()?;
            let (_, v1) = p.expect_symbol()?;
            let fam = if kind == "nat" {
                p.expect_rparen()?;
                p.push_index_var(&v1);
                let template = parse_elem(p)?;
                p.pop_index_var();
                ElementaryFamily::NatIndexed { var: v1, template: Box::new(template) }
            } else {
                let (_, v2) = p.expect_symbol()?;
                p.expect_rparen()?;
                p.push_index_var(&v1);
                p.push_index_var(&v2);
                let template = parse_elem(p)?;
                p.pop_index_var();
                p.pop_index_var();
                ElementaryFamily::NatPairIndexed { var1: v1, var2: v2, template: Box::new(template) }
            };
            if disjunctive {
                ElementaryFormula::Disjunction(fam)
            } else {
                ElementaryFormula::Conjunction(fam)
            }
        }
        _ => {
            let (kpos, keyword) = p.expect_symbol()?;
            match (disjunctive, keyword.as_str()) {
                (true, "choicefn") => {
                    let inner = parse_elem(p)?;
                    ElementaryFormula::Negation(Box::new(inner))
                }
                (false, "finsubsets") => {
                    p.expect_lparen()?;
                    let mut vars = Vec::new();
                    loop {
                        match p.next()? {
                            crate::parse::Token::RParen(_) => break,
                            crate::parse::Token::Symbol(_, s) => vars.push(s),
                            t => return p.err(t.pos(), "expected a variable"),
                        }
                    }
                    if vars.is_empty() {
                        return p.err(kpos, "finsubsets requires at least one variable");
                    }
                    let body = parse_elem(p)?;
                    ElementaryFormula::Existential { vars, body: Box::new(body) }
                }
                (_, "finite") => {
                    let mut members = Vec::new();
                    while !matches!(p.peek(), Some(crate::parse::Token::RParen(_)) | None) {
                        members.push(parse_elem(p)?);
                    }
                    let fam = ElementaryFamily::FiniteList(members);
                    if disjunctive {
                        ElementaryFormula::Disjunction(fam)
                    } else {
                        ElementaryFormula::Conjunction(fam)
                    }
                }
                (_, other) => {
                    return p.err(kpos, alloc::format!("unknown tag specifier `{other}`"))
                }
            }
        }
    };
    let _ = hpos;
    p.expect_rparen()?;
    Ok(e)
}
