//! Borel-set codes over a finite basis of finitary sentences, the
//! code-to-formula compiler, and a direct set-semantics membership oracle
//! for validating it.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::classify::classify;
use crate::formula::{free_vars, Formula};

/// A finite ordered basis of distinct finitary sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceBasis {
    sentences: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisError {
    Duplicate(usize),
    NotFinitary(usize),
    NotSentence(usize),
    IndexOutOfRange(usize),
    NotInBasis(String),
}

impl fmt::Display for BasisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisError::Duplicate(i) => write!(f, "basis sentence {i} repeats an earlier one"),
            BasisError::NotFinitary(i) => write!(f, "basis sentence {i} is not finitary"),
            BasisError::NotSentence(i) => write!(f, "basis formula {i} has free variables"),
            BasisError::IndexOutOfRange(i) => write!(f, "basis index {i} out of range"),
            BasisError::NotInBasis(s) => write!(f, "formula not in basis: {s}"),
        }
    }
}

impl SentenceBasis {
    pub fn new(sentences: Vec<Formula>) -> Result<Self, BasisError> {
        let mut seen = BTreeSet::new();
        for (i, s) in sentences.iter().enumerate() {
            if !s.is_finitary() {
                return Err(BasisError::NotFinitary(i));
            }
            let qc = classify(s);
            debug_assert!(qc.sigma_rank.is_some() && qc.pi_rank.is_some());
            if !free_vars(s).is_empty() {
                return Err(BasisError::NotSentence(i));
            }
            if !seen.insert(s.clone()) {
                return Err(BasisError::Duplicate(i));
            }
        }
        Ok(SentenceBasis { sentences })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, i: usize) -> Option<&Formula> {
        self.sentences.get(i)
    }

    pub fn sentences(&self) -> &[Formula] {
        &self.sentences
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.sentences.iter().position(|s| s == f)
    }
}

/// A subset of the basis, as a membership vector in basis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoryFace {
    membership: Vec<bool>,
}

impl TheoryFace {
    pub fn new(basis: &SentenceBasis, members: &[usize]) -> Result<Self, BasisError> {
        let mut membership = alloc::vec![false; basis.len()];
        for &i in members {
            if i >= basis.len() {
                return Err(BasisError::IndexOutOfRange(i));
            }
            membership[i] = true;
        }
        Ok(TheoryFace { membership })
    }

    pub fn from_bits(basis: &SentenceBasis, bits: u64) -> Self {
        let membership = (0..basis.len()).map(|i| bits >> i & 1 == 1).collect();
        TheoryFace { membership }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.membership.get(i).copied().unwrap_or(false)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.membership.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// A Borel-set code over the basis: subbasic clopen sets and their
/// complements, closed under complement and finite union. Intersection is
/// sugar for complement-of-union-of-complements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BorelCode {
    Basic(usize),
    BasicNeg(usize),
    Complement(Box<BorelCode>),
    Union(Vec<BorelCode>),
}

impl BorelCode {
    /// Intersection sugar, keeping the code algebra at three constructors.
    pub fn intersection(codes: Vec<BorelCode>) -> BorelCode {
        BorelCode::Complement(Box::new(BorelCode::Union(
            codes.into_iter().map(|c| BorelCode::Complement(Box::new(c))).collect(),
        )))
    }

    pub fn validate(&self, basis: &SentenceBasis) -> Result<(), BasisError> {
        match self {
            BorelCode::Basic(i) | BorelCode::BasicNeg(i) => {
                if *i >= basis.len() {
                    Err(BasisError::IndexOutOfRange(*i))
                } else {
                    Ok(())
                }
            }
            BorelCode::Complement(c) => c.validate(basis),
            BorelCode::Union(cs) => cs.iter().try_for_each(|c| c.validate(basis)),
        }
    }
}

/// The sentence pinning the truth value of every basis member to the
/// face: the conjunction, in basis order, of each member or its negation.
/// A one-element basis yields the bare (possibly negated) sentence.
pub fn xi_formula(basis: &SentenceBasis, face: &TheoryFace) -> Formula {
    let mut conjuncts = Vec::with_capacity(basis.len());
    for (i, s) in basis.sentences().iter().enumerate() {
        if face.contains(i) {
            conjuncts.push(s.clone());
        } else {
            conjuncts.push(Formula::not(s.clone()));
        }
    }
    if conjuncts.len() == 1 {
        conjuncts.pop().unwrap()
    } else {
        Formula::And(conjuncts)
    }
}

/// Compiles a code to a formula, quantifier-free over the basis
/// sentences: a subbasic set becomes its sentence (or negation), a
/// complement becomes a negation, a union becomes a disjunction.
pub fn borel_to_formula(code: &BorelCode, basis: &SentenceBasis) -> Result<Formula, BasisError> {
    code.validate(basis)?;
    Ok(compile(code, basis))
}

fn compile(code: &BorelCode, basis: &SentenceBasis) -> Formula {
    match code {
        BorelCode::Basic(i) => basis.sentence(*i).unwrap().clone(),
        BorelCode::BasicNeg(i) => Formula::not(basis.sentence(*i).unwrap().clone()),
        BorelCode::Complement(c) => Formula::not(compile(c, basis)),
        BorelCode::Union(cs) => Formula::Or(cs.iter().map(|c| compile(c, basis)).collect()),
    }
}

/// Direct set semantics: whether the face lies in the coded set.
pub fn borel_membership(code: &BorelCode, face: &TheoryFace) -> bool {
    match code {
        BorelCode::Basic(i) => face.contains(*i),
        BorelCode::BasicNeg(i) => !face.contains(*i),
        BorelCode::Complement(c) => !borel_membership(c, face),
        BorelCode::Union(cs) => cs.iter().any(|c| borel_membership(c, face)),
    }
}

/// Propositional evaluation of a compiled formula under the valuation
/// that makes a basis sentence true exactly when the face contains it.
/// Errors when a subformula is neither a basis member nor built from them
/// by negation, conjunction, or disjunction.
pub fn eval_against_face(
    f: &Formula,
    basis: &SentenceBasis,
    face: &TheoryFace,
) -> Result<bool, BasisError> {
    if let Some(i) = basis.index_of(f) {
        return Ok(face.contains(i));
    }
    match f {
        Formula::Not(g) => Ok(!eval_against_face(g, basis, face)?),
        Formula::And(fs) => {
            for g in fs {
                if !eval_against_face(g, basis, face)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(fs) => {
            for g in fs {
                if eval_against_face(g, basis, face)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        other => Err(BasisError::NotInBasis(crate::parse::render_formula(other))),
    }
}
