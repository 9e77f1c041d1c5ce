//! The alternating-game decider for n-elementary substructures.
//!
//! `A` is an n-elementary substructure of `B` when every finitary formula
//! with at most n alternating quantifier blocks transfers between `A` and
//! `B` for parameters drawn from `A`, in both directions. The decider
//! plays the corresponding back-and-forth game: n rounds of quantifier
//! blocks, each a tuple of length at most `|universe(B)|`, with an
//! atomic-type comparison (relations, equalities, constants) at the
//! leaves.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{is_substructure, FiniteStructure, RelKey, StructureError};

/// Decides whether `a` is an n-elementary substructure of `b`.
///
/// Errors when `a` is not a substructure of `b`.
pub fn n_elementary(
    a: &FiniteStructure,
    b: &FiniteStructure,
    n: u32,
) -> Result<bool, StructureError> {
    if !is_substructure(a, b)? {
        return Err(StructureError::SignatureMismatch(
            "first structure is not a substructure of the second".into(),
        ));
    }
    if !a.uniform_decls().is_empty() || !b.uniform_decls().is_empty() {
        // A uniform declaration gives facts under infinitely many concrete
        // relations; the leaf type comparison enumerates table keys only.
        return Err(StructureError::SignatureMismatch(
            "the game does not support uniform relation declarations".into(),
        ));
    }
    let mut game = Game::new(a, b);
    // Parameters range over duplicate-free tuples of A; a formula can
    // reuse a variable, so repeated entries add nothing.
    let param_tuples = dup_free_tuples(a.universe().len(), a.universe().len());
    for params in param_tuples {
        let a_tuple: Vec<usize> = params.clone();
        // The parameters name the same elements inside B.
        let b_tuple: Vec<usize> = params
            .iter()
            .map(|&i| game.b_index_of(&a.universe()[i]))
            .collect();
        if !game.le(Side::A, &a_tuple, &b_tuple, n) || !game.le(Side::B, &b_tuple, &a_tuple, n) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All tuples over `0..n` with pairwise-distinct entries, of length 0..=max_len.
fn dup_free_tuples(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = alloc::vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = alloc::vec![Vec::new()];
    for _ in 0..max_len.min(n) {
        let mut next = Vec::new();
        for t in &frontier {
            for i in 0..n {
                if !t.contains(&i) {
                    let mut t2 = t.clone();
                    t2.push(i);
                    next.push(t2);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    A,
    B,
}

struct Game<'s> {
    a: &'s FiniteStructure,
    b: &'s FiniteStructure,
    /// Keys appearing in either structure.
    keys: Vec<RelKey>,
    memo: BTreeMap<(Side, Vec<usize>, Vec<usize>, u32), bool>,
}

impl<'s> Game<'s> {
    fn new(a: &'s FiniteStructure, b: &'s FiniteStructure) -> Self {
        let mut keys: Vec<RelKey> = a.relations().map(|(k, _)| k.clone()).collect();
        for (k, _) in b.relations() {
            if !keys.contains(k) {
                keys.push(k.clone());
            }
        }
        Game { a, b, keys, memo: BTreeMap::new() }
    }

    fn structure(&self, side: Side) -> &FiniteStructure {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }

    fn b_index_of(&self, name: &str) -> usize {
        self.b.universe().iter().position(|e| e == name).expect("substructure element")
    }

    /// Every existential formula with at most n alternating blocks true of
    /// `x_tuple` in the `side` structure is true of `y_tuple` in the other.
    fn le(&mut self, side: Side, x_tuple: &[usize], y_tuple: &[usize], n: u32) -> bool {
        if n == 0 {
            return self.same_atomic_type(side, x_tuple, y_tuple);
        }
        let key = (side, x_tuple.to_vec(), y_tuple.to_vec(), n);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let x_size = self.structure(side).universe().len();
        let y_size = self.structure(side.flip()).universe().len();
        let block = self.b.universe().len();
        let mut result = true;
        'picks: for k in 1..=block {
            for pick in tuples(x_size, k) {
                let mut extended_x = x_tuple.to_vec();
                extended_x.extend(&pick);
                let mut matched = false;
                for reply in tuples(y_size, k) {
                    let mut extended_y = y_tuple.to_vec();
                    extended_y.extend(&reply);
                    // The reply must make every formula of the next level
                    // transfer back.
                    if self.le(side.flip(), &extended_y, &extended_x, n - 1) {
                        matched = true;
                        break;
                    }
                }
                if !matched {
                    result = false;
                    break 'picks;
                }
            }
        }
        self.memo.insert(key, result);
        result
    }

    /// Equal atomic types: matching equality pattern, constants, and
    /// relation facts over the two tuples extended by all constants.
    fn same_atomic_type(&self, side: Side, x_tuple: &[usize], y_tuple: &[usize]) -> bool {
        let x_st = self.structure(side);
        let y_st = self.structure(side.flip());
        let xs: Vec<&String> = x_tuple
            .iter()
            .map(|&i| &x_st.universe()[i])
            .chain(x_st.constants().map(|(_, e)| {
                x_st.universe().iter().find(|u| u.as_str() == e).expect("constant element")
            }))
            .collect();
        let ys: Vec<&String> = y_tuple
            .iter()
            .map(|&i| &y_st.universe()[i])
            .chain(y_st.constants().map(|(_, e)| {
                y_st.universe().iter().find(|u| u.as_str() == e).expect("constant element")
            }))
            .collect();
        debug_assert_eq!(xs.len(), ys.len());
        let m = xs.len();
        for i in 0..m {
            for j in 0..m {
                if (xs[i] == xs[j]) != (ys[i] == ys[j]) {
                    return false;
                }
            }
        }
        for key in &self.keys {
            let arity = match x_st
                .relations()
                .find(|(k, _)| k == &key)
                .and_then(|(_, t)| t.iter().next().map(|v| v.len()))
                .or_else(|| {
                    y_st.relations()
                        .find(|(k, _)| k == &key)
                        .and_then(|(_, t)| t.iter().next().map(|v| v.len()))
                }) {
                Some(ar) => ar,
                None => continue,
            };
            for pos in tuples(m, arity) {
                let x_args: Vec<String> = pos.iter().map(|&p| xs[p].clone()).collect();
                let y_args: Vec<String> = pos.iter().map(|&p| ys[p].clone()).collect();
                if x_st.rel_holds(key, &x_args) != y_st.rel_holds(key, &y_args) {
                    return false;
                }
            }
        }
        true
    }
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// All tuples over `0..n` of exactly length `k`, repeats allowed.
pub(crate) fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = alloc::vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 0..n {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{all_structures, structure};

    #[test]
    fn identical_structures_are_n_elementary_for_all_n() {
        let b = structure(&["a", "b"], &[("Q", &["a"]), ("R", &["a", "b"])]);
        for n in 0..=3 {
            assert!(n_elementary(&b, &b, n).unwrap());
        }
    }

    #[test]
    fn adding_an_element_breaks_one_elementarity() {
        // A single bare element inside a two-element structure: every
        // quantifier-free fact transfers, but a universal formula saying
        // everything equals the parameter fails upstairs.
        let a = structure(&["a"], &[]);
        let b = structure(&["a", "b"], &[]);
        assert!(n_elementary(&a, &b, 0).unwrap());
        assert!(!n_elementary(&a, &b, 1).unwrap());
    }

    #[test]
    fn substructure_required() {
        let a = structure(&["a"], &[("Q", &["a"])]);
        let b = structure(&["a", "b"], &[]);
        assert!(n_elementary(&a, &b, 0).is_err());
    }

    #[test]
    fn one_elementary_between_finite_structures_implies_equality() {
        // Exhaustive over pairs with at most 2 elements: at-most-k and
        // at-least-k sentences force equal universes, and then equal
        // structures.
        for b in all_structures(&["0", "1"]) {
            for keep in [&["0"][..], &["0", "1"][..]] {
                let a = b.restrict_to(&keep.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                    .unwrap();
                if n_elementary(&a, &b, 1).unwrap() {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn zero_elementary_is_substructure() {
        for b in all_structures(&["0", "1"]) {
            let a = b.restrict_to(&["0".to_string()]).unwrap();
            assert!(n_elementary(&a, &b, 0).unwrap());
        }
    }
}
