//! Shared fixtures for unit tests.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::formula::Signature;
use crate::model::{FiniteStructure, RelKey};

/// Test signature: unary `Q`, binary `R`, indexed unary families `P` (one
/// index) and `W` (two indices).
pub fn test_sig() -> Signature {
    Signature::build(
        [("Q".to_string(), 1), ("R".to_string(), 2)],
        [("P".to_string(), 1, 1), ("W".to_string(), 2, 1)],
        [],
    )
    .unwrap()
}

/// A structure over `test_sig` from element names and facts given as
/// (concrete relation name, tuple).
pub fn structure(elements: &[&str], facts: &[(&str, &[&str])]) -> FiniteStructure {
    let mut st =
        FiniteStructure::new(elements.iter().map(|e| e.to_string()).collect()).unwrap();
    for (rel, tuple) in facts {
        let key = RelKey::parse_concrete(rel);
        st.add_fact(key, tuple.iter().map(|e| e.to_string()).collect()).unwrap();
    }
    st
}

/// Every structure over unary `Q` and binary `R` with the given universe.
/// 2^n * 2^(n^2) structures; keep n tiny.
pub fn all_structures(elements: &[&str]) -> Vec<FiniteStructure> {
    let n = elements.len();
    let q_masks = 1u32 << n;
    let r_masks = 1u64 << (n * n);
    let mut out = Vec::new();
    for qm in 0..q_masks {
        for rm in 0..r_masks {
            let mut st = FiniteStructure::new(
                elements.iter().map(|e| e.to_string()).collect(),
            )
            .unwrap();
            for (i, e) in elements.iter().enumerate() {
                if qm >> i & 1 == 1 {
                    st.add_fact(RelKey::plain("Q"), alloc::vec![e.to_string()]).unwrap();
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if rm >> (i * n + j) & 1 == 1 {
                        st.add_fact(
                            RelKey::plain("R"),
                            alloc::vec![elements[i].to_string(), elements[j].to_string()],
                        )
                        .unwrap();
                    }
                }
            }
            out.push(st);
        }
    }
    out
}
