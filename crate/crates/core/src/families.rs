//! Finite presentations and exact closed-form oracles for two infinite
//! structure families: block structures (a root marked `Q` with `R`-children
//! carrying the `P_n` labels, optionally plus unlabeled non-standard
//! elements) and tree structures whose elements are the nodes of a tree
//! under `omega^{<omega}`, labeled by unary relations `R_{i,j}`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Formula, Signature};
use crate::model::{FiniteStructure, RelKey, StructureError};
use crate::parse::parse_formula;

/// A count that is either a natural number or countably infinite.
/// Arithmetic saturates at omega.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Count {
    Finite(u64),
    Omega,
}

impl Count {
    pub fn is_zero(&self) -> bool {
        matches!(self, Count::Finite(0))
    }

    pub fn plus(self, n: u64) -> Count {
        match self {
            Count::Finite(k) => Count::Finite(k + n),
            Count::Omega => Count::Omega,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Omega => write!(f, "omega"),
        }
    }
}

/// A group of non-standard blocks sharing a shape: each block has the
/// full standard part plus `extra` non-standard elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonStandardBlocks {
    /// Non-standard elements per block, at least one.
    pub extra: Count,
    /// How many blocks of this shape.
    pub copies: Count,
}

/// A finite presentation of a disjoint union of blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockConfig {
    pub standard_blocks: Count,
    pub nonstandard_blocks: Vec<NonStandardBlocks>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyError {
    EmptyConfig,
    ZeroExtra,
    ZeroCopies,
    NotPrefixClosed(Vec<u64>),
    DuplicateEdgeLabel { node: String, label: u64 },
    UnknownNode(String),
    DuplicateNode(String),
}

impl fmt::Display for FamilyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyError::EmptyConfig => write!(f, "a block config needs at least one block"),
            FamilyError::ZeroExtra => {
                write!(f, "a non-standard block needs at least one non-standard element")
            }
            FamilyError::ZeroCopies => write!(f, "a block descriptor needs at least one copy"),
            FamilyError::NotPrefixClosed(node) => {
                write!(f, "tree is not prefix-closed at {node:?}")
            }
            FamilyError::DuplicateEdgeLabel { node, label } => {
                write!(f, "node `{node}` has two edges labeled {label}")
            }
            FamilyError::UnknownNode(n) => write!(f, "unknown node `{n}`"),
            FamilyError::DuplicateNode(n) => write!(f, "duplicate node `{n}`"),
        }
    }
}

impl BlockConfig {
    pub fn validate(&self) -> Result<(), FamilyError> {
        let mut any = !self.standard_blocks.is_zero();
        for group in &self.nonstandard_blocks {
            if group.extra.is_zero() {
                return Err(FamilyError::ZeroExtra);
            }
            if group.copies.is_zero() {
                return Err(FamilyError::ZeroCopies);
            }
            any = true;
        }
        if !any {
            return Err(FamilyError::EmptyConfig);
        }
        Ok(())
    }

    /// The structure of countably many standard blocks.
    pub fn initial() -> BlockConfig {
        BlockConfig { standard_blocks: Count::Omega, nonstandard_blocks: Vec::new() }
    }
}

/// Whether the block sentence (every `Q`-root has an unlabeled child) is
/// true: exactly when no standard block is present.
pub fn block_satisfies_psi(c: &BlockConfig) -> bool {
    c.standard_blocks.is_zero()
}

/// Whether the block sentence is weakly forced: always, for every valid
/// config. An unlabeled child can be added to any standard block in an
/// elementary extension, and forcing persists under elementary extension.
pub fn block_forces_psi(c: &BlockConfig) -> Result<bool, FamilyError> {
    c.validate()?;
    Ok(true)
}

/// One alternation step: a config satisfying the sentence gains a single
/// standard block; otherwise every standard block gains one non-standard
/// element. The output's truth value is the negation of the input's.
pub fn alternate_extension(c: &BlockConfig) -> BlockConfig {
    if block_satisfies_psi(c) {
        BlockConfig {
            standard_blocks: Count::Finite(1),
            nonstandard_blocks: c.nonstandard_blocks.clone(),
        }
    } else {
        let mut groups = c.nonstandard_blocks.clone();
        groups.push(NonStandardBlocks { extra: Count::Finite(1), copies: c.standard_blocks });
        BlockConfig { standard_blocks: Count::Finite(0), nonstandard_blocks: groups }
    }
}

/// A finite presentation of a tree under `omega^{<omega}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeSpec {
    /// An explicit finite prefix-closed set of sequences. The root is
    /// always present.
    FiniteTree { nodes: Vec<Vec<u64>> },
    /// A finite rooted graph with natural-number edge labels, denoting its
    /// unfolding: tree nodes are label sequences of walks from the root.
    RegularTree { nodes: Vec<String>, root: String, edges: Vec<(String, u64, String)> },
}

impl TreeSpec {
    pub fn validate(&self) -> Result<(), FamilyError> {
        match self {
            TreeSpec::FiniteTree { nodes } => {
                let set: BTreeSet<&Vec<u64>> = nodes.iter().collect();
                for node in nodes {
                    if !node.is_empty() {
                        let parent = node[..node.len() - 1].to_vec();
                        if !set.contains(&parent) {
                            return Err(FamilyError::NotPrefixClosed(node.clone()));
                        }
                    }
                }
                Ok(())
            }
            TreeSpec::RegularTree { nodes, root, edges } => {
                let mut seen = BTreeSet::new();
                for n in nodes {
                    if !seen.insert(n) {
                        return Err(FamilyError::DuplicateNode(n.clone()));
                    }
                }
                if !seen.contains(root) {
                    return Err(FamilyError::UnknownNode(root.clone()));
                }
                let mut labels = BTreeSet::new();
                for (src, label, dst) in edges {
                    if !seen.contains(src) {
                        return Err(FamilyError::UnknownNode(src.clone()));
                    }
                    if !seen.contains(dst) {
                        return Err(FamilyError::UnknownNode(dst.clone()));
                    }
                    if !labels.insert((src.clone(), *label)) {
                        return Err(FamilyError::DuplicateEdgeLabel {
                            node: src.clone(),
                            label: *label,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// The tree structure induced by a spec: elements are tree nodes, and the
/// node for a sequence sigma satisfies exactly the relations `R_{i,j}` with
/// `sigma(i) = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStructureHandle {
    spec: TreeSpec,
}

/// Builds the handle, answering atomic queries exactly.
pub fn build_tree_structure(spec: &TreeSpec) -> Result<TreeStructureHandle, FamilyError> {
    spec.validate()?;
    Ok(TreeStructureHandle { spec: spec.clone() })
}

impl TreeStructureHandle {
    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    /// Whether the element for `sigma` satisfies `R_{i,j}`.
    pub fn atom_holds(&self, sigma: &[u64], i: u64, j: u64) -> bool {
        self.contains_node(sigma) && (i as usize) < sigma.len() && sigma[i as usize] == j
    }

    /// Whether the tree contains a node.
    pub fn contains_node(&self, sigma: &[u64]) -> bool {
        match &self.spec {
            TreeSpec::FiniteTree { nodes } => nodes.iter().any(|n| n == sigma),
            TreeSpec::RegularTree { root, edges, .. } => {
                let mut at = root;
                for label in sigma {
                    match edges.iter().find(|(src, l, _)| src == at && l == label) {
                        Some((_, _, dst)) => at = dst,
                        None => return false,
                    }
                }
                true
            }
        }
    }

    /// All nodes of length at most `depth`, in length-then-lexicographic
    /// order.
    pub fn nodes_to_depth(&self, depth: usize) -> Vec<Vec<u64>> {
        match &self.spec {
            TreeSpec::FiniteTree { nodes } => {
                let mut out: Vec<Vec<u64>> =
                    nodes.iter().filter(|n| n.len() <= depth).cloned().collect();
                out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
                out.dedup();
                // The root is always part of the tree.
                if out.first().map(|n| !n.is_empty()).unwrap_or(true) {
                    out.insert(0, Vec::new());
                }
                out
            }
            TreeSpec::RegularTree { root, edges, .. } => {
                let mut out = vec![Vec::new()];
                let mut frontier: Vec<(&str, Vec<u64>)> = vec![(root.as_str(), Vec::new())];
                for _ in 0..depth {
                    let mut next = Vec::new();
                    for (node, path) in &frontier {
                        let mut children: Vec<(u64, &str)> = edges
                            .iter()
                            .filter(|(src, _, _)| src == node)
                            .map(|(_, l, dst)| (*l, dst.as_str()))
                            .collect();
                        children.sort();
                        for (label, dst) in children {
                            let mut p = path.clone();
                            p.push(label);
                            out.push(p.clone());
                            next.push((dst, p));
                        }
                    }
                    frontier = next;
                }
                out
            }
        }
    }
}

/// Element name for a tree node: `e` for the root, else dot-joined labels.
pub fn node_name(sigma: &[u64]) -> String {
    if sigma.is_empty() {
        "e".to_string()
    } else {
        sigma.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// The induced finite structure on nodes of length at most `depth`, with
/// relation tables materialized.
pub fn truncate_to_finite(
    h: &TreeStructureHandle,
    depth: usize,
) -> Result<FiniteStructure, StructureError> {
    let nodes = h.nodes_to_depth(depth);
    let names: Vec<String> = nodes.iter().map(|n| node_name(n)).collect();
    let mut st = FiniteStructure::new(names.clone())?;
    for (node, name) in nodes.iter().zip(&names) {
        for (i, j) in node.iter().enumerate() {
            st.add_fact(RelKey::indexed("R", &[i as u64, *j]), vec![name.clone()])?;
        }
    }
    Ok(st)
}

/// Whether the denoted tree has an infinite path: never for a finite tree;
/// for a regular tree exactly when a cycle is reachable from the root.
/// Returns the certificate nodes of a reachable cycle when one exists.
pub fn find_reachable_cycle(spec: &TreeSpec) -> Result<Option<Vec<String>>, FamilyError> {
    spec.validate()?;
    match spec {
        TreeSpec::FiniteTree { .. } => Ok(None),
        TreeSpec::RegularTree { root, edges, .. } => {
            // Iterative DFS with colors: white, on-stack, done.
            #[derive(Clone, Copy, PartialEq)]
            enum Color {
                White,
                OnStack,
                Done,
            }
            let mut reachable: Vec<&String> = vec![root];
            let mut i = 0;
            while i < reachable.len() {
                let cur = reachable[i];
                for (src, _, dst) in edges {
                    if src == cur && !reachable.contains(&dst) {
                        reachable.push(dst);
                    }
                }
                i += 1;
            }
            let pos = |n: &String| reachable.iter().position(|m| *m == n).unwrap();
            let n = reachable.len();
            let mut colors = vec![Color::White; n];
            let mut stack: Vec<(usize, usize)> = Vec::new(); // (node, next edge index)
            let mut path: Vec<usize> = Vec::new();
            let out_edges: Vec<Vec<usize>> = reachable
                .iter()
                .map(|node| {
                    edges
                        .iter()
                        .filter(|(src, _, _)| &src == node)
                        .map(|(_, _, dst)| pos(dst))
                        .collect()
                })
                .collect();
            colors[0] = Color::OnStack;
            stack.push((0, 0));
            path.push(0);
            while let Some((node, edge_ix)) = stack.pop() {
                if edge_ix < out_edges[node].len() {
                    stack.push((node, edge_ix + 1));
                    let next = out_edges[node][edge_ix];
                    match colors[next] {
                        Color::OnStack => {
                            // Cycle: the path suffix from `next` onward.
                            let start = path.iter().position(|&p| p == next).unwrap();
                            let cycle =
                                path[start..].iter().map(|&p| reachable[p].clone()).collect();
                            return Ok(Some(cycle));
                        }
                        Color::White => {
                            colors[next] = Color::OnStack;
                            stack.push((next, 0));
                            path.push(next);
                        }
                        Color::Done => {}
                    }
                } else {
                    colors[node] = Color::Done;
                    path.pop();
                }
            }
            Ok(None)
        }
    }
}

/// Whether the denoted tree has an infinite path.
pub fn tree_has_infinite_path(spec: &TreeSpec) -> Result<bool, FamilyError> {
    Ok(find_reachable_cycle(spec)?.is_some())
}

/// Whether the tree structure weakly forces the tree sentence: exactly
/// when the tree has an infinite path.
pub fn tree_forces_psi(spec: &TreeSpec) -> Result<bool, FamilyError> {
    tree_has_infinite_path(spec)
}

/// Whether the tree structure satisfies the tree sentence: never. Every
/// element is a finite sequence, so the conjunction fails at the
/// sequence's length. Exposed to contrast forcing with satisfaction.
pub fn tree_satisfies_psi(spec: &TreeSpec) -> Result<bool, FamilyError> {
    spec.validate()?;
    Ok(false)
}

/// Source text of the built-in block sentence: every `Q`-root has an
/// `R`-child satisfying no `P_n`.
pub const PSI_BLOCKS_SRC: &str =
    "(forall (x) (or (not (atom Q x)) (exists (y) (and (atom R x y) (And (n) (not (atom P_n y)))))))";

/// Source text of the built-in tree sentence: some element satisfies, for
/// every coordinate, one of the labels at that coordinate.
pub const PSI_TREE_SRC: &str = "(exists (x) (And (i) (Or (j) (atom R_i,j x))))";

/// Signature of the block family: unary `Q`, binary `R`, unary `P_n`.
pub fn blocks_signature() -> Signature {
    Signature::build(
        [("Q".to_string(), 1), ("R".to_string(), 2)],
        [("P".to_string(), 1, 1)],
        [],
    )
    .expect("valid signature")
}

/// Signature of the tree family: unary `R_{i,j}`.
pub fn trees_signature() -> Signature {
    Signature::build([], [("R".to_string(), 2, 1)], []).expect("valid signature")
}

/// The built-in block sentence.
pub fn psi_blocks() -> Formula {
    parse_formula(PSI_BLOCKS_SRC, &blocks_signature()).expect("builtin parses")
}

/// The built-in tree sentence.
pub fn psi_tree() -> Formula {
    parse_formula(PSI_TREE_SRC, &trees_signature()).expect("builtin parses")
}

/// A finite truncation of a single block: root `a` with `children` labeled
/// children (`b_k` satisfying `P_k`) and `extras` unlabeled children
/// (`s_k`). Used by tests and the command-line demo.
pub fn block_truncation(children: u64, extras: u64) -> FiniteStructure {
    let mut names = vec!["a".to_string()];
    for k in 0..children {
        names.push(format!("b{k}"));
    }
    for k in 0..extras {
        names.push(format!("s{k}"));
    }
    let mut st = FiniteStructure::new(names).expect("nonempty universe");
    st.add_fact(RelKey::plain("Q"), vec!["a".to_string()]).unwrap();
    for k in 0..children {
        st.add_fact(RelKey::plain("R"), vec!["a".to_string(), format!("b{k}")]).unwrap();
        st.add_fact(RelKey::indexed("P", &[k]), vec![format!("b{k}")]).unwrap();
    }
    for k in 0..extras {
        st.add_fact(RelKey::plain("R"), vec!["a".to_string(), format!("s{k}")]).unwrap();
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{satisfies, Assignment, DEFAULT_BUDGET};

    fn finite_tree(nodes: &[&[u64]]) -> TreeSpec {
        TreeSpec::FiniteTree { nodes: nodes.iter().map(|n| n.to_vec()).collect() }
    }

    fn self_loop() -> TreeSpec {
        TreeSpec::RegularTree {
            nodes: vec!["r".into()],
            root: "r".into(),
            edges: vec![("r".into(), 0, "r".into())],
        }
    }

    #[test]
    fn root_only_tree_has_one_unlabeled_element() {
        let h = build_tree_structure(&finite_tree(&[&[]])).unwrap();
        let st = truncate_to_finite(&h, 0).unwrap();
        assert_eq!(st.universe(), ["e".to_string()]);
        assert_eq!(st.relations().count(), 0);
    }

    #[test]
    fn three_node_tree_atoms() {
        let h = build_tree_structure(&finite_tree(&[&[], &[0], &[0, 1]])).unwrap();
        assert!(h.atom_holds(&[0, 1], 0, 0));
        assert!(h.atom_holds(&[0, 1], 1, 1));
        assert!(!h.atom_holds(&[0, 1], 0, 1));
        assert!(!h.atom_holds(&[0, 1], 2, 0));
        let st = truncate_to_finite(&h, 2).unwrap();
        assert_eq!(st.universe().len(), 3);
        let fact_count: usize = st.relations().map(|(_, t)| t.len()).sum();
        assert_eq!(fact_count, 3);
    }

    #[test]
    fn prefix_closure_is_validated() {
        let bad = finite_tree(&[&[], &[0, 1]]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn regular_tree_unfolds() {
        let h = build_tree_structure(&self_loop()).unwrap();
        // Elements 0^k for all k.
        for k in 0..=5 {
            let node: Vec<u64> = core::iter::repeat(0).take(k).collect();
            assert!(h.contains_node(&node));
        }
        assert!(!h.contains_node(&[1]));
        let st = truncate_to_finite(&h, 3).unwrap();
        assert_eq!(st.universe().len(), 4);
    }

    #[test]
    fn infinite_path_detection() {
        assert!(!tree_has_infinite_path(&finite_tree(&[&[], &[0]])).unwrap());
        assert!(tree_has_infinite_path(&self_loop()).unwrap());
        let no_cycle = TreeSpec::RegularTree {
            nodes: vec!["r".into(), "s".into()],
            root: "r".into(),
            edges: vec![("r".into(), 0, "s".into())],
        };
        assert!(!tree_has_infinite_path(&no_cycle).unwrap());
        // A cycle not reachable from the root does not count.
        let unreachable_cycle = TreeSpec::RegularTree {
            nodes: vec!["r".into(), "s".into(), "t".into()],
            root: "r".into(),
            edges: vec![("r".into(), 0, "s".into()), ("t".into(), 0, "t".into())],
        };
        assert!(!tree_has_infinite_path(&unreachable_cycle).unwrap());
    }

    #[test]
    fn forcing_follows_paths_and_truth_never_holds() {
        let specs = [finite_tree(&[&[], &[0], &[1]]), self_loop()];
        for spec in specs {
            assert_eq!(
                tree_forces_psi(&spec).unwrap(),
                tree_has_infinite_path(&spec).unwrap()
            );
            assert!(!tree_satisfies_psi(&spec).unwrap());
        }
    }

    #[test]
    fn block_truth_oracle() {
        assert!(!block_satisfies_psi(&BlockConfig::initial()));
        let all_nonstandard = BlockConfig {
            standard_blocks: Count::Finite(0),
            nonstandard_blocks: vec![NonStandardBlocks {
                extra: Count::Finite(1),
                copies: Count::Omega,
            }],
        };
        assert!(block_satisfies_psi(&all_nonstandard));
        let mixed = BlockConfig {
            standard_blocks: Count::Finite(1),
            nonstandard_blocks: all_nonstandard.nonstandard_blocks.clone(),
        };
        assert!(!block_satisfies_psi(&mixed));
        assert!(block_forces_psi(&BlockConfig::initial()).unwrap());
        assert!(block_forces_psi(&all_nonstandard).unwrap());
        assert!(block_forces_psi(&mixed).unwrap());
    }

    #[test]
    fn alternation_flips_truth_each_step() {
        let mut config = BlockConfig::initial();
        let mut truth = block_satisfies_psi(&config);
        for _ in 0..20 {
            config = alternate_extension(&config);
            config.validate().unwrap();
            let next = block_satisfies_psi(&config);
            assert_eq!(next, !truth);
            assert!(block_forces_psi(&config).unwrap());
            truth = next;
        }
    }

    #[test]
    fn alternation_from_finite_standard_blocks() {
        let start = BlockConfig {
            standard_blocks: Count::Finite(3),
            nonstandard_blocks: vec![],
        };
        let stepped = alternate_extension(&start);
        assert!(stepped.standard_blocks.is_zero());
        assert_eq!(stepped.nonstandard_blocks.len(), 1);
        assert_eq!(stepped.nonstandard_blocks[0].copies, Count::Finite(3));
        assert!(block_satisfies_psi(&stepped));
    }

    #[test]
    fn omega_conversion() {
        let stepped = alternate_extension(&BlockConfig::initial());
        assert!(stepped.standard_blocks.is_zero());
        assert_eq!(stepped.nonstandard_blocks[0].copies, Count::Omega);
        assert!(block_satisfies_psi(&stepped));
    }

    #[test]
    fn truncation_matches_handle_atoms() {
        let spec = finite_tree(&[&[], &[0], &[0, 1], &[2]]);
        let h = build_tree_structure(&spec).unwrap();
        let depth = 2;
        let st = truncate_to_finite(&h, depth).unwrap();
        for node in h.nodes_to_depth(depth) {
            let name = node_name(&node);
            for i in 0..3u64 {
                for j in 0..3u64 {
                    let key = crate::model::RelKey::indexed("R", &[i, j]);
                    assert_eq!(
                        st.rel_holds(&key, &[name.clone()]),
                        h.atom_holds(&node, i, j),
                    );
                }
            }
        }
    }

    #[test]
    fn builtins_parse_and_are_wellformed() {
        use crate::formula::wellformed;
        assert!(wellformed(&psi_blocks(), &blocks_signature()).is_ok());
        assert!(wellformed(&psi_tree(), &trees_signature()).is_ok());
    }

    #[test]
    fn block_truncation_satisfies_block_sentence_only_with_extras() {
        let psi = psi_blocks();
        let with_extra = block_truncation(2, 1);
        let without = block_truncation(2, 0);
        assert!(satisfies(&with_extra, &psi, &Assignment::new(), DEFAULT_BUDGET)
            .unwrap()
            .is_true());
        assert!(satisfies(&without, &psi, &Assignment::new(), DEFAULT_BUDGET)
            .unwrap()
            .is_false());
    }
}
