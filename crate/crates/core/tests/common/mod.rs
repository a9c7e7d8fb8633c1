//! Fixtures and property checks shared by the property and acceptance suites.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use brd_core::classes::{preset, ClassSpec};
use brd_core::coding_tree::DiagonalTree;
use brd_core::degrees::{degree_in_tree, degree_tree, descriptor_of, oracle_in, similar, similarity_map};
use brd_core::experiments::represented_by;
use brd_core::structures::{omega_isomorphic, FinStructure, OrderedStructure};

pub const CASES: u32 = 500;

pub struct Fixture {
    pub class: ClassSpec,
    pub tree: DiagonalTree,
    /// Isomorphism classes of size 1..=3.
    pub targets: Vec<FinStructure>,
}

pub fn fixtures() -> &'static [Fixture] {
    static F: OnceLock<Vec<Fixture>> = OnceLock::new();
    F.get_or_init(|| {
        [("rado", 8), ("tournament", 7), ("q", 10), ("qn(2)", 8), ("qq", 8), ("ordered(rado)", 5)]
            .iter()
            .map(|&(name, depth)| {
                let class = preset(name).unwrap();
                let tree = degree_tree(&class, depth, None).unwrap();
                let targets = (1..=3).flat_map(|n| class.iso_classes(n).unwrap()).collect();
                Fixture { class, tree, targets }
            })
            .collect()
    })
}

/// Greedily keeps the nodes of `set` (in index order) that are incomparable
/// with every node kept before.
pub fn antichain(tree: &DiagonalTree, set: &BTreeSet<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &i in set {
        let t = &tree.coding[i].ty;
        if out.iter().all(|&j| {
            let u = &tree.coding[j].ty;
            !u.is_initial_segment_of(t) && !t.is_initial_segment_of(u)
        }) {
            out.push(i);
        }
    }
    out
}

/// A fixture index and `k` antichains of size 1..=3 in its tree.
pub fn antichains(k: usize) -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (0..fixtures().len())
        .prop_flat_map(move |f| {
            let depth = fixtures()[f].tree.depth();
            let one = proptest::collection::btree_set(0..depth, 1..=3);
            (Just(f), proptest::collection::vec(one, k))
        })
        .prop_map(|(f, sets)| {
            let tree = &fixtures()[f].tree;
            (f, sets.iter().map(|s| antichain(tree, s)).collect())
        })
}

/// A fixture index, a target index and two depths.
pub fn targets_and_depths() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (0..6usize, 0..64usize, 1..12usize, 1..12usize)
}

fn target(f: usize, t: usize) -> &'static FinStructure {
    let fx = &fixtures()[f];
    &fx.targets[t % fx.targets.len()]
}

pub fn check_equivalence(f: usize, acs: &[Vec<usize>]) -> Result<(), TestCaseError> {
    let tree = &fixtures()[f].tree;
    let (a, b, c) = (&acs[0], &acs[1], &acs[2]);
    prop_assert!(similar(tree, a, a).unwrap());
    prop_assert_eq!(similar(tree, a, b).unwrap(), similar(tree, b, a).unwrap());
    if similar(tree, a, b).unwrap() && similar(tree, b, c).unwrap() {
        prop_assert!(similar(tree, a, c).unwrap());
    }
    // Through `a`: b ~ a and c ~ a force b ~ c.
    if similar(tree, a, b).unwrap() && similar(tree, a, c).unwrap() {
        prop_assert!(similar(tree, b, c).unwrap());
    }
    Ok(())
}

pub fn check_descriptor_iff_map(f: usize, acs: &[Vec<usize>]) -> Result<(), TestCaseError> {
    let tree = &fixtures()[f].tree;
    let (a, b) = (&acs[0], &acs[1]);
    let na: Vec<_> = a.iter().map(|&i| tree.coding[i].clone()).collect();
    let nb: Vec<_> = b.iter().map(|&i| tree.coding[i].clone()).collect();
    let equal = descriptor_of(tree, a).unwrap() == descriptor_of(tree, b).unwrap();
    prop_assert_eq!(equal, similarity_map(&na, &nb).unwrap().is_some());
    Ok(())
}

pub fn check_similar_implies_omega_iso(f: usize, acs: &[Vec<usize>]) -> Result<(), TestCaseError> {
    let tree = &fixtures()[f].tree;
    let (a, b) = (&acs[0], &acs[1]);
    if similar(tree, a, b).unwrap() {
        let ra = OrderedStructure::identity(represented_by(tree, a).unwrap());
        let rb = OrderedStructure::identity(represented_by(tree, b).unwrap());
        prop_assert!(omega_isomorphic(&ra, &rb).unwrap());
    }
    Ok(())
}

pub fn check_monotone(f: usize, t: usize, d1: usize, d2: usize) -> Result<(), TestCaseError> {
    let fx = &fixtures()[f];
    let a = target(f, t);
    let depth = fx.tree.depth();
    let (lo, hi) = (d1.min(d2).min(depth), d1.max(d2).min(depth));
    let small = oracle_in(&fx.tree, a, lo).unwrap();
    let large = oracle_in(&fx.tree, a, hi).unwrap();
    prop_assert!(small.is_subset(&large));
    Ok(())
}

pub fn check_decomposition(f: usize, t: usize, d: usize) -> Result<(), TestCaseError> {
    let fx = &fixtures()[f];
    let a = target(f, t);
    let depth = d.min(fx.tree.depth());
    let r = degree_in_tree(&fx.tree, a, depth, 0).unwrap();
    let sum: usize = r.per_ordered_copy.iter().map(|c| c.count).sum();
    prop_assert_eq!(sum, r.degree);
    let factorial: usize = (1..=a.size).product();
    prop_assert_eq!(r.per_ordered_copy.len() * r.automorphisms, factorial);
    for d in &r.descriptor_set {
        prop_assert!(fx.class.contains(&d.represented(&fx.class.language)).unwrap());
    }
    Ok(())
}
