//! Similarity types of antichains of coding nodes, the two enumerators of
//! similarity types coding a finite structure, exact big Ramsey degrees,
//! canonical-partition classification and the big Ramsey structure expansion.
//!
//! A similarity type is stored as a [`SimDescriptor`]: the leaves (coding
//! nodes, sorted by length) with the sequence of critical levels, the planar
//! order ≺ of the leaves, the splitting node at which each pair of ≺-adjacent
//! leaves separates, and the type of each leaf over the earlier leaves. In a
//! diagonal tree these data determine the meet closure up to similarity.

use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use thiserror::Error;

use crate::classes::{ClassError, ClassSpec};
use crate::coding_tree::{
    build_diagonal, lex_compare, meet_closure, passing_type, Atom, CodingNode, DiagonalTree, Mode, OneType,
    TreeError,
};
use crate::structures::{ordered_copies, FinStructure, Language, StructureError, Symbol};

/// Default stabilization margin, in diagonal coding levels.
pub const DEFAULT_DELTA: usize = 2;

#[derive(Debug, Error)]
pub enum DegreeError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("degrees need relations of arity at most two; class {class} has arity {arity}")]
    Arity { class: String, arity: usize },
    #[error("the structure is empty")]
    Empty,
    #[error("the structure is not in class {0}")]
    NotInClass(String),
    #[error("coding nodes {0} and {1} are comparable")]
    Comparable(usize, usize),
    #[error("coding index {index} out of range: {available} coding nodes available")]
    OutOfRange { index: usize, available: usize },
    #[error("depth {depth} exceeds the {available} coding nodes of the tree")]
    Depth { depth: usize, available: usize },
    #[error("the ambient tree is not diagonal: {0}")]
    NotDiagonal(String),
    #[error("coding node {0} is not in the ambient antichain")]
    NotInside(usize),
    #[error(
        "enumerators disagree at depth {depth}: {} descriptors only from the oracle, {} only from the direct enumerator",
        .oracle_only.len(), .direct_only.len()
    )]
    Mismatch { depth: usize, oracle_only: Vec<String>, direct_only: Vec<String> },
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, DegreeError>;

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LevelEntry {
    /// A splitting node of the meet closure; ids increase with length.
    Split(usize),
    /// Leaf `i` (leaves are numbered by increasing length).
    Coding(usize),
}

/// Canonical form of the similarity type of an antichain of coding nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SimDescriptor {
    pub n: usize,
    /// Critical levels in order of length.
    pub level_seq: Vec<LevelEntry>,
    /// Leaves in ≺ order.
    pub prec: Vec<usize>,
    /// `meets[r]`: the split separating `prec[r]` and `prec[r+1]`, or `None`
    /// when they lie above different roots.
    pub meets: Vec<Option<usize>>,
    /// Colour of each leaf.
    pub gamma: Vec<Option<usize>>,
    /// `tau[i]`: non-unary atoms of leaf `i` over leaves `0..i`, with leaf
    /// `j` written as vertex `j`.
    pub tau: Vec<Vec<Atom>>,
}

fn params(a: &Atom) -> impl Iterator<Item = usize> + '_ {
    a.encoded().iter().filter(|&&e| e != 0).map(|&e| e as usize - 1)
}

/// Atoms of `atoms` relating `x` to vertex `v` alone, with `v` renamed to 0.
pub(crate) fn rel_to(atoms: &[Atom], v: usize) -> Vec<Atom> {
    atoms
        .iter()
        .filter(|a| a.mentions(v) && params(a).all(|p| p == v))
        .map(|a| a.rename(&|_| 0))
        .collect()
}

impl SimDescriptor {
    fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.n];
        for (r, &i) in self.prec.iter().enumerate() {
            rank[i] = r;
        }
        rank
    }

    /// The split at which leaves `i != j` separate (`None`: different roots).
    pub fn meet(&self, i: usize, j: usize) -> Option<usize> {
        let rank = self.ranks();
        let (lo, hi) = if rank[i] < rank[j] { (rank[i], rank[j]) } else { (rank[j], rank[i]) };
        let mut best: Option<usize> = None;
        for m in &self.meets[lo..hi] {
            let s = (*m)?;
            best = Some(best.map_or(s, |b: usize| b.min(s)));
        }
        best
    }

    /// Position of each entry in `level_seq`.
    fn positions(&self) -> (Vec<usize>, Vec<usize>) {
        let splits = self.level_seq.iter().filter(|e| matches!(e, LevelEntry::Split(_))).count();
        let mut split_pos = vec![0; splits];
        let mut coding_pos = vec![0; self.n];
        for (p, e) in self.level_seq.iter().enumerate() {
            match e {
                LevelEntry::Split(s) => split_pos[*s] = p,
                LevelEntry::Coding(i) => coding_pos[*i] = p,
            }
        }
        (split_pos, coding_pos)
    }

    /// The relations between leaf `j` and the earlier leaf `i`.
    pub fn relation(&self, j: usize, i: usize) -> Vec<Atom> {
        rel_to(&self.tau[j], i)
    }

    /// Leaves above different sides of one split agree on every leaf coded
    /// below that split.
    pub fn is_coherent(&self) -> bool {
        let (split_pos, coding_pos) = self.positions();
        for i in 0..self.n {
            for j in i + 1..self.n {
                for k in j + 1..self.n {
                    if let Some(s) = self.meet(j, k) {
                        if split_pos[s] > coding_pos[i] && self.relation(j, i) != self.relation(k, i) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Length order equals ≺ order.
    pub fn is_comb(&self) -> bool {
        self.prec.iter().enumerate().all(|(r, &i)| r == i)
    }

    /// Entries of the passing table: for each split `s` and leaf `i` coded
    /// below it, the relations to `i` shared by all leaves above `s`.
    pub fn passing_table(&self) -> Vec<(usize, usize, Vec<Atom>)> {
        let (split_pos, coding_pos) = self.positions();
        let mut out = Vec::new();
        for (s, &sp) in split_pos.iter().enumerate() {
            let above = (0..self.n).find(|&j| (0..self.n).any(|k| k != j && self.meet(j, k) == Some(s)));
            if let Some(j) = above {
                for i in 0..self.n {
                    if coding_pos[i] < sp {
                        out.push((s, i, self.relation(j, i)));
                    }
                }
            }
        }
        out
    }

    /// The meet tree on the leaves, e.g. `((0,2),1)`; `+` joins roots.
    pub fn shape(&self) -> String {
        fn go(d: &SimDescriptor, lo: usize, hi: usize) -> String {
            if lo == hi {
                return d.prec[lo].to_string();
            }
            let window = &d.meets[lo..hi];
            if let Some(r) = window.iter().position(|m| m.is_none()) {
                return format!("{}+{}", go(d, lo, lo + r), go(d, lo + r + 1, hi));
            }
            let (r, _) = window.iter().enumerate().min_by_key(|(_, m)| m.unwrap()).unwrap();
            format!("({},{})", go(d, lo, lo + r), go(d, lo + r + 1, hi))
        }
        if self.n == 0 {
            return String::new();
        }
        go(self, 0, self.n - 1)
    }

    /// The structure represented by the leaves, in length order.
    pub fn represented(&self, lang: &Arc<Language>) -> FinStructure {
        let mut s = FinStructure::empty(lang.clone(), self.n);
        for (i, atoms) in self.tau.iter().enumerate() {
            for a in atoms {
                s.insert(a.sym as usize, a.decode(i));
            }
            if let Some(g) = self.gamma[i] {
                s.insert(g, vec![i]);
            }
        }
        s
    }

    /// Unique text form, used for sorting and output.
    pub fn canonical(&self, lang: &Language) -> String {
        let lv: Vec<String> = self
            .level_seq
            .iter()
            .map(|e| match e {
                LevelEntry::Split(s) => format!("S{}", s),
                LevelEntry::Coding(i) => format!("C{}", i),
            })
            .collect();
        let prec: Vec<String> = self.prec.iter().map(|i| i.to_string()).collect();
        let meets: Vec<String> =
            self.meets.iter().map(|m| m.map_or("-".to_string(), |s| format!("S{}", s))).collect();
        let gamma: Vec<String> =
            self.gamma.iter().map(|g| g.map_or("-".to_string(), |g| lang.symbols[g].name.clone())).collect();
        let tau: Vec<String> = self
            .tau
            .iter()
            .map(|t| t.iter().map(|a| a.render(lang)).collect::<Vec<_>>().join(","))
            .collect();
        format!(
            "n={} lv={} prec={} meets=[{}] gamma=[{}] tau=[{}]",
            self.n,
            lv.join("."),
            prec.join("<"),
            meets.join(","),
            gamma.join(","),
            tau.join(" | ")
        )
    }
}

/// Descriptor of a set of coding nodes, which must be pairwise incomparable
/// and sit in a diagonal tree.
pub fn descriptor_of_nodes(nodes: &[CodingNode]) -> Result<SimDescriptor> {
    let mut leaves: Vec<&CodingNode> = nodes.iter().collect();
    leaves.sort_by_key(|c| c.vertex);
    let n = leaves.len();
    for p in 0..n {
        for q in p + 1..n {
            if leaves[p].ty.is_initial_segment_of(&leaves[q].ty) {
                return Err(DegreeError::Comparable(leaves[p].index, leaves[q].index));
            }
        }
    }
    let mut prec: Vec<usize> = (0..n).collect();
    prec.sort_by(|&a, &b| lex_compare(&leaves[a].ty, &leaves[b].ty));
    let adj: Vec<usize> = prec.windows(2).map(|w| leaves[w[0]].ty.meet_len(&leaves[w[1]].ty)).collect();
    let mut split_lens: Vec<usize> = adj.iter().copied().filter(|&m| m > 0).collect();
    split_lens.sort_unstable();
    split_lens.dedup();
    for &m in &split_lens {
        if leaves.iter().any(|c| c.ty.len == m) {
            return Err(DegreeError::NotDiagonal(format!("splitting node at coding length {}", m)));
        }
        let nodes: BTreeSet<OneType> = prec
            .windows(2)
            .zip(&adj)
            .filter(|(_, &l)| l == m)
            .map(|(w, _)| leaves[w[0]].ty.restrict(m))
            .collect();
        if nodes.len() > 1 {
            return Err(DegreeError::NotDiagonal(format!("{} splitting nodes at length {}", nodes.len(), m)));
        }
        let node = nodes.into_iter().next().expect("one node");
        let children: BTreeSet<OneType> = leaves
            .iter()
            .filter(|c| node.is_initial_segment_of(&c.ty))
            .map(|c| c.ty.restrict(m + 1))
            .collect();
        if children.len() != 2 {
            return Err(DegreeError::NotDiagonal(format!(
                "splitting degree {} at length {}",
                children.len(),
                m
            )));
        }
    }
    let mut events: Vec<(usize, LevelEntry)> =
        split_lens.iter().enumerate().map(|(s, &m)| (m, LevelEntry::Split(s))).collect();
    events.extend(leaves.iter().enumerate().map(|(i, c)| (c.ty.len, LevelEntry::Coding(i))));
    events.sort();
    let meets = adj
        .iter()
        .map(|&m| if m == 0 { None } else { Some(split_lens.binary_search(&m).expect("present")) })
        .collect();
    let mut tau = Vec::with_capacity(n);
    for i in 0..n {
        let map: HashMap<usize, usize> = (0..i).map(|j| (leaves[j].vertex, j)).collect();
        let atoms: Vec<Atom> = leaves[i]
            .ty
            .atoms
            .iter()
            .filter(|a| !a.is_unary() && params(a).all(|p| map.contains_key(&p)))
            .map(|a| a.rename(&|v| map[&v]))
            .collect();
        let mut atoms = atoms;
        atoms.sort_unstable();
        tau.push(atoms);
    }
    Ok(SimDescriptor {
        n,
        level_seq: events.into_iter().map(|(_, e)| e).collect(),
        prec,
        meets,
        gamma: leaves.iter().map(|c| c.gamma).collect(),
        tau,
    })
}

pub(crate) fn nodes_at(tree: &DiagonalTree, antichain: &[usize]) -> Result<Vec<CodingNode>> {
    antichain
        .iter()
        .map(|&i| {
            tree.coding
                .get(i)
                .cloned()
                .ok_or(DegreeError::OutOfRange { index: i, available: tree.coding.len() })
        })
        .collect()
}

/// Descriptor of the antichain given by coding indices of `tree`.
pub fn descriptor_of(tree: &DiagonalTree, antichain: &[usize]) -> Result<SimDescriptor> {
    let mut set: Vec<usize> = antichain.to_vec();
    set.sort_unstable();
    if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
        return Err(DegreeError::Comparable(w[0], w[1]));
    }
    descriptor_of_nodes(&nodes_at(tree, &set)?)
}

/// The canonical-partition cell of `copy`, a sub-antichain of `ambient`.
pub fn classify_copy(tree: &DiagonalTree, ambient: &[usize], copy: &[usize]) -> Result<SimDescriptor> {
    if let Some(&c) = copy.iter().find(|c| !ambient.contains(c)) {
        return Err(DegreeError::NotInside(c));
    }
    descriptor_of(tree, copy)
}

// ---------------------------------------------------------------------------
// Similarity maps (cross-check)
// ---------------------------------------------------------------------------

struct Closure {
    nodes: Vec<OneType>,
    /// For each node, the coding node it is, if any.
    coding: Vec<Option<CodingNode>>,
    vertices: HashSet<usize>,
}

fn closure(leaves: &[CodingNode]) -> Closure {
    let tys: Vec<OneType> = leaves.iter().map(|c| c.ty.clone()).collect();
    let nodes = meet_closure(&tys);
    let coding = nodes.iter().map(|t| leaves.iter().find(|c| c.ty == *t).cloned()).collect();
    Closure { nodes, coding, vertices: leaves.iter().map(|c| c.vertex).collect() }
}

/// Searches for a similarity map between the meet closures of two antichains.
///
/// Because a similarity map preserves ≺, which is total on each closure, the
/// only candidate is the ≺-order-preserving bijection; the search therefore
/// checks that bijection against the remaining conditions: meets, relative
/// lengths, initial segments, coding nodes with their colours, and passing
/// types relative to the represented vertices. Returns the node pairs.
pub fn similarity_map(a: &[CodingNode], b: &[CodingNode]) -> Result<Option<Vec<(OneType, OneType)>>> {
    for set in [a, b] {
        for (p, c) in set.iter().enumerate() {
            for d in &set[p + 1..] {
                if c.ty.is_initial_segment_of(&d.ty) || d.ty.is_initial_segment_of(&c.ty) {
                    return Err(DegreeError::Comparable(c.index, d.index));
                }
            }
        }
    }
    let ca = closure(a);
    let cb = closure(b);
    if ca.nodes.len() != cb.nodes.len() || a.len() != b.len() {
        return Ok(None);
    }
    let k = ca.nodes.len();
    let index_a: HashMap<&OneType, usize> = ca.nodes.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let index_b: HashMap<&OneType, usize> = cb.nodes.iter().enumerate().map(|(i, t)| (t, i)).collect();
    // Coding nodes and colours.
    for i in 0..k {
        match (&ca.coding[i], &cb.coding[i]) {
            (None, None) => {}
            (Some(x), Some(y)) if x.gamma == y.gamma => {}
            _ => return Ok(None),
        }
    }
    for i in 0..k {
        for j in 0..k {
            let (u, v) = (&ca.nodes[i], &ca.nodes[j]);
            let (fu, fv) = (&cb.nodes[i], &cb.nodes[j]);
            if u.len.cmp(&v.len) != fu.len.cmp(&fv.len) {
                return Ok(None);
            }
            if u.is_initial_segment_of(v) != fu.is_initial_segment_of(fv) {
                return Ok(None);
            }
            let m = index_a.get(&u.meet(v));
            let fm = index_b.get(&fu.meet(fv));
            if m != fm {
                return Ok(None);
            }
        }
    }
    // Passing types at coding nodes, relative to the represented vertices.
    let vmap: HashMap<usize, usize> = (0..k)
        .filter_map(|i| match (&ca.coding[i], &cb.coding[i]) {
            (Some(x), Some(y)) => Some((x.vertex, y.vertex)),
            _ => None,
        })
        .collect();
    for i in 0..k {
        for c in 0..k {
            let (Some(x), Some(y)) = (&ca.coding[c], &cb.coding[c]) else { continue };
            if x.ty.len >= ca.nodes[i].len {
                continue;
            }
            let mut pa: Vec<Atom> = passing_type(&ca.nodes[i], x.vertex, |p| ca.vertices.contains(&p))
                .iter()
                .map(|t| t.rename(&|v| vmap[&v]))
                .collect();
            pa.sort_unstable();
            let pb = passing_type(&cb.nodes[i], y.vertex, |p| cb.vertices.contains(&p));
            if pa != pb {
                return Ok(None);
            }
        }
    }
    Ok(Some(ca.nodes.into_iter().zip(cb.nodes).collect()))
}

/// Similarity of the subtrees induced by two antichains of `tree`.
pub fn similar(tree: &DiagonalTree, a: &[usize], b: &[usize]) -> Result<bool> {
    Ok(similarity_map(&nodes_at(tree, a)?, &nodes_at(tree, b)?)?.is_some())
}

/// The immediate successor `s⁺` of a node inside the diagonal tree, when the
/// tree is deep enough to contain it.
fn successor_in(tree: &DiagonalTree, s: &OneType) -> Option<OneType> {
    tree.coding
        .iter()
        .map(|c| &c.ty)
        .chain(tree.leaves.iter())
        .find(|t| t.len > s.len && s.is_initial_segment_of(t))
        .map(|t| t.restrict(s.len + 1))
}

/// +-similarity: similarity, plus (the maximal level of an antichain's
/// closure being its longest coding node) agreement of the passing types of
/// the successors above that coding node.
pub fn plus_similar(tree: &DiagonalTree, a: &[usize], b: &[usize]) -> Result<bool> {
    let na = nodes_at(tree, a)?;
    let nb = nodes_at(tree, b)?;
    if similarity_map(&na, &nb)?.is_none() {
        return Ok(false);
    }
    let (Some(ta), Some(tb)) = (na.iter().max_by_key(|c| c.vertex), nb.iter().max_by_key(|c| c.vertex)) else {
        return Ok(true);
    };
    let (Some(sa), Some(sb)) = (successor_in(tree, &ta.ty), successor_in(tree, &tb.ty)) else {
        return Err(DegreeError::Depth { depth: tree.depth() + 1, available: tree.depth() });
    };
    Ok(rel_to(&sa.atoms, ta.vertex) == rel_to(&sb.atoms, tb.vertex))
}

// ---------------------------------------------------------------------------
// Big Ramsey structure
// ---------------------------------------------------------------------------

/// The represented structure of an antichain (vertices in length order)
/// expanded by `lhd` (≺ on the antichain) and the quaternary `Q`, where
/// `Q(p,q,r,s)` for `p ⊴ q`, `r ⊴ s` holds iff `|p∧q| ≤ |r∧s|` (with
/// `p∧p = p`). The extended language is built directly, since file-format
/// languages stop at arity three.
pub fn expand_brs(tree: &DiagonalTree, antichain: &[usize]) -> Result<FinStructure> {
    let d = descriptor_of(tree, antichain)?;
    let mut set: Vec<usize> = antichain.to_vec();
    set.sort_unstable();
    let nodes = nodes_at(tree, &set)?;
    let mut symbols = tree.class.language.symbols.clone();
    let base = symbols.len();
    symbols.push(Symbol { name: "lhd".into(), arity: 2 });
    symbols.push(Symbol { name: "Q".into(), arity: 4 });
    let lang = Arc::new(Language { symbols });
    let rep = d.represented(&tree.class.language);
    let mut out = FinStructure::empty(lang, d.n);
    for (sym, rel) in rep.relations.iter().enumerate() {
        for t in rel {
            out.insert(sym, t.clone());
        }
    }
    let rank = d.ranks();
    let n = d.n;
    let meet = |p: usize, q: usize| -> usize {
        if p == q {
            nodes[p].ty.len
        } else {
            nodes[p].ty.meet_len(&nodes[q].ty)
        }
    };
    for p in 0..n {
        for q in 0..n {
            if rank[p] < rank[q] {
                out.insert(base, vec![p, q]);
            }
        }
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).filter(|&(p, q)| rank[p] <= rank[q]).collect();
    for &(p, q) in &pairs {
        for &(r, s) in &pairs {
            if meet(p, q) <= meet(r, s) {
                out.insert(base + 1, vec![p, q, r, s]);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Enumerators
// ---------------------------------------------------------------------------

/// Checks the shared preconditions of the enumerators.
pub fn check_target(class: &ClassSpec, a: &FinStructure) -> Result<()> {
    let arity = class.language.max_arity();
    if arity > 2 {
        return Err(DegreeError::Arity { class: class.name.clone(), arity });
    }
    if a.size == 0 {
        return Err(DegreeError::Empty);
    }
    if !class.contains(a)? {
        return Err(DegreeError::NotInClass(class.name.clone()));
    }
    Ok(())
}

fn check_limit(tree: &DiagonalTree, limit: usize) -> Result<()> {
    if limit > tree.depth() {
        return Err(DegreeError::Depth { depth: limit, available: tree.depth() });
    }
    Ok(())
}

/// Exhaustive search: every antichain among the first `limit` coding nodes
/// whose represented structure is isomorphic to `a`, collected by descriptor.
pub fn oracle_in(tree: &DiagonalTree, a: &FinStructure, limit: usize) -> Result<BTreeSet<SimDescriptor>> {
    check_limit(tree, limit)?;
    let all: Vec<usize> = (0..limit).collect();
    oracle_on(tree, a, &all)
}

/// The oracle restricted to antichains inside the coding indices `subset`.
pub fn oracle_on(tree: &DiagonalTree, a: &FinStructure, subset: &[usize]) -> Result<BTreeSet<SimDescriptor>> {
    check_target(&tree.class, a)?;
    let mut subset: Vec<usize> = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let nodes: Vec<CodingNode> = nodes_at(tree, &subset)?;
    let copies: HashSet<FinStructure> = ordered_copies(a).iter().map(|o| o.as_prefix()).collect();
    let n = a.size;
    let lang = &tree.class.language;
    fn rec(
        nodes: &[CodingNode],
        n: usize,
        chosen: &mut Vec<usize>,
        lang: &Arc<Language>,
        copies: &HashSet<FinStructure>,
        out: &mut BTreeSet<SimDescriptor>,
    ) -> Result<()> {
        if chosen.len() == n {
            let set: Vec<CodingNode> = chosen.iter().map(|&i| nodes[i].clone()).collect();
            let d = descriptor_of_nodes(&set)?;
            if copies.contains(&d.represented(lang)) {
                out.insert(d);
            }
            return Ok(());
        }
        let start = chosen.last().map_or(0, |&l| l + 1);
        for c in start..nodes.len() {
            if chosen.iter().any(|&p| nodes[p].ty.is_initial_segment_of(&nodes[c].ty)) {
                continue;
            }
            chosen.push(c);
            rec(nodes, n, chosen, lang, copies, out)?;
            chosen.pop();
        }
        Ok(())
    }
    let found: Vec<Result<BTreeSet<SimDescriptor>>> = (0..nodes.len())
        .into_par_iter()
        .map(|first| {
            let mut out = BTreeSet::new();
            rec(&nodes, n, &mut vec![first], lang, &copies, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut all = BTreeSet::new();
    for r in found {
        all.extend(r?);
    }
    Ok(all)
}

/// Prune statistics of the direct enumerator for one ordered copy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PruneStats {
    /// The ordered copy: `order[i]` is the vertex of the structure placed `i`-th.
    pub order: Vec<usize>,
    /// Distinct candidate descriptors generated.
    pub candidates: usize,
    /// Candidates passing the coherence filter.
    pub coherent: usize,
    /// Coherent candidates realized by an antichain of the tree.
    pub embedded: usize,
}

#[derive(Debug, Clone)]
pub struct DirectResult {
    pub descriptors: BTreeSet<SimDescriptor>,
    pub stats: Vec<PruneStats>,
}

#[derive(Clone)]
struct Addr {
    root: usize,
    path: Vec<(usize, u8)>,
}

/// Generates every level sequence and planar meet tree on `n` leaves in which
/// leaf `i` lies above root `roots[i]`.
fn generate_shapes(roots: &[usize]) -> Vec<(Vec<LevelEntry>, Vec<Addr>)> {
    struct Gen<'a> {
        roots: &'a [usize],
        out: Vec<(Vec<LevelEntry>, Vec<Addr>)>,
    }
    impl Gen<'_> {
        fn feasible(&self, strands: &[Addr], next: usize) -> bool {
            let mut need: HashMap<usize, isize> = HashMap::new();
            for &r in &self.roots[next..] {
                *need.entry(r).or_default() += 1;
            }
            for s in strands {
                *need.entry(s.root).or_default() -= 1;
            }
            need.values().all(|&v| v >= 0)
        }

        fn rec(&mut self, strands: Vec<Addr>, next: usize, splits: usize, seq: Vec<LevelEntry>, addr: Vec<Addr>) {
            if next == self.roots.len() {
                self.out.push((seq, addr));
                return;
            }
            for s in 0..strands.len() {
                if strands[s].root == self.roots[next] {
                    let mut st = strands.clone();
                    let leaf = st.remove(s);
                    if self.feasible(&st, next + 1) {
                        let mut sq = seq.clone();
                        sq.push(LevelEntry::Coding(next));
                        let mut ad = addr.clone();
                        ad.push(leaf);
                        self.rec(st, next + 1, splits, sq, ad);
                    }
                }
                let mut st = strands.clone();
                let old = st.remove(s);
                let mut left = old.clone();
                left.path.push((splits, 0));
                let mut right = old;
                right.path.push((splits, 1));
                st.insert(s, right);
                st.insert(s, left);
                if self.feasible(&st, next) {
                    let mut sq = seq.clone();
                    sq.push(LevelEntry::Split(splits));
                    self.rec(st, next, splits + 1, sq, addr.clone());
                }
            }
        }
    }
    let mut distinct: Vec<usize> = roots.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let strands = distinct.into_iter().map(|root| Addr { root, path: Vec::new() }).collect();
    let mut g = Gen { roots, out: Vec::new() };
    g.rec(strands, 0, 0, Vec::new(), Vec::new());
    g.out
}

fn addr_meet(a: &Addr, b: &Addr) -> Option<usize> {
    if a.root != b.root {
        return None;
    }
    a.path.iter().zip(&b.path).find(|(x, y)| x != y).map(|(x, _)| x.0)
}

fn addr_cmp(a: &Addr, b: &Addr) -> Ordering {
    a.root.cmp(&b.root).then_with(|| {
        let ab: Vec<u8> = a.path.iter().map(|p| p.1).collect();
        let bb: Vec<u8> = b.path.iter().map(|p| p.1).collect();
        ab.cmp(&bb)
    })
}

/// Precomputed pairwise data on the first `limit` coding nodes.
struct TreeIndex<'a> {
    nodes: &'a [CodingNode],
    meet: Vec<Vec<usize>>,
    lex: Vec<Vec<Ordering>>,
    /// `rel[q][p]` for `p < q`: relations of node `q` to node `p`'s vertex.
    rel: Vec<Vec<Vec<Atom>>>,
}

impl<'a> TreeIndex<'a> {
    fn new(nodes: &'a [CodingNode]) -> TreeIndex<'a> {
        let k = nodes.len();
        let meet = (0..k).map(|i| (0..k).map(|j| nodes[i].ty.meet_len(&nodes[j].ty)).collect()).collect();
        let lex = (0..k).map(|i| (0..k).map(|j| lex_compare(&nodes[i].ty, &nodes[j].ty)).collect()).collect();
        let rel = (0..k).map(|q| (0..q).map(|p| rel_to(&nodes[q].ty.atoms, nodes[p].vertex)).collect()).collect();
        TreeIndex { nodes, meet, lex, rel }
    }
}

/// A candidate descriptor with the data the embedding search needs.
struct Plan {
    rank: Vec<usize>,
    pair_meet: Vec<Vec<Option<usize>>>,
    /// Number of codings below each split.
    codings_below: Vec<usize>,
    rel: Vec<Vec<Vec<Atom>>>,
    gamma: Vec<Option<usize>>,
}

impl Plan {
    fn new(d: &SimDescriptor) -> Plan {
        let n = d.n;
        let (split_pos, coding_pos) = d.positions();
        let codings_below = split_pos.iter().map(|&sp| coding_pos.iter().filter(|&&c| c < sp).count()).collect();
        Plan {
            rank: d.ranks(),
            pair_meet: (0..n).map(|i| (0..n).map(|j| if i == j { None } else { d.meet(i, j) }).collect()).collect(),
            codings_below,
            rel: (0..n).map(|q| (0..q).map(|p| rel_to(&d.tau[q], p).to_vec()).collect()).collect(),
            gamma: d.gamma.clone(),
        }
    }
}

fn embed(ix: &TreeIndex, plan: &Plan) -> Option<Vec<usize>> {
    fn ok_pair(ix: &TreeIndex, plan: &Plan, chosen: &[usize], split_len: &mut [Option<usize>], c: usize) -> bool {
        let q = chosen.len();
        for (p, &b) in chosen.iter().enumerate() {
            let m = ix.meet[b][c];
            if m >= ix.nodes[b].ty.len {
                return false;
            }
            if ix.lex[b][c] != plan.rank[p].cmp(&plan.rank[q]) || ix.rel[c][b] != plan.rel[q][p] {
                return false;
            }
            match plan.pair_meet[p][q] {
                None => {
                    if m != 0 {
                        return false;
                    }
                }
                Some(s) => {
                    if m == 0 {
                        return false;
                    }
                    match split_len[s] {
                        Some(l) if l != m => return false,
                        Some(_) => {}
                        None => {
                            for (t, l) in split_len.iter().enumerate() {
                                if let Some(l) = l {
                                    if t.cmp(&s) != l.cmp(&m) {
                                        return false;
                                    }
                                }
                            }
                            let k = plan.codings_below[s];
                            let below = k == 0 || ix.nodes[chosen[k - 1]].ty.len < m;
                            if !below || ix.nodes[chosen[k]].ty.len <= m {
                                return false;
                            }
                            split_len[s] = Some(m);
                        }
                    }
                }
            }
        }
        true
    }
    fn rec(ix: &TreeIndex, plan: &Plan, chosen: &mut Vec<usize>, split_len: &mut Vec<Option<usize>>) -> bool {
        let q = chosen.len();
        if q == plan.rank.len() {
            return true;
        }
        let start = chosen.last().map_or(0, |&l| l + 1);
        for c in start..ix.nodes.len() {
            if ix.nodes[c].gamma != plan.gamma[q] {
                continue;
            }
            let saved = split_len.clone();
            if ok_pair(ix, plan, chosen, split_len, c) {
                chosen.push(c);
                if rec(ix, plan, chosen, split_len) {
                    return true;
                }
                chosen.pop();
            }
            *split_len = saved;
        }
        false
    }
    let splits = plan.codings_below.len();
    let mut chosen = Vec::new();
    let mut split_len = vec![None; splits];
    if rec(ix, plan, &mut chosen, &mut split_len) {
        Some(chosen)
    } else {
        None
    }
}

/// Candidate generation from the ordered copies of `a`, coherence filter,
/// and an embedding search into the first `limit` coding nodes.
pub fn direct_in(tree: &DiagonalTree, a: &FinStructure, limit: usize) -> Result<DirectResult> {
    check_target(&tree.class, a)?;
    check_limit(tree, limit)?;
    let nodes = &tree.coding[..limit];
    let ix = TreeIndex::new(nodes);
    let multi_root = tree.mode == Mode::S && tree.class.language.has_unary();
    let copies = ordered_copies(a);
    let per_copy: Vec<Result<(BTreeSet<SimDescriptor>, PruneStats)>> = copies
        .par_iter()
        .map(|oc| {
            let p = oc.as_prefix();
            let n = p.size;
            let gamma: Vec<Option<usize>> = (0..n).map(|i| p.unary_of(i)).collect();
            let tau: Vec<Vec<Atom>> = (0..n)
                .map(|i| {
                    let mut atoms: Vec<Atom> = Vec::new();
                    for (sym, rel) in p.relations.iter().enumerate() {
                        for t in rel {
                            if t.len() >= 2 && t.contains(&i) && t.iter().all(|&v| v <= i) {
                                atoms.push(Atom::from_tuple(sym, t, i));
                            }
                        }
                    }
                    atoms.sort_unstable();
                    atoms
                })
                .collect();
            let roots: Vec<usize> =
                gamma.iter().map(|g| if multi_root { g.map_or(0, |g| g + 1) } else { 0 }).collect();
            let mut candidates = BTreeSet::new();
            for (level_seq, addr) in generate_shapes(&roots) {
                let mut prec: Vec<usize> = (0..n).collect();
                prec.sort_by(|&x, &y| addr_cmp(&addr[x], &addr[y]));
                let meets = prec.windows(2).map(|w| addr_meet(&addr[w[0]], &addr[w[1]])).collect();
                candidates.insert(SimDescriptor {
                    n,
                    level_seq,
                    prec,
                    meets,
                    gamma: gamma.clone(),
                    tau: tau.clone(),
                });
            }
            let mut stats =
                PruneStats { order: oc.enumeration.clone(), candidates: candidates.len(), coherent: 0, embedded: 0 };
            let mut out = BTreeSet::new();
            for d in candidates {
                if !d.is_coherent() {
                    continue;
                }
                stats.coherent += 1;
                if let Some(found) = embed(&ix, &Plan::new(&d)) {
                    let set: Vec<CodingNode> = found.iter().map(|&i| nodes[i].clone()).collect();
                    let check = descriptor_of_nodes(&set)?;
                    if check != d {
                        return Err(DegreeError::Internal(format!(
                            "embedded antichain {:?} has descriptor {} instead of {}",
                            found,
                            check.canonical(&tree.class.language),
                            d.canonical(&tree.class.language)
                        )));
                    }
                    stats.embedded += 1;
                    out.insert(d);
                }
            }
            Ok((out, stats))
        })
        .collect();
    let mut descriptors = BTreeSet::new();
    let mut stats = Vec::new();
    for r in per_copy {
        let (d, s) = r?;
        descriptors.extend(d);
        stats.push(s);
    }
    Ok(DirectResult { descriptors, stats })
}

/// Builds the diagonal tree for `class` in its default mode.
pub fn degree_tree(class: &ClassSpec, depth: usize, mode: Option<Mode>) -> Result<DiagonalTree> {
    Ok(build_diagonal(class, depth, mode.unwrap_or_else(|| class.default_mode()))?)
}

pub fn enumerate_types_oracle(class: &ClassSpec, a: &FinStructure, depth: usize) -> Result<BTreeSet<SimDescriptor>> {
    check_target(class, a)?;
    oracle_in(&degree_tree(class, depth, None)?, a, depth)
}

pub fn enumerate_types_direct(class: &ClassSpec, a: &FinStructure, depth: usize) -> Result<DirectResult> {
    check_target(class, a)?;
    direct_in(&degree_tree(class, depth, None)?, a, depth)
}

// ---------------------------------------------------------------------------
// Degrees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CopyCount {
    /// `order[i]`: the vertex of the structure placed `i`-th.
    pub order: Vec<usize>,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct DegreeResult {
    pub class: String,
    pub structure: FinStructure,
    pub mode: Mode,
    /// Diagonal coding levels used.
    pub depth: usize,
    /// The depth the count was compared against for stabilization.
    pub check_depth: usize,
    pub ambient_size: usize,
    pub degree: usize,
    pub stabilized: bool,
    pub per_ordered_copy: Vec<CopyCount>,
    pub automorphisms: usize,
    /// Canonical strings, sorted.
    pub descriptors: Vec<String>,
    pub descriptor_set: Vec<SimDescriptor>,
    pub stats: Vec<PruneStats>,
}

impl DegreeResult {
    /// The degree counted over embeddings rather than substructures.
    pub fn embedding_degree(&self) -> usize {
        self.degree * self.automorphisms
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "class": self.class,
            "structure": self.structure.to_text("A"),
            "mode": self.mode.to_string(),
            "depth": self.depth,
            "degree": self.degree,
            "stabilized": self.stabilized,
            "check_depth": self.check_depth,
            "ambient_size": self.ambient_size,
            "automorphisms": self.automorphisms,
            "embedding_degree": self.embedding_degree(),
            "per_ordered_copy": self.per_ordered_copy,
            "prune_stats": self.stats,
            "descriptors": self.descriptors,
        })
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "class {}  mode {}  depth {}  (ambient {} vertices)\n",
            self.class, self.mode, self.depth, self.ambient_size
        ));
        s.push_str(&format!("{:<24} {:>8}\n", "ordered copy", "count"));
        for c in &self.per_ordered_copy {
            let order: Vec<String> = c.order.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{:<24} {:>8}\n", order.join(" "), c.count));
        }
        s.push_str(&format!("{:<24} {:>8}\n", "total", self.degree));
        if self.stabilized {
            s.push_str(&format!("stabilized: count at depth {} agrees\n", self.check_depth));
        } else {
            s.push_str(&format!(
                "warning: not stabilized (count at depth {} differs or was not checked); increase --depth\n",
                self.check_depth
            ));
        }
        s
    }
}

/// Runs both enumerators on `tree` with the first `depth` coding nodes and
/// compares against depth `depth - delta`.
pub fn degree_in_tree(tree: &DiagonalTree, a: &FinStructure, depth: usize, delta: usize) -> Result<DegreeResult> {
    let lang = &tree.class.language;
    let oracle = oracle_in(tree, a, depth)?;
    let direct = direct_in(tree, a, depth)?;
    if oracle != direct.descriptors {
        return Err(DegreeError::Mismatch {
            depth,
            oracle_only: oracle.difference(&direct.descriptors).map(|d| d.canonical(lang)).collect(),
            direct_only: direct.descriptors.difference(&oracle).map(|d| d.canonical(lang)).collect(),
        });
    }
    let check_depth = depth.saturating_sub(delta);
    let stabilized = if delta > 0 && check_depth > 0 {
        let lower = direct_in(tree, a, check_depth)?.descriptors;
        if !lower.is_subset(&oracle) {
            return Err(DegreeError::Internal("descriptor set shrank with depth".into()));
        }
        !oracle.is_empty() && lower.len() == oracle.len()
    } else {
        false
    };
    let copies = ordered_copies(a);
    let reps: Vec<FinStructure> = oracle.iter().map(|d| d.represented(lang)).collect();
    let per_ordered_copy: Vec<CopyCount> = copies
        .iter()
        .map(|oc| {
            let p = oc.as_prefix();
            CopyCount { order: oc.enumeration.clone(), count: reps.iter().filter(|r| **r == p).count() }
        })
        .collect();
    let total: usize = per_ordered_copy.iter().map(|c| c.count).sum();
    if total != oracle.len() {
        return Err(DegreeError::Internal(format!(
            "ordered-copy counts sum to {} but {} descriptors were found",
            total,
            oracle.len()
        )));
    }
    let mut descriptors: Vec<String> = oracle.iter().map(|d| d.canonical(lang)).collect();
    descriptors.sort();
    Ok(DegreeResult {
        class: tree.class.name.clone(),
        structure: a.clone(),
        mode: tree.mode,
        depth,
        check_depth,
        ambient_size: tree.ambient_size(),
        degree: oracle.len(),
        stabilized,
        per_ordered_copy,
        automorphisms: crate::structures::automorphisms(a).len(),
        descriptors,
        descriptor_set: oracle.into_iter().collect(),
        stats: direct.stats,
    })
}

/// `T(A, K)` with the default mode and stabilization margin.
pub fn big_ramsey_degree(class: &ClassSpec, a: &FinStructure, depth: usize) -> Result<DegreeResult> {
    big_ramsey_degree_with(class, a, depth, None, DEFAULT_DELTA)
}

pub fn big_ramsey_degree_with(
    class: &ClassSpec,
    a: &FinStructure,
    depth: usize,
    mode: Option<Mode>,
    delta: usize,
) -> Result<DegreeResult> {
    check_target(class, a)?;
    let tree = degree_tree(class, depth, mode)?;
    degree_in_tree(&tree, a, depth, delta)
}

/// Runs `f` on a worker pool of the given size (default: all cores).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs.and_then(|j| rayon::ThreadPoolBuilder::new().num_threads(j).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{preset, preset_q, preset_rado};

    fn chain(q: &ClassSpec, n: usize) -> FinStructure {
        let mut pairs = String::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push_str(&format!("({},{})", i, j));
            }
        }
        let text = if pairs.is_empty() { format!("vertices {}", n) } else { format!("vertices {}; lt:{}", n, pairs) };
        q.parse_structure(&text).unwrap()
    }

    #[test]
    fn singleton_descriptor() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 4, None).unwrap();
        let d = descriptor_of(&t, &[2]).unwrap();
        assert_eq!(d.n, 1);
        assert_eq!(d.level_seq, vec![LevelEntry::Coding(0)]);
    }

    #[test]
    fn comparable_nodes_are_rejected() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 6, None).unwrap();
        let mut hit = false;
        for i in 0..6 {
            for j in i + 1..6 {
                if t.coding[i].ty.is_initial_segment_of(&t.coding[j].ty) {
                    assert!(matches!(descriptor_of(&t, &[i, j]), Err(DegreeError::Comparable(_, _))));
                    hit = true;
                }
            }
        }
        assert!(hit || descriptor_of(&t, &[0, 0]).is_err());
    }

    #[test]
    fn rational_two_chain_descriptor() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 8, None).unwrap();
        let lt = q.language.index_of("lt").unwrap();
        let mut seen = false;
        for i in 0..8 {
            for j in i + 1..8 {
                let Ok(d) = descriptor_of(&t, &[i, j]) else { continue };
                if d.prec == vec![0, 1] {
                    // The shorter leaf is on the x<v side: v_{d0} < x.
                    assert_eq!(d.tau[1], vec![Atom::from_tuple(lt, &[0, 1], 1)]);
                    seen = true;
                }
            }
        }
        assert!(seen);
    }

    #[test]
    fn rational_oracle_values() {
        let q = preset_q().unwrap();
        assert_eq!(enumerate_types_oracle(&q, &chain(&q, 1), 8).unwrap().len(), 1);
        assert_eq!(enumerate_types_oracle(&q, &chain(&q, 2), 10).unwrap().len(), 2);
    }

    #[test]
    fn rational_direct_prune_counts() {
        let q = preset_q().unwrap();
        let r = enumerate_types_direct(&q, &chain(&q, 2), 10).unwrap();
        assert_eq!(r.descriptors.len(), 2);
        let coherent: usize = r.stats.iter().map(|s| s.coherent).sum();
        let embedded: usize = r.stats.iter().map(|s| s.embedded).sum();
        assert_eq!((coherent, embedded), (4, 2));
    }

    #[test]
    fn rado_edge_and_non_edge() {
        let r = preset_rado().unwrap();
        let edge = r.parse_structure("vertices 2; E:(0,1)").unwrap();
        let non = r.parse_structure("vertices 2").unwrap();
        let single = r.parse_structure("vertices 1").unwrap();
        let t = degree_tree(&r, 10, None).unwrap();
        let e = degree_in_tree(&t, &edge, 10, 2).unwrap();
        assert_eq!((e.degree, e.stabilized, e.embedding_degree()), (2, true, 4));
        assert_eq!(e.stats[0].coherent, e.stats[0].embedded);
        assert_eq!(degree_in_tree(&t, &non, 10, 2).unwrap().degree, 2);
        assert_eq!(degree_in_tree(&t, &single, 8, 2).unwrap().degree, 1);
    }

    #[test]
    fn rational_three_chain() {
        let q = preset_q().unwrap();
        let r = big_ramsey_degree(&q, &chain(&q, 3), 14).unwrap();
        assert_eq!(r.degree, 16);
        assert!(r.stabilized);
        let sum: usize = r.per_ordered_copy.iter().map(|c| c.count).sum();
        assert_eq!(sum, 16);
    }

    #[test]
    fn three_chain_count_does_not_depend_on_the_reference() {
        let q = preset_q().unwrap();
        let a = chain(&q, 3);
        for seed in [0, 1, 3, 4] {
            let t = crate::coding_tree::build_diagonal_seeded(&q, 20, Mode::S, seed).unwrap();
            assert_eq!(oracle_in(&t, &a, 20).unwrap().len(), 16, "seed {}", seed);
        }
    }

    #[test]
    fn coloured_singleton() {
        let qn = preset("qn(2)").unwrap();
        let p0 = qn.language.unary_symbols()[0];
        let s = qn.parse_structure(&format!("vertices 1; {}:(0)", qn.language.symbols[p0].name)).unwrap();
        assert_eq!(big_ramsey_degree(&qn, &s, 8).unwrap().degree, 1);
    }

    #[test]
    fn arity_three_is_refused() {
        let h = preset("hyper3").unwrap();
        let s = h.parse_structure("vertices 1").unwrap();
        assert!(matches!(big_ramsey_degree(&h, &s, 3), Err(DegreeError::Arity { .. })));
    }

    #[test]
    fn similarity_agrees_with_descriptors() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 9, None).unwrap();
        let mut pairs = Vec::new();
        for i in 0..9 {
            for j in i + 1..9 {
                if descriptor_of(&t, &[i, j]).is_ok() {
                    pairs.push(vec![i, j]);
                }
            }
        }
        for a in &pairs {
            assert!(similar(&t, a, a).unwrap());
            for b in &pairs {
                let same = descriptor_of(&t, a).unwrap() == descriptor_of(&t, b).unwrap();
                assert_eq!(same, similar(&t, a, b).unwrap(), "{:?} {:?}", a, b);
            }
        }
    }

    #[test]
    fn brs_expansion() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 10, None).unwrap();
        let qs = t.class.language.len() + 1;
        let single = expand_brs(&t, &[3]).unwrap();
        assert!(single.relations[qs - 1].is_empty());
        assert_eq!(single.relations[qs].iter().cloned().collect::<Vec<_>>(), vec![vec![0, 0, 0, 0]]);
        for i in 0..10 {
            for j in i + 1..10 {
                if let Ok(s) = expand_brs(&t, &[i, j]) {
                    let (p, r) = if s.holds(qs - 1, &[0, 1]) { (0, 1) } else { (1, 0) };
                    assert!(s.holds(qs, &[p, r, p, r]));
                }
            }
        }
    }

    #[test]
    fn classify_copy_checks_inclusion() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 6, None).unwrap();
        assert!(matches!(classify_copy(&t, &[1, 2], &[3]), Err(DegreeError::NotInside(3))));
        assert_eq!(classify_copy(&t, &[1, 2, 3], &[2]).unwrap(), descriptor_of(&t, &[2]).unwrap());
    }
}
