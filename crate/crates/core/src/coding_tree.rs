//! Trees of 1-types over an enumerated limit, diagonal coding subtrees, and
//! their validation.
//!
//! The ambient tree `𝕊` has, at level `l`, every realizable type over `K_l`;
//! its `n`-th coding node is the type of `v_n` over `K_n`. A diagonal subtree
//! `T` splits at most one node per level, only into two, never at a coding
//! level, and its coding vertices represent a copy of the limit.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

use crate::classes::{is_r_irreducible, Axiom, ClassError, ClassSpec, Family, Prefix, View};
use crate::enumerated::{build_random_enumerated, EnumeratedLimit};
use crate::structures::Language;
use crate::types::X;
pub use crate::types::{lex_compare, Atom, Mode, OneType};

/// Guard against runaway constructions.
const MAX_AMBIENT: usize = 250_000;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("depth {depth} needs {needed} prefix vertices but the prefix has {size}")]
    DepthExceedsPrefix { depth: usize, needed: usize, size: usize },
    #[error("no diagonal construction for class {class}: {reason}")]
    Unsupported { class: String, reason: String },
    #[error(
        "prefix too shallow: {built} of {wanted} coding nodes after {levels} levels; at least {needed} levels are needed"
    )]
    TooShallow { built: usize, wanted: usize, levels: usize, needed: usize },
    #[error("diagonal construction failed at level {level}: {reason}")]
    Construction { level: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, TreeError>;

/// Splits a type into its non-unary part and its colour.
pub fn strip_unary(t: &OneType) -> (OneType, Option<usize>) {
    let gamma = t.gamma();
    let atoms = t.atoms.iter().filter(|a| !a.is_unary()).copied().collect();
    (OneType { len: t.len, atoms }, gamma)
}

/// The node of the mode's tree corresponding to a full type, plus its colour.
pub fn mode_type(t: &OneType, mode: Mode) -> (OneType, Option<usize>) {
    match mode {
        Mode::S => (t.clone(), t.gamma()),
        Mode::U => strip_unary(t),
    }
}

/// ≺ on sorted atom lists that extend a common node to a common length.
pub fn cmp_atoms(a: &[Atom], b: &[Atom]) -> Ordering {
    let mut i = 0;
    loop {
        match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) if x == y => i += 1,
            (Some(x), Some(y)) => return x.cmp(y),
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (None, None) => return Ordering::Equal,
        }
    }
}

/// Parameters (vertices) of an atom other than `x`.
fn params(a: &Atom) -> impl Iterator<Item = usize> + '_ {
    a.encoded().iter().filter(|&&e| e != X).map(|&e| e as usize - 1)
}

/// Passing type of `t` at vertex `v`: the atoms of `t` that mention `v` and
/// whose other parameters all satisfy `keep`.
pub fn passing_type(t: &OneType, v: usize, keep: impl Fn(usize) -> bool) -> Vec<Atom> {
    t.atoms
        .iter()
        .filter(|a| a.mentions(v) && params(a).all(|p| p == v || keep(p)))
        .copied()
        .collect()
}

/// Keeps the atoms whose parameters all lie in `map`'s domain and renames
/// them, giving a type of length `len`.
pub fn project(t: &OneType, map: &HashMap<usize, usize>, len: usize) -> OneType {
    let atoms = t
        .atoms
        .iter()
        .filter(|a| params(a).all(|p| map.contains_key(&p)))
        .map(|a| a.rename(&|v| map[&v]))
        .collect();
    OneType::new(len, atoms)
}

/// The meet closure of a set of nodes, in ≺-order.
pub fn meet_closure(nodes: &[OneType]) -> Vec<OneType> {
    let mut v: Vec<OneType> = nodes.to_vec();
    v.sort_by(lex_compare);
    v.dedup();
    let mut out = v.clone();
    for w in v.windows(2) {
        out.push(w[0].meet(&w[1]));
    }
    out.sort_by(lex_compare);
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodingNode {
    /// Position among the coding nodes of the tree.
    pub index: usize,
    /// The ambient vertex it codes.
    pub vertex: usize,
    /// The node itself: the type of `vertex` over the vertices before it.
    pub ty: OneType,
    /// Colour of the coded vertex, if the language has unary symbols.
    pub gamma: Option<usize>,
}

// ---------------------------------------------------------------------------
// Ambient coding trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CodingTree {
    pub limit: EnumeratedLimit,
    pub mode: Mode,
    /// Number of levels (level `l` holds types over `K_l`).
    pub depth: usize,
    /// `levels[l]`, ≺-sorted.
    pub levels: Vec<Vec<OneType>>,
    /// `parent[l][i]` indexes `levels[l-1]` (0 for roots).
    pub parent: Vec<Vec<usize>>,
    /// `coding[n]` indexes `levels[n]`.
    pub coding: Vec<usize>,
    pub coding_gamma: Vec<Option<usize>>,
}

/// Builds `depth` levels of the tree of 1-types over `e`.
pub fn build_coding_tree(e: &EnumeratedLimit, depth: usize, mode: Mode) -> Result<CodingTree> {
    // levels 0..depth need vertices v_0..v_{depth-2}
    let needed = depth.saturating_sub(1);
    if needed > e.size() {
        return Err(TreeError::DepthExceedsPrefix { depth, needed, size: e.size() });
    }
    let class = &e.class;
    let mut levels: Vec<Vec<OneType>> = Vec::new();
    let mut parent: Vec<Vec<usize>> = Vec::new();
    if depth > 0 {
        let mut roots = class.root_types(mode);
        roots.sort_by(lex_compare);
        parent.push(vec![0; roots.len()]);
        levels.push(roots);
    }
    for l in 1..depth {
        let mut next: Vec<(OneType, usize)> = Vec::new();
        for (i, u) in levels[l - 1].iter().enumerate() {
            for s in class.successors(&e.dense, u, mode)? {
                next.push((s, i));
            }
        }
        next.sort_by(|a, b| lex_compare(&a.0, &b.0));
        parent.push(next.iter().map(|p| p.1).collect());
        levels.push(next.into_iter().map(|p| p.0).collect());
    }
    let mut coding = Vec::new();
    let mut coding_gamma = Vec::new();
    for n in 0..depth.min(e.size()) {
        let (t, g) = mode_type(&e.dense.type_of(n), mode);
        let idx = levels[n].binary_search_by(|x| lex_compare(x, &t)).map_err(|_| TreeError::Construction {
            level: n,
            reason: "coding node is not a realizable type".into(),
        })?;
        coding.push(idx);
        coding_gamma.push(g);
    }
    Ok(CodingTree { limit: e.clone(), mode, depth, levels, parent, coding, coding_gamma })
}

impl CodingTree {
    pub fn node_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    pub fn coding_node(&self, n: usize) -> &OneType {
        &self.levels[n][self.coding[n]]
    }

    pub fn is_coding(&self, level: usize, idx: usize) -> bool {
        self.coding.get(level) == Some(&idx)
    }

    /// Number of immediate successors of a node (computed from the class when
    /// the next level lies beyond the built depth).
    pub fn successor_count(&self, level: usize, idx: usize) -> Result<usize> {
        if level + 1 < self.levels.len() {
            return Ok(self.parent[level + 1].iter().filter(|&&p| p == idx).count());
        }
        if level >= self.limit.size() {
            return Err(TreeError::DepthExceedsPrefix {
                depth: level + 2,
                needed: level + 1,
                size: self.limit.size(),
            });
        }
        Ok(self.limit.class.successors(&self.limit.dense, &self.levels[level][idx], self.mode)?.len())
    }

    pub fn coding_nodes(&self) -> Vec<CodingNode> {
        (0..self.coding.len())
            .map(|n| CodingNode {
                index: n,
                vertex: n,
                ty: self.coding_node(n).clone(),
                gamma: self.coding_gamma[n],
            })
            .collect()
    }

    /// Maximal nodes (the last level).
    pub fn leaves(&self) -> Vec<OneType> {
        self.levels.last().cloned().unwrap_or_default()
    }

    pub fn to_dot(&self) -> String {
        let mut nodes = Vec::new();
        for (l, level) in self.levels.iter().enumerate() {
            for (i, t) in level.iter().enumerate() {
                nodes.push(DotNode { ty: t.clone(), coding: self.is_coding(l, i), gamma: None });
            }
        }
        for (n, g) in self.coding_gamma.iter().enumerate() {
            let pos = self.levels[..n].iter().map(|l| l.len()).sum::<usize>() + self.coding[n];
            nodes[pos].gamma = *g;
        }
        render_dot("coding_tree", &self.limit.class.language, nodes)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lang = &self.limit.class.language;
        serde_json::json!({
            "class": self.limit.class.name,
            "mode": self.mode.to_string(),
            "depth": self.depth,
            "level_sizes": self.levels.iter().map(|l| l.len()).collect::<Vec<_>>(),
            "levels": self.levels.iter().map(|l| l.iter().map(|t| t.render(lang)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "coding": self.coding,
            "coding_gamma": self.coding_gamma.iter().map(|g| g.map(|u| lang.symbols[u].name.clone())).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// DOT rendering
// ---------------------------------------------------------------------------

struct DotNode {
    ty: OneType,
    coding: bool,
    gamma: Option<usize>,
}

/// Ids are `L{length-1}N{rank}`, with rank the ≺-position within the level.
fn render_dot(name: &str, lang: &Language, mut nodes: Vec<DotNode>) -> String {
    nodes.sort_by(|a, b| lex_compare(&a.ty, &b.ty));
    nodes.dedup_by(|a, b| {
        if a.ty == b.ty {
            b.coding |= a.coding;
            b.gamma = b.gamma.or(a.gamma);
            true
        } else {
            false
        }
    });
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", name);
    if nodes.is_empty() {
        out.push_str("}\n");
        return out;
    }
    let _ = writeln!(out, "  node [shape=box, fontsize=10];");
    let mut rank: HashMap<usize, usize> = HashMap::new();
    let ids: Vec<String> = nodes
        .iter()
        .map(|d| {
            let r = rank.entry(d.ty.len).or_insert(0);
            let id = format!("L{}N{}", d.ty.len.saturating_sub(1), *r);
            *r += 1;
            id
        })
        .collect();
    for (d, id) in nodes.iter().zip(&ids) {
        let level = d.ty.len.saturating_sub(1);
        let new: Vec<String> = d.ty.level_atoms(level).iter().map(|a| a.render(lang)).collect();
        let mut label = if new.is_empty() { "-".to_string() } else { new.join(" ") };
        if let Some(g) = d.gamma {
            let _ = write!(label, " [{}]", lang.symbols[g].name);
        }
        let style = if d.coding { ", style=filled, fillcolor=gray80" } else { "" };
        let _ = writeln!(out, "  {} [label=\"{}\"{}];", id, label.replace('"', "'"), style);
    }
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..nodes.len() {
        while let Some(&top) = stack.last() {
            if nodes[top].ty.is_initial_segment_of(&nodes[i].ty) {
                break;
            }
            stack.pop();
        }
        if let Some(&top) = stack.last() {
            let _ = writeln!(out, "  {} -> {};", ids[top], ids[i]);
        }
        stack.push(i);
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalReport {
    pub ok: bool,
    pub failures: Vec<String>,
    pub coding_nodes: usize,
    pub splitting_nodes: usize,
    pub leaves: usize,
}

/// Validates an ambient tree viewed as a subtree of itself (it is never
/// diagonal once a coding level splits).
pub fn validate_diagonal(t: &CodingTree) -> DiagonalReport {
    validate_subtree(&t.limit.class, &t.limit.dense, &t.limit.dense, t.mode, &t.coding_nodes(), &t.leaves())
}

/// Checks that the downward closure of `leaves`, with the given coding
/// nodes, is a diagonal coding subtree of the tree over `dense` whose coding
/// nodes represent the enumerated structure `reference` (coding node `i`
/// standing for vertex `i`).
pub fn validate_subtree(
    class: &ClassSpec,
    dense: &Prefix,
    reference: &Prefix,
    mode: Mode,
    coding: &[CodingNode],
    leaves: &[OneType],
) -> DiagonalReport {
    let mut failures = Vec::new();
    let mut sorted: Vec<&OneType> = leaves.iter().collect();
    sorted.sort_by(|a, b| lex_compare(a, b));
    sorted.dedup();

    // Shape: splitting nodes are meets of ≺-adjacent leaves.
    let mut splits: HashMap<OneType, usize> = HashMap::new();
    for w in sorted.windows(2) {
        if w[0].is_initial_segment_of(w[1]) {
            failures.push(format!("leaf of length {} lies below another leaf", w[0].len));
            continue;
        }
        *splits.entry(w[0].meet(w[1])).or_insert(0) += 1;
    }
    let mut by_len: HashMap<usize, usize> = HashMap::new();
    for (s, c) in &splits {
        if s.len == 0 {
            // distinct roots
            continue;
        }
        *by_len.entry(s.len).or_insert(0) += 1;
        if *c != 1 {
            failures.push(format!("splitting node at length {} has {} successors", s.len, c + 1));
        }
    }
    for (l, c) in &by_len {
        if *c > 1 {
            failures.push(format!("{} splitting nodes at length {}", c, l));
        }
    }
    let coding_lens: HashSet<usize> = coding.iter().map(|c| c.ty.len).collect();
    let mut bad_levels: Vec<usize> = by_len.keys().filter(|l| coding_lens.contains(l)).copied().collect();
    bad_levels.sort_unstable();
    if let Some(l) = bad_levels.first() {
        failures.push(format!(
            "splitting at coding levels ({} levels, first at length {})",
            bad_levels.len(),
            l
        ));
    }
    for c in coding {
        let pos = sorted.partition_point(|leaf| lex_compare(leaf, &c.ty) == Ordering::Less);
        if !sorted.get(pos).is_some_and(|leaf| c.ty.is_initial_segment_of(leaf)) {
            failures.push(format!("coding node {} is not in the subtree", c.index));
        }
        if c.ty.len != c.vertex + 1 {
            failures.push(format!("coding node {} has the wrong length", c.index));
        }
    }

    // (1) the represented structure is the reference's K_k via i -> coding vertex i.
    let k = coding.len();
    if k > reference.len() {
        failures.push("more coding nodes than reference vertices".into());
    } else {
        let lang = &class.language;
        'outer: for sym in 0..lang.len() {
            let ar = lang.arity(sym);
            let mut tuple = vec![0usize; ar];
            let total = k.pow(ar as u32);
            for code in 0..total {
                let mut c = code;
                for slot in tuple.iter_mut() {
                    *slot = c % k.max(1);
                    c /= k.max(1);
                }
                let img: Vec<usize> = tuple.iter().map(|&i| coding[i].vertex).collect();
                let distinct = img.iter().collect::<HashSet<_>>().len() == ar;
                if !distinct {
                    continue;
                }
                if dense.holds(sym, &img) != reference.holds(sym, &tuple) {
                    failures.push(format!("represented structure differs from K_{} on {}", k, lang.symbols[sym].name));
                    break 'outer;
                }
            }
        }
        if mode == Mode::U {
            for c in coding {
                if c.gamma != reference.type_of(c.index).gamma() {
                    failures.push(format!("coding node {} has the wrong colour", c.index));
                }
            }
        }
    }

    // (2) the level just above each coding node matches the types over K_{n+1}.
    let mut map: HashMap<usize, usize> = HashMap::new();
    for c in coding {
        let n = c.index;
        map.insert(c.vertex, n);
        let l = c.ty.len + 1;
        if n + 1 > reference.len() || !sorted.iter().any(|t| t.len >= l) {
            continue;
        }
        let level: HashSet<OneType> = sorted.iter().filter(|t| t.len >= l).map(|t| t.restrict(l)).collect();
        let proj: HashSet<OneType> = level.iter().map(|t| project(t, &map, n + 2)).collect();
        if proj.len() != level.len() {
            failures.push(format!("level above coding node {} is not injective on represented types", n));
            continue;
        }
        match class.types_over_prefix(reference, n + 1, mode) {
            Ok(target) => {
                let target: HashSet<OneType> = target.into_iter().collect();
                if target != proj {
                    failures.push(format!(
                        "level above coding node {} represents {} types, expected {}",
                        n,
                        proj.len(),
                        target.len()
                    ));
                }
            }
            Err(e) => failures.push(format!("cannot list types over K_{}: {}", n + 1, e)),
        }
    }

    // (3) passing types of coding continuations agree along chains.
    let conts: Vec<Option<OneType>> = coding
        .iter()
        .map(|c| {
            let pos = sorted.partition_point(|leaf| lex_compare(leaf, &c.ty) == Ordering::Less);
            sorted
                .get(pos)
                .filter(|leaf| c.ty.is_initial_segment_of(leaf) && leaf.len > c.ty.len)
                .map(|leaf| leaf.restrict(c.ty.len + 1))
        })
        .collect();
    'chain: for n in 0..k {
        for m in 0..n {
            if !coding[m].ty.is_initial_segment_of(&coding[n].ty) {
                continue;
            }
            let (Some(cn), Some(cm)) = (&conts[n], &conts[m]) else { continue };
            let below: HashMap<usize, usize> = (0..m).map(|i| (coding[i].vertex, i)).collect();
            let pass = |t: &OneType, v: usize| -> Vec<Atom> {
                let mut r: Vec<Atom> = passing_type(t, v, |p| below.contains_key(&p))
                    .iter()
                    .map(|a| a.rename(&|u| if u == v { m } else { below[&u] }))
                    .collect();
                r.sort_unstable();
                r
            };
            if pass(cn, coding[n].vertex) != pass(cm, coding[m].vertex) {
                failures.push(format!("coding nodes {} and {} pass differently", m, n));
                break 'chain;
            }
        }
    }

    DiagonalReport {
        ok: failures.is_empty(),
        failures,
        coding_nodes: coding.len(),
        splitting_nodes: splits.keys().filter(|s| s.len > 0).count(),
        leaves: sorted.len(),
    }
}

// ---------------------------------------------------------------------------
// Diagonal subtrees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitNode {
    /// The hidden ambient vertex whose relations separate the two branches.
    pub vertex: usize,
    pub node: OneType,
    pub left: OneType,
    pub right: OneType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelRole {
    Split(usize),
    Coding(usize),
    Passive,
}

#[derive(Debug, Clone)]
pub struct DiagonalTree {
    pub class: ClassSpec,
    pub mode: Mode,
    pub family: Family,
    /// The ambient prefix `K`.
    pub dense: Prefix,
    /// The enumerated structure copied by the coding nodes: coding node `n`
    /// realizes the type of reference vertex `n` over its predecessors.
    pub reference: Prefix,
    pub coding: Vec<CodingNode>,
    /// `targets[n]`: the type of `v_n` over `K_n` that coding node `n` copies.
    pub targets: Vec<OneType>,
    pub splits: Vec<SplitNode>,
    /// What each ambient level was used for.
    pub roles: Vec<LevelRole>,
    /// Maximal nodes; the subtree is their downward closure.
    pub leaves: Vec<OneType>,
    /// The represented type (over `K_k`) of each leaf.
    pub leaf_targets: Vec<OneType>,
}

impl DiagonalTree {
    pub fn depth(&self) -> usize {
        self.coding.len()
    }

    pub fn ambient_size(&self) -> usize {
        self.dense.len()
    }

    pub fn validate(&self) -> DiagonalReport {
        validate_subtree(&self.class, &self.dense, &self.reference, self.mode, &self.coding, &self.leaves)
    }

    /// The ambient prefix as an enumerated structure.
    pub fn to_limit(&self) -> EnumeratedLimit {
        EnumeratedLimit::from_dense(&self.class, self.dense.clone())
    }

    /// DOT rendering of the critical nodes (roots, splitting, coding nodes,
    /// leaves) with compressed paths.
    pub fn to_dot(&self) -> String {
        let mut nodes: Vec<DotNode> = Vec::new();
        for r in self.class.root_types(self.mode) {
            if self.leaves.iter().any(|l| r.is_initial_segment_of(l)) {
                nodes.push(DotNode { ty: r, coding: false, gamma: None });
            }
        }
        for s in &self.splits {
            nodes.push(DotNode { ty: s.node.clone(), coding: false, gamma: None });
        }
        for c in &self.coding {
            nodes.push(DotNode { ty: c.ty.clone(), coding: true, gamma: c.gamma });
        }
        for l in &self.leaves {
            nodes.push(DotNode { ty: l.clone(), coding: false, gamma: None });
        }
        render_dot("diagonal_tree", &self.class.language, nodes)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lang = &self.class.language;
        serde_json::json!({
            "class": self.class.name,
            "mode": self.mode.to_string(),
            "family": format!("{:?}", self.family),
            "depth": self.depth(),
            "ambient_size": self.ambient_size(),
            "splitting_nodes": self.splits.len(),
            "leaves": self.leaves.len(),
            "coding": self.coding.iter().map(|c| serde_json::json!({
                "index": c.index,
                "vertex": c.vertex,
                "length": c.ty.len,
                "gamma": c.gamma.map(|g| lang.symbols[g].name.clone()),
                "target": self.targets[c.index].render(lang),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Want {
    /// Free classes: the two ≺-least successors with at most one new orbit.
    Free,
    /// Ordered free classes: two successors with the same (forced) order.
    OrderedE,
    /// Convex equivalences: join the hidden vertex exactly at the
    /// equivalence levels `>= t`, once on each side.
    Coe(usize),
}

#[derive(Clone, Copy, Debug)]
enum Step {
    First(usize),
    Second(usize),
    Single,
}

#[derive(Clone, Debug)]
struct Owner {
    target: OneType,
    succ: Vec<OneType>,
    leaves: Vec<usize>,
    done: usize,
}

#[derive(Clone, Debug)]
struct Stage {
    target: OneType,
    gamma: Option<usize>,
    wstar: usize,
    owners: Vec<Owner>,
    order: Vec<usize>,
    steps: Vec<Step>,
    pos: usize,
    middle: usize,
}

enum Action {
    Split { owner: usize, leaf: usize, left: Vec<Atom>, right: Vec<Atom> },
    Coding { leaf: usize },
    Passive,
}

struct Engine<'a> {
    class: &'a ClassSpec,
    mode: Mode,
    family: Family,
    chain: Vec<usize>,
    order_sym: Option<usize>,
    free_passive: bool,
    /// Colours to try for hidden vertices in U-mode.
    colours: Vec<usize>,
    k: Prefix,
    reference: Prefix,
    leaves: Vec<Vec<Atom>>,
    /// Number of ambient vertices below each leaf (ordered classes only).
    below: Vec<usize>,
    leaf_target: Vec<OneType>,
    /// Ambient vertices sorted by the order.
    order_list: Vec<usize>,
    vl_below: usize,
    stage: Option<Stage>,
    n: usize,
    coding: Vec<CodingNode>,
    targets: Vec<OneType>,
    splits: Vec<SplitNode>,
    roles: Vec<LevelRole>,
}

impl<'a> Engine<'a> {
    fn new(class: &'a ClassSpec, mode: Mode, reference: Prefix) -> Result<Engine<'a>> {
        let unsupported = |reason: &str| TreeError::Unsupported { class: class.name.clone(), reason: reason.into() };
        if class.sdap_plus == Some(false) {
            return Err(unsupported("the class is declared without SDAP+"));
        }
        let family = class.family().ok_or_else(|| unsupported("unrecognised combination of axioms"))?;
        let chain = match family {
            Family::ConvexEquivalence => {
                class.equivalence_chain().ok_or_else(|| unsupported("equivalences are not nested"))?
            }
            _ => Vec::new(),
        };
        let order_sym = class.order_symbol();
        if order_sym.is_some() && class.language.max_arity() > 2 {
            return Err(unsupported("ordered classes with ternary relations"));
        }
        let axioms_free = class
            .axioms
            .iter()
            .all(|a| matches!(a, Axiom::Symmetric(_) | Axiom::UnaryPartition | Axiom::LinearOrder(_)));
        let patterns_irreducible = class.forbidden.iter().all(|p| is_r_irreducible(&p.structure, 2));
        let free_passive = axioms_free
            && patterns_irreducible
            && matches!(family, Family::Free | Family::OrderedFree);
        let colours = if mode == Mode::U && class.has_unary { class.language.unary_symbols() } else { Vec::new() };
        let mut roots = class.root_types(mode);
        roots.sort_by(lex_compare);
        if roots.is_empty() {
            return Err(unsupported("no realizable root type"));
        }
        Ok(Engine {
            class,
            mode,
            family,
            chain,
            order_sym,
            free_passive,
            colours,
            k: Prefix::new(class.language.clone()),
            reference,
            leaves: roots.iter().map(|r| r.atoms.clone()).collect(),
            below: vec![0; roots.len()],
            leaf_target: roots,
            order_list: Vec::new(),
            vl_below: 0,
            stage: None,
            n: 0,
            coding: Vec::new(),
            targets: Vec::new(),
            splits: Vec::new(),
            roles: Vec::new(),
        })
    }

    fn err(&self, reason: impl Into<String>) -> TreeError {
        TreeError::Construction { level: self.k.len(), reason: reason.into() }
    }

    fn is_convex(&self) -> bool {
        matches!(self.family, Family::Order | Family::ConvexEquivalence)
    }

    fn lt_below(&self, a: &Atom) -> bool {
        // lt(v, x): v below x
        Some(a.sym as usize) == self.order_sym && a.args[1] == X && a.args[0] != X
    }

    fn push_vertex(&mut self, atoms: &[Atom]) {
        self.k.push(atoms);
        if self.order_sym.is_some() {
            let b = atoms.iter().filter(|a| self.lt_below(a)).count();
            self.vl_below = b;
            self.order_list.insert(b.min(self.order_list.len()), self.k.len() - 1);
        }
    }

    fn pop_vertex(&mut self) {
        let v = self.k.len() - 1;
        self.k.pop();
        if let Some(p) = self.order_list.iter().position(|&u| u == v) {
            self.order_list.remove(p);
        }
    }

    fn with_colour(&self, atoms: &[Atom], g: Option<usize>) -> Vec<Atom> {
        let mut v: Vec<Atom> = atoms.to_vec();
        if let Some(g) = g {
            v.push(Atom::new(g, &[X]));
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    fn colour_options(&self) -> Vec<Option<usize>> {
        if self.colours.is_empty() {
            vec![None]
        } else {
            self.colours.iter().map(|&g| Some(g)).collect()
        }
    }

    /// Computes the plan of stage `n` from reference vertex `n`.
    fn ensure_stage(&mut self) -> Result<bool> {
        if self.stage.is_some() || self.reference.len() <= self.n {
            return Ok(false);
        }
        let n = self.n;
        let (target, gamma) = mode_type(&self.reference.type_of(n), self.mode);
        let mut owners = Vec::with_capacity(self.leaves.len());
        for i in 0..self.leaves.len() {
            let succ = self.class.successors(&self.reference, &self.leaf_target[i], self.mode)?;
            if succ.is_empty() {
                return Err(self.err("a frontier target has no realizable successor"));
            }
            owners.push(Owner { target: self.leaf_target[i].clone(), succ, leaves: vec![i], done: 0 });
        }
        let wstar = owners
            .iter()
            .position(|o| o.target == target)
            .ok_or_else(|| self.err(format!("the type of reference vertex {} is not a frontier target", n)))?;
        let mut order: Vec<usize> = (0..owners.len()).collect();
        order.sort_by(|&a, &b| cmp_atoms(&self.leaves[a], &self.leaves[b]));
        let mut steps = Vec::new();
        if self.is_convex() {
            for (w, o) in owners.iter().enumerate() {
                if w != wstar && o.succ.len() != 1 {
                    return Err(TreeError::Unsupported {
                        class: self.class.name.clone(),
                        reason: "a non-coding frontier node needs splitting".into(),
                    });
                }
            }
            let h = self
                .chain
                .iter()
                .position(|&e| target.atoms.iter().any(|a| a.sym as usize == e))
                .unwrap_or(self.chain.len());
            if owners[wstar].succ.len() != 2 * (h + 1) {
                return Err(self.err(format!(
                    "coding target has {} successors, expected {}",
                    owners[wstar].succ.len(),
                    2 * (h + 1)
                )));
            }
            for t in (1..=h).rev() {
                steps.push(Step::First(t));
                steps.push(Step::Second(t));
            }
            steps.push(Step::Single);
        }
        self.stage = Some(Stage { target, gamma, wstar, owners, order, steps, pos: 0, middle: wstar });
        Ok(true)
    }

    fn next_task(&self) -> Option<(usize, usize, Want)> {
        let st = self.stage.as_ref()?;
        if self.is_convex() {
            let t = match st.steps.get(st.pos)? {
                Step::First(t) | Step::Second(t) => *t,
                Step::Single => 0,
            };
            return Some((st.wstar, st.middle, Want::Coe(t)));
        }
        let want = if self.family == Family::OrderedFree { Want::OrderedE } else { Want::Free };
        st.order
            .iter()
            .find(|&&w| st.owners[w].done + 1 < st.owners[w].succ.len())
            .map(|&w| (w, st.owners[w].leaves[0], want))
    }

    fn ext_ok(&self, leaf: usize, new: &[Atom]) -> bool {
        let key = self.k.len();
        let t = OneType { len: key, atoms: self.leaves[leaf].clone() }.extend(new);
        self.class.realizable(&self.k, &t, self.mode)
    }

    /// The two successors of `leaf` with respect to the newest vertex that a
    /// split of kind `want` uses, if available.
    fn split_pair(&self, leaf: usize, want: Want) -> Result<Option<(Vec<Atom>, Vec<Atom>)>> {
        let key = self.k.len();
        let orbits = self.class.level_orbits(key);
        let is_order = |o: &Vec<Atom>| Some(o[0].sym as usize) == self.order_sym;
        let mut cands: Vec<Vec<Atom>> = Vec::new();
        match want {
            Want::Free => {
                cands.push(Vec::new());
                cands.extend(orbits.iter().cloned());
            }
            Want::OrderedE => {
                for o in orbits.iter().filter(|o| is_order(o)) {
                    cands.push(o.clone());
                    for e in orbits.iter().filter(|e| !is_order(e)) {
                        let mut c = o.clone();
                        c.extend_from_slice(e);
                        c.sort_unstable();
                        cands.push(c);
                    }
                }
            }
            Want::Coe(t) => {
                let joined: Vec<usize> = self.chain[t.min(self.chain.len())..].to_vec();
                let mut pair = Vec::new();
                for o in orbits.iter().filter(|o| is_order(o)) {
                    let mut c = o.clone();
                    for e in orbits.iter().filter(|e| joined.contains(&(e[0].sym as usize))) {
                        c.extend_from_slice(e);
                    }
                    c.sort_unstable();
                    if !self.ext_ok(leaf, &c) {
                        return Ok(None);
                    }
                    pair.push(c);
                }
                if pair.len() != 2 {
                    return Ok(None);
                }
                pair.sort_by(|a, b| cmp_atoms(a, b));
                let r = pair.pop().unwrap_or_default();
                let l = pair.pop().unwrap_or_default();
                return Ok(Some((l, r)));
            }
        }
        let mut ok: Vec<Vec<Atom>> = cands.into_iter().filter(|c| self.ext_ok(leaf, c)).collect();
        ok.sort_by(|a, b| cmp_atoms(a, b));
        if want == Want::OrderedE && !ok.is_empty() {
            // both branches keep the order relation of the ≺-least one
            let order_of = |c: &Vec<Atom>| c.iter().find(|a| Some(a.sym as usize) == self.order_sym).copied();
            let first = order_of(&ok[0]);
            ok.retain(|c| order_of(c) == first);
        }
        if ok.len() < 2 {
            return Ok(None);
        }
        Ok(Some((ok[0].clone(), ok[1].clone())))
    }

    /// The successor taken by a leaf that does not split at this level.
    fn passive_new(&self, leaf: usize) -> Result<Vec<Atom>> {
        let key = self.k.len();
        let v = key as u32; // encoded newest vertex
        if self.free_passive {
            return Ok(match self.order_sym {
                None => Vec::new(),
                Some(lt) => {
                    if self.below[leaf] <= self.vl_below {
                        vec![Atom::new(lt, &[X, v])]
                    } else {
                        vec![Atom::new(lt, &[v, X])]
                    }
                }
            });
        }
        let orbits = self.class.level_orbits(key);
        if orbits.len() > 20 {
            return Err(ClassError::TooManyAtoms(orbits.len()).into());
        }
        for size in 0..=orbits.len() {
            let mut cands: Vec<Vec<Atom>> = Vec::new();
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                let mut c: Vec<Atom> = idx.iter().flat_map(|&i| orbits[i].iter().copied()).collect();
                c.sort_unstable();
                cands.push(c);
                if !next_combination(&mut idx, orbits.len()) {
                    break;
                }
            }
            cands.sort_by(|a, b| cmp_atoms(a, b));
            if let Some(c) = cands.into_iter().find(|c| self.ext_ok(leaf, c)) {
                return Ok(c);
            }
        }
        Err(self.err("a frontier node has no realizable successor"))
    }

    fn coding_leaves(&self) -> Vec<usize> {
        let Some(st) = self.stage.as_ref() else { return Vec::new() };
        if self.is_convex() {
            if st.pos == st.steps.len() {
                vec![st.middle]
            } else {
                Vec::new()
            }
        } else {
            let mut v = st.owners[st.wstar].leaves.clone();
            v.sort_by(|&a, &b| cmp_atoms(&self.leaves[a], &self.leaves[b]));
            v
        }
    }

    fn decide(&self) -> Result<Action> {
        if self.stage.is_none() {
            return Ok(Action::Passive);
        }
        if let Some((owner, leaf, want)) = self.next_task() {
            if let Some((left, right)) = self.split_pair(leaf, want)? {
                return Ok(Action::Split { owner, leaf, left, right });
            }
            return Ok(Action::Passive);
        }
        let st = self.stage.as_ref().expect("stage");
        let (p, g) = mode_type(&self.k.type_of(self.k.len() - 1), self.mode);
        if self.class.has_unary && g != st.gamma {
            return Ok(Action::Passive);
        }
        for c in self.coding_leaves() {
            if self.leaves[c] == p.atoms {
                return Ok(Action::Coding { leaf: c });
            }
        }
        Ok(Action::Passive)
    }

    fn note_new_atoms(&mut self, leaf: usize, new: &[Atom]) {
        if self.order_sym.is_some() && new.iter().any(|a| self.lt_below(a)) {
            self.below[leaf] += 1;
        }
    }

    fn apply(&mut self, action: Action) -> Result<()> {
        let l = self.k.len() - 1;
        match action {
            Action::Passive => {
                for i in 0..self.leaves.len() {
                    let new = self.passive_new(i)?;
                    self.note_new_atoms(i, &new);
                    self.leaves[i].extend(new);
                }
                self.roles.push(LevelRole::Passive);
            }
            Action::Split { owner, leaf, left, right } => {
                let mut news = Vec::with_capacity(self.leaves.len());
                for i in 0..self.leaves.len() {
                    news.push(if i == leaf { Vec::new() } else { self.passive_new(i)? });
                }
                for (i, new) in news.into_iter().enumerate() {
                    if i != leaf {
                        self.note_new_atoms(i, &new);
                        self.leaves[i].extend(new);
                    }
                }
                let node = OneType { len: l + 1, atoms: self.leaves[leaf].clone() };
                let lt = node.extend(&left);
                let rt = node.extend(&right);
                let idx = self.leaves.len();
                self.leaves.push(rt.atoms.clone());
                self.below.push(self.below[leaf]);
                self.leaf_target.push(self.leaf_target[leaf].clone());
                self.note_new_atoms(idx, &right);
                self.leaves[leaf] = lt.atoms.clone();
                self.note_new_atoms(leaf, &left);
                let convex = self.is_convex();
                let st = self.stage.as_mut().expect("stage");
                st.owners[owner].leaves.push(idx);
                st.owners[owner].done += 1;
                if convex {
                    if let Some(Step::Second(_)) = st.steps.get(st.pos) {
                        st.middle = idx;
                    }
                    st.pos += 1;
                }
                self.roles.push(LevelRole::Split(self.splits.len()));
                self.splits.push(SplitNode { vertex: l, node, left: lt, right: rt });
            }
            Action::Coding { leaf: c } => {
                let st = self.stage.take().expect("stage");
                let n = self.n;
                let key = l + 1;
                let coding_vertex: Vec<usize> = self.coding.iter().map(|c| c.vertex).collect();
                let map = |v: usize| if v == n { l } else { coding_vertex[v] };
                let new_for = |t: &OneType| -> Vec<Atom> {
                    let mut v: Vec<Atom> = t.level_atoms(n + 1).iter().map(|a| a.rename(&map)).collect();
                    v.sort_unstable();
                    v
                };
                let mut assigned: Vec<Option<(OneType, Vec<Atom>)>> = vec![None; self.leaves.len()];
                for (w, o) in st.owners.iter().enumerate() {
                    let news: Vec<Vec<Atom>> = o.succ.iter().map(new_for).collect();
                    let feas: Vec<Vec<bool>> =
                        o.leaves.iter().map(|&li| news.iter().map(|nw| self.ext_ok(li, nw)).collect()).collect();
                    let mut used = vec![false; o.succ.len()];
                    let mut choice = vec![usize::MAX; o.leaves.len()];
                    if w == st.wstar {
                        let pos = o.leaves.iter().position(|&li| li == c).expect("coding leaf belongs to w*");
                        let best = (0..o.succ.len())
                            .filter(|&j| feas[pos][j])
                            .min_by(|&a, &b| cmp_atoms(&news[a], &news[b]))
                            .ok_or_else(|| self.err("the coding node has no continuation"))?;
                        used[best] = true;
                        choice[pos] = best;
                    }
                    if !match_leaves(&feas, &mut used, &mut choice, 0) {
                        return Err(self.err(format!("cannot match {} frontier leaves to their targets", o.leaves.len())));
                    }
                    for (pos, &li) in o.leaves.iter().enumerate() {
                        let j = choice[pos];
                        assigned[li] = Some((o.succ[j].clone(), news[j].clone()));
                    }
                }
                let ty = OneType { len: key, atoms: self.leaves[c].clone() };
                for (i, a) in assigned.into_iter().enumerate() {
                    let (t, new) = a.ok_or_else(|| self.err("unassigned frontier leaf"))?;
                    self.note_new_atoms(i, &new);
                    self.leaves[i].extend(new);
                    self.leaves[i].sort_unstable();
                    self.leaf_target[i] = t;
                }
                self.coding.push(CodingNode { index: n, vertex: l, ty, gamma: st.gamma });
                self.targets.push(st.target);
                self.roles.push(LevelRole::Coding(n));
                self.n += 1;
            }
        }
        Ok(())
    }

    /// Candidate hidden-vertex types for a split of `leaf`.
    fn split_candidates(&self, leaf: usize, want: Want) -> Vec<Vec<Atom>> {
        let mut out = Vec::new();
        let colours = self.colour_options();
        match want {
            Want::Free => {
                if self.class.has_unary {
                    for u in self.class.language.unary_symbols() {
                        out.push(vec![Atom::new(u, &[X])]);
                    }
                } else {
                    out.push(Vec::new());
                }
                for &g in &colours {
                    out.push(self.with_colour(&self.leaves[leaf], g));
                }
            }
            Want::OrderedE => {
                let l = self.k.len();
                let lt = self.order_sym.expect("ordered");
                let occupied: HashSet<usize> = self.below.iter().copied().collect();
                let gaps: Vec<usize> =
                    if l == 0 { vec![0] } else { (0..=l).rev().filter(|g| !occupied.contains(g)).collect() };
                let unary: Vec<Option<usize>> = if self.class.has_unary {
                    self.class.language.unary_symbols().into_iter().map(Some).collect()
                } else {
                    vec![None]
                };
                for g in gaps {
                    let mut atoms = Vec::with_capacity(l);
                    for (pos, &v) in self.order_list.iter().enumerate() {
                        let e = v as u32 + 1;
                        atoms.push(if pos < g { Atom::new(lt, &[e, X]) } else { Atom::new(lt, &[X, e]) });
                    }
                    for &u in &unary {
                        out.push(self.with_colour(&atoms, u));
                    }
                }
            }
            Want::Coe(_) => {
                for &g in &colours {
                    out.push(self.with_colour(&self.leaves[leaf], g));
                }
            }
        }
        out
    }

    fn coding_candidates(&self) -> Vec<Vec<Atom>> {
        let g = if self.mode == Mode::U { self.stage.as_ref().and_then(|s| s.gamma) } else { None };
        self.coding_leaves().into_iter().map(|c| self.with_colour(&self.leaves[c], g)).collect()
    }

    /// Generative mode: adds one ambient vertex chosen by the class policy.
    fn grow(&mut self) -> Result<()> {
        self.ensure_stage()?;
        if self.stage.is_none() {
            return Err(self.err("the reference enumeration is exhausted"));
        }
        let task = self.next_task();
        let cands: Vec<Vec<Atom>> = match task {
            Some((_, leaf, want)) => self.split_candidates(leaf, want),
            None => self.coding_candidates(),
        };
        if self.try_candidates(cands)? {
            return Ok(());
        }
        if let Some((_, leaf, Want::Free)) = task {
            // Fall back to copying the other frontier leaves, one at a time.
            for i in (0..self.leaves.len()).filter(|&i| i != leaf) {
                let cands: Vec<Vec<Atom>> =
                    self.colour_options().into_iter().map(|g| self.with_colour(&self.leaves[i], g)).collect();
                if self.try_candidates(cands)? {
                    return Ok(());
                }
            }
        }
        Err(self.err("no admissible vertex for the next split or coding node"))
    }

    /// Pushes the first candidate vertex that triggers a split or coding
    /// step and applies it.
    fn try_candidates(&mut self, cands: Vec<Vec<Atom>>) -> Result<bool> {
        let l = self.k.len();
        let mut seen: HashSet<Vec<Atom>> = HashSet::new();
        for p in cands {
            if !seen.insert(p.clone()) || !self.class.extension_ok(&self.k, l, &p) {
                continue;
            }
            self.push_vertex(&p);
            match self.decide()? {
                Action::Passive => self.pop_vertex(),
                action => {
                    self.apply(action)?;
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Fixed mode: consumes the given vertex type.
    fn consume(&mut self, atoms: &[Atom]) -> Result<()> {
        self.push_vertex(atoms);
        self.ensure_stage()?;
        let a = self.decide()?;
        self.apply(a)
    }

    fn pending_splits(&self) -> usize {
        match &self.stage {
            None => 1,
            Some(st) if self.is_convex() => st.steps.len() - st.pos,
            Some(st) => st.order.iter().map(|&w| (st.owners[w].succ.len() - 1).saturating_sub(st.owners[w].done)).sum(),
        }
    }

    fn finish(self) -> DiagonalTree {
        let len = self.k.len() + 1;
        DiagonalTree {
            class: self.class.clone(),
            mode: self.mode,
            family: self.family,
            coding: self.coding,
            targets: self.targets,
            splits: self.splits,
            roles: self.roles,
            leaves: self.leaves.into_iter().map(|a| OneType::new(len, a)).collect(),
            leaf_targets: self.leaf_target,
            dense: self.k,
            reference: self.reference,
        }
    }
}

/// Advances a sorted `k`-subset of `0..n`; false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Backtracking bipartite matching; rows already chosen are skipped.
fn match_leaves(feas: &[Vec<bool>], used: &mut [bool], choice: &mut [usize], row: usize) -> bool {
    if row == feas.len() {
        return true;
    }
    if choice[row] != usize::MAX {
        return match_leaves(feas, used, choice, row + 1);
    }
    for j in 0..used.len() {
        if !used[j] && feas[row][j] {
            used[j] = true;
            choice[row] = j;
            if match_leaves(feas, used, choice, row + 1) {
                return true;
            }
            used[j] = false;
            choice[row] = usize::MAX;
        }
    }
    false
}

/// Seed of the default reference enumeration copied by generated trees.
pub const DEFAULT_REFERENCE_SEED: u64 = 5;

/// Builds a diagonal coding subtree with `coding_depth` coding nodes,
/// generating the ambient prefix alongside it. The coding nodes copy the
/// seeded random enumeration of the limit with [`DEFAULT_REFERENCE_SEED`].
pub fn build_diagonal(class: &ClassSpec, coding_depth: usize, mode: Mode) -> Result<DiagonalTree> {
    build_diagonal_seeded(class, coding_depth, mode, DEFAULT_REFERENCE_SEED)
}

pub fn build_diagonal_seeded(class: &ClassSpec, coding_depth: usize, mode: Mode, seed: u64) -> Result<DiagonalTree> {
    let reference = build_random_enumerated(class, coding_depth + 1, seed)?.dense;
    build_diagonal_copying(class, &reference, coding_depth, mode)
}

/// Generative construction whose coding nodes copy `reference`.
pub fn build_diagonal_copying(class: &ClassSpec, reference: &Prefix, coding_depth: usize, mode: Mode) -> Result<DiagonalTree> {
    let mut eng = Engine::new(class, mode, reference.clone())?;
    while eng.n < coding_depth {
        if eng.k.len() >= MAX_AMBIENT {
            return Err(eng.err("ambient prefix limit reached"));
        }
        eng.grow()?;
    }
    Ok(eng.finish())
}

/// Runs the same level-driven construction on a fixed prefix, whose coding
/// nodes copy the prefix itself.
pub fn extract_diagonal_from(class: &ClassSpec, prefix: &Prefix, mode: Mode, coding_depth: usize) -> Result<DiagonalTree> {
    extract_diagonal_with_reference(class, prefix, prefix, mode, coding_depth)
}

/// Fixed-prefix construction whose coding nodes copy `reference`.
pub fn extract_diagonal_with_reference(
    class: &ClassSpec,
    prefix: &Prefix,
    reference: &Prefix,
    mode: Mode,
    coding_depth: usize,
) -> Result<DiagonalTree> {
    let mut eng = Engine::new(class, mode, reference.clone())?;
    for v in 0..prefix.len() {
        if eng.n >= coding_depth {
            break;
        }
        eng.consume(&prefix.type_of(v).atoms)?;
    }
    if eng.n < coding_depth {
        let remaining = coding_depth - eng.n;
        return Err(TreeError::TooShallow {
            built: eng.n,
            wanted: coding_depth,
            levels: prefix.len(),
            needed: prefix.len() + eng.pending_splits() + 1 + 2 * (remaining - 1),
        });
    }
    Ok(eng.finish())
}

/// Extracts a diagonal subtree from an ambient tree's prefix.
pub fn extract_diagonal(tree: &CodingTree, coding_depth: usize) -> Result<DiagonalTree> {
    extract_diagonal_from(&tree.limit.class, &tree.limit.dense, tree.mode, coding_depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{preset, preset_q, preset_rado};
    use crate::enumerated::build_enumerated;

    fn diag(expr: &str, depth: usize) -> DiagonalTree {
        let c = preset(expr).unwrap();
        let m = c.default_mode();
        build_diagonal(&c, depth, m).unwrap()
    }

    #[test]
    fn rational_levels_grow_by_one() {
        let q = preset_q().unwrap();
        let e = build_enumerated(&q, 5).unwrap();
        let t = build_coding_tree(&e, 5, Mode::S).unwrap();
        let sizes: Vec<usize> = t.levels.iter().map(|l| l.len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 4, 5]);
        for n in 0..5 {
            assert_eq!(*t.coding_node(n), e.dense.type_of(n));
        }
        let r = validate_diagonal(&t);
        assert!(!r.ok);
        assert!(r.failures.iter().any(|f| f.contains("splitting at coding levels")), "{:?}", r.failures);
    }

    #[test]
    fn rado_levels_double() {
        let r = preset_rado().unwrap();
        let e = build_enumerated(&r, 6).unwrap();
        let t = build_coding_tree(&e, 6, Mode::S).unwrap();
        let sizes: Vec<usize> = t.levels.iter().map(|l| l.len()).collect();
        assert_eq!(sizes, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(t.successor_count(5, 0).unwrap(), 2);
    }

    #[test]
    fn hypergraph_successors() {
        let h = preset("hyper3").unwrap();
        let e = build_enumerated(&h, 6).unwrap();
        let t = build_coding_tree(&e, 5, Mode::S).unwrap();
        for n in 0..5 {
            let expect = 1usize << n;
            assert_eq!(t.successor_count(n, 0).unwrap(), expect, "level {}", n);
        }
    }

    #[test]
    fn fresh_class_coding_nodes_have_four_successors() {
        let qq = preset("qq").unwrap();
        let e = build_enumerated(&qq, 6).unwrap();
        let t = build_coding_tree(&e, 6, Mode::S).unwrap();
        for n in 0..5 {
            let c = t.coding_node(n);
            let fresh = !c.atoms.iter().any(|a| a.sym == 1);
            let s = t.successor_count(n, t.coding[n]).unwrap();
            assert_eq!(s, if fresh { 4 } else { 2 }, "coding node {}", n);
        }
    }

    #[test]
    fn empty_tree_dot_is_header_only() {
        let r = preset_rado().unwrap();
        let e = EnumeratedLimit::from_structure(&r, &r.parse_structure("vertices 0").unwrap()).unwrap();
        let t = build_coding_tree(&e, 0, Mode::S).unwrap();
        assert_eq!(t.to_dot(), "digraph coding_tree {\n}\n");
        let t1 = build_coding_tree(&e, 1, Mode::S).unwrap();
        assert_eq!(t1.node_count(), 1);
        assert!(t1.coding.is_empty());
        assert!(t1.to_dot().contains("L0N0"));
    }

    #[test]
    fn diagonal_trees_validate() {
        for (expr, d) in [
            ("rado", 6),
            ("q", 8),
            ("qq", 6),
            ("tournament", 5),
            ("digraph", 4),
            ("bipartite", 4),
            ("qn(2)", 5),
            ("ordered(rado)", 4),
            ("coen(2)", 4),
            ("unrestricted(1)", 4),
            ("unrestricted(2)", 2),
            ("hyper3", 4),
        ] {
            let t = diag(expr, d);
            assert_eq!(t.depth(), d);
            let r = t.validate();
            assert!(r.ok, "{}: {:?}", expr, r.failures);
            assert_eq!(r.splitting_nodes, t.splits.len(), "{}", expr);
        }
    }

    #[test]
    fn rado_stage_sizes() {
        let t = diag("rado", 5);
        assert_eq!(t.leaves.len(), 32);
        assert_eq!(t.splits.len(), 31);
        assert_eq!(t.ambient_size(), 36);
    }

    #[test]
    fn fixed_mode_reproduces_generated_tree() {
        for expr in ["rado", "q", "qq", "ordered(rado)", "qn(2)"] {
            let t = diag(expr, 4);
            let again = extract_diagonal_with_reference(&t.class, &t.dense, &t.reference, t.mode, 4).unwrap();
            assert_eq!(again.coding, t.coding, "{}", expr);
            assert_eq!(again.leaves, t.leaves, "{}", expr);
        }
    }

    #[test]
    fn shallow_prefix_is_reported() {
        let q = preset_q().unwrap();
        let e = build_enumerated(&q, 3).unwrap();
        let t = build_coding_tree(&e, 3, Mode::S).unwrap();
        match extract_diagonal(&t, 5) {
            Err(TreeError::TooShallow { needed, levels, .. }) => assert!(needed > levels),
            other => panic!("unexpected {:?}", other.map(|t| t.depth())),
        }
    }

    #[test]
    fn triangle_free_is_refused() {
        let k3 = preset("k3free").unwrap();
        assert!(matches!(build_diagonal(&k3, 3, Mode::S), Err(TreeError::Unsupported { .. })));
    }

    #[test]
    fn diagonal_dot_marks_coding_nodes() {
        let t = diag("q", 3);
        let dot = t.to_dot();
        assert!(dot.starts_with("digraph diagonal_tree {"));
        assert_eq!(dot.matches("style=filled").count(), 3);
        assert!(dot.contains("L0N0"));
    }
}
