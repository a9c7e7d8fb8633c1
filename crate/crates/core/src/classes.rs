//! Class specifications: axioms, forbidden patterns, presets, membership,
//! realizable 1-types and bounded amalgamation checks.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

use crate::structures::{
    parse_structure_body, Cursor, FinStructure, Language, OrderedStructure, StructureError, Tok,
};
use crate::types::{lex_compare, Atom, Mode, OneType, X};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("unknown preset {0}")]
    UnknownPreset(String),
    #[error("axiom mismatch: {0}")]
    Axiom(String),
    #[error("structure is not in class {0}")]
    NotInClass(String),
    #[error("bound {0} exceeds the search-space guard of 7")]
    BoundExceeded(usize),
    #[error("too many candidate atoms at one level ({0})")]
    TooManyAtoms(usize),
}

pub type Result<T> = std::result::Result<T, ClassError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Symmetric(usize),
    LinearOrder(usize),
    Equivalence(usize),
    /// Classes of `eq` are intervals of `order`.
    Convex { eq: usize, order: usize },
    /// `coarse` contains `fine`.
    Coarsens { coarse: usize, fine: usize },
    TotalAsymmetric(usize),
    UnaryPartition,
}

impl Axiom {
    fn shift(&self, off: usize) -> Axiom {
        match *self {
            Axiom::Symmetric(r) => Axiom::Symmetric(r + off),
            Axiom::LinearOrder(r) => Axiom::LinearOrder(r + off),
            Axiom::Equivalence(r) => Axiom::Equivalence(r + off),
            Axiom::Convex { eq, order } => Axiom::Convex { eq: eq + off, order: order + off },
            Axiom::Coarsens { coarse, fine } => Axiom::Coarsens { coarse: coarse + off, fine: fine + off },
            Axiom::TotalAsymmetric(r) => Axiom::TotalAsymmetric(r + off),
            Axiom::UnaryPartition => Axiom::UnaryPartition,
        }
    }
}

/// A forbidden structure. Only the symbols in `mask` are compared, so a
/// pattern inherited from one side of a superposition ignores the other side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub structure: FinStructure,
    pub mask: Vec<bool>,
    /// For each start vertex, a search order with the already-placed
    /// neighbour used to generate candidates.
    plans: Vec<Vec<(usize, Option<usize>)>>,
}

impl Pattern {
    pub fn new(structure: FinStructure, mask: Vec<bool>) -> Pattern {
        let n = structure.size;
        let mut adj = vec![Vec::new(); n];
        for (sym, rel) in structure.relations.iter().enumerate() {
            if !mask[sym] {
                continue;
            }
            for t in rel {
                for &a in t {
                    for &b in t {
                        if a != b && !adj[a].contains(&b) {
                            adj[a].push(b);
                        }
                    }
                }
            }
        }
        let mut plans = Vec::with_capacity(n);
        for start in 0..n {
            let mut order = vec![(start, None)];
            let mut placed = vec![false; n];
            placed[start] = true;
            while order.len() < n {
                let mut next = None;
                'outer: for &(u, _) in &order {
                    for &w in &adj[u] {
                        if !placed[w] {
                            next = Some((w, Some(u)));
                            break 'outer;
                        }
                    }
                }
                let step = next.unwrap_or_else(|| ((0..n).find(|&w| !placed[w]).unwrap(), None));
                placed[step.0] = true;
                order.push(step);
            }
            plans.push(order);
        }
        Pattern { structure, mask, plans }
    }
}

/// Read access to a finite structure, possibly with a hypothetical vertex.
pub trait View {
    fn n(&self) -> usize;
    fn holds(&self, sym: usize, t: &[usize]) -> bool;
    fn nbrs(&self, v: usize, out: &mut Vec<usize>);
}

/// Dense, growable representation of an enumerated prefix.
#[derive(Debug, Clone)]
pub struct Prefix {
    pub language: Arc<Language>,
    n: usize,
    rel1: Vec<Vec<bool>>,
    rel2: Vec<Vec<Vec<bool>>>,
    rel3: Vec<HashSet<[usize; 3]>>,
    adj: Vec<Vec<usize>>,
}

impl Prefix {
    pub fn new(language: Arc<Language>) -> Prefix {
        let k = language.len();
        Prefix {
            language,
            n: 0,
            rel1: vec![Vec::new(); k],
            rel2: vec![Vec::new(); k],
            rel3: vec![HashSet::new(); k],
            adj: Vec::new(),
        }
    }

    pub fn from_structure(s: &FinStructure) -> Prefix {
        let mut p = Prefix::new(s.language.clone());
        for _ in 0..s.size {
            p.push(&[]);
        }
        for (sym, rel) in s.relations.iter().enumerate() {
            for t in rel {
                p.set(sym, t);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn set(&mut self, sym: usize, t: &[usize]) {
        match t.len() {
            1 => self.rel1[sym][t[0]] = true,
            2 => self.rel2[sym][t[0]][t[1]] = true,
            _ => {
                self.rel3[sym].insert([t[0], t[1], t[2]]);
            }
        }
        for &a in t {
            for &b in t {
                if a != b && !self.adj[a].contains(&b) {
                    self.adj[a].push(b);
                }
            }
        }
    }

    /// Appends a vertex whose relations to the earlier vertices are given by
    /// `atoms` (x = the new vertex).
    pub fn push(&mut self, atoms: &[Atom]) {
        let v = self.n;
        self.n += 1;
        self.adj.push(Vec::new());
        for sym in 0..self.language.len() {
            match self.language.arity(sym) {
                1 => self.rel1[sym].push(false),
                2 => {
                    for row in self.rel2[sym].iter_mut() {
                        row.push(false);
                    }
                    self.rel2[sym].push(vec![false; self.n]);
                }
                _ => {}
            }
        }
        for a in atoms {
            let t = a.decode(v);
            self.set(a.sym as usize, &t);
        }
    }

    /// Removes the most recently pushed vertex.
    pub fn pop(&mut self) {
        if self.n == 0 {
            return;
        }
        self.n -= 1;
        let v = self.n;
        for sym in 0..self.language.len() {
            match self.language.arity(sym) {
                1 => {
                    self.rel1[sym].pop();
                }
                2 => {
                    self.rel2[sym].pop();
                    for row in self.rel2[sym].iter_mut() {
                        row.pop();
                    }
                }
                _ => self.rel3[sym].retain(|t| !t.contains(&v)),
            }
        }
        let nb = self.adj.pop().unwrap_or_default();
        for u in nb {
            self.adj[u].retain(|&w| w != v);
        }
    }

    pub fn to_structure(&self) -> FinStructure {
        let mut s = FinStructure::empty(self.language.clone(), self.n);
        for sym in 0..self.language.len() {
            match self.language.arity(sym) {
                1 => {
                    for v in 0..self.n {
                        if self.rel1[sym][v] {
                            s.insert(sym, vec![v]);
                        }
                    }
                }
                2 => {
                    for a in 0..self.n {
                        for b in 0..self.n {
                            if self.rel2[sym][a][b] {
                                s.insert(sym, vec![a, b]);
                            }
                        }
                    }
                }
                _ => {
                    for t in &self.rel3[sym] {
                        s.insert(sym, t.to_vec());
                    }
                }
            }
        }
        s
    }

    /// The type of vertex `v` over the vertices before it.
    pub fn type_of(&self, v: usize) -> OneType {
        self.type_over(v, v)
    }

    /// The type of vertex `v` over the first `m` vertices (`v >= m`).
    pub fn type_over(&self, v: usize, m: usize) -> OneType {
        let mut atoms = Vec::new();
        let mut cands: Vec<usize> = self.adj[v].iter().copied().filter(|&u| u < m).collect();
        cands.sort_unstable();
        for sym in 0..self.language.len() {
            match self.language.arity(sym) {
                1 => {
                    if self.rel1[sym][v] {
                        atoms.push(Atom::new(sym, &[X]));
                    }
                }
                2 => {
                    for &u in &cands {
                        if self.rel2[sym][v][u] {
                            atoms.push(Atom::from_tuple(sym, &[v, u], v));
                        }
                        if self.rel2[sym][u][v] {
                            atoms.push(Atom::from_tuple(sym, &[u, v], v));
                        }
                    }
                }
                _ => {
                    for t in &self.rel3[sym] {
                        if t.contains(&v) && t.iter().all(|&u| u == v || u < m) {
                            atoms.push(Atom::from_tuple(sym, t, v));
                        }
                    }
                }
            }
        }
        OneType::new(m + 1, atoms)
    }
}

impl View for Prefix {
    fn n(&self) -> usize {
        self.n
    }
    fn holds(&self, sym: usize, t: &[usize]) -> bool {
        match t.len() {
            1 => self.rel1[sym][t[0]],
            2 => self.rel2[sym][t[0]][t[1]],
            _ => self.rel3[sym].contains(&[t[0], t[1], t[2]]),
        }
    }
    fn nbrs(&self, v: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(&self.adj[v]);
    }
}

/// The first `m` vertices of a prefix plus a hypothetical vertex `m`
/// realizing the given atoms.
pub struct ExtView<'a> {
    base: &'a Prefix,
    m: usize,
    atoms: &'a [Atom],
    xadj: Vec<bool>,
}

impl<'a> ExtView<'a> {
    pub fn new(base: &'a Prefix, m: usize, atoms: &'a [Atom]) -> ExtView<'a> {
        let mut xadj = vec![false; m];
        for a in atoms {
            for &e in a.encoded() {
                if e != X {
                    xadj[e as usize - 1] = true;
                }
            }
        }
        ExtView { base, m, atoms, xadj }
    }
}

impl View for ExtView<'_> {
    fn n(&self) -> usize {
        self.m + 1
    }
    fn holds(&self, sym: usize, t: &[usize]) -> bool {
        if t.contains(&self.m) {
            self.atoms.binary_search(&Atom::from_tuple(sym, t, self.m)).is_ok()
        } else {
            self.base.holds(sym, t)
        }
    }
    fn nbrs(&self, v: usize, out: &mut Vec<usize>) {
        out.clear();
        if v == self.m {
            out.extend((0..self.m).filter(|&u| self.xadj[u]));
        } else {
            out.extend(self.base.adj[v].iter().copied().filter(|&u| u < self.m));
            if self.xadj[v] {
                out.push(self.m);
            }
        }
    }
}

/// Views the first `m` vertices of a prefix.
struct Truncated<'a> {
    base: &'a Prefix,
    m: usize,
}

impl View for Truncated<'_> {
    fn n(&self) -> usize {
        self.m
    }
    fn holds(&self, sym: usize, t: &[usize]) -> bool {
        self.base.holds(sym, t)
    }
    fn nbrs(&self, v: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend(self.base.adj[v].iter().copied().filter(|&u| u < self.m));
    }
}

/// Broad shape of a class, used to pick a diagonal construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// No linear order: free amalgamation or unrestricted classes.
    Free,
    /// A single linear order, possibly with unary colours.
    Order,
    /// A linear order with nested convex equivalence relations.
    ConvexEquivalence,
    /// A linear order superposed with order-free relations.
    OrderedFree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub name: String,
    pub language: Arc<Language>,
    pub axioms: Vec<Axiom>,
    pub forbidden: Vec<Pattern>,
    pub has_transitive: bool,
    pub has_unary: bool,
    /// Declared SFAP status (presets only).
    pub sfap: Option<bool>,
    /// Declared SDAP⁺ status (presets only).
    pub sdap_plus: Option<bool>,
    symmetric: Vec<bool>,
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl ClassSpec {
    pub fn new(
        name: impl Into<String>,
        language: Arc<Language>,
        mut axioms: Vec<Axiom>,
        forbidden: Vec<FinStructure>,
    ) -> Result<ClassSpec> {
        language.validate()?;
        if language.has_unary() && !axioms.contains(&Axiom::UnaryPartition) {
            axioms.push(Axiom::UnaryPartition);
        }
        let k = language.len();
        let binary = |r: usize, what: &str| -> Result<()> {
            if r >= k || language.arity(r) != 2 {
                return Err(ClassError::Axiom(format!("{} needs a binary symbol", what)));
            }
            Ok(())
        };
        for ax in &axioms {
            match *ax {
                Axiom::Symmetric(r) => {
                    if r >= k || language.arity(r) < 2 {
                        return Err(ClassError::Axiom("symmetric needs arity at least two".into()));
                    }
                }
                Axiom::LinearOrder(r) => binary(r, "linear")?,
                Axiom::Equivalence(r) => binary(r, "equivalence")?,
                Axiom::TotalAsymmetric(r) => binary(r, "totalasym")?,
                Axiom::Convex { eq, order } => {
                    binary(eq, "convex")?;
                    binary(order, "convex")?;
                    if !axioms.contains(&Axiom::Equivalence(eq)) || !axioms.contains(&Axiom::LinearOrder(order)) {
                        return Err(ClassError::Axiom(format!(
                            "convex({}) requires {} to be an equivalence and {} a linear order",
                            language.symbols[order].name, language.symbols[eq].name, language.symbols[order].name
                        )));
                    }
                }
                Axiom::Coarsens { coarse, fine } => {
                    binary(coarse, "coarsens")?;
                    binary(fine, "coarsens")?;
                    if !axioms.contains(&Axiom::Equivalence(coarse)) || !axioms.contains(&Axiom::Equivalence(fine)) {
                        return Err(ClassError::Axiom("coarsens relates two equivalence relations".into()));
                    }
                }
                Axiom::UnaryPartition => {}
            }
        }
        let mut symmetric = vec![false; k];
        for ax in &axioms {
            if let Axiom::Symmetric(r) | Axiom::Equivalence(r) = *ax {
                symmetric[r] = true;
            }
        }
        let has_transitive = axioms.iter().any(|a| matches!(a, Axiom::LinearOrder(_)));
        let has_unary = language.has_unary();
        let mut spec = ClassSpec {
            name: name.into(),
            language: language.clone(),
            axioms,
            forbidden: Vec::new(),
            has_transitive,
            has_unary,
            sfap: None,
            sdap_plus: None,
            symmetric,
        };
        for f in forbidden {
            if *f.language != *language {
                return Err(ClassError::Structure(StructureError::LanguageMismatch));
            }
            let f = spec.close(f);
            spec.forbidden.push(Pattern::new(f, vec![true; k]));
        }
        Ok(spec)
    }

    fn declared(mut self, sfap: bool, sdap_plus: bool) -> ClassSpec {
        self.sfap = Some(sfap);
        self.sdap_plus = Some(sdap_plus);
        self
    }

    pub fn is_symmetric(&self, sym: usize) -> bool {
        self.symmetric[sym]
    }

    pub fn default_mode(&self) -> Mode {
        if !self.has_unary || !self.has_transitive || self.sfap == Some(true) {
            Mode::S
        } else {
            Mode::U
        }
    }

    pub fn order_symbol(&self) -> Option<usize> {
        self.axioms.iter().find_map(|a| match *a {
            Axiom::LinearOrder(r) => Some(r),
            _ => None,
        })
    }

    pub fn equivalences(&self) -> Vec<usize> {
        self.axioms
            .iter()
            .filter_map(|a| match *a {
                Axiom::Equivalence(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    /// Equivalence symbols ordered from finest to coarsest.
    pub fn equivalence_chain(&self) -> Option<Vec<usize>> {
        let eqs = self.equivalences();
        let finer = |a: usize, b: usize| self.axioms.contains(&Axiom::Coarsens { coarse: b, fine: a });
        let mut chain: Vec<usize> = Vec::new();
        let mut rest = eqs.clone();
        while !rest.is_empty() {
            let pos = rest.iter().position(|&e| rest.iter().all(|&o| o == e || finer(e, o)) || rest.len() == 1)?;
            chain.push(rest.remove(pos));
        }
        // each consecutive pair must be linked (transitivity assumed)
        for w in chain.windows(2) {
            if !finer(w[0], w[1]) {
                return None;
            }
        }
        Some(chain)
    }

    pub fn family(&self) -> Option<Family> {
        let orders: Vec<usize> = self
            .axioms
            .iter()
            .filter_map(|a| match *a {
                Axiom::LinearOrder(r) => Some(r),
                _ => None,
            })
            .collect();
        match orders.len() {
            0 => Some(Family::Free),
            1 => {
                let lt = orders[0];
                let others: Vec<usize> = (0..self.language.len())
                    .filter(|&s| s != lt && self.language.arity(s) >= 2)
                    .collect();
                let eqs = self.equivalences();
                if others.is_empty() {
                    Some(Family::Order)
                } else if others.iter().all(|s| eqs.contains(s)) {
                    let convex = eqs
                        .iter()
                        .all(|&e| self.axioms.contains(&Axiom::Convex { eq: e, order: lt }));
                    if convex && self.equivalence_chain().is_some() {
                        Some(Family::ConvexEquivalence)
                    } else {
                        None
                    }
                } else if eqs.is_empty() {
                    Some(Family::OrderedFree)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Adds reversed tuples of symmetric and equivalence symbols.
    pub fn close(&self, mut s: FinStructure) -> FinStructure {
        for sym in 0..self.language.len() {
            if !self.symmetric[sym] {
                continue;
            }
            let tuples: Vec<Vec<usize>> = s.relations[sym].iter().cloned().collect();
            for t in tuples {
                for p in permutations(&t) {
                    s.relations[sym].insert(p);
                }
            }
        }
        s
    }

    /// Parses a structure in this class's language, applying symmetric closure.
    pub fn parse_structure(&self, text: &str) -> Result<FinStructure> {
        let s = crate::structures::parse_structure(text, &self.language)?;
        Ok(self.close(s))
    }

    /// Membership: every axiom holds and no forbidden pattern embeds.
    pub fn contains(&self, a: &FinStructure) -> Result<bool> {
        if *a.language != *self.language {
            return Err(ClassError::Structure(StructureError::LanguageMismatch));
        }
        if a.validate().is_err() {
            return Ok(false);
        }
        let p = Prefix::from_structure(a);
        Ok((0..a.size).all(|z| self.vertex_ok(&Truncated { base: &p, m: z + 1 }, z)))
    }

    /// Checks every condition whose witness involves vertex `z`, assuming all
    /// conditions not involving `z` already hold.
    pub fn vertex_ok<V: View>(&self, v: &V, z: usize) -> bool {
        let n = v.n();
        for ax in &self.axioms {
            let ok = match *ax {
                Axiom::UnaryPartition => {
                    let c = self.language.unary_symbols().into_iter().filter(|&u| v.holds(u, &[z])).count();
                    c == 1
                }
                Axiom::Symmetric(r) => match self.language.arity(r) {
                    2 => (0..n).all(|a| a == z || v.holds(r, &[z, a]) == v.holds(r, &[a, z])),
                    _ => sym3_ok(v, r, z),
                },
                Axiom::TotalAsymmetric(r) => {
                    (0..n).all(|a| a == z || v.holds(r, &[z, a]) != v.holds(r, &[a, z]))
                }
                Axiom::LinearOrder(r) => order_ok(v, r, z),
                Axiom::Equivalence(r) => equivalence_ok(v, r, z),
                Axiom::Convex { eq, order } => convex_ok(v, eq, order, z),
                Axiom::Coarsens { coarse, fine } => (0..n).all(|a| {
                    a == z
                        || (!v.holds(fine, &[z, a]) || v.holds(coarse, &[z, a]))
                            && (!v.holds(fine, &[a, z]) || v.holds(coarse, &[a, z]))
                }),
            };
            if !ok {
                return false;
            }
        }
        self.forbidden.iter().all(|p| !embeds_through(p, v, z))
    }

    /// Is the one-point extension of the first `m` prefix vertices by a
    /// vertex with these atoms in the class? `atoms` must be sorted.
    pub fn extension_ok(&self, prefix: &Prefix, m: usize, atoms: &[Atom]) -> bool {
        let view = ExtView::new(prefix, m, atoms);
        self.vertex_ok(&view, m)
    }

    /// Realizability of a type over the prefix. In U-mode the unary colour is
    /// existentially quantified.
    pub fn realizable(&self, prefix: &Prefix, t: &OneType, mode: Mode) -> bool {
        let m = t.params();
        if mode == Mode::S || !self.has_unary {
            return self.extension_ok(prefix, m, &t.atoms);
        }
        self.language.unary_symbols().into_iter().any(|u| self.realizable_with_gamma(prefix, t, u))
    }

    /// Realizability of a U-mode type together with the colour `gamma`.
    pub fn realizable_with_gamma(&self, prefix: &Prefix, t: &OneType, gamma: usize) -> bool {
        let mut atoms = t.atoms.clone();
        atoms.push(Atom::new(gamma, &[X]));
        atoms.sort_unstable();
        self.extension_ok(prefix, t.params(), &atoms)
    }

    /// Root types (length 1).
    pub fn root_types(&self, mode: Mode) -> Vec<OneType> {
        let empty = Prefix::new(self.language.clone());
        if mode == Mode::S && self.has_unary {
            self.language
                .unary_symbols()
                .into_iter()
                .map(|u| OneType::new(1, vec![Atom::new(u, &[X])]))
                .filter(|t| self.realizable(&empty, t, mode))
                .collect()
        } else {
            let t = OneType::new(1, vec![]);
            if self.realizable(&empty, &t, mode) {
                vec![t]
            } else {
                vec![]
            }
        }
    }

    /// Candidate atom orbits at key `k`: tuples over x and `v_0..v_{k-1}`
    /// that contain both x and `v_{k-1}`. Orbits of symmetric symbols group
    /// all permutations of a tuple.
    pub fn level_orbits(&self, k: usize) -> Vec<Vec<Atom>> {
        let mut out = Vec::new();
        if k == 0 {
            return out;
        }
        let top = k as u32;
        for sym in 0..self.language.len() {
            let ar = self.language.arity(sym);
            if ar < 2 {
                continue;
            }
            let mut seen: HashSet<Vec<u32>> = HashSet::new();
            let mut tuples: Vec<Vec<u32>> = Vec::new();
            if ar == 2 {
                tuples.push(vec![X, top]);
                tuples.push(vec![top, X]);
            } else {
                for o in 1..top {
                    for p in permutations(&[X as usize, top as usize, o as usize]) {
                        tuples.push(p.iter().map(|&e| e as u32).collect());
                    }
                }
            }
            tuples.sort();
            for t in tuples {
                let mut canon = t.clone();
                canon.sort_unstable();
                if self.symmetric[sym] {
                    if !seen.insert(canon.clone()) {
                        continue;
                    }
                    let mut orbit: Vec<Atom> = permutations(&canon.iter().map(|&e| e as usize).collect::<Vec<_>>())
                        .into_iter()
                        .map(|p| Atom::new(sym, &p.iter().map(|&e| e as u32).collect::<Vec<_>>()))
                        .collect();
                    orbit.sort_unstable();
                    orbit.dedup();
                    out.push(orbit);
                } else {
                    out.push(vec![Atom::new(sym, &t)]);
                }
            }
        }
        out.sort();
        out
    }

    /// All realizable immediate successors of `u` (a type over `K_n`, where
    /// the prefix holds at least `n+1` vertices), in ≺-order.
    pub fn successors(&self, prefix: &Prefix, u: &OneType, mode: Mode) -> Result<Vec<OneType>> {
        let k = u.len;
        let orbits = self.level_orbits(k);
        if orbits.len() > 20 {
            return Err(ClassError::TooManyAtoms(orbits.len()));
        }
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << orbits.len()) {
            let mut new_atoms = Vec::new();
            for (i, o) in orbits.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    new_atoms.extend_from_slice(o);
                }
            }
            let t = u.extend(&new_atoms);
            if self.realizable(prefix, &t, mode) {
                out.push(t);
            }
        }
        out.sort_by(lex_compare);
        Ok(out)
    }

    /// All realizable 1-types over the first `m` vertices of the prefix,
    /// in ≺-order.
    pub fn types_over_prefix(&self, prefix: &Prefix, m: usize, mode: Mode) -> Result<Vec<OneType>> {
        let mut level = self.root_types(mode);
        for _ in 0..m {
            let mut next = Vec::new();
            for u in &level {
                next.extend(self.successors(prefix, u, mode)?);
            }
            level = next;
        }
        level.sort_by(lex_compare);
        Ok(level)
    }

    /// All complete realizable 1-types over an ordered structure, in ≺-order.
    pub fn realizable_types(&self, a: &OrderedStructure) -> Result<Vec<OneType>> {
        let base = a.as_prefix();
        if !self.contains(&base)? {
            return Err(ClassError::NotInClass(self.name.clone()));
        }
        let p = Prefix::from_structure(&base);
        self.types_over_prefix(&p, base.size, Mode::S)
    }

    /// All one-vertex extensions of `s` inside the class, by ≺-order of the
    /// new vertex's type.
    pub fn one_point_extensions(&self, s: &FinStructure) -> Result<Vec<(OneType, FinStructure)>> {
        let p = Prefix::from_structure(s);
        let types = self.types_over_prefix(&p, s.size, Mode::S)?;
        Ok(types
            .into_iter()
            .map(|t| {
                let mut q = p.clone();
                q.push(&t.atoms);
                (t, q.to_structure())
            })
            .collect())
    }

    /// All labelled members of the class on `n` vertices, in generation order.
    pub fn members(&self, n: usize) -> Result<Vec<FinStructure>> {
        let mut level = vec![FinStructure::empty(self.language.clone(), 0)];
        for _ in 0..n {
            let mut next = Vec::new();
            for s in &level {
                next.extend(self.one_point_extensions(s)?.into_iter().map(|(_, e)| e));
            }
            level = next;
        }
        Ok(level)
    }

    /// One member per isomorphism type on `n` vertices, in generation order.
    pub fn iso_classes(&self, n: usize) -> Result<Vec<FinStructure>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for m in self.members(n)? {
            let key = crate::structures::ordered_copies(&m)
                .iter()
                .map(|o| o.as_prefix().to_text("k"))
                .min()
                .unwrap_or_default();
            if seen.insert(key) {
                out.push(m);
            }
        }
        Ok(out)
    }

    /// Bounded test of SFAP over every base structure.
    pub fn check_sfap(&self, bound: usize) -> Result<SfapOutcome> {
        if bound > 7 {
            return Err(ClassError::BoundExceeded(bound));
        }
        for a_size in 0..=bound {
            let found: Vec<Option<SfapWitness>> = self
                .members(a_size)?
                .par_iter()
                .map(|a| self.sfap_search(a, bound))
                .collect::<Result<_>>()?;
            if let Some(w) = found.into_iter().flatten().next() {
                return Ok(SfapOutcome::Witness(Box::new(w)));
            }
        }
        Ok(SfapOutcome::Pass)
    }

    /// Bounded SFAP test with the base structure fixed.
    pub fn check_sfap_with_base(&self, bound: usize, a: &FinStructure) -> Result<SfapOutcome> {
        if bound > 7 {
            return Err(ClassError::BoundExceeded(bound));
        }
        if !self.contains(a)? {
            return Err(ClassError::NotInClass(self.name.clone()));
        }
        Ok(match self.sfap_search(a, bound)? {
            Some(w) => SfapOutcome::Witness(Box::new(w)),
            None => SfapOutcome::Pass,
        })
    }

    fn sfap_search(&self, a: &FinStructure, bound: usize) -> Result<Option<SfapWitness>> {
        let na = a.size;
        // With B = A the candidate E is C itself, which lies in the class, so
        // only proper extensions B ⊋ A can produce a witness.
        if na >= bound {
            return Ok(None);
        }
        // two-vertex extensions C = A + v + w
        type TwoPoint = (OneType, OneType, Vec<Atom>, FinStructure);
        let per_v: Vec<Vec<TwoPoint>> = self
            .one_point_extensions(a)?
            .into_par_iter()
            .map(|(tv, av)| {
                let mut out = Vec::new();
                for (tw, c) in self.one_point_extensions(&av)? {
                    // tw is over A+v; keep its restriction to A and the v-part
                    let tw_a = OneType::new(na + 1, tw.atoms.iter().copied().filter(|x| !x.mentions(na)).collect());
                    let tw_v: Vec<Atom> = tw.atoms.iter().copied().filter(|x| x.mentions(na)).collect();
                    out.push((tv.clone(), tw_a, tw_v, c));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut cs: Vec<_> = per_v.into_iter().flatten().collect();
        // B ⊇ A, |B| ≤ bound, by iterated extension
        let mut bs = vec![a.clone()];
        let mut frontier = vec![a.clone()];
        for _ in na..bound {
            let mut next = Vec::new();
            for b in &frontier {
                next.extend(self.one_point_extensions(b)?.into_iter().map(|(_, e)| e));
            }
            bs.extend(next.iter().cloned());
            frontier = next;
        }
        // Candidates are visited smallest first: fewer tuples, then the
        // sorted tuple list, so the reported witness is the least one.
        let skey = |s: &FinStructure| {
            let tuples: Vec<(usize, Vec<usize>)> = s
                .relations
                .iter()
                .enumerate()
                .flat_map(|(k, r)| r.iter().map(move |t| (k, t.clone())))
                .collect();
            (s.size, tuples.len(), tuples)
        };
        let tkey = |t: &OneType| (t.atoms.len(), t.atoms.clone());
        cs.par_sort_by_cached_key(|x| skey(&x.3));
        bs.sort_by_cached_key(skey);
        let bdata: Vec<(&FinStructure, Prefix, Vec<OneType>)> = bs
            .par_iter()
            .map(|b| {
                let pb = Prefix::from_structure(b);
                let types = self.types_over_prefix(&pb, b.size, Mode::S)?;
                Ok((b, pb, types))
            })
            .collect::<Result<_>>()?;
        // Each C is searched independently; the least witness is kept.
        let found = cs.par_iter().find_map_first(|(tv, tw_a, tw_v, c)| {
            for (b, pb, types) in bdata.iter().filter(|(b, _, _)| b.size > na) {
                let nb = b.size;
                let mut sigmas: Vec<&OneType> = types.iter().filter(|t| t.restrict(na + 1) == *tv).collect();
                let mut taus: Vec<&OneType> = types.iter().filter(|t| t.restrict(na + 1) == *tw_a).collect();
                sigmas.sort_by_cached_key(|t| tkey(t));
                taus.sort_by_cached_key(|t| tkey(t));
                for sigma in &sigmas {
                    let mut pd = pb.clone();
                    pd.push(&sigma.atoms);
                    for tau in &taus {
                        // w' relates to B exactly by tau and to v' exactly as w to v in C
                        let mut atoms = tau.atoms.clone();
                        for at in tw_v {
                            atoms.push(at.rename(&|u| if u == na { nb } else { u }));
                        }
                        atoms.sort_unstable();
                        atoms.dedup();
                        if !self.extension_ok(&pd, nb + 1, &atoms) {
                            let mut pe = pd.clone();
                            pe.push(&atoms);
                            return Some(SfapWitness {
                                a: a.clone(),
                                c: c.clone(),
                                b: (*b).clone(),
                                sigma: (*sigma).clone(),
                                tau: (*tau).clone(),
                                d: pd.to_structure(),
                                e: pe.to_structure(),
                            });
                        }
                    }
                }
            }
            None
        });
        Ok(found)
    }
}

/// Result of a bounded SFAP test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SfapOutcome {
    Pass,
    Witness(Box<SfapWitness>),
}

/// A failing configuration: `C = A + v + w` (v = |A|, w = |A|+1), `B ⊇ A`
/// on its first |A| vertices, `D = B + v'` realizing σ, and the unique
/// candidate `E = D + w'` which lies outside the class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfapWitness {
    pub a: FinStructure,
    pub c: FinStructure,
    pub b: FinStructure,
    pub sigma: OneType,
    pub tau: OneType,
    pub d: FinStructure,
    pub e: FinStructure,
}

impl SfapWitness {
    pub fn render(&self) -> String {
        let lang = &self.a.language;
        format!(
            "A = {}\nC = {}\nB = {}\nsigma = {}\ntau = {}\nD = {}\nE = {} (not in class)",
            self.a,
            self.c,
            self.b,
            self.sigma.render(lang),
            self.tau.render(lang),
            self.d,
            self.e
        )
    }
}

/// Every `r`-subset of the universe lies inside some relation tuple.
pub fn is_r_irreducible(f: &FinStructure, r: usize) -> bool {
    if f.size < r {
        return true;
    }
    let supports: Vec<Vec<usize>> = f
        .relations
        .iter()
        .flat_map(|rel| rel.iter().cloned())
        .collect();
    let mut subset: Vec<usize> = (0..r).collect();
    loop {
        if !supports.iter().any(|t| subset.iter().all(|v| t.contains(v))) {
            return false;
        }
        // next r-subset in lexicographic order
        let mut i = r;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if subset[i] < f.size - r + i {
                subset[i] += 1;
                for j in i + 1..r {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn permutations(t: &[usize]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..t.len()).collect();
    let mut out = vec![];
    loop {
        out.push(idx.iter().map(|&i| t[i]).collect());
        if !crate::structures::next_permutation(&mut idx) {
            break;
        }
    }
    out
}

fn sym3_ok<V: View>(v: &V, r: usize, z: usize) -> bool {
    let n = v.n();
    for a in 0..n {
        for b in a + 1..n {
            if a == z || b == z {
                continue;
            }
            let base = v.holds(r, &[z, a, b]);
            for p in permutations(&[z, a, b]) {
                if v.holds(r, &p) != base {
                    return false;
                }
            }
        }
    }
    true
}

fn order_ok<V: View>(v: &V, r: usize, z: usize) -> bool {
    let n = v.n();
    let mut below = Vec::new();
    let mut above = Vec::new();
    for a in 0..n {
        if a == z {
            continue;
        }
        match (v.holds(r, &[a, z]), v.holds(r, &[z, a])) {
            (true, false) => below.push(a),
            (false, true) => above.push(a),
            _ => return false,
        }
    }
    below.iter().all(|&a| above.iter().all(|&b| v.holds(r, &[a, b])))
}

fn equivalence_ok<V: View>(v: &V, r: usize, z: usize) -> bool {
    let n = v.n();
    let mut class = Vec::new();
    for a in 0..n {
        if a == z {
            continue;
        }
        let f = v.holds(r, &[z, a]);
        if f != v.holds(r, &[a, z]) {
            return false;
        }
        if f {
            class.push(a);
        }
    }
    let mut in_class = vec![false; n];
    for &a in &class {
        in_class[a] = true;
    }
    for &a in &class {
        for b in 0..n {
            if b == z || b == a {
                continue;
            }
            if v.holds(r, &[a, b]) != in_class[b] {
                return false;
            }
        }
    }
    true
}

fn convex_ok<V: View>(v: &V, e: usize, lt: usize, z: usize) -> bool {
    let n = v.n();
    let less = |a: usize, b: usize| v.holds(lt, &[a, b]);
    for a in 0..n {
        for b in a + 1..n {
            if a == z || b == z {
                continue;
            }
            let mut t = [z, a, b];
            t.sort_by(|&p, &q| if less(p, q) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
            let (lo, mid, hi) = (t[0], t[1], t[2]);
            if v.holds(e, &[lo, hi]) && !(v.holds(e, &[lo, mid]) && v.holds(e, &[mid, hi])) {
                return false;
            }
        }
    }
    true
}

/// Does the pattern embed into the view with some pattern vertex sent to `z`?
fn embeds_through<V: View>(p: &Pattern, v: &V, z: usize) -> bool {
    let f = &p.structure;
    if f.size == 0 || f.size > v.n() {
        return false;
    }
    let mut buf = Vec::new();
    for plan in &p.plans {
        let mut map = vec![usize::MAX; f.size];
        if search(p, v, plan, 0, z, &mut map, &mut buf) {
            return true;
        }
    }
    false
}

fn search<V: View>(
    p: &Pattern,
    v: &V,
    plan: &[(usize, Option<usize>)],
    step: usize,
    z: usize,
    map: &mut Vec<usize>,
    buf: &mut Vec<usize>,
) -> bool {
    if step == plan.len() {
        return true;
    }
    let (fv, parent) = plan[step];
    let cands: Vec<usize> = if step == 0 {
        vec![z]
    } else if let Some(par) = parent {
        v.nbrs(map[par], buf);
        buf.clone()
    } else {
        (0..v.n()).collect()
    };
    for c in cands {
        if map.contains(&c) {
            continue;
        }
        map[fv] = c;
        if consistent(p, v, plan, step, map) && search(p, v, plan, step + 1, z, map, buf) {
            map[fv] = usize::MAX;
            return true;
        }
        map[fv] = usize::MAX;
    }
    false
}

/// Checks every masked tuple among the placed pattern vertices that
/// involves the vertex placed at `step`.
fn consistent<V: View>(p: &Pattern, v: &V, plan: &[(usize, Option<usize>)], step: usize, map: &[usize]) -> bool {
    let f = &p.structure;
    let placed: Vec<usize> = plan[..=step].iter().map(|x| x.0).collect();
    let new = plan[step].0;
    for sym in 0..f.language.len() {
        if !p.mask[sym] {
            continue;
        }
        let ar = f.language.arity(sym);
        if ar > placed.len() {
            continue;
        }
        let check = |t: &[usize]| -> bool {
            let img: Vec<usize> = t.iter().map(|&u| map[u]).collect();
            f.holds(sym, t) == v.holds(sym, &img)
        };
        match ar {
            1 => {
                if !check(&[new]) {
                    return false;
                }
            }
            2 => {
                for &a in &placed {
                    if a != new && (!check(&[new, a]) || !check(&[a, new])) {
                        return false;
                    }
                }
            }
            _ => {
                for &a in &placed {
                    for &b in &placed {
                        if a == b || a == new || b == new {
                            continue;
                        }
                        if !check(&[new, a, b]) || !check(&[a, new, b]) || !check(&[a, b, new]) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------- presets

fn lang(symbols: &[(&str, usize)]) -> Result<Arc<Language>> {
    Ok(Language::new(symbols.iter().map(|&(n, a)| (n.to_string(), a)).collect())?)
}

fn st(l: &Arc<Language>, text: &str) -> Result<FinStructure> {
    Ok(crate::structures::parse_structure(text, l)?)
}

pub fn preset_rado() -> Result<ClassSpec> {
    let l = lang(&[("E", 2)])?;
    Ok(ClassSpec::new("rado", l, vec![Axiom::Symmetric(0)], vec![])?.declared(true, true))
}

pub fn preset_k3free() -> Result<ClassSpec> {
    let l = lang(&[("E", 2)])?;
    let tri = st(&l, "vertices 3; E:(0,1)(1,2)(0,2)")?;
    Ok(ClassSpec::new("k3free", l, vec![Axiom::Symmetric(0)], vec![tri])?.declared(false, false))
}

pub fn preset_tournament() -> Result<ClassSpec> {
    let l = lang(&[("E", 2)])?;
    Ok(ClassSpec::new("tournament", l, vec![Axiom::TotalAsymmetric(0)], vec![])?.declared(false, true))
}

pub fn preset_digraph() -> Result<ClassSpec> {
    let l = lang(&[("E", 2)])?;
    let two_cycle = st(&l, "vertices 2; E:(0,1)(1,0)")?;
    Ok(ClassSpec::new("digraph", l, vec![], vec![two_cycle])?.declared(true, true))
}

pub fn preset_unrestricted(k: usize) -> Result<ClassSpec> {
    let names: Vec<String> = (0..k).map(|i| format!("R{}", i)).collect();
    let l = Language::new(names.into_iter().map(|n| (n, 2)).collect())?;
    Ok(ClassSpec::new(format!("unrestricted({})", k), l, vec![], vec![])?.declared(true, true))
}

pub fn preset_npartite(n: usize) -> Result<ClassSpec> {
    if n < 2 {
        return Err(ClassError::Axiom("npartite needs at least two parts".into()));
    }
    let mut syms: Vec<(String, usize)> = (0..n).map(|i| (format!("U{}", i), 1)).collect();
    syms.push(("E".into(), 2));
    let l = Language::new(syms)?;
    let e = n;
    let mut forb = Vec::new();
    for i in 0..n {
        let mut f = FinStructure::empty(l.clone(), 2);
        f.insert(i, vec![0]);
        f.insert(i, vec![1]);
        f.insert(e, vec![0, 1]);
        f.insert(e, vec![1, 0]);
        forb.push(f);
    }
    let name = if n == 2 { "bipartite".to_string() } else { format!("npartite({})", n) };
    Ok(ClassSpec::new(name, l, vec![Axiom::Symmetric(e)], forb)?.declared(true, true))
}

pub fn preset_hyper3() -> Result<ClassSpec> {
    let l = lang(&[("R", 3)])?;
    Ok(ClassSpec::new("hyper3", l, vec![Axiom::Symmetric(0)], vec![])?.declared(true, true))
}

pub fn preset_q() -> Result<ClassSpec> {
    let l = lang(&[("lt", 2)])?;
    Ok(ClassSpec::new("q", l, vec![Axiom::LinearOrder(0)], vec![])?.declared(false, true))
}

pub fn preset_qn(n: usize) -> Result<ClassSpec> {
    let mut syms = vec![("lt".to_string(), 2)];
    syms.extend((0..n).map(|i| (format!("P{}", i), 1)));
    let l = Language::new(syms)?;
    Ok(ClassSpec::new(format!("qn({})", n), l, vec![Axiom::LinearOrder(0)], vec![])?.declared(false, true))
}

pub fn preset_coenp(n: usize, p: usize) -> Result<ClassSpec> {
    if n == 0 {
        return Err(ClassError::Axiom("coen needs at least one equivalence relation".into()));
    }
    let mut syms = vec![("lt".to_string(), 2)];
    if n == 1 {
        syms.push(("E".to_string(), 2));
    } else {
        syms.extend((0..n).map(|i| (format!("E{}", i), 2)));
    }
    syms.extend((0..p).map(|i| (format!("P{}", i), 1)));
    let l = Language::new(syms)?;
    let mut axioms = vec![Axiom::LinearOrder(0)];
    for i in 0..n {
        axioms.push(Axiom::Equivalence(1 + i));
        axioms.push(Axiom::Convex { eq: 1 + i, order: 0 });
        if i > 0 {
            axioms.push(Axiom::Coarsens { coarse: 1 + i, fine: i });
        }
    }
    let name = match (n, p) {
        (1, 0) => "qq".to_string(),
        (_, 0) => format!("coen({})", n),
        _ => format!("coenp({},{})", n, p),
    };
    Ok(ClassSpec::new(name, l, axioms, vec![])?.declared(false, true))
}

/// Free superposition: the union of both languages, each side constrained
/// by its own axioms and patterns only.
pub fn superpose(x: &ClassSpec, y: &ClassSpec) -> Result<ClassSpec> {
    if x.has_unary && y.has_unary {
        return Err(ClassError::Axiom("cannot superpose two unary partitions".into()));
    }
    let mut syms: Vec<(String, usize)> = x.language.symbols.iter().map(|s| (s.name.clone(), s.arity)).collect();
    for s in &y.language.symbols {
        let mut name = s.name.clone();
        while syms.iter().any(|(n, _)| *n == name) {
            name.push_str("_2");
        }
        syms.push((name, s.arity));
    }
    let l = Language::new(syms)?;
    let off = x.language.len();
    let mut axioms: Vec<Axiom> = x.axioms.iter().filter(|a| **a != Axiom::UnaryPartition).cloned().collect();
    axioms.extend(y.axioms.iter().filter(|a| **a != Axiom::UnaryPartition).map(|a| a.shift(off)));
    let mut spec = ClassSpec::new(format!("superpose({},{})", x.name, y.name), l.clone(), axioms, vec![])?;
    let lift = |f: &FinStructure, shift: usize| {
        let mut g = FinStructure::empty(l.clone(), f.size);
        for (sym, rel) in f.relations.iter().enumerate() {
            for t in rel {
                g.insert(sym + shift, t.clone());
            }
        }
        g
    };
    for p in &x.forbidden {
        let mut mask = vec![false; l.len()];
        for (i, &m) in p.mask.iter().enumerate() {
            mask[i] = m;
        }
        spec.forbidden.push(Pattern::new(lift(&p.structure, 0), mask));
    }
    for p in &y.forbidden {
        let mut mask = vec![false; l.len()];
        for (i, &m) in p.mask.iter().enumerate() {
            mask[i + off] = m;
        }
        spec.forbidden.push(Pattern::new(lift(&p.structure, off), mask));
    }
    spec.sfap = match (x.sfap, y.sfap) {
        (Some(true), Some(true)) => Some(true),
        (Some(false), _) | (_, Some(false)) => Some(false),
        _ => None,
    };
    spec.sdap_plus = if spec.sfap == Some(true) { Some(true) } else { None };
    Ok(spec)
}

/// Ordered expansion: a linear order `lt`, declared first, superposed freely.
pub fn ordered(x: &ClassSpec) -> Result<ClassSpec> {
    let mut spec = superpose(&preset_q()?, x)?;
    spec.name = format!("ordered({})", x.name);
    spec.sfap = Some(false);
    spec.sdap_plus = if !x.has_transitive && x.sdap_plus == Some(true) { Some(true) } else { None };
    Ok(spec)
}

#[derive(Debug, Clone)]
enum PresetArg {
    Int(usize),
    Class(ClassSpec),
}

fn parse_preset_expr(cur: &mut Cursor) -> Result<ClassSpec> {
    let name = cur.ident()?;
    let mut args = Vec::new();
    if cur.eat('(') {
        loop {
            match cur.peek() {
                Some(Tok::Int(_)) => args.push(PresetArg::Int(cur.int()?)),
                Some(Tok::Ident(_)) => args.push(PresetArg::Class(parse_preset_expr(cur)?)),
                _ => return Err(cur.err("expected preset argument").into()),
            }
            if !cur.eat(',') {
                break;
            }
        }
        cur.expect(')')?;
    }
    build_preset(&name, &args)
}

fn build_preset(name: &str, args: &[PresetArg]) -> Result<ClassSpec> {
    let ints: Option<Vec<usize>> = args
        .iter()
        .map(|a| match a {
            PresetArg::Int(i) => Some(*i),
            _ => None,
        })
        .collect();
    let classes: Vec<&ClassSpec> = args
        .iter()
        .filter_map(|a| match a {
            PresetArg::Class(c) => Some(c),
            _ => None,
        })
        .collect();
    let bad = || ClassError::UnknownPreset(format!("{}/{}", name, args.len()));
    let ints_only = |k: usize| -> Result<Vec<usize>> {
        match &ints {
            Some(v) if v.len() == k => Ok(v.clone()),
            _ => Err(bad()),
        }
    };
    match name {
        "rado" => ints_only(0).and_then(|_| preset_rado()),
        "k3free" => ints_only(0).and_then(|_| preset_k3free()),
        "tournament" => ints_only(0).and_then(|_| preset_tournament()),
        "digraph" => ints_only(0).and_then(|_| preset_digraph()),
        "bipartite" => ints_only(0).and_then(|_| preset_npartite(2)),
        "hyper3" => ints_only(0).and_then(|_| preset_hyper3()),
        "q" => ints_only(0).and_then(|_| preset_q()),
        "qq" => ints_only(0).and_then(|_| preset_coenp(1, 0)),
        "npartite" => preset_npartite(ints_only(1)?[0]),
        "qn" => preset_qn(ints_only(1)?[0]),
        "coen" => preset_coenp(ints_only(1)?[0], 0),
        "coenp" => {
            let v = ints_only(2)?;
            preset_coenp(v[0], v[1])
        }
        "unrestricted" => preset_unrestricted(ints_only(1)?[0]),
        "ordered" if classes.len() == 1 && args.len() == 1 => ordered(classes[0]),
        "superpose" if classes.len() == 2 && args.len() == 2 => superpose(classes[0], classes[1]),
        _ => Err(bad()),
    }
}

/// Resolves a preset expression such as `qn(2)` or `ordered(rado)`.
pub fn preset(expr: &str) -> Result<ClassSpec> {
    let mut cur = Cursor::new(expr)?;
    let spec = parse_preset_expr(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.err("trailing input").into());
    }
    Ok(spec)
}

/// Parses a class file: either `preset EXPR` or `class NAME { decl* }`.
pub fn parse_class(text: &str) -> Result<ClassSpec> {
    let mut cur = Cursor::new(text)?;
    match cur.peek() {
        Some(Tok::Ident(s)) if s == "preset" => {
            cur.next();
            let spec = parse_preset_expr(&mut cur)?;
            cur.eat(';');
            if !cur.at_end() {
                return Err(cur.err("trailing input").into());
            }
            Ok(spec)
        }
        _ => parse_class_block(&mut cur),
    }
}

enum AxiomSrc {
    Plain(&'static str),
    Ref(&'static str, String),
}

fn parse_class_block(cur: &mut Cursor) -> Result<ClassSpec> {
    cur.keyword("class")?;
    let name = cur.ident()?;
    cur.expect('{')?;
    let mut syms: Vec<(String, usize)> = Vec::new();
    let mut ax_src: Vec<(usize, AxiomSrc, usize)> = Vec::new();
    let mut language: Option<Arc<Language>> = None;
    let mut forbidden: Vec<FinStructure> = Vec::new();
    let mut supers: Vec<String> = Vec::new();
    let mut is_ordered = false;
    while !cur.eat('}') {
        let off = cur.offset();
        let kw = cur.ident()?;
        match kw.as_str() {
            "unary" | "binary" | "ternary" => {
                if language.is_some() {
                    return Err(cur.err("symbols must be declared before forbid").into());
                }
                if kw == "unary" {
                    syms.push((cur.ident()?, 1));
                    let mut count = 1;
                    while cur.eat(',') {
                        syms.push((cur.ident()?, 1));
                        count += 1;
                    }
                    if count < 2 {
                        return Err(cur.err("unary symbols are declared as a partition of at least two").into());
                    }
                } else {
                    let arity = if kw == "binary" { 2 } else { 3 };
                    let sym = syms.len();
                    syms.push((cur.ident()?, arity));
                    while let Some(Tok::Ident(a)) = cur.peek().cloned() {
                        let at = cur.offset();
                        cur.next();
                        let src = match a.as_str() {
                            "symmetric" => AxiomSrc::Plain("symmetric"),
                            "linear" => AxiomSrc::Plain("linear"),
                            "equivalence" => AxiomSrc::Plain("equivalence"),
                            "totalasym" => AxiomSrc::Plain("totalasym"),
                            "convex" | "coarsens" => {
                                cur.expect('(')?;
                                let r = cur.ident()?;
                                cur.expect(')')?;
                                AxiomSrc::Ref(if a == "convex" { "convex" } else { "coarsens" }, r)
                            }
                            _ => return Err(cur.err(format!("unknown axiom {}", a)).into()),
                        };
                        ax_src.push((sym, src, at));
                    }
                }
                cur.expect(';')?;
            }
            "forbid" => {
                let l = match &language {
                    Some(l) => l.clone(),
                    None => {
                        let l = Language::new(syms.clone())?;
                        language = Some(l.clone());
                        l
                    }
                };
                if let Some(Tok::Ident(s)) = cur.peek() {
                    if s == "structure" {
                        cur.next();
                        cur.ident()?;
                    }
                }
                cur.expect('{')?;
                let s = parse_structure_body(cur, &l)?;
                cur.expect('}')?;
                cur.expect(';')?;
                forbidden.push(s);
            }
            "superpose" => {
                supers.push(cur.ident()?);
                cur.expect(';')?;
            }
            "ordered" => {
                is_ordered = true;
                cur.expect(';')?;
            }
            _ => return Err(cur.err_at(off, format!("unknown declaration {}", kw)).into()),
        }
    }
    if !cur.at_end() {
        return Err(cur.err("trailing input").into());
    }
    let l = match language {
        Some(l) => l,
        None => Language::new(syms.clone())?,
    };
    let mut axioms = Vec::new();
    for (sym, src, _) in ax_src {
        let ax = match src {
            AxiomSrc::Plain("symmetric") => Axiom::Symmetric(sym),
            AxiomSrc::Plain("linear") => Axiom::LinearOrder(sym),
            AxiomSrc::Plain("equivalence") => Axiom::Equivalence(sym),
            AxiomSrc::Plain(_) => Axiom::TotalAsymmetric(sym),
            AxiomSrc::Ref(kind, r) => {
                let other = l.index_of(&r).ok_or_else(|| ClassError::Axiom(format!("unknown symbol {}", r)))?;
                if kind == "convex" {
                    Axiom::Convex { eq: sym, order: other }
                } else {
                    Axiom::Coarsens { coarse: sym, fine: other }
                }
            }
        };
        axioms.push(ax);
    }
    let mut spec = ClassSpec::new(name, l, axioms, forbidden)?;
    for s in supers {
        let other = preset(&s)?;
        let n = spec.name.clone();
        spec = superpose(&spec, &other)?;
        spec.name = n;
    }
    if is_ordered {
        let n = spec.name.clone();
        spec = ordered(&spec)?;
        spec.name = n;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent global check used to cross-validate the incremental one.
    fn naive_contains(c: &ClassSpec, a: &FinStructure) -> bool {
        let n = a.size;
        let h = |s: usize, t: &[usize]| a.holds(s, t);
        for ax in &c.axioms {
            let ok = match *ax {
                Axiom::UnaryPartition => a.validate().is_ok(),
                Axiom::Symmetric(r) => a.relations[r].iter().all(|t| permutations(t).iter().all(|p| h(r, p))),
                Axiom::TotalAsymmetric(r) => {
                    (0..n).all(|i| (0..n).all(|j| i == j || h(r, &[i, j]) != h(r, &[j, i])))
                }
                Axiom::LinearOrder(r) => {
                    (0..n).all(|i| (0..n).all(|j| i == j || h(r, &[i, j]) != h(r, &[j, i])))
                        && (0..n).all(|i| {
                            (0..n).all(|j| (0..n).all(|k| !(h(r, &[i, j]) && h(r, &[j, k])) || h(r, &[i, k])))
                        })
                }
                Axiom::Equivalence(r) => (0..n).all(|i| {
                    (0..n).all(|j| {
                        (h(r, &[i, j]) == h(r, &[j, i]))
                            && (0..n).all(|k| i == k || !(h(r, &[i, j]) && h(r, &[j, k])) || h(r, &[i, k]))
                    })
                }),
                Axiom::Convex { eq, order } => (0..n).all(|i| {
                    (0..n).all(|j| {
                        (0..n).all(|k| !(h(eq, &[i, k]) && h(order, &[i, j]) && h(order, &[j, k])) || h(eq, &[j, i]))
                    })
                }),
                Axiom::Coarsens { coarse, fine } => a.relations[fine].iter().all(|t| h(coarse, t)),
            };
            if !ok {
                return false;
            }
        }
        for p in &c.forbidden {
            let mut reduct_a = a.clone();
            let mut reduct_f = p.structure.clone();
            for (s, &m) in p.mask.iter().enumerate() {
                if !m {
                    reduct_a.relations[s].clear();
                    reduct_f.relations[s].clear();
                }
            }
            if crate::structures::embeds(&reduct_f, &reduct_a).unwrap() {
                return false;
            }
        }
        true
    }

    fn all_structures(c: &ClassSpec, n: usize) -> Vec<FinStructure> {
        // every labelled structure respecting the tuple conventions, in the raw language
        let mut tuples = Vec::new();
        for sym in 0..c.language.len() {
            let ar = c.language.arity(sym);
            let mut t = vec![0; ar];
            fn rec(sym: usize, ar: usize, n: usize, i: usize, t: &mut Vec<usize>, out: &mut Vec<(usize, Vec<usize>)>) {
                if i == ar {
                    out.push((sym, t.clone()));
                    return;
                }
                for v in 0..n {
                    if !t[..i].contains(&v) {
                        t[i] = v;
                        rec(sym, ar, n, i + 1, t, out);
                    }
                }
            }
            rec(sym, ar, n, 0, &mut t, &mut tuples);
        }
        assert!(tuples.len() <= 14);
        (0u32..(1 << tuples.len()))
            .map(|mask| {
                let mut s = FinStructure::empty(c.language.clone(), n);
                for (i, (sym, t)) in tuples.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        s.insert(*sym, t.clone());
                    }
                }
                s
            })
            .collect()
    }

    #[test]
    fn incremental_membership_matches_naive() {
        for c in [preset_rado(), preset_k3free(), preset_tournament(), preset_digraph(), preset_q(), preset_coenp(1, 0)] {
            let c = c.unwrap();
            for n in 0..=3 {
                if n == 3 && c.language.len() > 1 {
                    continue;
                }
                for s in all_structures(&c, n) {
                    assert_eq!(c.contains(&s).unwrap(), naive_contains(&c, &s), "{} {}", c.name, s);
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let k3 = preset_k3free().unwrap();
        let tri = k3.parse_structure("vertices 3; E:(0,1)(1,2)(0,2)").unwrap();
        let p3 = k3.parse_structure("vertices 3; E:(0,1)(1,2)").unwrap();
        assert!(!k3.contains(&tri).unwrap());
        assert!(k3.contains(&p3).unwrap());
        let q = preset_q().unwrap();
        let bad = q.parse_structure("vertices 3; lt:(0,1)(1,2)(2,0)").unwrap();
        assert!(!q.contains(&bad).unwrap());
        let chain = q.parse_structure("vertices 3; lt:(0,1)(1,2)(0,2)").unwrap();
        assert!(q.contains(&chain).unwrap());
    }

    #[test]
    fn realizable_type_counts() {
        let q = preset_q().unwrap();
        let one = q.parse_structure("vertices 1").unwrap();
        let two = q.parse_structure("vertices 2; lt:(0,1)").unwrap();
        let t1 = q.realizable_types(&OrderedStructure::identity(one)).unwrap();
        assert_eq!(t1.len(), 2);
        assert_eq!(t1[0].atoms, vec![Atom::new(0, &[0, 1])]);
        assert_eq!(q.realizable_types(&OrderedStructure::identity(two)).unwrap().len(), 3);
        let r = preset_rado().unwrap();
        let empty = FinStructure::empty(r.language.clone(), 0);
        assert_eq!(r.realizable_types(&OrderedStructure::identity(empty)).unwrap().len(), 1);
    }

    #[test]
    fn hypergraph_successor_counts() {
        let h = preset_hyper3().unwrap();
        let mut p = Prefix::new(h.language.clone());
        for _ in 0..5 {
            p.push(&[]);
        }
        let types = h.types_over_prefix(&p, 4, Mode::S).unwrap();
        for t in types.iter().take(3) {
            assert_eq!(h.successors(&p, t, Mode::S).unwrap().len(), 1 << 4);
        }
    }

    #[test]
    fn irreducibility_of_pyramid() {
        let l = lang(&[("R", 3)]).unwrap();
        let h = ClassSpec::new("h", l.clone(), vec![Axiom::Symmetric(0)], vec![]).unwrap();
        let pyr = h.parse_structure("vertices 4; R:(0,1,2)(0,1,3)(0,2,3)").unwrap();
        assert!(is_r_irreducible(&pyr, 2));
        assert!(!is_r_irreducible(&pyr, 3));
        let g = lang(&[("E", 2)]).unwrap();
        let edge = st(&g, "vertices 2; E:(0,1)(1,0)").unwrap();
        assert!(is_r_irreducible(&edge, 2));
        assert!(is_r_irreducible(&edge, 3));
    }

    #[test]
    fn sfap_examples() {
        assert_eq!(preset_rado().unwrap().check_sfap(4).unwrap(), SfapOutcome::Pass);
        let k3 = preset_k3free().unwrap();
        let non_edge = FinStructure::empty(k3.language.clone(), 2);
        match k3.check_sfap_with_base(4, &non_edge).unwrap() {
            SfapOutcome::Witness(w) => {
                assert_eq!(w.c.relations[0].len(), 2);
                assert!(w.c.holds(0, &[2, 3]));
                assert_eq!(w.b.size, 3);
                assert!(w.sigma.contains(&Atom::new(0, &[0, 3])));
                assert!(w.tau.contains(&Atom::new(0, &[0, 3])));
                assert!(!k3.contains(&w.e).unwrap());
            }
            SfapOutcome::Pass => panic!("triangle-free graphs must fail"),
        }
        assert!(matches!(k3.check_sfap(4).unwrap(), SfapOutcome::Witness(_)));
        assert!(preset_rado().unwrap().check_sfap(8).is_err());
    }

    #[test]
    fn class_files_and_presets() {
        let c = parse_class(
            "# triangle-free graphs\nclass G3 {\n binary E symmetric;\n forbid { vertices 3; E:(0,1)(1,2)(0,2) };\n}",
        )
        .unwrap();
        assert_eq!(c.forbidden.len(), 1);
        assert_eq!(c.forbidden[0].structure.relations[0].len(), 6);
        let qq = parse_class("preset qq").unwrap();
        assert_eq!(qq.family(), Some(Family::ConvexEquivalence));
        assert_eq!(preset("qn(2)").unwrap().default_mode(), Mode::U);
        assert_eq!(preset("ordered(rado)").unwrap().family(), Some(Family::OrderedFree));
        assert_eq!(preset("coen(2)").unwrap().equivalence_chain(), Some(vec![1, 2]));
        assert!(matches!(parse_class("preset nosuch"), Err(ClassError::UnknownPreset(_))));
        let e = parse_class("class X {\n binary E convex(lt);\n}").unwrap_err();
        assert!(matches!(e, ClassError::Axiom(_)));
        let o = parse_class("class OG { binary E symmetric; ordered; }").unwrap();
        assert_eq!(o.language.symbols[0].name, "lt");
        assert!(o.has_transitive);
    }
}
