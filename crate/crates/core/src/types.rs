//! Quantifier-free 1-types over initial segments of an enumerated structure.
//!
//! A type over `K_m` is a sorted list of its positive atoms; every atom that is
//! not listed is negated. Atom arguments are encoded with `0` for the variable
//! `x` and `v + 1` for the vertex `v`. The `key` of an atom is its largest
//! encoded argument, so an atom with key `i` first becomes decidable over
//! `K_i` and a type over `K_m` has length `m + 1`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::structures::Language;

pub const PAD: u32 = u32::MAX;
pub const X: u32 = 0;

/// Which coding tree a type lives in: `S` keeps unary atoms in every node;
/// `U` drops them and colours only the coding nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    S,
    U,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::S => write!(f, "S"),
            Mode::U => write!(f, "U"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub key: u32,
    pub sym: u16,
    pub args: [u32; 3],
}

impl Atom {
    /// Builds an atom from encoded arguments (`0` = x, `v+1` = vertex v).
    pub fn new(sym: usize, encoded: &[u32]) -> Atom {
        let mut args = [PAD; 3];
        args[..encoded.len()].copy_from_slice(encoded);
        let key = encoded.iter().copied().max().unwrap_or(0);
        Atom { key, sym: sym as u16, args }
    }

    pub fn arity(&self) -> usize {
        self.args.iter().take_while(|&&a| a != PAD).count()
    }

    pub fn encoded(&self) -> &[u32] {
        &self.args[..self.arity()]
    }

    pub fn is_unary(&self) -> bool {
        self.arity() == 1
    }

    /// Does the atom mention vertex `v`?
    pub fn mentions(&self, v: usize) -> bool {
        self.encoded().contains(&(v as u32 + 1))
    }

    /// Decodes arguments into vertex indices, sending `x` to `xv`.
    pub fn decode(&self, xv: usize) -> Vec<usize> {
        self.encoded()
            .iter()
            .map(|&a| if a == X { xv } else { a as usize - 1 })
            .collect()
    }

    /// Encodes a tuple over vertices where `xv` plays the role of `x`.
    pub fn from_tuple(sym: usize, tuple: &[usize], xv: usize) -> Atom {
        let enc: Vec<u32> = tuple
            .iter()
            .map(|&v| if v == xv { X } else { v as u32 + 1 })
            .collect();
        Atom::new(sym, &enc)
    }

    /// Applies a vertex renaming to the parameters (x fixed).
    pub fn rename(&self, f: &dyn Fn(usize) -> usize) -> Atom {
        let enc: Vec<u32> = self
            .encoded()
            .iter()
            .map(|&a| if a == X { X } else { f(a as usize - 1) as u32 + 1 })
            .collect();
        Atom::new(self.sym as usize, &enc)
    }

    pub fn render(&self, lang: &Language) -> String {
        let parts: Vec<String> = self
            .encoded()
            .iter()
            .map(|&a| if a == X { "x".to_string() } else { format!("v{}", a - 1) })
            .collect();
        format!("{}({})", lang.symbols[self.sym as usize].name, parts.join(","))
    }
}

/// A complete quantifier-free 1-type over `K_{len-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OneType {
    pub len: usize,
    pub atoms: Vec<Atom>,
}

impl OneType {
    pub fn new(len: usize, mut atoms: Vec<Atom>) -> OneType {
        atoms.sort_unstable();
        atoms.dedup();
        debug_assert!(atoms.iter().all(|a| (a.key as usize) < len));
        OneType { len, atoms }
    }

    /// The empty type of length 0 (below every root).
    pub fn bottom() -> OneType {
        OneType { len: 0, atoms: Vec::new() }
    }

    /// Number of parameters (`len - 1`), i.e. the `m` of "type over K_m".
    pub fn params(&self) -> usize {
        self.len.saturating_sub(1)
    }

    /// Restriction to length `l` (atoms of key below `l`).
    pub fn restrict(&self, l: usize) -> OneType {
        let l = l.min(self.len);
        let cut = self.atoms.partition_point(|a| (a.key as usize) < l);
        OneType { len: l, atoms: self.atoms[..cut].to_vec() }
    }

    /// Atoms with the given key.
    pub fn level_atoms(&self, key: usize) -> &[Atom] {
        let lo = self.atoms.partition_point(|a| (a.key as usize) < key);
        let hi = self.atoms.partition_point(|a| (a.key as usize) <= key);
        &self.atoms[lo..hi]
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.binary_search(a).is_ok()
    }

    /// The unary symbol present in the type, if any.
    pub fn gamma(&self) -> Option<usize> {
        self.atoms.iter().find(|a| a.is_unary()).map(|a| a.sym as usize)
    }

    /// `self` is an initial segment (restriction) of `other`.
    pub fn is_initial_segment_of(&self, other: &OneType) -> bool {
        self.len <= other.len
            && other.atoms.partition_point(|a| (a.key as usize) < self.len) == self.atoms.len()
            && other.atoms[..self.atoms.len()] == self.atoms[..]
    }

    /// Length of the meet: the largest `l` with equal restrictions.
    pub fn meet_len(&self, other: &OneType) -> usize {
        let cap = self.len.min(other.len);
        let mut i = 0;
        while i < self.atoms.len() && i < other.atoms.len() && self.atoms[i] == other.atoms[i] {
            i += 1;
        }
        let a = self.atoms.get(i).map(|a| a.key as usize).unwrap_or(usize::MAX);
        let b = other.atoms.get(i).map(|a| a.key as usize).unwrap_or(usize::MAX);
        a.min(b).min(cap)
    }

    pub fn meet(&self, other: &OneType) -> OneType {
        self.restrict(self.meet_len(other))
    }

    /// Extends with atoms of key `len`, producing a type of length `len+1`.
    pub fn extend(&self, new_atoms: &[Atom]) -> OneType {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(new_atoms);
        OneType::new(self.len + 1, atoms)
    }

    pub fn render(&self, lang: &Language) -> String {
        let parts: Vec<String> = self.atoms.iter().map(|a| a.render(lang)).collect();
        format!("[{}]{{{}}}", self.len, parts.join(", "))
    }
}

/// The order ≺ on types. Proper initial segments come first; otherwise the
/// first differing atom decides, and the type that contains the smaller atom
/// (the positive literal) is the smaller one.
pub fn lex_compare(s: &OneType, t: &OneType) -> Ordering {
    if s == t {
        return Ordering::Equal;
    }
    if s.is_initial_segment_of(t) {
        return Ordering::Less;
    }
    if t.is_initial_segment_of(s) {
        return Ordering::Greater;
    }
    let mut i = 0;
    loop {
        match (s.atoms.get(i), t.atoms.get(i)) {
            (Some(a), Some(b)) if a == b => i += 1,
            (Some(a), Some(b)) => return a.cmp(b),
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            // Equal atom lists at different lengths are initial segments.
            (None, None) => return s.len.cmp(&t.len),
        }
    }
}
