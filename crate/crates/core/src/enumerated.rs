//! Finite prefixes of enumerated Fraïssé limits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::classes::{ClassError, ClassSpec, Prefix};
use crate::structures::FinStructure;
use crate::types::{Mode, OneType};

/// Cap on the number of types listed per level while dovetailing.
const TYPE_LIST_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Demand {
    /// The type was taken over `K_stage`.
    pub stage: usize,
    /// Its index in ≺-order among the realizable types over `K_stage`.
    pub type_index: usize,
    /// The vertex created to realize it.
    pub vertex: usize,
}

#[derive(Debug, Clone)]
pub struct EnumeratedLimit {
    pub class: ClassSpec,
    pub prefix: FinStructure,
    pub dense: Prefix,
    /// `creation[n]` is the type of `v_n` over `K_n`.
    pub creation: Vec<OneType>,
    pub schedule_log: Vec<Demand>,
}

impl EnumeratedLimit {
    /// Wraps a given prefix (enumeration = vertex index).
    pub fn from_structure(class: &ClassSpec, s: &FinStructure) -> Result<EnumeratedLimit, ClassError> {
        if !class.contains(s)? {
            return Err(ClassError::NotInClass(class.name.clone()));
        }
        let dense = Prefix::from_structure(s);
        let creation = (0..s.size).map(|v| dense.type_of(v)).collect();
        Ok(EnumeratedLimit { class: class.clone(), prefix: s.clone(), dense, creation, schedule_log: Vec::new() })
    }

    /// Wraps a dense prefix produced elsewhere (e.g. by a tree construction).
    pub fn from_dense(class: &ClassSpec, dense: Prefix) -> EnumeratedLimit {
        let prefix = dense.to_structure();
        let creation = (0..dense.len()).map(|v| dense.type_of(v)).collect();
        EnumeratedLimit { class: class.clone(), prefix, dense, creation, schedule_log: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.prefix.size
    }

    /// `K_m` as a structure.
    pub fn initial_segment(&self, m: usize) -> FinStructure {
        let set: Vec<usize> = (0..m.min(self.size())).collect();
        self.prefix.induced(&set).expect("in range")
    }

    pub fn to_text(&self) -> String {
        self.prefix.to_text(&self.class.name.replace(|c: char| !c.is_ascii_alphanumeric(), "_"))
    }
}

/// Builds a deterministic prefix of size `n` by dovetailing extension demands.
///
/// Pairs `(m, i)` are visited along anti-diagonals `m + i = d`; the demand is
/// "some later vertex realizes the `i`-th type over `K_m`". Unrealized demands
/// are served by a new vertex realizing the ≺-least completion of that type.
pub fn build_enumerated(class: &ClassSpec, n: usize) -> Result<EnumeratedLimit, ClassError> {
    let mut dense = Prefix::new(class.language.clone());
    let mut creation: Vec<OneType> = Vec::new();
    let mut log = Vec::new();
    let mut lists: HashMap<usize, Vec<OneType>> = HashMap::new();
    let mut d = 0usize;
    while dense.len() < n {
        for m in 0..=d {
            if dense.len() >= n {
                break;
            }
            let i = d - m;
            if m > dense.len() {
                continue;
            }
            let list = match lists.entry(m) {
                Entry::Occupied(o) => o.into_mut(),
                Entry::Vacant(v) => {
                    let mut l = class.types_over_prefix(&dense, m, Mode::S)?;
                    l.truncate(TYPE_LIST_CAP);
                    v.insert(l)
                }
            };
            if i >= list.len() {
                continue;
            }
            let tau = &list[i];
            let realized = (m..dense.len()).any(|v| dense.type_over(v, m) == *tau);
            if realized {
                continue;
            }
            let mut t = tau.clone();
            while t.params() < dense.len() {
                let succ = class.successors(&dense, &t, Mode::S)?;
                if succ.is_empty() {
                    return Err(ClassError::NotInClass(class.name.clone()));
                }
                t = succ[0].clone();
            }
            let v = dense.len();
            dense.push(&t.atoms);
            creation.push(t);
            log.push(Demand { stage: m, type_index: i, vertex: v });
        }
        d += 1;
    }
    Ok(EnumeratedLimit { class: class.clone(), prefix: dense.to_structure(), dense, creation, schedule_log: log })
}

/// Builds a prefix of size `n` whose vertex types are random walks down the
/// tree of 1-types: each vertex picks a uniformly random realizable successor
/// at every level. Deterministic for a given seed.
pub fn build_random_enumerated(class: &ClassSpec, n: usize, seed: u64) -> Result<EnumeratedLimit, ClassError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = Prefix::new(class.language.clone());
    let mut creation: Vec<OneType> = Vec::new();
    let roots = class.root_types(Mode::S);
    if roots.is_empty() {
        return Err(ClassError::NotInClass(class.name.clone()));
    }
    while dense.len() < n {
        let mut t = roots[rng.gen_range(0..roots.len())].clone();
        while t.params() < dense.len() {
            let succ = class.successors(&dense, &t, Mode::S)?;
            if succ.is_empty() {
                return Err(ClassError::NotInClass(class.name.clone()));
            }
            t = succ[rng.gen_range(0..succ.len())].clone();
        }
        dense.push(&t.atoms);
        creation.push(t);
    }
    Ok(EnumeratedLimit { class: class.clone(), prefix: dense.to_structure(), dense, creation, schedule_log: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelCount {
    pub stage: usize,
    pub realized: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemandReport {
    /// Largest `m` such that every realizable type over `K_j`, `j <= m`, is
    /// realized by a vertex of the prefix; `None` if even `K_0` fails.
    pub horizon: Option<usize>,
    pub levels: Vec<LevelCount>,
}

pub fn verify_extension_demands(e: &EnumeratedLimit) -> Result<DemandReport, ClassError> {
    let mut levels = Vec::new();
    let mut horizon = None;
    let mut complete = true;
    for m in 0..=e.size() {
        let types = e.class.types_over_prefix(&e.dense, m, Mode::S)?;
        let realized_set: std::collections::HashSet<OneType> =
            (m..e.size()).map(|v| e.dense.type_over(v, m)).collect();
        let realized = types.iter().filter(|t| realized_set.contains(*t)).count();
        levels.push(LevelCount { stage: m, realized, total: types.len() });
        if complete && realized == types.len() {
            horizon = Some(m);
        } else {
            complete = false;
        }
        if !complete {
            break;
        }
    }
    Ok(DemandReport { horizon, levels })
}
