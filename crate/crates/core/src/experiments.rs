//! Finite-scale experiments: persistence sampling, comb search, the ordered
//! Ramsey demonstration and indivisibility search.
//!
//! Every statement these experiments probe is about infinite subcopies; the
//! results here are finite analogues and are labelled as such in all output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};

use crate::classes::{ClassSpec, View};
use crate::coding_tree::{CodingNode, DiagonalTree};
use crate::degrees::{self, check_target, degree_tree, descriptor_of_nodes, oracle_in, oracle_on, DegreeError, Result};
use crate::enumerated::{verify_extension_demands, EnumeratedLimit};
use crate::structures::{find_embeddings, FinStructure, OrderedStructure};
use crate::types::{lex_compare, Mode};

/// Label attached to every report.
pub const FINITE_ANALOGUE: &str = "finite analogue: evidence at a fixed depth, not a proof about infinite subcopies";

/// How sub-selections are sampled: every coding node is kept independently
/// with probability `keep`, and a sample is accepted only if it represents a
/// member of the class containing an induced copy of the first `pattern_cap`
/// vertices of the reference enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub pattern_cap: usize,
    pub keep: f64,
}

impl Default for Sampling {
    fn default() -> Sampling {
        Sampling { pattern_cap: 4, keep: 0.75 }
    }
}

/// Rejection-sampling attempts per trial before the trial is skipped.
const SAMPLE_ATTEMPTS: usize = 1000;

/// Cap on the number of combs examined by the ordered Ramsey demonstration.
const DEMO_COMB_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// `false` when the trial was skipped.
    pub ran: bool,
    pub success: bool,
    /// Trial-specific measurement (e.g. the fraction of descriptors found).
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, Value>,
    pub trials: Vec<TrialOutcome>,
    pub summary: BTreeMap<String, f64>,
    /// Witness coding indices, for searches.
    pub witness: Option<Vec<usize>>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(experiment: &str, parameters: BTreeMap<String, Value>) -> ExperimentReport {
        ExperimentReport {
            experiment: experiment.to_string(),
            parameters,
            trials: Vec::new(),
            summary: BTreeMap::new(),
            witness: None,
            notes: vec![FINITE_ANALOGUE.to_string()],
        }
    }

    pub fn trials_run(&self) -> usize {
        self.trials.iter().filter(|t| t.ran).count()
    }

    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.ran && t.success).count()
    }

    /// One-line summary, e.g. `persistence: 100/100 trials succeeded (0 skipped)`.
    pub fn rate_line(&self) -> String {
        let skipped = self.trials.len() - self.trials_run();
        format!(
            "{}: {}/{} trials succeeded ({} skipped)",
            self.experiment,
            self.successes(),
            self.trials_run(),
            skipped
        )
    }

    fn summarize(&mut self) {
        let run = self.trials_run();
        self.summary.insert("trials".into(), self.trials.len() as f64);
        self.summary.insert("trials_run".into(), run as f64);
        self.summary.insert("successes".into(), self.successes() as f64);
        let rate = if run == 0 { 0.0 } else { self.successes() as f64 / run as f64 };
        self.summary.insert("success_rate".into(), rate);
        if run > 0 {
            let mean = self.trials.iter().filter(|t| t.ran).map(|t| t.value).sum::<f64>() / run as f64;
            self.summary.insert("mean_value".into(), mean);
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("experiment  {}\n", self.experiment));
        for (k, v) in &self.parameters {
            out.push_str(&format!("{:<11} {}\n", k, v));
        }
        for t in &self.trials {
            let status = match (t.ran, t.success) {
                (false, _) => "skipped",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            if !t.ran || !t.success || self.trials.len() <= 10 {
                out.push_str(&format!("trial {:>4}  {:<7} {:.3}  {}\n", t.trial, status, t.value, t.detail));
            }
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness     {:?}\n", w));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("{:<13} {}\n", k, v));
        }
        out.push_str(&self.rate_line());
        out.push('\n');
        for n in &self.notes {
            out.push_str(&format!("note: {}\n", n));
        }
        out
    }
}

/// The RNG of trial `trial`: an independent ChaCha stream of `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// The structure the coding nodes `subset` represent, on vertices
/// `0..subset.len()` in increasing coding order.
pub fn represented_by(tree: &DiagonalTree, subset: &[usize]) -> Result<FinStructure> {
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let vertices: Vec<usize> = degrees::nodes_at(tree, &subset)?.iter().map(|c| c.vertex).collect();
    let lang = &tree.class.language;
    let mut s = FinStructure::empty(lang.clone(), vertices.len());
    if vertices.is_empty() {
        return Ok(s);
    }
    for sym in 0..lang.len() {
        let k = lang.arity(sym);
        let mut idx = vec![0usize; k];
        loop {
            let tuple: Vec<usize> = idx.iter().map(|&i| vertices[i]).collect();
            if tree.dense.holds(sym, &tuple) {
                s.insert(sym, idx.clone());
            }
            if !next_tuple(&mut idx, vertices.len()) {
                break;
            }
        }
    }
    Ok(s)
}

/// Advances `idx` to the next tuple over `0..n` in lexicographic order.
fn next_tuple(idx: &mut [usize], n: usize) -> bool {
    for p in (0..idx.len()).rev() {
        idx[p] += 1;
        if idx[p] < n {
            return true;
        }
        idx[p] = 0;
    }
    false
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Samples sub-selections `D` of the coding nodes and checks that every
/// descriptor of `a` occurring in the tree also occurs among antichains in `D`.
pub fn persistence_sample(tree: &DiagonalTree, a: &FinStructure, trials: usize, seed: u64) -> Result<ExperimentReport> {
    persistence_sample_with(tree, a, trials, seed, Sampling::default())
}

/// As [`persistence_sample`] with explicit sampling parameters.
pub fn persistence_sample_with(
    tree: &DiagonalTree,
    a: &FinStructure,
    trials: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<ExperimentReport> {
    let cap = sampling.pattern_cap;
    check_target(&tree.class, a)?;
    let depth = tree.depth();
    let mut params = BTreeMap::new();
    params.insert("depth".into(), json!(depth));
    params.insert("trials".into(), json!(trials));
    params.insert("seed".into(), json!(seed));
    params.insert("pattern_cap".into(), json!(cap));
    params.insert("keep".into(), json!(sampling.keep));
    params.insert("size".into(), json!(a.size));
    let mut report = ExperimentReport::new("persistence", params);
    if trials == 0 {
        report.summarize();
        return Ok(report);
    }
    let known = oracle_in(tree, a, depth)?;
    let lang = &tree.class.language;
    if known.is_empty() {
        report.trials = (0..trials)
            .map(|trial| TrialOutcome {
                trial,
                ran: false,
                success: false,
                value: 0.0,
                detail: format!("tree too shallow: no copy of the structure among {depth} coding nodes"),
            })
            .collect();
        report.notes.push("no descriptors at this depth; build a deeper tree".into());
        report.summarize();
        return Ok(report);
    }
    let cap = cap.min(tree.reference.len());
    let pattern = tree.reference.to_structure().induced(&(0..cap).collect::<Vec<_>>())?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut chosen = None;
            for _ in 0..SAMPLE_ATTEMPTS {
                let d: Vec<usize> = (0..depth).filter(|_| rng.gen_bool(sampling.keep)).collect();
                let s = represented_by(tree, &d)?;
                if tree.class.contains(&s)? && !find_embeddings(&pattern, &s)?.is_empty() {
                    chosen = Some(d);
                    break;
                }
            }
            let Some(d) = chosen else {
                return Ok(TrialOutcome {
                    trial,
                    ran: false,
                    success: false,
                    value: 0.0,
                    detail: format!("no sub-selection containing the size-{cap} pattern after {SAMPLE_ATTEMPTS} attempts"),
                });
            };
            let found = oracle_on(tree, a, &d)?;
            let missing: Vec<String> = known.difference(&found).map(|m| m.canonical(lang)).collect();
            let value = (known.len() - missing.len()) as f64 / known.len() as f64;
            let detail = if missing.is_empty() {
                format!("|D| = {}, all {} descriptors found", d.len(), known.len())
            } else {
                format!(
                    "|D| = {}, missing {}; try a depth above {depth}",
                    d.len(),
                    missing.join(" ; ")
                )
            };
            Ok(TrialOutcome { trial, ran: true, success: missing.is_empty(), value, detail })
        })
        .collect();
    for o in outcomes {
        report.trials.push(o?);
    }
    report.summary.insert("descriptors".into(), known.len() as f64);
    report.summarize();
    if report.successes() < report.trials_run() {
        report.notes.push(format!("some sub-selections missed descriptors; try a depth above {depth}"));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Combs
// ---------------------------------------------------------------------------

/// Visits, in lexicographic order of coding indices, every comb whose
/// represented ordered structure is `b`; stops when `visit` returns `false`.
fn for_each_comb(tree: &DiagonalTree, b: &OrderedStructure, visit: &mut dyn FnMut(&[usize]) -> bool) -> Result<()> {
    check_target(&tree.class, &b.base)?;
    let target = b.as_prefix();
    let lang = tree.class.language.clone();
    let nodes = &tree.coding;
    let n = target.size;
    if n == 0 {
        visit(&[]);
        return Ok(());
    }
    // Partial check: the new node's relations to earlier ones and its colour
    // agree with `target` at the same positions.
    let fits = |chosen: &[usize], c: usize| -> bool {
        let k = chosen.len();
        let mut verts: Vec<usize> = chosen.iter().map(|&i| nodes[i].vertex).collect();
        verts.push(nodes[c].vertex);
        for sym in 0..lang.len() {
            let ar = lang.arity(sym);
            let mut idx = vec![0usize; ar];
            loop {
                if idx.contains(&k) {
                    let tuple: Vec<usize> = idx.iter().map(|&i| verts[i]).collect();
                    if tree.dense.holds(sym, &tuple) != target.holds(sym, &idx) {
                        return false;
                    }
                }
                if !next_tuple(&mut idx, k + 1) {
                    break;
                }
            }
        }
        true
    };
    fn rec(
        nodes: &[CodingNode],
        n: usize,
        chosen: &mut Vec<usize>,
        fits: &dyn Fn(&[usize], usize) -> bool,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if chosen.len() == n {
            return visit(chosen);
        }
        let start = chosen.last().map_or(0, |&l| l + 1);
        for c in start..nodes.len() {
            let ok = chosen.iter().all(|&p| {
                !nodes[p].ty.is_initial_segment_of(&nodes[c].ty)
                    && lex_compare(&nodes[p].ty, &nodes[c].ty) == std::cmp::Ordering::Less
            });
            if !ok || !fits(chosen, c) {
                continue;
            }
            chosen.push(c);
            let go_on = rec(nodes, n, chosen, fits, visit);
            chosen.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(nodes, n, &mut Vec::new(), &fits, visit);
    Ok(())
}

/// The lexicographically least antichain of coding indices that is a comb
/// (length order = ≺ order) and represents `b` as an ordered structure.
pub fn find_comb(tree: &DiagonalTree, b: &OrderedStructure) -> Result<Option<Vec<usize>>> {
    let mut found = None;
    let mut err = None;
    for_each_comb(tree, b, &mut |c| {
        let nodes: Vec<CodingNode> = c.iter().map(|&i| tree.coding[i].clone()).collect();
        match descriptor_of_nodes(&nodes) {
            Ok(d) if d.is_comb() && d.represented(&tree.class.language) == b.as_prefix() => {
                found = Some(c.to_vec());
                false
            }
            Ok(d) => {
                err = Some(DegreeError::Internal(format!("comb search accepted a non-comb {}", d.shape())));
                false
            }
            Err(e) => {
                err = Some(e);
                false
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

pub fn comb_report(tree: &DiagonalTree, b: &OrderedStructure) -> Result<ExperimentReport> {
    let mut params = BTreeMap::new();
    params.insert("depth".into(), json!(tree.depth()));
    params.insert("size".into(), json!(b.size()));
    let mut report = ExperimentReport::new("comb", params);
    let found = find_comb(tree, b)?;
    report.trials.push(TrialOutcome {
        trial: 0,
        ran: true,
        success: found.is_some(),
        value: if found.is_some() { 1.0 } else { 0.0 },
        detail: match &found {
            Some(w) => format!("comb at coding indices {:?}", w),
            None => format!("no comb among {} coding nodes; try a deeper tree", tree.depth()),
        },
    });
    report.witness = found;
    report.summarize();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Ordered Ramsey demonstration
// ---------------------------------------------------------------------------

/// Colourings used by the command-line front end. A colouring receives the
/// ambient vertices of an ordered copy, listed in enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colouring {
    Constant,
    /// Sum of the vertices modulo 2.
    Parity,
    /// A seeded pseudo-random 2-colouring.
    Random(u64),
}

impl Colouring {
    pub fn parse(text: &str) -> Option<Colouring> {
        match text {
            "constant" => Some(Colouring::Constant),
            "parity" => Some(Colouring::Parity),
            _ => text.strip_prefix("random:").and_then(|s| s.parse().ok()).map(Colouring::Random),
        }
    }

    pub fn colour(&self, vertices: &[usize]) -> usize {
        match self {
            Colouring::Constant => 0,
            Colouring::Parity => vertices.iter().sum::<usize>() % 2,
            Colouring::Random(seed) => {
                let mut h = *seed ^ 0x9e37_79b9_7f4a_7c15;
                for &v in vertices {
                    h = (h ^ v as u64).wrapping_mul(0x0100_0000_01b3);
                    h ^= h >> 29;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(h);
                rng.gen_range(0..2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoOutcome {
    pub found: bool,
    /// Coding indices of the monochromatic comb copy of `B′`.
    pub witness: Option<Vec<usize>>,
    /// The colour all copies of `A′` inside the witness receive.
    pub colour: Option<usize>,
    pub combs_examined: usize,
    /// Ordered copies of `A′` inside `B′`.
    pub copies_per_comb: usize,
}

/// Positions `p₀ < … < p_{k-1}` of `b` whose induced ordered structure is `a`.
pub fn ordered_copies_in(a: &OrderedStructure, b: &OrderedStructure) -> Result<Vec<Vec<usize>>> {
    let ap = a.as_prefix();
    let bp = b.as_prefix();
    let mut out: Vec<Vec<usize>> = find_embeddings(&ap, &bp)?
        .into_iter()
        .filter(|f| f.windows(2).all(|w| w[0] < w[1]))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Searches the combs representing `b` in a diagonal tree of the given depth
/// for one on which every ordered copy of `a` receives the same colour.
pub fn ordered_ramsey_demo(
    class: &ClassSpec,
    a: &OrderedStructure,
    b: &OrderedStructure,
    colouring: &dyn Fn(&[usize]) -> usize,
    depth: usize,
) -> Result<DemoOutcome> {
    let tree = degree_tree(class, depth, None)?;
    ordered_ramsey_demo_in(&tree, a, b, colouring)
}

pub fn ordered_ramsey_demo_in(
    tree: &DiagonalTree,
    a: &OrderedStructure,
    b: &OrderedStructure,
    colouring: &dyn Fn(&[usize]) -> usize,
) -> Result<DemoOutcome> {
    check_target(&tree.class, &a.base)?;
    let copies = ordered_copies_in(a, b)?;
    if copies.is_empty() {
        return Err(DegreeError::NotInClass(format!("{}: A′ does not embed in B′", tree.class.name)));
    }
    let mut out = DemoOutcome {
        found: false,
        witness: None,
        colour: None,
        combs_examined: 0,
        copies_per_comb: copies.len(),
    };
    for_each_comb(tree, b, &mut |c| {
        out.combs_examined += 1;
        let colours: BTreeSet<usize> = copies
            .iter()
            .map(|pos| {
                let verts: Vec<usize> = pos.iter().map(|&p| tree.coding[c[p]].vertex).collect();
                colouring(&verts)
            })
            .collect();
        if colours.len() == 1 {
            out.found = true;
            out.witness = Some(c.to_vec());
            out.colour = colours.into_iter().next();
            return false;
        }
        out.combs_examined < DEMO_COMB_CAP
    })?;
    Ok(out)
}

pub fn demo_report(tree: &DiagonalTree, outcome: &DemoOutcome, colouring: &str) -> ExperimentReport {
    let mut params = BTreeMap::new();
    params.insert("depth".into(), json!(tree.depth()));
    params.insert("colouring".into(), json!(colouring));
    let mut report = ExperimentReport::new("ordered-demo", params);
    report.trials.push(TrialOutcome {
        trial: 0,
        ran: true,
        success: outcome.found,
        value: outcome.combs_examined as f64,
        detail: match (&outcome.witness, outcome.colour) {
            (Some(w), Some(c)) => format!(
                "monochromatic comb {:?} (colour {c}) after {} combs, {} copies of A′ each",
                w, outcome.combs_examined, outcome.copies_per_comb
            ),
            _ => format!("no monochromatic comb among {} combs; try a deeper tree", outcome.combs_examined),
        },
    });
    report.witness = outcome.witness.clone();
    report.summarize();
    report
}

// ---------------------------------------------------------------------------
// Indivisibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndivOutcome {
    pub found: bool,
    pub colour: Option<usize>,
    /// Coding indices of the monochromatic witness.
    pub witness: Option<Vec<usize>>,
    /// Extension-demand horizon of the represented structure.
    pub horizon: Option<usize>,
    /// Best horizon reached per colour class (`None` = not even level 0).
    pub best: BTreeMap<usize, Option<usize>>,
}

/// Greedy search, per colour, for a monochromatic set of at least
/// `target_size` coding nodes whose represented structure meets every
/// extension demand up to `horizon` (no requirement if `None`).
pub fn indivisibility_search(
    tree: &DiagonalTree,
    colouring: &dyn Fn(&CodingNode) -> usize,
    target_size: usize,
    horizon: Option<usize>,
) -> Result<IndivOutcome> {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in &tree.coding {
        classes.entry(colouring(c)).or_default().push(c.index);
    }
    let mut out = IndivOutcome { found: false, colour: None, witness: None, horizon: None, best: BTreeMap::new() };
    for (&colour, members) in &classes {
        let mut best: Option<usize> = None;
        for k in target_size.max(1)..=members.len() {
            let s = represented_by(tree, &members[..k])?;
            let e = EnumeratedLimit::from_structure(&tree.class, &s)?;
            let h = verify_extension_demands(&e)?.horizon;
            best = best.max(h);
            let ok = match horizon {
                None => true,
                Some(req) => h.is_some_and(|h| h >= req),
            };
            if ok {
                out.found = true;
                out.colour = Some(colour);
                out.witness = Some(members[..k].to_vec());
                out.horizon = h;
                out.best.insert(colour, best);
                return Ok(out);
            }
        }
        out.best.insert(colour, best);
    }
    Ok(out)
}

pub fn indiv_report(tree: &DiagonalTree, outcome: &IndivOutcome, colouring: &str, target: usize) -> ExperimentReport {
    let mut params = BTreeMap::new();
    params.insert("depth".into(), json!(tree.depth()));
    params.insert("colouring".into(), json!(colouring));
    params.insert("target_size".into(), json!(target));
    let mut report = ExperimentReport::new("indivisibility", params);
    report.trials.push(TrialOutcome {
        trial: 0,
        ran: true,
        success: outcome.found,
        value: outcome.horizon.map_or(-1.0, |h| h as f64),
        detail: match (&outcome.witness, outcome.colour) {
            (Some(w), Some(c)) => format!("colour {c}: {} nodes, horizon {:?}", w.len(), outcome.horizon),
            _ => format!("no monochromatic witness; best horizons {:?}", outcome.best),
        },
    });
    report.witness = outcome.witness.clone();
    report.summarize();
    report
}

/// A diagonal tree for experiments, in the class's default mode.
pub fn experiment_tree(class: &ClassSpec, depth: usize, mode: Option<Mode>) -> Result<DiagonalTree> {
    degree_tree(class, depth, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{preset_q, preset_rado};

    fn chain(q: &ClassSpec, n: usize) -> FinStructure {
        let mut s = FinStructure::empty(q.language.clone(), n);
        for i in 0..n {
            for j in i + 1..n {
                s.insert(0, vec![i, j]);
            }
        }
        s
    }

    #[test]
    fn zero_trials_give_an_empty_report() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 6, None).unwrap();
        let r = persistence_sample(&t, &chain(&q, 2), 0, 1).unwrap();
        assert!(r.trials.is_empty());
        assert_eq!(r.rate_line(), "persistence: 0/0 trials succeeded (0 skipped)");
    }

    #[test]
    fn full_selection_equals_the_oracle() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 8, None).unwrap();
        let a = chain(&q, 2);
        let all: Vec<usize> = (0..8).collect();
        assert_eq!(oracle_on(&t, &a, &all).unwrap(), oracle_in(&t, &a, 8).unwrap());
    }

    #[test]
    fn persistence_is_reproducible() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 10, None).unwrap();
        let a = chain(&q, 2);
        let r1 = persistence_sample(&t, &a, 12, 7).unwrap();
        let r2 = persistence_sample(&t, &a, 12, 7).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.trials_run(), 12);
    }

    #[test]
    fn singleton_comb_is_the_first_node() {
        let r = preset_rado().unwrap();
        let t = degree_tree(&r, 6, None).unwrap();
        let b = OrderedStructure::identity(FinStructure::empty(r.language.clone(), 1));
        assert_eq!(find_comb(&t, &b).unwrap(), Some(vec![0]));
    }

    #[test]
    fn rational_three_chain_comb() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 12, None).unwrap();
        let b = OrderedStructure::identity(chain(&q, 3));
        let c = find_comb(&t, &b).unwrap().expect("a comb at depth 12");
        let d = degrees::descriptor_of(&t, &c).unwrap();
        assert!(d.is_comb());
        assert_eq!(d.represented(&q.language), chain(&q, 3));
    }

    #[test]
    fn constant_colouring_returns_the_first_comb() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 10, None).unwrap();
        let a = OrderedStructure::identity(chain(&q, 2));
        let b = OrderedStructure::identity(chain(&q, 3));
        let out = ordered_ramsey_demo_in(&t, &a, &b, &|_| 0).unwrap();
        assert!(out.found);
        assert_eq!(out.combs_examined, 1);
        assert_eq!(out.witness, find_comb(&t, &b).unwrap());
        assert_eq!(out.copies_per_comb, 3);
    }

    #[test]
    fn equal_sizes_are_monochromatic() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 8, None).unwrap();
        let a = OrderedStructure::identity(chain(&q, 2));
        let out = ordered_ramsey_demo_in(&t, &a, &a, &|v| Colouring::Parity.colour(v)).unwrap();
        assert!(out.found);
        assert_eq!(out.combs_examined, 1);
    }

    #[test]
    fn indivisibility_targets() {
        let q = preset_q().unwrap();
        let t = degree_tree(&q, 12, None).unwrap();
        let any = indivisibility_search(&t, &|_| 0, 1, None).unwrap();
        assert_eq!(any.witness, Some(vec![0]));
        let full = indivisibility_search(&t, &|_| 0, 12, Some(0)).unwrap();
        assert_eq!(full.witness.map(|w| w.len()), Some(12));
        let parity = indivisibility_search(&t, &|c| c.vertex % 2, 2, Some(1)).unwrap();
        assert!(parity.found, "{:?}", parity.best);
        assert!(parity.horizon.unwrap() >= 1);
    }

    #[test]
    fn colouring_parse() {
        assert_eq!(Colouring::parse("random:3"), Some(Colouring::Random(3)));
        assert_eq!(Colouring::parse("parity"), Some(Colouring::Parity));
        assert_eq!(Colouring::parse("nope"), None);
        let c = Colouring::Random(3);
        assert_eq!(c.colour(&[1, 2]), c.colour(&[1, 2]));
    }
}
