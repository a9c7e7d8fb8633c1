//! Acceptance criteria 1–10, one pass/fail line each.

mod common;

use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use brd_core::classes::{is_r_irreducible, parse_class, preset, ClassSpec, SfapOutcome};
use brd_core::coding_tree::{build_coding_tree, extract_diagonal_with_reference};
use brd_core::degrees::{degree_in_tree, degree_tree, direct_in, oracle_in, DEFAULT_DELTA};
use brd_core::enumerated::build_enumerated;
use brd_core::experiments::persistence_sample;
use brd_core::structures::FinStructure;
use brd_core::types::{Atom, Mode};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    /// Non-gating criteria report failures without failing the run.
    gating: bool,
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chain(c: &ClassSpec, n: usize) -> FinStructure {
    let mut s = FinStructure::empty(c.language.clone(), n);
    for i in 0..n {
        for j in i + 1..n {
            s.insert(0, vec![i, j]);
        }
    }
    s
}

fn degree(class: &str, text: &str, depth: usize) -> Result<brd_core::degrees::DegreeResult, String> {
    let c = preset(class).map_err(|e| e.to_string())?;
    let a = c.parse_structure(text).map_err(|e| e.to_string())?;
    let t = degree_tree(&c, depth, None).map_err(|e| e.to_string())?;
    degree_in_tree(&t, &a, depth, DEFAULT_DELTA).map_err(|e| e.to_string())
}

fn indivisibility() -> Outcome {
    let mut seen = Vec::new();
    for class in ["rado", "tournament", "digraph", "q", "qn(2)", "qq"] {
        let c = preset(class).map_err(|e| e.to_string())?;
        let t = degree_tree(&c, 8, None).map_err(|e| e.to_string())?;
        for a in c.iso_classes(1).map_err(|e| e.to_string())? {
            let r = degree_in_tree(&t, &a, 8, DEFAULT_DELTA).map_err(|e| e.to_string())?;
            ensure(r.degree == 1, format!("{class} singleton {a}: T = {}", r.degree))?;
            seen.push(format!("{class}:{}", r.degree));
        }
    }
    Ok(format!("T = 1 for {}", seen.join(" ")))
}

fn rational_values() -> Outcome {
    let q = preset("q").map_err(|e| e.to_string())?;
    let t = degree_tree(&q, 14, None).map_err(|e| e.to_string())?;
    let mut got = Vec::new();
    for (n, want) in [(1, 1), (2, 2), (3, 16)] {
        let r = degree_in_tree(&t, &chain(&q, n), 14, DEFAULT_DELTA).map_err(|e| e.to_string())?;
        ensure(r.degree == want, format!("{n}-chain: T = {}, expected {want}", r.degree))?;
        if n == 3 {
            ensure(r.stabilized, "3-chain count not stabilized at depth 14")?;
        }
        got.push(r.degree.to_string());
    }
    Ok(format!("T(1,2,3-chain) = {} at depth 14, oracle = direct, stabilized", got.join(",")))
}

fn rational_stretch() -> Outcome {
    let q = preset("q").map_err(|e| e.to_string())?;
    let t = degree_tree(&q, 56, None).map_err(|e| e.to_string())?;
    let r = degree_in_tree(&t, &chain(&q, 4), 56, 4).map_err(|e| e.to_string())?;
    ensure(r.degree == 272 && r.stabilized, format!("T(4-chain) = {} (stabilized {})", r.degree, r.stabilized))?;
    Ok("T(4-chain) = 272 at depth 56, stable from 52, oracle = direct".into())
}

fn rado_values() -> Outcome {
    let mut parts = Vec::new();
    for (name, text) in [("edge", "vertices 2; E:(0,1)"), ("non-edge", "vertices 2")] {
        let r = degree("rado", text, 10)?;
        ensure(r.degree == 2, format!("{name}: T = {}", r.degree))?;
        ensure(r.stabilized, format!("{name}: not stabilized"))?;
        ensure(r.embedding_degree() == 4, format!("{name}: T·|Aut| = {}", r.embedding_degree()))?;
        parts.push(format!("T({name}) = 2"));
    }
    Ok(format!("{} at depth 10, oracle = direct, stabilized, T·|Aut| = 4", parts.join(", ")))
}

fn matrix() -> Outcome {
    let mut parts = Vec::new();
    let mut total = 0;
    for (class, depth) in [("rado", 9), ("tournament", 8), ("q", 12), ("qn(2)", 10), ("qq", 10), ("ordered(rado)", 6)] {
        let c = preset(class).map_err(|e| e.to_string())?;
        let t = degree_tree(&c, depth, None).map_err(|e| e.to_string())?;
        let mut structures = 0;
        for n in 1..=3 {
            for a in c.iso_classes(n).map_err(|e| e.to_string())? {
                let o = oracle_in(&t, &a, depth).map_err(|e| e.to_string())?;
                let d = direct_in(&t, &a, depth).map_err(|e| e.to_string())?;
                ensure(
                    o == d.descriptors,
                    format!("{class} {a}: oracle {} vs direct {}", o.len(), d.descriptors.len()),
                )?;
                structures += 1;
            }
        }
        total += structures;
        parts.push(format!("{class}@{depth}:{structures}"));
    }
    Ok(format!("{total} structures agree exactly ({})", parts.join(" ")))
}

fn sfap() -> Outcome {
    let k3 = preset("k3free").map_err(|e| e.to_string())?;
    ensure(
        matches!(k3.check_sfap(4).map_err(|e| e.to_string())?, SfapOutcome::Witness(_)),
        "k3free passes at bound 4",
    )?;
    let non_edge = FinStructure::empty(k3.language.clone(), 2);
    match k3.check_sfap_with_base(4, &non_edge).map_err(|e| e.to_string())? {
        SfapOutcome::Witness(w) => {
            // C: only the edge vw; B: A plus an isolated b; σ = τ = {E(x,b)}.
            ensure(w.c.relations[0].len() == 2 && w.c.holds(0, &[2, 3]), "C is not A plus the edge vw")?;
            ensure(w.b.size == 3 && w.b.tuple_count() == 0, "B is not A plus an isolated vertex")?;
            let join_b = vec![Atom::new(0, &[0, 3]), Atom::new(0, &[3, 0])];
            ensure(w.sigma.atoms == join_b, format!("sigma = {:?}", w.sigma.atoms))?;
            ensure(w.tau.atoms == join_b, format!("tau = {:?}", w.tau.atoms))?;
            ensure(!k3.contains(&w.e).map_err(|e| e.to_string())?, "E lies in the class")?;
        }
        SfapOutcome::Pass => return Err("k3free passes over the non-edge base".into()),
    }
    let pyramid = parse_class(
        "class forb_pyramid { ternary R symmetric; forbid { vertices 4; R:(0,1,2)(0,1,3)(0,2,3) }; }",
    )
    .map_err(|e| e.to_string())?;
    ensure(
        matches!(pyramid.check_sfap(4).map_err(|e| e.to_string())?, SfapOutcome::Witness(_)),
        "Forb(pyramid) passes at bound 4",
    )?;
    for class in ["rado", "bipartite", "hyper3"] {
        let c = preset(class).map_err(|e| e.to_string())?;
        ensure(c.check_sfap(4).map_err(|e| e.to_string())? == SfapOutcome::Pass, format!("{class} fails"))?;
    }
    Ok("k3free fails with the textbook witness, Forb(pyramid) fails, rado/bipartite/hyper3 pass at bound 4".into())
}

fn irreducibility() -> Outcome {
    let h = parse_class("class h { ternary R symmetric; }").map_err(|e| e.to_string())?;
    let pyr = h.parse_structure("vertices 4; R:(0,1,2)(0,1,3)(0,2,3)").map_err(|e| e.to_string())?;
    ensure(is_r_irreducible(&pyr, 2), "pyramid is not 2-irreducible")?;
    ensure(!is_r_irreducible(&pyr, 3), "pyramid is 3-irreducible")?;
    Ok("pyramid: 2-irreducible, not 3-irreducible".into())
}

fn tree_shapes() -> Outcome {
    let q = preset("q").map_err(|e| e.to_string())?;
    let e = build_enumerated(&q, 6).map_err(|e| e.to_string())?;
    let t = build_coding_tree(&e, 6, Mode::S).map_err(|e| e.to_string())?;
    for (l, level) in t.levels.iter().enumerate() {
        ensure(level.len() == l + 1, format!("S(Q) level {l} has {} nodes", level.len()))?;
        if l + 1 < t.depth {
            for i in 0..level.len() {
                let s = t.successor_count(l, i).map_err(|e| e.to_string())?;
                let want = if t.is_coding(l, i) { 2 } else { 1 };
                ensure(s == want, format!("S(Q) node ({l},{i}) has {s} successors"))?;
            }
        }
    }
    let h = preset("hyper3").map_err(|e| e.to_string())?;
    let e = build_enumerated(&h, 7).map_err(|e| e.to_string())?;
    let t = build_coding_tree(&e, 6, Mode::S).map_err(|e| e.to_string())?;
    for l in 0..t.depth {
        for i in 0..t.levels[l].len() {
            let s = t.successor_count(l, i).map_err(|e| e.to_string())?;
            ensure(s == 1 << l, format!("hyper3 node ({l},{i}) has {s} successors"))?;
        }
    }
    let qq = preset("qq").map_err(|e| e.to_string())?;
    let e = build_enumerated(&qq, 6).map_err(|e| e.to_string())?;
    let t = build_coding_tree(&e, 6, Mode::S).map_err(|e| e.to_string())?;
    let mut fresh_seen = 0;
    for n in 0..5 {
        let c = t.coding_node(n);
        let fresh = !c.atoms.iter().any(|a| a.sym == 1);
        let s = t.successor_count(n, t.coding[n]).map_err(|e| e.to_string())?;
        if fresh {
            ensure(s == 4, format!("qq fresh coding node {n} has {s} successors"))?;
            fresh_seen += 1;
        }
    }
    ensure(fresh_seen > 0, "no fresh-class coding node in the qq prefix")?;
    Ok(format!(
        "S(Q) levels 1..6 with branching only at coding nodes; hyper3 level n has 2^n successors; {fresh_seen} fresh qq coding nodes with 4 successors"
    ))
}

fn validator() -> Outcome {
    let mut parts = Vec::new();
    for (class, depth) in [("rado", 8), ("q", 12), ("qn(2)", 10), ("qq", 10), ("ordered(rado)", 6)] {
        let c = preset(class).map_err(|e| e.to_string())?;
        let t = degree_tree(&c, depth, None).map_err(|e| e.to_string())?;
        let r = t.validate();
        ensure(r.ok, format!("{class}: {:?}", r.failures))?;
        let again = extract_diagonal_with_reference(&c, &t.dense, &t.reference, t.mode, depth)
            .map_err(|e| e.to_string())?;
        let r2 = again.validate();
        ensure(r2.ok, format!("{class} (fixed prefix): {:?}", r2.failures))?;
        ensure(r2.coding_nodes == depth, format!("{class}: {} coding nodes", r2.coding_nodes))?;
        parts.push(format!("{class}@{depth}"));
    }
    Ok(format!("conditions (1)-(3) hold at every level: {}", parts.join(" ")))
}

fn fmt<T: std::fmt::Debug>(name: &str, r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e:?}"))
}

fn properties() -> Outcome {
    let runner = || {
        TestRunner::new_with_rng(
            Config { cases: common::CASES, failure_persistence: None, ..Config::default() },
            TestRng::deterministic_rng(RngAlgorithm::ChaCha),
        )
    };
    fmt("equivalence", runner().run(&common::antichains(3), |(f, a)| common::check_equivalence(f, &a)))?;
    fmt("descriptor iff map", runner().run(&common::antichains(2), |(f, a)| common::check_descriptor_iff_map(f, &a)))?;
    fmt(
        "similar implies omega-iso",
        runner().run(&common::antichains(2), |(f, a)| common::check_similar_implies_omega_iso(f, &a)),
    )?;
    fmt(
        "monotonicity",
        runner().run(&common::targets_and_depths(), |(f, t, d1, d2)| common::check_monotone(f, t, d1, d2)),
    )?;
    fmt(
        "decomposition",
        runner().run(&common::targets_and_depths(), |(f, t, d, _)| common::check_decomposition(f, t, d)),
    )?;
    Ok(format!("5 suites x {} cases passed", common::CASES))
}

fn persistence() -> Outcome {
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for (class, text, depth) in [("q", "vertices 2; lt:(0,1)", 16), ("rado", "vertices 2; E:(0,1)", 12)] {
        let c = preset(class).map_err(|e| e.to_string())?;
        let a = c.parse_structure(text).map_err(|e| e.to_string())?;
        let t = degree_tree(&c, depth, None).map_err(|e| e.to_string())?;
        let r = persistence_sample(&t, &a, 100, 1).map_err(|e| e.to_string())?;
        parts.push(format!("{class}@{depth} {}/{}", r.successes(), r.trials.len()));
        if r.successes() != 100 {
            for tr in r.trials.iter().filter(|t| !t.success) {
                failures.push(format!("  {class} trial {}: {}", tr.trial, tr.detail));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("every descriptor found in {}", parts.join(", ")))
    } else {
        Err(format!("{}\n{}", parts.join(", "), failures.join("\n")))
    }
}

fn main() {
    let criteria: Vec<(Criterion, fn() -> Outcome)> = vec![
        (Criterion { id: 1, name: "indivisibility degrees", budget: Duration::from_secs(10), gating: true }, indivisibility),
        (Criterion { id: 2, name: "rational chains", budget: Duration::from_secs(60), gating: true }, rational_values),
        (Criterion { id: 2, name: "rational 4-chain (stretch)", budget: Duration::from_secs(300), gating: false }, rational_stretch),
        (Criterion { id: 3, name: "rado edge and non-edge", budget: Duration::from_secs(60), gating: true }, rado_values),
        (Criterion { id: 4, name: "oracle = direct matrix", budget: Duration::from_secs(600), gating: true }, matrix),
        (Criterion { id: 5, name: "SFAP checker", budget: Duration::from_secs(300), gating: true }, sfap),
        (Criterion { id: 6, name: "irreducibility", budget: Duration::from_secs(1), gating: true }, irreducibility),
        (Criterion { id: 7, name: "tree shapes", budget: Duration::from_secs(10), gating: true }, tree_shapes),
        (Criterion { id: 8, name: "diagonal validator", budget: Duration::from_secs(60), gating: true }, validator),
        (Criterion { id: 9, name: "property suites", budget: Duration::from_secs(300), gating: true }, properties),
        // Sampling is reported, not asserted: a miss prints the missing
        // descriptor and depth advice.
        (Criterion { id: 10, name: "persistence sampling", budget: Duration::from_secs(300), gating: false }, persistence),
    ];
    let mut failed = 0;
    for (c, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let slow = elapsed > c.budget;
        let (status, detail) = match &outcome {
            Ok(d) if !slow => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over the {:?} budget", c.budget)),
            Err(e) => ("FAIL", e.clone()),
        };
        let tag = if c.gating { "" } else { " [non-gating]" };
        println!("criterion {:>2} {status} {}{tag} ({:.2?}): {detail}", c.id, c.name, elapsed);
        if status == "FAIL" && c.gating {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}
