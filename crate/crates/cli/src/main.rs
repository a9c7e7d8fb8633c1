use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use brd_core::classes::{self, ClassSpec, SfapOutcome};
use brd_core::coding_tree::{build_coding_tree, DiagonalTree};
use brd_core::degrees::{self, DegreeError, DEFAULT_DELTA};
use brd_core::enumerated::build_enumerated;
use brd_core::experiments::{self, Colouring, ExperimentReport, Sampling};
use brd_core::structures::{FinStructure, OrderedStructure};
use brd_core::types::Mode;

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// Big Ramsey degrees through diagonal coding trees of 1-types.
#[derive(Debug, Parser)]
#[command(name = "brd", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BRD_JOBS")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    S,
    U,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Enumerator {
    Oracle,
    Direct,
}

#[derive(Debug, Args)]
struct ClassArgs {
    /// `preset:EXPR` (e.g. `preset:q`, `preset:ordered(rado)`) or `file:PATH`.
    #[arg(long)]
    class: String,
}

#[derive(Debug, Args)]
struct TreeArgs {
    /// Number of coding levels of the diagonal tree.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Big Ramsey degree of a structure, cross-checked by both enumerators.
    Degree {
        #[command(flatten)]
        class: ClassArgs,
        /// Structure file, or inline text starting with `vertices`.
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
        /// Stabilization margin.
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: usize,
    },
    /// Lists the similarity types of antichains coding the structure.
    Types {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, value_enum, default_value_t = Enumerator::Direct)]
        enumerator: Enumerator,
    },
    /// Builds a tree and exports it.
    Tree {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        tree: TreeArgs,
        /// Export the ambient coding tree of an enumerated prefix instead of
        /// the diagonal subtree (depth = ambient levels).
        #[arg(long)]
        ambient: bool,
        /// Also write DOT to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Amalgamation and irreducibility checks.
    Check {
        #[command(subcommand)]
        check: CheckCommand,
    },
    /// Runs both enumerators and reports their difference.
    OracleCompare {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
    },
    /// Persistence sampling over random sub-selections of coding nodes.
    Persist {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Size of the reference pattern each sub-selection must contain.
        #[arg(long)]
        cap: Option<usize>,
        /// Probability of keeping each coding node.
        #[arg(long)]
        keep: Option<f64>,
    },
    /// Least comb representing the structure in its given vertex order.
    Comb {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
    },
    /// Searches for a monochromatic set of coding nodes.
    Indiv {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        tree: TreeArgs,
        /// `constant`, `parity` or `random:SEED`.
        #[arg(long, default_value = "parity")]
        colouring: String,
        #[arg(long, default_value_t = 2)]
        target: usize,
        /// Required extension-demand horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Searches for a comb copy of B′ on which all copies of A′ get one colour.
    OrderedDemo {
        #[command(flatten)]
        class: ClassArgs,
        /// A′ (ordered by vertex index).
        #[arg(long)]
        sub: String,
        /// B′ (ordered by vertex index).
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        tree: TreeArgs,
        /// `constant`, `parity` or `random:SEED`.
        #[arg(long, default_value = "parity")]
        colouring: String,
    },
}

#[derive(Debug, Subcommand)]
enum CheckCommand {
    /// Bounded strong free amalgamation test.
    Sfap {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
    /// Whether every r-subset of the structure lies in one relation tuple.
    Irreducible {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        structure: String,
        #[arg(long, short)]
        r: usize,
    },
}

/// Errors of a run, mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
    Mismatch(String),
}

impl From<DegreeError> for Failure {
    fn from(e: DegreeError) -> Failure {
        match e {
            DegreeError::Mismatch { .. } => Failure::Mismatch(mismatch_text(&e)),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<classes::ClassError> for Failure {
    fn from(e: classes::ClassError) -> Failure {
        Failure::Domain(e.to_string())
    }
}

fn mismatch_text(e: &DegreeError) -> String {
    let mut s = e.to_string();
    if let DegreeError::Mismatch { oracle_only, direct_only, .. } = e {
        for d in oracle_only {
            s.push_str(&format!("\n  oracle only: {d}"));
        }
        for d in direct_only {
            s.push_str(&format!("\n  direct only: {d}"));
        }
    }
    s
}

/// A rendered result in all formats it supports.
struct Output {
    table: String,
    json: Value,
    dot: Option<String>,
}

fn format_result(value: &Output, format: Format) -> Result<String, Failure> {
    match format {
        Format::Table => Ok(value.table.clone()),
        Format::Json => Ok(format!("{:#}\n", value.json)),
        Format::Dot => value
            .dot
            .clone()
            .ok_or_else(|| Failure::Usage("this subcommand has no DOT output".into())),
    }
}

fn load_class(src: &str) -> Result<ClassSpec, Failure> {
    if let Some(expr) = src.strip_prefix("preset:") {
        Ok(classes::preset(expr)?)
    } else if let Some(path) = src.strip_prefix("file:") {
        let text = read(Path::new(path))?;
        Ok(classes::parse_class(&text)?)
    } else {
        Err(Failure::Usage(format!("class source must be preset:NAME or file:PATH, got {src}")))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_structure(class: &ClassSpec, src: &str) -> Result<FinStructure, Failure> {
    let text = if src.trim_start().starts_with("vertices") { src.to_string() } else { read(Path::new(src))? };
    Ok(class.parse_structure(&text)?)
}

fn mode_of(arg: ModeArg) -> Option<Mode> {
    match arg {
        ModeArg::S => Some(Mode::S),
        ModeArg::U => Some(Mode::U),
        ModeArg::Auto => None,
    }
}

fn diagonal(class: &ClassSpec, t: &TreeArgs) -> Result<DiagonalTree, Failure> {
    Ok(degrees::degree_tree(class, t.depth as usize, mode_of(t.mode))?)
}

fn colouring_of(text: &str) -> Result<Colouring, Failure> {
    Colouring::parse(text)
        .ok_or_else(|| Failure::Usage(format!("unknown colouring {text}: use constant, parity or random:SEED")))
}

fn report_output(r: &ExperimentReport) -> Output {
    Output { table: r.to_table(), json: r.to_json(), dot: None }
}

fn run(cli: Cli) -> Result<Output, Failure> {
    match cli.command {
        Command::Degree { class, structure, tree, delta } => {
            let c = load_class(&class.class)?;
            let a = load_structure(&c, &structure)?;
            let r = degrees::big_ramsey_degree_with(&c, &a, tree.depth as usize, mode_of(tree.mode), delta)?;
            Ok(Output { table: r.to_table(), json: r.to_json(), dot: None })
        }
        Command::Types { class, structure, tree, enumerator } => {
            let c = load_class(&class.class)?;
            let a = load_structure(&c, &structure)?;
            degrees::check_target(&c, &a)?;
            let t = diagonal(&c, &tree)?;
            let depth = tree.depth as usize;
            let (set, stats) = match enumerator {
                Enumerator::Oracle => (degrees::oracle_in(&t, &a, depth)?, None),
                Enumerator::Direct => {
                    let d = degrees::direct_in(&t, &a, depth)?;
                    (d.descriptors, Some(d.stats))
                }
            };
            let lang = &c.language;
            let list: Vec<String> = set.iter().map(|d| d.canonical(lang)).collect();
            let mut table = format!("{} similarity types at depth {depth}\n", list.len());
            for d in &list {
                table.push_str(d);
                table.push('\n');
            }
            let json = json!({ "count": list.len(), "depth": depth, "descriptors": list, "prune_stats": stats });
            Ok(Output { table, json, dot: None })
        }
        Command::Tree { class, tree, ambient, dot } => {
            let c = load_class(&class.class)?;
            let out = if ambient {
                let depth = tree.depth as usize;
                let e = build_enumerated(&c, depth)?;
                let mode = mode_of(tree.mode).unwrap_or_else(|| c.default_mode());
                let t = build_coding_tree(&e, depth, mode).map_err(DegreeError::from)?;
                let report = brd_core::coding_tree::validate_diagonal(&t);
                let mut table = format!("ambient coding tree of {}, mode {mode}, {} levels\n", c.name, t.depth);
                for (l, level) in t.levels.iter().enumerate() {
                    table.push_str(&format!("level {l}: {} nodes\n", level.len()));
                }
                table.push_str(&format!("diagonal: {}\n", report.ok));
                Output { table, json: t.to_json(), dot: Some(t.to_dot()) }
            } else {
                let t = diagonal(&c, &tree)?;
                let report = t.validate();
                let table = format!(
                    "diagonal tree of {}, mode {}: {} coding nodes, {} splitting nodes, {} ambient vertices\nvalid: {}\n{}",
                    c.name,
                    t.mode,
                    t.depth(),
                    t.splits.len(),
                    t.ambient_size(),
                    report.ok,
                    report.failures.join("\n")
                );
                Output { table, json: t.to_json(), dot: Some(t.to_dot()) }
            };
            if let Some(path) = dot {
                let text = out.dot.clone().unwrap_or_default();
                fs::write(&path, text)
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(out)
        }
        Command::Check { check } => match check {
            CheckCommand::Sfap { class, bound } => {
                let c = load_class(&class.class)?;
                match c.check_sfap(bound)? {
                    SfapOutcome::Pass => Ok(Output {
                        table: format!("{}: SFAP holds up to bound {bound}\n", c.name),
                        json: json!({ "class": c.name, "bound": bound, "sfap": true }),
                        dot: None,
                    }),
                    SfapOutcome::Witness(w) => {
                        Err(Failure::Domain(format!("{}: SFAP fails at bound {bound}\nWitness:\n{}", c.name, w.render())))
                    }
                }
            }
            CheckCommand::Irreducible { class, structure, r } => {
                let c = load_class(&class.class)?;
                let f = load_structure(&c, &structure)?;
                let ok = classes::is_r_irreducible(&f, r);
                Ok(Output {
                    table: format!("{r}-irreducible: {ok}\n"),
                    json: json!({ "r": r, "irreducible": ok }),
                    dot: None,
                })
            }
        },
        Command::OracleCompare { class, structure, tree } => {
            let c = load_class(&class.class)?;
            let a = load_structure(&c, &structure)?;
            degrees::check_target(&c, &a)?;
            let t = diagonal(&c, &tree)?;
            let depth = tree.depth as usize;
            let oracle = degrees::oracle_in(&t, &a, depth)?;
            let direct = degrees::direct_in(&t, &a, depth)?;
            if oracle != direct.descriptors {
                let lang = &c.language;
                return Err(DegreeError::Mismatch {
                    depth,
                    oracle_only: oracle.difference(&direct.descriptors).map(|d| d.canonical(lang)).collect(),
                    direct_only: direct.descriptors.difference(&oracle).map(|d| d.canonical(lang)).collect(),
                }
                .into());
            }
            Ok(Output {
                table: format!("oracle = direct: {} descriptors at depth {depth}\n", oracle.len()),
                json: json!({ "depth": depth, "count": oracle.len(), "equal": true, "prune_stats": direct.stats }),
                dot: None,
            })
        }
        Command::Persist { class, structure, tree, trials, seed, cap, keep } => {
            let c = load_class(&class.class)?;
            let a = load_structure(&c, &structure)?;
            let t = diagonal(&c, &tree)?;
            let d = Sampling::default();
            let keep = keep.unwrap_or(d.keep);
            if !(0.0..=1.0).contains(&keep) {
                return Err(Failure::Usage(format!("--keep must lie in [0, 1], got {keep}")));
            }
            let sampling = Sampling { pattern_cap: cap.unwrap_or(d.pattern_cap), keep };
            Ok(report_output(&experiments::persistence_sample_with(&t, &a, trials, seed, sampling)?))
        }
        Command::Comb { class, structure, tree } => {
            let c = load_class(&class.class)?;
            let b = OrderedStructure::identity(load_structure(&c, &structure)?);
            let t = diagonal(&c, &tree)?;
            Ok(report_output(&experiments::comb_report(&t, &b)?))
        }
        Command::Indiv { class, tree, colouring, target, horizon } => {
            let c = load_class(&class.class)?;
            let col = colouring_of(&colouring)?;
            let t = diagonal(&c, &tree)?;
            let out = experiments::indivisibility_search(&t, &|n| col.colour(&[n.vertex]), target, horizon)?;
            Ok(report_output(&experiments::indiv_report(&t, &out, &colouring, target)))
        }
        Command::OrderedDemo { class, sub, structure, tree, colouring } => {
            let c = load_class(&class.class)?;
            let a = OrderedStructure::identity(load_structure(&c, &sub)?);
            let b = OrderedStructure::identity(load_structure(&c, &structure)?);
            let col = colouring_of(&colouring)?;
            let t = diagonal(&c, &tree)?;
            let out = experiments::ordered_ramsey_demo_in(&t, &a, &b, &|v| col.colour(v))?;
            Ok(report_output(&experiments::demo_report(&t, &out, &colouring)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let format = cli.format;
    let out_path = cli.out.clone();
    let jobs = cli.jobs;
    let result = degrees::with_jobs(jobs, || run(cli)).and_then(|o| format_result(&o, format));
    match result {
        Ok(text) => {
            if let Some(path) = out_path {
                if let Err(e) = fs::write(&path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_MISMATCH)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatches_map_to_their_own_exit_path() {
        let e = DegreeError::Mismatch { depth: 3, oracle_only: vec!["a".into()], direct_only: vec![] };
        match Failure::from(e) {
            Failure::Mismatch(m) => assert!(m.contains("oracle only: a")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Failure::from(DegreeError::Empty), Failure::Domain(_)));
        assert_eq!(EXIT_MISMATCH, 3);
    }

    #[test]
    fn formats_without_dot_are_usage_errors() {
        let o = Output { table: "t\n".into(), json: json!({"k": 1}), dot: None };
        assert_eq!(format_result(&o, Format::Table).unwrap(), "t\n");
        assert_eq!(format_result(&o, Format::Json).unwrap(), "{\n  \"k\": 1\n}\n");
        assert!(matches!(format_result(&o, Format::Dot), Err(Failure::Usage(_))));
    }
}
