use std::process::{Command, Output};

fn brd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brd")).args(args).output().expect("runs brd")
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("brd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn degree_of_the_rational_three_chain_as_json() {
    let file = scratch("chain3.struct");
    std::fs::write(&file, "vertices 3; lt:(0,1)(1,2)(0,2)\n").unwrap();
    let out = brd(&["degree", "--class", "preset:q", "--structure", file.to_str().unwrap(), "--depth", "14", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["degree"], 16);
    assert_eq!(v["stabilized"], true);
}

#[test]
fn triangle_free_sfap_fails_with_a_witness() {
    let out = brd(&["check", "sfap", "--class", "preset:k3free", "--bound", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Witness"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn tree_writes_a_dot_file() {
    let file = scratch("out.dot");
    let out = brd(&["tree", "--class", "preset:q", "--depth", "4", "--dot", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dot = std::fs::read_to_string(&file).unwrap();
    assert!(dot.starts_with("digraph"));
    let out = brd(&["tree", "--class", "preset:q", "--depth", "4", "--ambient", "--format", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("digraph coding_tree"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(brd(&["degree", "--class", "preset:q"]).status.code(), Some(2));
    assert_eq!(brd(&["degree", "--class", "q", "--structure", "vertices 1"]).status.code(), Some(2));
    assert_eq!(brd(&["degree", "--class", "preset:q", "--structure", "missing.struct"]).status.code(), Some(2));
    assert_eq!(brd(&["tree", "--class", "preset:q", "--depth", "0"]).status.code(), Some(2));
    assert_eq!(brd(&["check", "sfap", "--class", "preset:rado", "--format", "dot"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one() {
    let out = brd(&["degree", "--class", "preset:k3free", "--structure", "vertices 1", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = brd(&["degree", "--class", "preset:nope", "--structure", "vertices 1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_compare_agrees() {
    let out = brd(&["oracle-compare", "--class", "preset:rado", "--structure", "vertices 2; E:(0,1)", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("oracle = direct: 2"));
}

#[test]
fn experiments_print_a_rate_line() {
    let out = brd(&["persist", "--class", "preset:q", "--structure", "vertices 2; lt:(0,1)", "--depth", "12", "--trials", "20", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("persistence: 20/20 trials succeeded"), "{text}");
    assert!(text.contains("finite analogue"));
    let out = brd(&["comb", "--class", "preset:q", "--structure", "vertices 3; lt:(0,1)(1,2)(0,2)", "--depth", "12", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["witness"].as_array().map(|w| w.len()), Some(3));
    let out = brd(&["indiv", "--class", "preset:q", "--depth", "12", "--horizon", "1", "--jobs", "1"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("indivisibility: 1/1"));
    let out = brd(&[
        "ordered-demo", "--class", "preset:q", "--sub", "vertices 2; lt:(0,1)",
        "--structure", "vertices 3; lt:(0,1)(1,2)(0,2)", "--depth", "10", "--colouring", "constant",
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("ordered-demo: 1/1"));
}
