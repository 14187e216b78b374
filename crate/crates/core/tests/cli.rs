use std::path::Path;
use std::process::{Command, Output};

use sdae::io::Report;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn sdae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdae")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn kcf_of_the_cutset_network() {
    let out = sdae(&["kcf", &data("ll_cutset_pencil.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = Report::machine_section(&stdout(&out)).unwrap();
    assert_eq!(v["d"], 1);
    assert_eq!(v["block_sizes"], serde_json::json!([2, 1]));
    assert_eq!(v["index"], 2);
}

#[test]
fn singular_pencil_is_a_domain_error() {
    let out = sdae(&["regularity", &data("singular_pencil.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pencil: NotRegular"));
    let out = sdae(&["kcf", &data("singular_pencil.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"n\": 1,\n  \"A\": [[1]],\n  \"B\": \"x\"\n}\n").unwrap();
    let out = sdae(&["kcf", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 4") && err.contains("`B`"), "{err}");

    let missing = dir.path().join("missing.json");
    assert_eq!(sdae(&["law", missing.to_str().unwrap()]).status.code(), Some(2));
    let out = sdae(&["simulate", &data("ornstein_uhlenbeck.json"), "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(sdae(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = sdae(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("simulate"));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", &data("ornstein_uhlenbeck.json"), "--samples", "500", "--steps", "800", "--seed", "7"];
    let (a, b) = (sdae(&args), sdae(&args));
    assert_eq!(a.status.code(), Some(0));
    let (ma, mb) = (Report::machine_section(&stdout(&a)), Report::machine_section(&stdout(&b)));
    assert!(ma.is_some());
    assert_eq!(ma, mb);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn output_file_and_laws() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("law.txt");
    let out = sdae(&["law", &data("ll_cutset_pencil.json"), "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&target).unwrap();
    let v = Report::machine_section(&text).unwrap();
    assert_eq!(v["y"]["cov"].as_array().unwrap().len(), 4);

    let out = sdae(&["abscont", &data("ll_cutset_pencil.json"), "--center", "1", "--radius", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(Path::new(&target).exists());
}

#[test]
fn circuit_writes_its_problem() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    let out = sdae(&["circuit", &data("ll_cutset_netlist.json"), "--write-problem", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = sdae(&["kcf", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = Report::machine_section(&stdout(&out)).unwrap();
    assert_eq!(v["d"], 1);
}
