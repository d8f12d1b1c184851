use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ctk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctk")).args(args).env_remove("CROSSTALK_FIXTURES").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn canonical(o: &Output) -> Value {
    let v: Value = serde_json::from_str(&stdout(o)).unwrap();
    v["canonical"].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn check_independent_detection_row() {
    let o = ctk(&["check", "pathways.ctk", "-s", "independent", "-p", "detection.csl", "--format", "tree"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = canonical(&o);
    let vals: Vec<&str> = c["results"].as_array().unwrap().iter().map(|r| r["value"].as_str().unwrap()).collect();
    assert_eq!(vals, ["0.500000", "0.184737", "0.184737"]);
    assert_eq!(c["model"]["states"], 36);
}

#[test]
fn empty_property_file() {
    let dir = tempfile::tempdir().unwrap();
    let props = write(dir.path(), "empty.csl", "// nothing\n");
    let o = ctk(&["check", "pathways.ctk", "-s", "P1", "-p", &props, "--format", "tree"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(canonical(&o).get("results").is_none());
}

#[test]
fn unknown_variable_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let props = write(dir.path(), "bad.csl", "q : P=? [ F (Nowhere = 1) ]\n");
    let o = ctk(&["check", "pathways.ctk", "-s", "P1", "-p", &props]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Nowhere"), "{}", stderr(&o));
}

#[test]
fn parse_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.ctk", "module M\n x : [0..1] init 0;\n [a] x = 0 1:(x' = 1);\nendmodule\n");
    let o = ctk(&["check", &model, "-s", "M", "-p", "detection.csl"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = ctk(&["check", "no-such-file.ctk", "-s", "M", "-p", "detection.csl"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn state_cap_exits_3() {
    let o = ctk(&["check", "pathways.ctk", "-s", "independent", "-p", "detection.csl", "--state-cap", "5"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn non_convergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "walk.ctk",
        "module W x : [0..2500] init 1250;
           [up] x > 0 & x < 2500 -> 1:(x' = x + 1);
           [down] x > 0 & x < 2500 -> 1:(x' = x - 1);
         endmodule",
    );
    let props = write(dir.path(), "walk.csl", "top : P=? [ F (x = 2500) ]\n");
    let o = ctk(&["check", &model, "-s", "W", "-p", &props, "--max-iterations", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn missing_annotation_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.ctk",
        "module A x : [0..1] init 0; [s] x = 0 -> 1:(x' = 1); endmodule
         module B y : [0..1] init 0; [s] y = 0 -> 1:(y' = 1); endmodule
         annotations A : cascade s : activation; endannotations",
    );
    let o = ctk(&["classify", &model, "A", "B"]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn detect_signal_flow() {
    let o = ctk(&["detect", "pathways.ctk", "--baseline", "independent", "--candidate", "signal_flow", "--format", "tree"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let d = &canonical(&o)["detection"];
    assert_eq!(d["detected"], true);
    let deltas: Vec<f64> =
        d["rows"].as_array().unwrap().iter().map(|r| r["delta"].as_str().unwrap().parse().unwrap()).collect();
    assert!((deltas[0] - 0.138).abs() < 5e-4 && (deltas[1] - 0.120).abs() < 5e-4 && deltas[2].abs() < 1e-7, "{deltas:?}");
}

#[test]
fn detect_self_and_threshold() {
    let o = ctk(&["detect", "pathways.ctk", "--baseline", "independent", "--candidate", "independent", "--format", "tree"]);
    assert_eq!(canonical(&o)["detection"]["detected"], false);
    let args = ["detect", "pathways.ctk", "--baseline", "independent", "--candidate", "intracellular_communication"];
    let o = ctk(&[&args[..], &["--format", "tree"]].concat());
    assert_eq!(canonical(&o)["detection"]["detected"], true);
    let o = ctk(&[&args[..], &["--format", "tree", "--threshold", "1e-3"]].concat());
    assert_eq!(canonical(&o)["detection"]["detected"], false);
}

#[test]
fn classify_fixtures() {
    let o = ctk(&["classify", "pathways.ctk", "-s", "signal_flow", "--format", "tree"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = &canonical(&o)["classification"];
    assert_eq!(c["category"], "signal-flow");
    assert_eq!(c["shared"].as_array().unwrap().len(), 1);
    assert_eq!(c["shared"][0]["label"], "e7_1");

    let o = ctk(&["classify", "pathways.ctk", "P1", "P2", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("independent"), "{}", stdout(&o));
}

#[test]
fn characterise_gene_expression() {
    let o = ctk(&["characterise", "pathways.ctk", "-s", "gene_expression", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("gene_expression,true"), "{out}");
    assert!(out.contains("signal_flow,false"), "{out}");
}

#[test]
fn tree_output_is_deterministic() {
    let args = ["check", "pathways.ctk", "-s", "gene_expression", "-p", "detection.csl", "--format", "tree"];
    let a = canonical(&ctk(&args));
    let b = canonical(&ctk(&args));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let t = ctk(&["table", "--format", "tree"]);
    let u = ctk(&["table", "--format", "tree"]);
    assert_eq!(canonical(&t), canonical(&u));
}

#[test]
fn text_and_csv_agree() {
    let args = ["check", "pathways.ctk", "-s", "signal_flow", "-p", "detection.csl"];
    let text = stdout(&ctk(&args));
    let csv = stdout(&ctk(&[&args[..], &["--format", "csv"]].concat()));
    for v in ["0.637997", "0.304971", "0.184737"] {
        assert!(text.contains(v) && csv.contains(v), "{v}");
    }
}

#[test]
fn fixtures_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "detection.csl", "only : P=? [ F (Protein1 = 1) ]\n");
    write(dir.path(), "pathways.ctk", crosstalk::stdlib::PATHWAYS_CTK);
    let o = Command::new(env!("CARGO_BIN_EXE_ctk"))
        .args(["check", "pathways.ctk", "-s", "P1", "-p", "detection.csl", "--format", "csv"])
        .env("CROSSTALK_FIXTURES", dir.path())
        .current_dir(dir.path().parent().unwrap())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("property,value,formula\nonly,"), "{}", stdout(&o));
}

#[test]
fn export_ctmc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ctmc");
    let o = ctk(&["check", "pathways.ctk", "-s", "P1", "-p", "detection.csl", "--export-ctmc", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "P1 lacks Protein2: {}", stderr(&o));
    let o = ctk(&[
        "check",
        "pathways.ctk",
        "-s",
        "independent",
        "-p",
        "detection.csl",
        "--export-ctmc",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("states.txt").exists() && out.join("transitions.txt").exists());
}
