use std::path::Path;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sklyanin")).args(args).env("SKLYANIN_THREADS", "1").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema(kind: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{kind}.v1.json"));
    let text = std::fs::read_to_string(path).unwrap();
    JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

/// Parses JSON lines and validates each against the schema.
fn json_lines(o: &Output, kind: &str) -> Vec<Value> {
    let s = schema(kind);
    stdout(o)
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            if let Err(errs) = s.validate(&v) {
                let msgs: Vec<String> = errs.map(|e| e.to_string()).collect();
                panic!("{kind} output fails schema: {msgs:?}\n{l}");
            }
            v
        })
        .collect()
}

#[test]
fn verify_lemma4_passes() {
    let o = run(&["verify", "lemma4", "--q", "5,7", "--c", "1,2", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_lines(&o, "verify");
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["passed"], true);
    assert_eq!(v[0]["checks"].as_array().unwrap().len(), 4);
    assert_eq!(v[0]["checks"][2]["observed"], "16807");
}

#[test]
fn verify_inadmissible_exits_2() {
    assert_eq!(code(&run(&["verify", "lemma4", "--q", "9"])), 2);
    assert_eq!(code(&run(&["verify", "lemma4", "--q", "5", "--c", "5"])), 2);
    assert_eq!(code(&run(&["verify", "lemma42"])), 2);
    assert_eq!(code(&run(&["verify", "recursion", "--q", "7", "--c", "1"])), 2);
}

#[test]
fn verify_mismatch_exits_1() {
    // The S1 branch form fails on direct counts (71875 observed at q=5, c=1).
    let o = run(&["verify", "6", "--q", "5", "--c", "1", "--format", "json"]);
    assert_eq!(code(&o), 1);
    let v = json_lines(&o, "verify");
    assert_eq!(v[0]["checks"][0]["observed"], "71875");
}

#[test]
fn verify_csv_has_header() {
    let o = run(&["verify", "theorem", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("lemma,instance,expected,observed,pass,informational"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn count_s3() {
    let o = run(&["count", "--stratum", "s3", "--lambda", "0", "--q", "5", "--c", "1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json_lines(&o, "count");
    let l1 = run(&["count", "--stratum", "s3", "--lambda", "1", "--q", "5", "--c", "1", "--format", "json"]);
    let w = json_lines(&l1, "count");
    let diff = v[0]["count"].as_i64().unwrap() - w[0]["count"].as_i64().unwrap();
    assert_eq!(diff, 3125);
}

#[test]
fn count_strategies_agree() {
    let base = ["count", "--stratum", "s2", "--q", "5", "--c", "2", "--format", "json"];
    let get = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        json_lines(&run(&args), "count")[0]["count"].clone()
    };
    assert_eq!(get(&["--strategy", "direct"]), get(&["--strategy", "fiber"]));
    assert_eq!(get(&["--strategy", "fiber:x"]), get(&[]));
}

#[test]
fn count_x_branch() {
    let o = run(&["count", "--stratum", "x", "--rho", "2", "--q", "7", "--c", "2", "--lambda", "1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json_lines(&o, "count");
    assert_eq!(v[0]["rho"], "2");
    let o = run(&["count", "--stratum", "x", "--q", "7", "--c", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn count_mw2_guard() {
    let o = run(&["count", "--stratum", "mw2", "--q", "7", "--c", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
}

#[test]
fn count_csv() {
    let o = run(&["count", "--stratum", "mw1", "--q", "5", "--c", "1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("stratum,lambda,q,k,c,rho,count,strategy,millis\nmw1,0,5,1,1,,"));
}

#[test]
fn coeff_modes() {
    for mode in ["conjecture", "computed", "theorem"] {
        let o = run(&["coeff", "--mode", mode, "--format", "json"]);
        assert_eq!(code(&o), 0);
        let v = json_lines(&o, "coeff");
        assert_eq!(v[0]["mode"], mode);
    }
    let thm = stdout(&run(&["coeff", "--mode", "theorem"]));
    let comp = stdout(&run(&["coeff", "--mode", "computed"]));
    assert_eq!(thm, comp);
    let o = run(&["coeff", "--mode", "computed", "--specialize", "q=5,c=1", "--format", "json"]);
    let v = json_lines(&o, "coeff");
    assert_eq!(v[0]["specializations"].as_array().unwrap().len(), 1);
    assert_eq!(code(&run(&["coeff", "--mode", "theorem", "--order", "3"])), 2);
    assert_eq!(code(&run(&["coeff", "--mode", "theorem", "--specialize", "q=9,c=1"])), 2);
}

#[test]
fn rep_examples() {
    let o = run(&["rep", "--c", "2", "--point", "1,0,0", "--sign", "plus", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json_lines(&o, "rep");
    for key in ["relations", "centrality"] {
        assert!(v[0]["residuals"][key].as_f64().unwrap() < 1e-9);
    }
    assert_eq!(code(&run(&["rep", "--c", "2", "--point", "0,0,0"])), 2);
    assert_eq!(code(&run(&["rep", "--c", "2", "--point", "1,0"])), 2);
    let o = run(&["rep", "--c", "1", "--point", "1,1,1", "--sign", "minus", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_lines(&o, "rep")[0]["sign"], "minus");
}

#[test]
fn discrepancy_report() {
    let o = run(&["discrepancy", "--q", "7", "--c", "1,2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json_lines(&o, "discrepancy");
    assert_eq!(v[0]["confirms_discrepancy"], true);
    assert_eq!(v[0]["mode"], "merged");
    let o = run(&["discrepancy", "--q", "7", "--c", "1", "--strict-mu3", "--format", "json"]);
    assert_eq!(json_lines(&o, "discrepancy")[0]["mode"], "strict");
    assert_eq!(code(&run(&["discrepancy", "--q", "9", "--c", "1"])), 2);
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "clifford", "--points", "40", "--seed", "3", "--format", "csv"];
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
}

#[test]
fn schemas_reject_malformed_documents() {
    let rep = schema("rep");
    let bad = serde_json::json!({"schema": "sklyanin.rep/v1", "c": [1.0, 0.0], "sign": "plus"});
    assert!(!rep.is_valid(&bad));
    let count = schema("count");
    let bad = serde_json::json!({"schema": "sklyanin.count/v2", "stratum": "s3", "lambda": 0, "q": 5, "k": 1,
        "c": "1", "count": 1, "strategy": "direct", "millis": 0});
    assert!(!count.is_valid(&bad));
}
