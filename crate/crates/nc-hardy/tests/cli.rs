use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nc-hardy"));
    cmd.env_remove("NC_HARDY_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const REMARK: &str = r#"{"m": 2, "terms": [{"word": [1, 2], "re": 1}, {"word": [2, 1], "re": 1}]}"#;

#[test]
fn wg_values() {
    let v = json(&run(&["wg", "--n", "1", "--N", "5"]));
    assert_eq!(v["rows"][0]["value"], 0.2);
    assert_eq!(v["rows"][0]["exact"], "1/5");

    let v = json(&run(&["wg", "--n", "2", "--N", "2"]));
    let rows = v["rows"].as_array().unwrap();
    let by_type = |parts: &[u64]| {
        rows.iter().find(|r| r["cycle_type"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).eq(parts.iter().copied())).unwrap()
    };
    assert_eq!(by_type(&[1, 1])["exact"], "1/3");
    assert_eq!(by_type(&[2])["exact"], "-1/6");
}

#[test]
fn wg_below_order_is_a_numeric_error() {
    let out = run(&["wg", "--n", "3", "--N", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
}

#[test]
fn moment_of_one_entry() {
    let v = json(&run(&["moment", "--ups", "1,1", "--conjs", "1,1", "--N", "4"]));
    assert_eq!(v["rows"][0]["exact"], "1/4");
    let out = run(&["moment", "--ups", "1,5", "--conjs", "1,5", "--N", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pairing_is_exact() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", r#"{"m": 1, "terms": [{"word": [1], "re": 1}]}"#);
    let v = json(&run(&["pairing", "--f", path(&f), "--r", "0.5", "--N", "2"]));
    assert_eq!(v["rows"][0]["exact"]["re"], 0.25);
    assert_eq!(v["rows"][0]["exact"]["exact"], true);

    let g = write(dir.path(), "g.json", REMARK);
    let v = json(&run(&["pairing", "--f", path(&g), "--N", "2"]));
    assert_eq!(v["rows"][0]["exact"]["re"], 2.5);
}

#[test]
fn pairing_both_engines_agree() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", REMARK);
    let v = json(&run(&["pairing", "--f", path(&f), "--N", "2,3", "--r", "0.5,1", "--engine", "both", "--samples", "20000"]));
    let check = &v["checks"][0];
    assert_eq!(check["name"], "exact_vs_mc_within_3se");
    assert_eq!(check["passed"], true, "{check}");
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn recover_trend() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", REMARK);
    let v = json(&run(&["recover", "--f", path(&f), "--word", "1,2", "--N", "2,4,8"]));
    let got: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["exact"]["re"].as_f64().unwrap()).collect();
    assert_eq!(got, vec![1.25, 1.0625, 1.015625]);
    assert_eq!(v["summary"]["recovered"][0]["recovered"][0], 1.015625);
    assert!(v["summary"]["recovered"][0].get("richardson").is_none());

    let v = json(&run(&["recover", "--f", path(&f), "--word", "1", "--N", "2,4"]));
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["exact"]["re"], 0.0);
        assert_eq!(row["exact"]["exact"], true);
    }

    let g = write(dir.path(), "g.json", r#"{"m": 1, "terms": [{"word": [1], "re": 3}]}"#);
    let v = json(&run(&["recover", "--f", path(&g), "--word", "1", "--N", "1,2,5", "--richardson"]));
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["exact"]["re"], 3.0);
    }
    assert_eq!(v["summary"]["recovered"][0]["richardson"][0], 3.0);
}

#[test]
fn inner_product_on_both_spaces() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", REMARK);
    assert_eq!(json(&run(&["inner", "--f", path(&f)]))["value"]["re"], 2.0);
    let ball = json(&run(&["inner", "--f", path(&f), "--space", "ball"]))["value"]["re"].as_f64().unwrap();
    assert!((ball - 0.5).abs() <= 1e-15);
    assert_eq!(run(&["inner", "--f", path(&f), "--space", "ball-row"]).status.code(), Some(1));
}

#[test]
fn upsilon_examples() {
    let dir = TempDir::new().unwrap();
    let half = write(dir.path(), "half.json", r#"{"m": 2, "n": 2, "matrices": [[[0.5,0],[0,0],[0,0],[0.5,0]], [[0.5,0],[0,0],[0,0],[0.5,0]]]}"#);
    let v = json(&run(&["upsilon", "--tuple", path(&half), "--p", "1"]));
    assert_eq!(v["status"], "ConvergedWithBound");
    assert!((v["bound"].as_f64().unwrap() - 2.0).abs() <= 1e-12);

    let nil = write(dir.path(), "nil.json", r#"{"m": 2, "n": 2, "matrices": [[[0,0],[3,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[0,0]]]}"#);
    for p in ["0.5", "1", "4"] {
        let v = json(&run(&["upsilon", "--tuple", path(&nil), "--p", p]));
        assert_eq!(v["status"], "ConvergedWithBound", "p = {p}");
    }

    let one = write(dir.path(), "one.json", r#"{"m": 2, "n": 1, "matrices": [[[1,0]], [[0,0]]]}"#);
    let v = json(&run(&["upsilon", "--tuple", path(&one), "--p", "1"]));
    assert_eq!(v["status"], "DivergedAtDegree");

    assert_eq!(run(&["upsilon", "--tuple", path(&one), "--p", "0"]).status.code(), Some(2));
}

#[test]
fn kernel_of_scalars() {
    let dir = TempDir::new().unwrap();
    let x = write(dir.path(), "x.json", r#"{"m": 1, "n": 1, "matrices": [[[0.5,0]]]}"#);
    let y = write(dir.path(), "y.json", r#"{"m": 1, "n": 1, "matrices": [[[0.4,0]]]}"#);
    let v = json(&run(&["kernel", "--x", path(&x), "--y", path(&y), "--max-degree", "60"]));
    let k = v["value"][0][0][0].as_f64().unwrap();
    assert!((k - 1.25).abs() <= 1e-14, "{k}");
    assert!(v["tail_bound"].as_f64().unwrap() <= 1e-30);
}

#[test]
fn profile_grid() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", REMARK);
    let v = json(&run(&["profile", "--f", path(&f), "--N", "1,2,4", "--r", "1"]));
    let cells: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["exact"]["re"].as_f64().unwrap()).collect();
    assert_eq!(cells, vec![4.0, 2.5, 2.125]);
    assert_eq!(v["summary"][0]["sup_estimate"], 4.0);
    assert_eq!(v["summary"][0]["norm_sq"], 2.0);

    let v = json(&run(&["profile", "--f", path(&f), "--radial", "--N", "2", "--r", "0.5,1"]));
    assert_eq!(v["phi"].as_array().unwrap().len(), 2);
}

#[test]
fn freeness_report() {
    let v = json(&run(&["freeness", "--factor", "1:1", "--factor", "2:1", "--factor", "1:-1", "--factor", "2:-1", "--N", "4,8", "--samples", "2000"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][0]["estimate"]["samples"], 2000);
    // adjacent factors from one ensemble are not alternating
    let out = run(&["freeness", "--factor", "1:1", "--factor", "1:2", "--N", "4", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["freeness", "--factor", "nonsense"]).status.code(), Some(1));
}

#[test]
fn malformed_series_names_the_term() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", r#"{"m": 2, "terms": [{"word": [1], "re": 1}, {"word": [1, 7], "re": 1}]}"#);
    let out = run(&["inner", "--f", path(&f)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("term 1"));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["inner", "--f", path(&missing)]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["wg"]).status.code(), Some(1));
    assert_eq!(run(&["wg", "--n", "2", "--N", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.json", REMARK);
    let args = ["pairing", "--f", path(&f), "--N", "2,4", "--r", "0.5,1", "--engine", "both", "--samples", "3000", "--format", "csv", "--seed", "17"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("param_r,param_N,value_re,value_im,std_error"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);

    let c = bin().args(&args[..args.len() - 2]).env("NC_HARDY_SEED", "17").output().unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("wg.csv");
    let status = run(&["wg", "--n", "2", "--N", "3", "--format", "csv", "--out", path(&out)]);
    assert_eq!(status.status.code(), Some(0));
    assert!(status.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("cycle_type,param_N,value,exact\n"));
}

fn without_seed_and_samples(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("seed");
    for c in v["criteria"].as_array_mut().unwrap() {
        c.as_object_mut().unwrap().remove("sampled");
    }
    v
}

#[test]
fn selftest_seed_changes_only_seed_and_samples() {
    let a = json(&run(&["selftest", "--criterion", "1,2,3", "--seed", "1"]));
    let b = json(&run(&["selftest", "--criterion", "1,2,3", "--seed", "2"]));
    assert_eq!(a["passed"], true);
    assert_eq!(a["seed"], 1);
    assert_eq!(b["seed"], 2);
    assert_ne!(a["criteria"][1]["sampled"], b["criteria"][1]["sampled"]);
    assert_eq!(without_seed_and_samples(a), without_seed_and_samples(b));
}

#[test]
fn corrupted_weingarten_cache_fails_selftest() {
    let out = run(&["selftest", "--criterion", "1", "--corrupt-wg"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["criteria"][0]["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL criterion  1"));
}
