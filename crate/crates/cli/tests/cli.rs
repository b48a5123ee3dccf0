use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qoqudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoqudit"))
        .args(args)
        .env_remove("QOQUDIT_GUARDS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// The number after `label:` on the first matching line.
fn value(text: &str, label: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no {label} in\n{text}"));
    line[label.len()..].trim_start_matches(':').split_whitespace().next().unwrap().parse().unwrap()
}

fn write_matrix(path: &Path, rows: &[Vec<[f64; 2]>]) {
    std::fs::write(path, serde_json::to_string(rows).unwrap()).unwrap();
}

fn identity(d: usize) -> Vec<Vec<[f64; 2]>> {
    (0..d).map(|i| (0..d).map(|j| [if i == j { 1.0 } else { 0.0 }, 0.0]).collect()).collect()
}

#[test]
fn literal_elementary_has_sixteen_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = qoqudit(&["compile", "--n", "3", "--k", "3", "--sigma", "X", "--literal", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = read_json(&out);
    assert_eq!(f["pulses"].as_array().unwrap().len(), 16);
    assert_eq!(f["n"], 3);
    assert_eq!(f["convention"], "application_order");
    assert_eq!(f["meta"]["verification"], "passed");
}

#[test]
fn single_level_literal_is_one_pulse() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = qoqudit(&["compile", "--n", "1", "--k", "1", "--sigma", "X", "--literal", "-o", path_str(&out)]);
    assert!(o.status.success());
    assert_eq!(read_json(&out)["pulses"].as_array().unwrap().len(), 1);
}

#[test]
fn identity_target_compiles_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("id.json");
    let out = dir.path().join("seq.json");
    write_matrix(&t, &identity(6));
    let o = qoqudit(&["compile", "--n", "2", "--target", path_str(&t), "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(read_json(&out)["pulses"].as_array().unwrap().is_empty());
}

#[test]
fn empty_sequence_has_no_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.json");
    std::fs::write(&f, r#"{"version": 1, "n": 3, "convention": "application_order", "pulses": []}"#).unwrap();
    let o = qoqudit(&["verify", path_str(&f)]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "leakage"), 0.0);
}

#[test]
fn published_sequence_reaches_target_blocks() {
    let o = qoqudit(&["verify", path_str(&fixture("published_x.json"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    let sideband: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("sideband")).skip(2).take(3).collect();
    // Blocks 1 and 2 are the identity, block 3 is a pi rotation.
    for (line, angle) in sideband.iter().zip([0.0, 0.0, std::f64::consts::PI]) {
        let a: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
        assert!((a - angle).abs() < 2e-4, "{line}");
    }
}

#[test]
fn sideband_leakage_follows_sine() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("one.json");
    let (n, theta) = (2usize, 0.7f64);
    std::fs::write(
        &f,
        format!(
            r#"{{"version": 1, "n": {n}, "convention": "application_order", "pulses": [{{"kind": "red_sideband", "theta": {theta}, "phi": 0.0}}]}}"#
        ),
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let o = qoqudit(&["verify", path_str(&f), "--json", path_str(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let expect = (theta * ((n + 1) as f64).sqrt() / 2.0).sin().powi(2);
    let got = read_json(&report)["leakage"].as_f64().unwrap();
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn compile_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let out = dir.path().join("seq.json");
    let o = qoqudit(&["compile", "--n", "2", "--random-seed", "11", "--write-target", path_str(&t), "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qoqudit(&["verify", path_str(&out), "--target", path_str(&t)]);
    assert!(o.status.success());
    assert!(1.0 - value(&stdout(&o), "fidelity") < 1e-12);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let seq = dir.path().join(format!("seq{tag}.json"));
        let csv = dir.path().join(format!("s{tag}.csv"));
        assert!(qoqudit(&["compile", "--n", "4", "--k", "2", "--sigma", "Y", "-o", path_str(&seq)]).status.success());
        let o = qoqudit(&["scaling", "--n-min", "3", "--n-max", "5", "--csv", path_str(&csv), "--no-timing", "--threads", tag]);
        assert!(o.status.success());
        (std::fs::read(seq).unwrap(), std::fs::read(csv).unwrap())
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn scaling_writes_header_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let o = qoqudit(&["scaling", "--n-min", "3", "--n-max", "3", "--csv", path_str(&csv), "--plot", path_str(&svg)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,k,sigma,pulse_count,l,fidelity,leakage,wall_time_s"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["3", "3", "X", "16"]);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn malformed_sequence_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, r#"{"version": 1, "n": 3, "convention": "application_order", "pulses": [{"kind": "carrier"}]}"#).unwrap();
    let o = qoqudit(&["verify", path_str(&f)]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&f, r#"{"version": 1, "n": 3, "convention": "reverse", "pulses": []}"#).unwrap();
    assert_eq!(qoqudit(&["verify", path_str(&f)]).status.code(), Some(2));
}

#[test]
fn zero_guards_and_bad_flags_exit_two() {
    assert_eq!(qoqudit(&["compile", "--n", "3", "--k", "1", "--sigma", "X", "--guards", "0"]).status.code(), Some(2));
    assert_eq!(qoqudit(&["compile", "--n", "3"]).status.code(), Some(2));
    assert_eq!(qoqudit(&["compile", "--n", "3", "--k", "5", "--sigma", "X"]).status.code(), Some(2));
}

#[test]
fn mismatched_n_exits_two() {
    assert_eq!(qoqudit(&["verify", path_str(&fixture("published_x.json")), "--n", "4"]).status.code(), Some(2));
}

#[test]
fn wrong_target_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("id.json");
    write_matrix(&t, &identity(8));
    let o = qoqudit(&["verify", path_str(&fixture("published_x.json")), "--target", path_str(&t)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ggm_lists_all_generators() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ggm.json");
    let o = qoqudit(&["ggm", "--d", "4", "--check", "-o", path_str(&out)]);
    assert!(o.status.success());
    let v = read_json(&out);
    let count = ["z_type", "x_type", "y_type"].iter().map(|k| v[k].as_array().unwrap().len()).sum::<usize>();
    assert_eq!(count, 15);
    assert_eq!(v["x_type"][0]["matrix"][0][1], serde_json::json!([1.0, 0.0]));
}

#[test]
fn guard_count_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = Command::new(env!("CARGO_BIN_EXE_qoqudit"))
        .args(["compile", "--n", "3", "--k", "2", "--sigma", "X", "-o", path_str(&out)])
        .env("QOQUDIT_GUARDS", "5")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read_json(&out)["meta"]["guards"], 5);
    let o = Command::new(env!("CARGO_BIN_EXE_qoqudit"))
        .args(["compile", "--n", "3", "--k", "2", "--sigma", "X"])
        .env("QOQUDIT_GUARDS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
