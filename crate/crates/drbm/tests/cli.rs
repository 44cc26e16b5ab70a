//! End-to-end tests of the `drbm` binary.

use drbm::cli::fmt_num;
use std::path::PathBuf;
use std::process::{Command, Output};

fn drbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drbm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("drbm-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

/// Data rows of a CSV table, metadata comments removed.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn csv_numbers_round_trip() {
    let out = drbm(&["green", "--a", "3,4", "--b", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["a", "b", "g", "imag", "error", "tail", "subdivisions"]);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        for cell in &row[..6] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&fmt_num(v), cell);
        }
    }
}

#[test]
fn json_matches_csv() {
    let csv = drbm(&["critical", "--mu1", "0.2", "--mu2", "0.8", "--r2", "2"]);
    let json = drbm(&["critical", "--mu1", "0.2", "--mu2", "0.8", "--r2", "2", "--format", "json"]);
    let (_, rows) = csv_rows(&stdout(&csv));
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let jrow = v["rows"][0].as_array().unwrap();
    for (c, j) in rows[0].iter().zip(jrow) {
        assert_eq!(c.parse::<f64>().unwrap(), j.as_f64().unwrap());
    }
    assert_eq!(v["metadata"]["r2"], "2.0000000000000000e0 (flag)");
}

#[test]
fn config_precedence() {
    let kv = temp_file("model.conf", "# P1\nmu1 = 0.2\nmu2 = 0.8\nr2 = 2\n");
    let js = temp_file("model.json", r#"{"mu1": 0.2, "mu2": 0.8, "r2": 2}"#);
    for file in [&kv, &js] {
        let from_file = drbm(&["normalize", "--config", file.to_str().unwrap()]);
        assert!(from_file.status.success(), "{}", stderr(&from_file));
        let text = stdout(&from_file);
        assert!(text.contains("# r2 = 2.0000000000000000e0 (file)"));
        assert!(text.contains("# r1 = 0.0000000000000000e0 (default)"));
        let overridden = drbm(&["normalize", "--config", file.to_str().unwrap(), "--r2", "1.5"]);
        let (_, rows) = csv_rows(&stdout(&overridden));
        let r2 = rows.iter().find(|r| r[0] == "r2").unwrap();
        assert_eq!(r2[1].parse::<f64>().unwrap(), 1.5);
    }
    std::fs::remove_file(kv).unwrap();
    std::fs::remove_file(js).unwrap();
}

#[test]
fn bad_configuration_names_the_key() {
    let unknown = temp_file("unknown.conf", "mu1 = 0.3\ndrift = 1\n");
    let out = drbm(&["critical", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`drift`"), "{}", stderr(&out));
    let garbled = temp_file("garbled.conf", "r1 = one\n");
    let out = drbm(&["critical", "--config", garbled.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`r1`"));
    let out = drbm(&["critical", "--sigma2", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`sigma2`"));
    let out = drbm(&["harmonic", "--z0-x", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`z0_x`"));
    let out = drbm(&["critical", "--config", "/nonexistent/drbm.conf"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(unknown).unwrap();
    std::fs::remove_file(garbled).unwrap();
}

#[test]
fn non_convergence_exits_with_three() {
    let out = drbm(&["green", "--rel-tol", "1e-300", "--abs-tol", "1e-300", "--max-subdiv", "40"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn simulate_is_seeded_and_thread_independent() {
    let missing = drbm(&["simulate", "--experiment", "green-box"]);
    assert_eq!(missing.status.code(), Some(2));
    let args = ["simulate", "--experiment", "boundary", "--seed", "5", "--n-paths", "500", "--a", "2"];
    let one = drbm(&[&args[..], &["--threads", "1"]].concat());
    let two = drbm(&[&args[..], &["--threads", "3"]].concat());
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(stdout(&one), stdout(&two));
    let (header, rows) = csv_rows(&stdout(&one));
    assert_eq!(header[header.len() - 3..], ["mean", "se", "n"]);
    assert_eq!(rows[0].last().unwrap(), "500");
}

#[test]
fn simulate_experiments_emit_their_columns() {
    let cases: [(&str, &[&str], &[&str]); 4] = [
        ("green-box", &["--side", "1"], &["a", "b", "side", "censored", "mean", "se", "n"]),
        ("laplace", &["--target", "face1"], &["target", "x", "y", "censored", "mean", "se", "n"]),
        ("harmonicity", &["--t", "0.5"], &["alpha", "t", "mean", "se", "n"]),
        ("arc", &["--z0-x", "0.3", "--z0-y", "0.3"], &["alpha", "h_z0", "excluded", "mean", "se", "n"]),
    ];
    for (experiment, extra, columns) in cases {
        let args = [&["simulate", "--experiment", experiment, "--seed", "1", "--n-paths", "200"][..], extra].concat();
        let out = drbm(&args);
        assert!(out.status.success(), "{experiment}: {}", stderr(&out));
        let (header, rows) = csv_rows(&stdout(&out));
        assert_eq!(header, columns, "{experiment}");
        assert_eq!(rows.len(), 1);
    }
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("drbm-cli-{}-harmonic.csv", std::process::id()));
    let out = drbm(&["harmonic", "--n", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let (header, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(header, ["alpha", "h", "case", "terms", "tail"]);
    assert_eq!(rows.len(), 3);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn analytic_subcommands_succeed() {
    for args in [
        &["validate"][..],
        &["kernel-scan", "--n", "5"],
        &["transforms", "--n", "3"],
        &["asymptotics", "--alpha", "0,0.5236,1.5707"],
        &["martin-scan", "--n", "3", "--mu1", "0.2", "--mu2", "0.8", "--r2", "2"],
    ] {
        let out = drbm(args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn verify_reports_each_criterion() {
    let pass = drbm(&["verify", "--quick", "--criteria", "1,5"]);
    assert_eq!(pass.status.code(), Some(0), "{}", stderr(&pass));
    let (header, rows) = csv_rows(&stdout(&pass));
    assert_eq!(header, ["criterion", "name", "passed", "check", "measured", "bound", "seconds"]);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] == "1"));
    assert!(stderr(&pass).contains("criterion  1 PASS"));
    let fail = drbm(&["verify", "--quick", "--criteria", "13"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(stderr(&fail).contains("criterion 13 FAIL"));
    let unknown = drbm(&["verify", "--criteria", "15"]);
    assert_eq!(unknown.status.code(), Some(2));
}
