use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn divbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Value of column `col` in the row whose first field is `key`.
fn lookup(csv: &str, key: &str, col: usize) -> f64 {
    csv.lines()
        .find(|l| l.split(',').next() == Some(key))
        .unwrap_or_else(|| panic!("no row {key} in\n{csv}"))
        .split(',')
        .nth(col)
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn vajda_kl_matches_parametric_formula() {
    let t: f64 = 1.0;
    let s2 = t.sinh().powi(2);
    let v = 2.0 / t.tanh() - t / s2 - 1.0 / t;
    let expect = (t / t.sinh()).ln() + t / t.tanh() - t * t / s2;
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "vajda_kl.csv");
    let eps = format!("0,0.5,{v:.15},1.5");
    let o = divbound(&["vajda", "--spec", "kl", "--eps", &eps, "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("eps,L\n"));
    let row = csv.lines().nth(3).unwrap();
    let l: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((l - expect).abs() < 1e-6, "{row}");
}

#[test]
fn vajda_grid_and_height_curve() {
    let o = divbound(&["vajda", "--spec", "kl", "--eps", "0:1.9:0.05"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 39);
    let o = divbound(&["vajda", "--spec", "kl", "--w", "0:3:1"]);
    let csv = stdout(&o);
    assert!(csv.starts_with("w,H,lambda_w\n"));
    assert!((lookup(&csv, "1", 1) - 0.12).abs() < 0.005);
    assert!((lookup(&csv, "3", 1) - 1.01).abs() < 0.005);
}

#[test]
fn chi_square_cgf_row() {
    let o = divbound(&[
        "cgf",
        "--spec",
        "chi2",
        "--dist",
        "uniform:-1,1",
        "--t",
        "-2:2:0.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("t,K,lambda_opt,finite\n"));
    assert_eq!(csv.lines().count(), 42);
    assert!((lookup(&csv, "0.5", 1) - 0.0625).abs() < 1e-12);
    assert_eq!(lookup(&csv, "0.5", 3), 1.0);
}

#[test]
fn oracle_check_passes() {
    let o = divbound(&[
        "oracle-check",
        "--spec",
        "kl",
        "--seed",
        "7",
        "--trials",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("50/50"));
    let o = divbound(&["varrep-check", "--seed", "1", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn identical_inputs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = path(dir.path(), name);
        let o = Command::new(env!("CARGO_BIN_EXE_divbound"))
            .args([
                "bound",
                "--spec",
                "squared_hellinger",
                "--dist",
                "gaussian:0,1",
                "--order",
                "12",
            ])
            .args(["--eps", "-1:1:0.1", "--format", "json", "--out", &out])
            .env("DIVBOUND_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let a = run("a.json", "4");
    assert_eq!(a, run("b.json", "4"));
    assert_eq!(a, run("c.json", "1"));
    let check = |name: &str| {
        let out = path(dir.path(), name);
        divbound(&[
            "oracle-check",
            "--spec",
            "chi2",
            "--seed",
            "3",
            "--trials",
            "10",
            "--out",
            &out,
        ]);
        fs::read(out).unwrap()
    };
    assert_eq!(check("r1.json"), check("r2.json"));
}

#[test]
fn dumped_distribution_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dump = path(dir.path(), "dist.csv");
    let s1 = path(dir.path(), "s1.json");
    let s2 = path(dir.path(), "s2.json");
    let o = divbound(&[
        "bound",
        "--spec",
        "kl",
        "--dist",
        "gamma:2,1.5",
        "--order",
        "10",
        "--eps",
        "0,0.5",
        "--dump-dist",
        &dump,
        "--summary",
        &s1,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = divbound(&[
        "bound",
        "--spec",
        "kl",
        "--dist",
        &dump,
        "--eps",
        "0,0.5",
        "--summary",
        &s2,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let digest = |p: &str| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["dist_digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest(&s1), digest(&s2));
}

#[test]
fn measure_and_function_files() {
    let dir = tempfile::tempdir().unwrap();
    let nu = path(dir.path(), "nu.csv");
    let g = path(dir.path(), "g.csv");
    fs::write(&nu, "point_id,weight\na,0.5\nb,0.5\n").unwrap();
    fs::write(&g, "point_id,value\na,-1\nb,1\n").unwrap();
    let o = divbound(&[
        "bound",
        "--spec",
        "kl",
        "--dist",
        &nu,
        "--g",
        &g,
        "--eps",
        "0,0.5,1,1.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("eps,L,boundary,provenance\n"));
    assert!((lookup(&csv, "0.5", 1) - 0.130812035941).abs() < 1e-9);
    assert!(csv.contains("1.5,inf,0,conjugate-of-cgf"));
    assert!(csv.contains("1,0.69314718056,1,conjugate-of-cgf"));
    // A class {g, −g} gives the bound on |μ(g) − ν(g)|.
    let o = divbound(&[
        "bound", "--spec", "kl", "--dist", &nu, "--g", &g, "--g", &g, "--abs", "--eps", "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((lookup(&stdout(&o), "0.5", 1) - 0.130812035941).abs() < 1e-9);
}

#[test]
fn pinsker_reports() {
    let o = divbound(&[
        "pinsker", "--spec", "alpha", "--alpha", "0.5", "--kind", "optimal",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["constant"], 0.5);
    let o = divbound(&[
        "pinsker", "--spec", "alpha", "--alpha", "3", "--kind", "optimal",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], false);
    assert!(v["violating_z"].is_number());
}

#[test]
fn bad_input_exits_one_without_panicking() {
    let dir = tempfile::tempdir().unwrap();
    let bad_csv = path(dir.path(), "bad.csv");
    fs::write(&bad_csv, "point_id,weight\n0,0.5\n1,NaN\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "cgf",
            "--spec",
            "nope",
            "--dist",
            "uniform:0,1",
            "--t",
            "0:1:0.5",
        ],
        vec![
            "cgf",
            "--spec",
            "alpha",
            "--dist",
            "uniform:0,1",
            "--t",
            "0:1:0.5",
        ],
        vec![
            "cgf",
            "--spec",
            "kl",
            "--dist",
            "uniform:0,1",
            "--t",
            "1:0:0.5",
        ],
        vec![
            "cgf",
            "--spec",
            "kl",
            "--dist",
            "uniform:0,1",
            "--t",
            "0:1:-1",
        ],
        vec![
            "cgf",
            "--spec",
            "kl",
            "--dist",
            "/no/such/file.csv",
            "--t",
            "0",
        ],
        vec!["cgf", "--spec", "kl", "--dist", &bad_csv, "--t", "0"],
        vec![
            "cgf",
            "--spec",
            "kl",
            "--dist",
            "weighted:0@0.3,1@0.3",
            "--t",
            "0",
        ],
        vec![
            "cgf",
            "--spec",
            "kl",
            "--dist",
            "uniform:0,1",
            "--t",
            "0",
            "--range-override",
            "0.5,0.7",
        ],
        vec![
            "cgf",
            "--spec",
            "{\"name\":",
            "--dist",
            "uniform:0,1",
            "--t",
            "0",
        ],
        vec!["bound", "--spec", "kl", "--dist", "point:1", "--eps", "0.1"],
        vec!["pinsker", "--spec", "total_variation", "--kind", "crude"],
        vec!["oracle-check", "--trials", "0"],
        vec!["bogus-command"],
        vec!["cgf", "--spec", "kl"],
    ];
    for args in cases {
        let o = divbound(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
    let o = Command::new(env!("CARGO_BIN_EXE_divbound"))
        .args(["vajda", "--spec", "kl", "--eps", "0.5"])
        .env("DIVBOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn custom_spec_and_json_output() {
    let spec = r#"{"breakpoints":[1.0],"values":[0.0],"left_slope":-1.0,"right_slope":1.0}"#;
    let o = divbound(&[
        "vajda", "--spec", spec, "--eps", "0.5,1", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // |x − 1| is total variation itself.
    let l = v["samples"][1]["L"].as_f64().unwrap();
    assert!((l - 1.0).abs() < 1e-6);
    let o = divbound(&["vajda", "--spec", "kl", "--eps", "2.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["samples"][0]["L"], "inf");
}
