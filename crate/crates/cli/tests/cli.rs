use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgfisher"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// data rows of a CSV with a leading `# config:` line, keyed by header
fn csv_rows(o: &Output) -> (Value, Vec<Vec<(String, String)>>) {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let config = lines.next().unwrap().strip_prefix("# config: ").expect("config line");
    let config: Value = serde_json::from_str(config).unwrap();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect();
    (config, rows)
}

fn cell<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no column {key}")).1
}

#[test]
fn gaussian_measures_agree_across_methods() {
    let o = run(&["measures", "--n", "1", "--alpha", "2", "--q", "1", "--gamma", "1", "--method", "both"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert!(v["max_rel_diff"].as_f64().unwrap() < 1e-6);
    assert!((v["closed_form"]["m_alpha"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["closed_form"]["I_bq"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["config"]["params"]["n"], 1);
}

#[test]
fn divergent_mq_is_invalid_input() {
    let o = run(&["measures", "--n", "2", "--alpha", "2", "--q", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Mq-finiteness"), "{}", stderr(&o));
}

#[test]
fn compact_measures_in_csv() {
    let o = run(&["measures", "--n", "1", "--alpha", "2", "--q", "2", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let (config, rows) = csv_rows(&o);
    assert_eq!(config["subcommand"], "measures");
    assert_eq!(rows.len(), 1);
    let mq: f64 = cell(&rows[0], "mq").parse().unwrap();
    let m: f64 = cell(&rows[0], "m_alpha").parse().unwrap();
    assert!((mq - 0.6).abs() < 1e-12 && (m - 0.2).abs() < 1e-12);
}

#[test]
fn qgaussian_saturates_every_inequality() {
    let o = run(&["verify", "--n", "2", "--alpha", "2", "--q", "1.2", "--gamma", "3", "--all"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert_eq!(r["equality"], true, "{r}");
        assert!(r["deficit"].as_f64().unwrap().abs() <= 1e-5);
    }
    assert_eq!(v["all_pass"], true);
}

#[test]
fn mixture_is_strict_for_stam() {
    let o = run(&[
        "verify", "--n", "1", "--alpha", "2", "--q", "1", "--density", "mixture:0.5,0,1;0.5,0,4", "--ineq", "stam",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &json(&o)["reports"][0];
    assert_eq!(r["passes"], true);
    assert_eq!(r["equality"], false);
    assert!(r["ratio"].as_f64().unwrap() > 1.0 + 1e-6);
}

#[test]
fn stam_condition_violation_exits_2() {
    let o = run(&["verify", "--n", "3", "--q", "0.6", "--ineq", "stam"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Stam"), "{}", stderr(&o));
}

#[test]
fn failed_inequality_exits_4() {
    // a negative tolerance demands a strict margin that the equality case lacks
    let o = run(&["verify", "--ineq", "stam", "--rel-tol=-0.01"]);
    assert_eq!(code(&o), 4);
    assert_eq!(json(&o)["all_pass"], false);
}

#[test]
fn uniform_ball_skips_fisher_checks() {
    let o = run(&["verify", "--n", "2", "--density", "uniform-ball", "--all"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["reports"].as_array().unwrap().len(), 1);
    assert_eq!(v["skipped"].as_array().unwrap().len(), 3);
    let o = run(&["verify", "--n", "2", "--density", "uniform-ball", "--ineq", "stam"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn q_sweep_has_zero_deficits() {
    let o = run(&["sweep", "--n", "1", "--alpha", "2", "--grid", "q=0.8:2.0:0.1", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (config, rows) = csv_rows(&o);
    assert_eq!(config["grid"][0], "q=0.8:2.0:0.1");
    assert_eq!(rows.len(), 13);
    for row in &rows {
        for key in ["deficit_fisher_moment_entropy", "deficit_moment_entropy", "deficit_stam", "deficit_cramer_rao"] {
            let d: f64 = cell(row, key).parse().unwrap();
            assert!(d.abs() <= 1e-5, "{key} = {d}");
        }
    }
}

#[test]
fn deficits_do_not_depend_on_gamma() {
    let o = run(&["sweep", "--n", "2", "--alpha", "1.5", "--q", "1.3", "--grid", "gamma=0.5,1,2,4", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    for name in ["fisher-moment-entropy", "moment-entropy", "stam", "cramer-rao"] {
        let d: Vec<f64> = rows.iter().map(|r| r["deficits"][name].as_f64().unwrap()).collect();
        for x in &d {
            assert!((x - d[0]).abs() <= 1e-8, "{name}: {d:?}");
        }
    }
}

#[test]
fn empty_grid_exits_2() {
    assert_eq!(code(&run(&["sweep", "--grid", "q=2:1:0.1"])), 2);
    assert_eq!(code(&run(&["sweep"])), 2);
}

#[test]
fn sampling_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = run(&[
            "sample", "--n", "2", "--alpha", "2", "--q", "1.5", "--count", "500", "--seed", "42", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    // the config lines differ only in the recorded output path
    let body = |t: &str| t.split_once('\n').unwrap().1.to_string();
    assert_eq!(body(&ta), body(&tb));
    let text = ta;
    let mut lines = text.lines();
    let config: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(config["seed"], 42);
    assert!(config["rng"].as_str().unwrap().contains("ChaCha20"));
    assert_eq!(lines.next(), Some("x1,x2"));
    assert_eq!(lines.count(), 500);
}

#[test]
fn minimize_reaches_closed_form() {
    let o = run(&["minimize", "--n", "1", "--alpha", "2", "--q", "1", "--moment", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    let obj = v["objective"].as_f64().unwrap();
    let opt = v["closed_form_optimum"].as_f64().unwrap();
    assert!((opt - 0.25).abs() < 1e-12);
    assert!((obj - opt).abs() / opt < 1e-4, "{obj} vs {opt}");
    assert!(v["prop1_gap"].as_f64().unwrap() <= 1e-4);
    assert!(v["relative_l2_to_closed_form"].as_f64().unwrap() <= 1e-3);
    assert_eq!(v["converged"], true);
}

#[test]
fn minimize_rejects_negative_moment() {
    let o = run(&["minimize", "--moment", "-1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_echo_reproduces_the_run() {
    let o = run(&["verify", "--n", "2", "--alpha", "3", "--q", "1.2", "--gamma", "0.5", "--all"]);
    let v = json(&o);
    let p = &v["config"]["params"];
    let args: Vec<String> = [
        "verify".into(),
        "--n".into(),
        p["n"].to_string(),
        "--alpha".into(),
        p["alpha"].to_string(),
        "--q".into(),
        p["q"].to_string(),
        "--gamma".into(),
        p["gamma"].to_string(),
        "--density".into(),
        v["config"]["density"].as_str().unwrap().into(),
        format!("--rel-tol={}", v["config"]["tolerances"]["rel_tol"]),
        format!("--eq-tol={}", v["config"]["tolerances"]["eq_tol"]),
        "--method".into(),
        v["config"]["method"].as_str().unwrap().into(),
        "--all".into(),
    ]
    .to_vec();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let again = json(&run(&args));
    assert_eq!(again, v);
}

#[test]
fn profile_table_density() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let mut text = String::from("r f\n");
    for i in 0..=400 {
        let r = i as f64 * 0.025;
        text.push_str(&format!("{r} {}\n", (-r * r / 2.0).exp()));
    }
    fs::write(&path, text).unwrap();
    let sel = format!("profile:{}", path.display());
    let o = run(&["measures", "--n", "1", "--density", &sel, "--method", "quadrature"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&o)["quadrature"]["m_alpha"].as_f64().unwrap();
    assert!((m - 1.0).abs() < 1e-4, "{m}");
}
