use std::path::Path;
use std::process::{Command, Output};

use htbif_core::nodal::nodal_pair;
use htbif_core::spectral::mu_threshold;
use htbif_core::ModelParams;
use serde_json::Value;

fn htbif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htbif"))
        .args(args)
        .output()
        .expect("spawn htbif")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}, stderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn critical_values_round_trip() {
    let out = stdout(&htbif(&["critical", "--b", "1", "--d", "1", "--kappa-max", "3"]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["kappa", "mu_kappa"]);
    assert_eq!(rows.len(), 4);
    let p = ModelParams::desk();
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<u32>().unwrap(), k as u32);
        assert_eq!(r[1].parse::<f64>().unwrap(), mu_threshold(k as u32, &p));
    }
}

#[test]
fn nodal_csv_round_trips_bit_for_bit() {
    let out = stdout(&htbif(&["nodal", "--n", "1", "--lambda", "25", "--mu", "50", "--n-points", "201"]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["x", "w_lower", "w_upper"]);
    let (lo, up) = nodal_pair(1, &ModelParams::desk(), 201).unwrap();
    assert_eq!(rows.len(), 201);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<f64>().unwrap(), lo.profile.x(i));
        assert_eq!(r[1].parse::<f64>().unwrap(), lo.profile.values()[i]);
        assert_eq!(r[2].parse::<f64>().unwrap(), up.profile.values()[i]);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["nodal", "--lambda", "25", "--mu", "50", "--n-points", "201"][..],
        &["morse", "--mu", "50", "--n-lambda", "4", "--n-points", "401"][..],
        &["census", "--eps", "1e-3", "--lambda", "25", "--mu", "50", "--n-points", "201"][..],
    ] {
        let a = htbif(args);
        let b = htbif(args);
        assert!(a.status.success(), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn missing_mu_names_the_flag() {
    let o = htbif(&["nodal", "--lambda", "25"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--mu"), "{}", stderr(&o));
}

#[test]
fn invalid_values_name_the_flag() {
    for (args, flag) in [
        (&["nodal", "--lambda", "25", "--mu", "-1"][..], "--mu"),
        (&["nodal", "--lambda", "0", "--mu", "50"][..], "--lambda"),
        (&["nodal", "--lambda", "25", "--mu", "50", "--n-points", "200"][..], "--n-points"),
        (&["timemap", "--lambda", "25", "--mu", "50", "--b", "nan"][..], "--b"),
        (&["perturb", "--eps", "-1", "--lambda", "25", "--mu", "50"][..], "--eps"),
        (&["perturb", "--eps", "0.001", "--lambda", "25", "--mu", "50", "--a", "linear"][..], "--a"),
        (&["bifdir", "--mu", "50"][..], "--side"),
        (&["nodal", "--lambda", "25", "--mu", "50", "--format", "svg"][..], "--format"),
    ] {
        let o = htbif(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn outside_the_window_is_a_reported_failure() {
    let o = htbif(&["nodal", "--lambda", "5", "--mu", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no solution"), "{}", stderr(&o));
}

#[test]
fn output_directory_is_checked_before_compute() {
    let o = htbif(&["diagram", "--mu", "50", "-o", "/nonexistent-dir/d.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--output"));
}

#[test]
fn help_and_version_exit_zero() {
    let h = htbif(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    let text = String::from_utf8_lossy(&h.stdout);
    assert!(text.contains("--seed-check") && text.contains("census"));
    assert_eq!(htbif(&["--version"]).status.code(), Some(0));
    assert_eq!(htbif(&["--bogus"]).status.code(), Some(1));
}

#[test]
fn config_file_sits_between_flag_and_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "mu = 50.0\nlambda = 25.0\nn-points = 201\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&htbif(&["--config", cfg, "nodal"]));
    let explicit = stdout(&htbif(&["nodal", "--lambda", "25", "--mu", "50", "--n-points", "201"]));
    assert_eq!(from_file, explicit);
    let flag_wins = stdout(&htbif(&["--config", cfg, "nodal", "--lambda", "30"]));
    let direct = stdout(&htbif(&["nodal", "--lambda", "30", "--mu", "50", "--n-points", "201"]));
    assert_eq!(flag_wins, direct);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "mu = 50.0\nlamda = 25.0\n").unwrap();
    let o = htbif(&["--config", bad.to_str().unwrap(), "nodal"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
}

fn svg_at(mu: &str, dir: &Path) -> String {
    let path = dir.join(format!("d{mu}.svg"));
    let csv = stdout(&htbif(&[
        "diagram", "--b", "1", "--d", "1", "--mu", mu, "--n-lambda", "12", "--svg", path.to_str().unwrap(),
    ]));
    assert!(csv.starts_with("n,lambda,w_minus_lower"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn diagram_has_constant_branch_and_one_loop_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let one = svg_at("50", dir.path());
    assert!(one.starts_with("<svg") && one.trim_end().ends_with("</svg>"));
    assert!(one.contains(r#"id="C0""#) && one.contains("clipped at"));
    assert_eq!(one.matches("<polygon").count(), 1);
    let two = svg_at("200", dir.path());
    assert_eq!(two.matches("<polygon").count(), 2);
    let none = svg_at("30", dir.path());
    assert_eq!(none.matches("<polygon").count(), 0);
    assert_eq!(svg_at("50", dir.path()), one);
}

#[test]
fn json_outputs_carry_the_schema_tag() {
    let v: Value = serde_json::from_str(&stdout(&htbif(&["bifdir", "--mu", "50", "--side", "minus"]))).unwrap();
    assert_eq!(v["schema"], "htbif/1");
    assert_eq!(v["expansion"]["side"], "minus");
    assert!(v["expansion"]["eta2_estimate"].as_f64().unwrap() > 0.0);

    let v: Value = serde_json::from_str(&stdout(&htbif(&[
        "census", "--eps", "1e-3", "--lambda", "25", "--mu", "50", "--n-points", "401",
    ])))
    .unwrap();
    assert_eq!(v["schema"], "htbif/1");
    assert_eq!(v["distinct_count"], 3);
    assert_eq!(v["states"][0]["w"].as_array().unwrap().len(), 401);
}

#[test]
fn perturb_accepts_tabulated_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("a.csv");
    let mut body = String::from("x,a\n");
    for i in 0..=20 {
        let x = i as f64 / 20.0;
        body.push_str(&format!("{x},{}\n", 1.0 + 0.5 * x));
    }
    std::fs::write(&table, body).unwrap();
    let spec = format!("csv:{}", table.display());
    let out = stdout(&htbif(&[
        "perturb", "--eps", "1e-3", "--lambda", "25", "--mu", "50", "--a", &spec, "--c", "const:2", "--n-points", "401",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "htbif/1");
    let states = v["states"].as_array().unwrap();
    assert_eq!(states.len(), 3, "{}", v["failures"]);
    for s in states {
        assert!(s["residual_sup"].as_f64().unwrap() < 1e-9);
        assert!(s["newton_iters"].as_u64().is_some());
        assert_eq!(s["w"].as_array().unwrap().len(), 401);
        assert_eq!(s["positive"], true);
    }
    assert_eq!(states[0]["origin"]["kind"], "constant");
    assert_eq!(states[1]["origin"]["branch"], "lower");
}
