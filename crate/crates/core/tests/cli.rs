//! End-to-end tests of the binary: exit codes, golden outputs, reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Digest of the default single-path trajectory (reference parameters,
/// seed 42, Euler–Maruyama, dt = 1e-3, T = 5, raw policy), frozen at the
/// first correct run and regression-locked ever since.
const GOLDEN_TRAJECTORY_SHA256: &str =
    "55acf7be685f9e6a23b1fa314b286dea6392097a8c24c19c9aecda67c0adfece";

fn bin() -> PathBuf {
    env!("CARGO_BIN_EXE_hbvsim").into()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hbvsim-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hbvsim::manifest::sha256_hex(bytes)
}

#[test]
fn golden_trajectory_regression() {
    let dir = scratch("golden");
    run_ok(&["simulate", "--out", dir.to_str().unwrap()]);
    let csv = read(&dir.join("trajectory.csv"));
    assert_eq!(sha256_hex(&csv), GOLDEN_TRAJECTORY_SHA256);
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with(
        "t,x,y,z\n0.0000000000000000e0,5.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0\n"
    ));
    assert_eq!(text.lines().count(), 5002);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes_for_config_and_numeric_failures() {
    // unknown flag
    let out = run(&["simulate", "--nope", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // invalid parameter through a config file
    let dir = scratch("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.ini");
    std::fs::write(&cfg, "[model]\nmu1 = 0\n").unwrap();
    let out = run(&["stability", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu1"));
    // unknown command
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    // numerical blow-up: enormous step size
    let out = run(&[
        "simulate",
        "--steps",
        "10",
        "--t-end",
        "1000000000",
        "--out",
        dir.join("blow").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("step"), "message should name the step: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn zero_noise_schemes_emit_identical_csv() {
    let dir_em = scratch("zn-em");
    let dir_mil = scratch("zn-mil");
    let zero = ["--steps", "500", "--t-end", "1"];
    let mut args_em: Vec<&str> = vec!["simulate", "--scheme", "em", "--out"];
    args_em.push(dir_em.to_str().unwrap());
    args_em.extend_from_slice(&zero);
    let mut args_mil: Vec<&str> = vec!["simulate", "--scheme", "milstein", "--out"];
    args_mil.push(dir_mil.to_str().unwrap());
    args_mil.extend_from_slice(&zero);
    // zero noise via config file
    let cfg_path = std::env::temp_dir().join(format!("hbvsim-zn-{}.ini", std::process::id()));
    std::fs::write(&cfg_path, "[noise]\nsigma1 = 0\nsigma2 = 0\nsigma3 = 0\n").unwrap();
    args_em.extend_from_slice(&["--config", cfg_path.to_str().unwrap()]);
    args_mil.extend_from_slice(&["--config", cfg_path.to_str().unwrap()]);
    run_ok(&args_em);
    run_ok(&args_mil);
    assert_eq!(
        read(&dir_em.join("trajectory.csv")),
        read(&dir_mil.join("trajectory.csv"))
    );
    let _ = std::fs::remove_dir_all(&dir_em);
    let _ = std::fs::remove_dir_all(&dir_mil);
    let _ = std::fs::remove_file(&cfg_path);
}

#[test]
fn single_step_trajectory_has_two_rows() {
    let dir = scratch("onestep");
    run_ok(&["simulate", "--steps", "1", "--t-end", "1", "--out", dir.to_str().unwrap()]);
    let text = String::from_utf8(read(&dir.join("trajectory.csv"))).unwrap();
    assert_eq!(text.lines().count(), 3); // header + 2 states
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn compare_zero_noise_mean_equals_deterministic_columns() {
    let dir = scratch("cmp");
    let cfg_path = std::env::temp_dir().join(format!("hbvsim-cmp-{}.ini", std::process::id()));
    std::fs::write(&cfg_path, "[noise]\nsigma1 = 0\nsigma2 = 0\nsigma3 = 0\n").unwrap();
    run_ok(&[
        "compare",
        "--config",
        cfg_path.to_str().unwrap(),
        "--paths",
        "4",
        "--steps",
        "400",
        "--t-end",
        "1",
        "--samples",
        "41",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let text = String::from_utf8(read(&dir.join("compare.csv"))).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "t,det_x,det_y,det_z,mean_x,mean_y,mean_z,q05_x,q05_y,q05_z,q95_x,q95_y,q95_z"
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        // zero noise + euler overlay: mean columns equal det columns exactly
        assert_eq!(&f[1..4], &f[4..7], "row {line}");
    }
    let _ = std::fs::remove_dir_all(&dir);
    let _ = std::fs::remove_file(&cfg_path);
}

#[test]
fn compare_single_path_mean_is_that_path() {
    let dir_cmp = scratch("cmp1");
    let dir_sim = scratch("cmp1-sim");
    let common = ["--paths", "1", "--steps", "200", "--t-end", "1", "--seed", "7"];
    let mut args: Vec<&str> = vec!["compare", "--samples", "201", "--out", dir_cmp.to_str().unwrap()];
    args.extend_from_slice(&common);
    run_ok(&args);
    let mut args: Vec<&str> = vec!["simulate", "--out", dir_sim.to_str().unwrap()];
    args.extend_from_slice(&common);
    run_ok(&args);

    let cmp = String::from_utf8(read(&dir_cmp.join("compare.csv"))).unwrap();
    let sim = String::from_utf8(read(&dir_sim.join("trajectory.csv"))).unwrap();
    let sim_rows: Vec<&str> = sim.lines().skip(1).collect();
    for line in cmp.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let t = f[0];
        let row = sim_rows
            .iter()
            .find(|r| r.starts_with(&format!("{t},")))
            .unwrap_or_else(|| panic!("time {t} not in trajectory"));
        let sim_f: Vec<&str> = row.split(',').collect();
        assert_eq!(&f[4..7], &sim_f[1..4], "mean equals the single path at t={t}");
    }
    let _ = std::fs::remove_dir_all(&dir_cmp);
    let _ = std::fs::remove_dir_all(&dir_sim);
}

#[test]
fn stability_and_ergodic_reports() {
    let dir = scratch("reports");
    // verdicts are data: both commands exit 0 at the reference parameters
    let out = run_ok(&["stability", "--out", dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("NotConcluded"));
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("stability.json"))).unwrap();
    assert!((json["cond_a_value"].as_f64().unwrap() + 8.22).abs() < 1e-12);
    assert!((json["cond_b_lhs"].as_f64().unwrap() - 48.72).abs() < 1e-12);
    assert!((json["cond_b_rhs"].as_f64().unwrap() - 45.0456).abs() < 1e-12);
    assert_eq!(json["gamma_used"].as_f64().unwrap(), 5.0);

    let out = run_ok(&["ergodic", "--out", dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ErgodicConditionsHold"));
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("ergodic.json"))).unwrap();
    let report = &json["report"];
    assert!((report["k1"].as_f64().unwrap() - 14.75).abs() < 1e-12);
    assert!((report["k2"].as_f64().unwrap() - 0.44).abs() < 1e-12);
    assert!((report["k3"].as_f64().unwrap() - 5.56).abs() < 1e-12);
    assert!((report["omega"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert!(report["statement_discrepancy_note"].as_str().unwrap().len() > 10);

    // zero noise: degenerate notes attached, still exit 0
    let cfg_path = dir.join("zero.ini");
    std::fs::write(&cfg_path, "[noise]\nsigma1 = 0\nsigma2 = 0\nsigma3 = 0\n").unwrap();
    let out = run_ok(&[
        "stability",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.join("zn").to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("deterministic"));
    let out = run_ok(&[
        "ergodic",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.join("zn").to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("deterministic"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn ergodic_ellipsoid_bound_check() {
    let dir = scratch("ellipsoid");
    run_ok(&[
        "ergodic",
        "--ellipsoid",
        "--paths",
        "4",
        "--steps",
        "5000",
        "--t-end",
        "50",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("ergodic.json"))).unwrap();
    let e = &json["ellipsoid"];
    let avg = e["empirical_average"].as_f64().unwrap();
    assert!(avg > 0.0);
    assert_eq!(e["omega"].as_f64().unwrap(), 1.25);
    assert_eq!(e["slack_factor"].as_f64().unwrap(), 1.5);
    // the printed-form bound is tighter than the x-fluctuation term at the
    // reference parameters; the quadratic-form bound holds
    assert!(e["pass_quadratic"].as_bool().unwrap());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn convergence_report_has_fitted_orders() {
    let dir = scratch("conv");
    run_ok(&[
        "convergence",
        "--paths",
        "256",
        "--base-steps",
        "8",
        "--levels",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("convergence.json"))).unwrap();
    let em = json["em"]["fitted_order"].as_f64().unwrap();
    let mil = json["milstein"]["fitted_order"].as_f64().unwrap();
    assert!((0.2..0.8).contains(&em), "em order {em}");
    assert!((0.7..1.3).contains(&mil), "milstein order {mil}");
    assert!(dir.join("convergence.svg").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn lyapunov_fits_synthetic_exponential_input() {
    let dir = scratch("lyap");
    std::fs::create_dir_all(&dir).unwrap();
    // y + z = e^{-3t}
    let mut csv = String::from("t,x,y,z\n");
    for i in 0..=1000 {
        let t = i as f64 * 0.005;
        let total = (-3.0 * t).exp();
        csv.push_str(&format!("{t},1.0,{},{}\n", 0.5 * total, 0.5 * total));
    }
    let input = dir.join("synthetic.csv");
    std::fs::write(&input, csv).unwrap();
    run_ok(&[
        "lyapunov",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("lyapunov.json"))).unwrap();
    let slope = json["slope"].as_f64().unwrap();
    assert!((slope + 3.0).abs() < 1e-6, "slope {slope}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn couple_with_zero_infected_start_reports_zero_differences() {
    let dir = scratch("couple");
    run_ok(&[
        "couple",
        "--y0",
        "0",
        "--z0",
        "0",
        "--paths",
        "8",
        "--steps",
        "500",
        "--t-end",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let text = String::from_utf8(read(&dir.join("couple.csv"))).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
    }
    let json: serde_json::Value = serde_json::from_slice(&read(&dir.join("couple.json"))).unwrap();
    assert_eq!(json["max_one_sided_violation"].as_f64().unwrap(), 0.0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn manifest_roundtrip_reproduces_digests() {
    let dir_a = scratch("rt-a");
    let dir_b = scratch("rt-b");
    run_ok(&[
        "ensemble",
        "--paths",
        "16",
        "--steps",
        "300",
        "--t-end",
        "1.5",
        "--samples",
        "11",
        "--seed",
        "123",
        "--scheme",
        "milstein",
        "--out",
        dir_a.to_str().unwrap(),
    ]);
    // re-execute from the persisted config alone
    run_ok(&[
        "ensemble",
        "--config",
        dir_a.join("config.ini").to_str().unwrap(),
        "--out",
        dir_b.to_str().unwrap(),
    ]);

    let manifest_a: serde_json::Value =
        serde_json::from_slice(&read(&dir_a.join("manifest.json"))).unwrap();
    let manifest_b: serde_json::Value =
        serde_json::from_slice(&read(&dir_b.join("manifest.json"))).unwrap();
    let digests = |m: &serde_json::Value| -> Vec<(String, String)> {
        m["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| {
                (
                    o["file"].as_str().unwrap().to_string(),
                    o["sha256"].as_str().unwrap().to_string(),
                )
            })
            .filter(|(f, _)| f != "config.ini") // differs in `out =` line only
            .collect()
    };
    assert_eq!(digests(&manifest_a), digests(&manifest_b));

    // manifest digests match the files on disk
    for entry in manifest_a["outputs"].as_array().unwrap() {
        let file = entry["file"].as_str().unwrap();
        let expect = entry["sha256"].as_str().unwrap();
        assert_eq!(sha256_hex(&read(&dir_a.join(file))), expect, "{file}");
    }
    let _ = std::fs::remove_dir_all(&dir_a);
    let _ = std::fs::remove_dir_all(&dir_b);
}

#[test]
fn help_exits_cleanly() {
    let out = run_ok(&["--help"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("usage"));
    assert!(stdout.contains("convergence"));
}
