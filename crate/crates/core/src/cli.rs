//! Command-line surface: subcommands, flag parsing, file emission.
//!
//! Exit codes: 0 success (theorem-check verdicts are data, never errors),
//! 2 configuration error, 3 numerical failure.

use crate::analysis::{
    check_ergodicity, check_stability, coupling_experiment, ellipsoid_time_average,
    estimate_lyapunov, run_ensemble, strong_convergence, AnalysisError, ConvergenceReport,
    ErgodicVerdict, GammaChoice, LyapunovEstimate, ReferenceSolution,
};
use crate::config::{
    parse_det_scheme, parse_policy, parse_scheme, ConfigError, DetScheme, RunConfig,
};
use crate::csvio::{
    ensemble_csv, fmt_f64, read_trajectory, table_csv, trajectory_csv, write_file,
};
use crate::gbm::Gbm;
use crate::grid::SimGrid;
use crate::hbv::equilibria;
use crate::manifest::RunManifest;
use crate::rng::{derive_stream, RunSeed};
use crate::sde::{integrate, integrate_euler, integrate_ode, Scheme, SdeError, Trajectory};
use crate::svg::{render_panels, Panel};
use crate::wiener::sample_wiener_increments;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<SdeError> for CliError {
    fn from(e: SdeError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Path { .. } | AnalysisError::DegenerateTail => {
                CliError::Numeric(e.to_string())
            }
            AnalysisError::IndivisibleGrid { .. } => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

const USAGE: &str = "\
usage: hbvsim <command> [flags]

commands:
  simulate      integrate stochastic paths, write trajectory CSV(s)
  compare       overlay ensemble statistics on the deterministic solution
  stability     evaluate the exponential-decay conditions for (y, z)
  ergodic       evaluate the stationary-distribution conditions
  convergence   measure strong-convergence orders on the GBM benchmark
  lyapunov      fit sample-path decay rates of ln(y+z)
  couple        compare x against the dominating process x1 on shared noise
  ensemble      ensemble statistics of the full system

common flags:
  --config FILE        read a key-value config file (defaults otherwise)
  --seed N             master seed (default 42)
  --scheme em|milstein integration scheme (default em)
  --paths N            number of paths (default 1)
  --dt X               step size over [t0, t_end]
  --steps N            number of steps (alternative to --dt)
  --t0 X --t-end X     time span (default [0, 5])
  --out DIR            output directory (default ./out)
  --policy raw|project negativity handling (default raw)
  --gamma V            x-bound for the stability matrix (default lambda/mu1)
  --x0 V --y0 V --z0 V initial state (default 5, 1, 1)
  --samples N          sample times for summaries (default 201)
  --tail-fraction F    trailing fraction for decay fits (default 0.5)
  --det-scheme euler|rk4  deterministic overlay in compare (default euler)

command-specific flags:
  convergence: --gbm-a V --gbm-b V --gbm-x0 V --horizon T
               --base-steps N --levels N --reference analytic|finegrid
  lyapunov:    --input FILE   fit an existing trajectory CSV
  ergodic:     --ellipsoid    run the ensemble time-average bound check

environment:
  HBVSIM_THREADS       worker threads (default: available parallelism);
                       results are identical for every setting
";

const COMMON_FLAGS: &[&str] = &[
    "config", "seed", "scheme", "paths", "dt", "steps", "t0", "t-end", "out", "policy",
    "gamma", "x0", "y0", "z0", "samples", "tail-fraction", "det-scheme",
];

/// Entry point used by the binary; `args` excludes the program name.
pub fn run(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        return Err(CliError::Config(format!("missing command\n{USAGE}")));
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return Ok(());
    }
    let rest = &args[1..];
    if rest.iter().any(|a| a == "--help" || a == "-h") {
        println!("{USAGE}");
        return Ok(());
    }
    match command.as_str() {
        "simulate" => cmd_simulate(rest),
        "compare" => cmd_compare(rest),
        "stability" => cmd_stability(rest),
        "ergodic" => cmd_ergodic(rest),
        "convergence" => cmd_convergence(rest),
        "lyapunov" => cmd_lyapunov(rest),
        "couple" => cmd_couple(rest),
        "ensemble" => cmd_ensemble(rest),
        other => Err(CliError::Config(format!("unknown command '{other}'\n{USAGE}"))),
    }
}

fn parse_flags(
    args: &[String],
    extra_allowed: &[&str],
) -> Result<BTreeMap<String, String>, CliError> {
    let mut flags = BTreeMap::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(name) = arg.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument '{arg}'")));
        };
        let boolean = matches!(name, "ellipsoid");
        let value = if boolean {
            "true".to_string()
        } else {
            it.next()
                .ok_or_else(|| CliError::Config(format!("flag --{name} requires a value")))?
                .clone()
        };
        if !COMMON_FLAGS.contains(&name) && !extra_allowed.contains(&name) {
            return Err(CliError::Config(format!("unknown flag --{name}")));
        }
        flags.insert(name.to_string(), value);
    }
    Ok(flags)
}

fn build_config(flags: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = flags.get("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config '{path}': {e}")))?;
        cfg.apply_file(&text)?;
    }
    let f64_flag = |key: &str| -> Result<Option<f64>, CliError> {
        flags
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("invalid number for --{key}: '{v}'")))
            })
            .transpose()
    };
    let usize_flag = |key: &str| -> Result<Option<usize>, CliError> {
        flags
            .get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("invalid integer for --{key}: '{v}'")))
            })
            .transpose()
    };

    if let Some(v) = flags.get("seed") {
        cfg.master_seed = v
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("invalid seed '{v}'")))?;
    }
    if let Some(v) = flags.get("scheme") {
        cfg.scheme = parse_scheme(v)?;
    }
    if let Some(v) = flags.get("policy") {
        cfg.policy = parse_policy(v)?;
    }
    if let Some(v) = flags.get("det-scheme") {
        cfg.det_scheme = parse_det_scheme(v)?;
    }
    if let Some(v) = usize_flag("paths")? {
        cfg.n_paths = v;
    }
    if let Some(v) = f64_flag("t0")? {
        cfg.t0 = v;
    }
    if let Some(v) = f64_flag("t-end")? {
        cfg.t_end = v;
    }
    if flags.contains_key("dt") && flags.contains_key("steps") {
        return Err(CliError::Config("--dt and --steps are mutually exclusive".into()));
    }
    if let Some(v) = usize_flag("steps")? {
        cfg.n_steps = v;
    }
    if let Some(v) = f64_flag("dt")? {
        cfg.set_dt(v)?;
    }
    if let Some(v) = flags.get("out") {
        cfg.out_dir = v.into();
    }
    if let Some(v) = f64_flag("gamma")? {
        cfg.gamma = Some(v);
    }
    if let Some(v) = f64_flag("x0")? {
        cfg.initial.x = v;
    }
    if let Some(v) = f64_flag("y0")? {
        cfg.initial.y = v;
    }
    if let Some(v) = f64_flag("z0")? {
        cfg.initial.z = v;
    }
    if let Some(v) = usize_flag("samples")? {
        cfg.samples = v;
    }
    if let Some(v) = f64_flag("tail-fraction")? {
        cfg.tail_fraction = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(manifest: &mut RunManifest, path: &Path, contents: &str) -> Result<(), CliError> {
    write_file(path, contents)?;
    manifest.record_output(path)?;
    Ok(())
}

/// Persist the resolved configuration; re-running with `--config` on this
/// file reproduces every output byte for byte.
fn emit_config(manifest: &mut RunManifest, cfg: &RunConfig) -> Result<(), CliError> {
    write_output(manifest, &cfg.out_dir.join("config.ini"), &cfg.to_config_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// Evenly spaced sample times over the grid span (first and last included);
/// a single sample lands on the terminal time.
fn sample_times(grid: &SimGrid, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![grid.t_end()];
    }
    let n = samples.min(grid.n_steps() + 1).max(2);
    (0..n)
        .map(|k| grid.t0() + (grid.t_end() - grid.t0()) * k as f64 / (n - 1) as f64)
        .collect()
}

fn simulate_one_path(cfg: &RunConfig, path_index: u64) -> Result<Trajectory, CliError> {
    let grid = cfg.grid()?;
    let system = cfg.hbv().system();
    let mut stream = derive_stream(RunSeed::new(cfg.master_seed, path_index));
    let increments = sample_wiener_increments(grid, &mut stream, 3);
    let traj = integrate(
        &system,
        &cfg.initial.as_array(),
        grid,
        &increments,
        cfg.scheme,
        cfg.policy,
    )?;
    Ok(traj)
}

/// All paths of the configured ensemble as full trajectories.
fn simulate_paths(
    cfg: &RunConfig,
    system: &crate::hbv::HbvSystem,
    initial: &[f64; 3],
    grid: SimGrid,
) -> Result<Vec<Trajectory>, CliError> {
    let trajectories = crate::analysis::for_each_path(cfg.n_paths, |path_index| {
        let mut stream = derive_stream(RunSeed::new(cfg.master_seed, path_index));
        let increments = sample_wiener_increments(grid, &mut stream, 3);
        integrate(system, initial, grid, &increments, cfg.scheme, cfg.policy)
    })?;
    Ok(trajectories)
}

// ───────────────────────── simulate ─────────────────────────

fn cmd_simulate(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &[])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("simulate", &cfg);
    emit_config(&mut manifest, &cfg)?;

    for p in 0..cfg.n_paths {
        let traj = simulate_one_path(&cfg, p as u64)?;
        let name = if cfg.n_paths == 1 {
            "trajectory.csv".to_string()
        } else {
            format!("trajectory_p{p:04}.csv")
        };
        write_output(&mut manifest, &cfg.out_dir.join(name), &trajectory_csv(&traj))?;
        if !traj.negativity_events.is_empty() {
            println!(
                "path {p}: {} negativity event(s), first at step {}",
                traj.negativity_events.len(),
                traj.negativity_events[0].step
            );
        }
    }

    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    println!("wrote {} path(s) to {}", cfg.n_paths, cfg.out_dir.display());
    Ok(())
}

// ───────────────────────── compare ─────────────────────────

fn cmd_compare(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &[])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("compare", &cfg);
    emit_config(&mut manifest, &cfg)?;
    let grid = cfg.grid()?;
    let system = cfg.hbv().system();
    let initial = cfg.initial.as_array();

    let det = match cfg.det_scheme {
        DetScheme::Euler => integrate_euler(system.ode_rhs(), &initial, grid)?,
        DetScheme::Rk4 => integrate_ode(system.ode_rhs(), &initial, grid)?,
    };

    let times = sample_times(&grid, cfg.samples);
    let stats = run_ensemble(
        &system,
        &initial,
        grid,
        cfg.scheme,
        cfg.policy,
        cfg.n_paths,
        cfg.master_seed,
        &times,
    )?;

    let indices: Vec<usize> = times.iter().map(|&t| grid.nearest_index(t)).collect();
    let header = [
        "t", "det_x", "det_y", "det_z", "mean_x", "mean_y", "mean_z", "q05_x", "q05_y",
        "q05_z", "q95_x", "q95_y", "q95_z",
    ];
    let mut rows = Vec::with_capacity(indices.len());
    for (k, &i) in indices.iter().enumerate() {
        let d = det.state(i);
        let mut row = vec![stats.sample_times[k], d[0], d[1], d[2]];
        for c in 0..3 {
            row.push(stats.components[c].mean[k]);
        }
        for c in 0..3 {
            row.push(stats.components[c].q05[k]);
        }
        for c in 0..3 {
            row.push(stats.components[c].q95[k]);
        }
        rows.push(row);
    }
    write_output(&mut manifest, &cfg.out_dir.join("compare.csv"), &table_csv(&header, &rows))?;

    let mut panels = Vec::new();
    for (c, name) in ["x (uninfected)", "y (infected)", "z (virions)"].iter().enumerate() {
        let series_at = |col: &[f64]| -> Vec<(f64, f64)> {
            stats.sample_times.iter().copied().zip(col.iter().copied()).collect()
        };
        let det_points: Vec<(f64, f64)> = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| (stats.sample_times[k], det.state(i)[c]))
            .collect();
        panels.push(
            Panel::new(name, "t", name)
                .with_series("deterministic", det_points)
                .with_series("ensemble mean", series_at(&stats.components[c].mean))
                .with_series("q05", series_at(&stats.components[c].q05))
                .with_series("q95", series_at(&stats.components[c].q95)),
        );
    }
    write_output(
        &mut manifest,
        &cfg.out_dir.join("compare.svg"),
        &render_panels(&panels, 720, 260),
    )?;

    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    println!(
        "compared {} stochastic path(s) against the {} baseline in {}",
        cfg.n_paths,
        match cfg.det_scheme {
            DetScheme::Euler => "euler",
            DetScheme::Rk4 => "rk4",
        },
        cfg.out_dir.display()
    );
    Ok(())
}

// ───────────────────────── stability / ergodic ─────────────────────────

fn gamma_choice(cfg: &RunConfig) -> GammaChoice<'static> {
    match cfg.gamma {
        Some(v) => GammaChoice::Value(v),
        None => GammaChoice::Default,
    }
}

fn cmd_stability(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &[])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("stability", &cfg);
    emit_config(&mut manifest, &cfg)?;

    let report = check_stability(&cfg.model, &cfg.noise, gamma_choice(&cfg));
    write_output(&mut manifest, &cfg.out_dir.join("stability.json"), &to_json(&report))?;

    let mut table = String::new();
    let _ = writeln!(table, "stability check: almost-sure exponential decay of (y, z)");
    let _ = writeln!(
        table,
        "  gamma              : {} ({:?})",
        report.gamma_used, report.gamma_source
    );
    let _ = writeln!(
        table,
        "  condition (a)      : {} (< 0: {})",
        report.cond_a_value,
        report.cond_a_value < 0.0
    );
    let _ = writeln!(
        table,
        "  condition (b)      : lhs {} <= rhs {}: {}",
        report.cond_b_lhs,
        report.cond_b_rhs,
        report.cond_b_lhs <= report.cond_b_rhs
    );
    let _ = writeln!(
        table,
        "  matrix             : [[{}, {}], [{}, {}]]",
        report.matrix[0][0], report.matrix[0][1], report.matrix[1][0], report.matrix[1][1]
    );
    let _ = writeln!(
        table,
        "  sym eigenvalues    : {} , {}",
        report.sym_eigenvalues[0], report.sym_eigenvalues[1]
    );
    let _ = writeln!(table, "  lambda_max         : {}", report.lambda_max);
    if let Some(bound) = report.lyapunov_bound() {
        let _ = writeln!(table, "  decay bound        : {bound}");
    }
    if let Some(note) = &report.degenerate_note {
        let _ = writeln!(table, "  note               : {note}");
    }
    let _ = writeln!(table, "  verdict            : {:?}", report.verdict);
    print!("{table}");

    manifest.record_verdict("stability", &format!("{:?}", report.verdict));
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}

#[derive(Serialize)]
struct EllipsoidCheck {
    empirical_average: f64,
    omega: f64,
    omega_quadratic: f64,
    slack_factor: f64,
    /// empirical_average <= slack_factor * omega (printed-form bound)
    pass_printed: bool,
    /// empirical_average <= slack_factor * omega_quadratic
    pass_quadratic: bool,
    n_paths: usize,
}

#[derive(Serialize)]
struct ErgodicOutput {
    report: crate::analysis::ErgodicityReport,
    r0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ellipsoid: Option<EllipsoidCheck>,
}

fn cmd_ergodic(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &["ellipsoid"])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("ergodic", &cfg);
    emit_config(&mut manifest, &cfg)?;

    let eq = equilibria(&cfg.model);
    let equilibrium = eq.endemic.unwrap_or(eq.infection_free);
    let report = check_ergodicity(&cfg.model, &cfg.noise, &equilibrium);

    let ellipsoid = if flags.contains_key("ellipsoid") {
        if report.verdict == ErgodicVerdict::ErgodicConditionsHold {
            let grid = cfg.grid()?;
            let system = cfg.hbv().system();
            let initial = cfg.initial.as_array();
            let trajectories = simulate_paths(&cfg, &system, &initial, grid)?;
            let avg = ellipsoid_time_average(
                &trajectories,
                &equilibrium,
                (report.k1, report.k2, report.k3),
            );
            Some(EllipsoidCheck {
                empirical_average: avg,
                omega: report.omega,
                omega_quadratic: report.omega_quadratic,
                slack_factor: 1.5,
                pass_printed: avg <= 1.5 * report.omega,
                pass_quadratic: avg <= 1.5 * report.omega_quadratic,
                n_paths: cfg.n_paths,
            })
        } else {
            println!("ellipsoid check skipped: ergodic conditions do not hold");
            None
        }
    } else {
        None
    };

    let output = ErgodicOutput { report, r0: eq.r0, ellipsoid };
    write_output(&mut manifest, &cfg.out_dir.join("ergodic.json"), &to_json(&output))?;

    let report = &output.report;
    let mut table = String::new();
    let _ = writeln!(table, "ergodic stationary-distribution check");
    let _ = writeln!(table, "  mu*                : {}", report.mu_star);
    let _ = writeln!(table, "  k1, k2, k3         : {}, {}, {}", report.k1, report.k2, report.k3);
    let _ = writeln!(
        table,
        "  equilibrium        : ({}, {}, {})  [r0 = {}]",
        report.equilibrium_used.x, report.equilibrium_used.y, report.equilibrium_used.z, output.r0
    );
    let _ = writeln!(table, "  omega (printed)    : {}", report.omega);
    let _ = writeln!(table, "  omega (quadratic)  : {}", report.omega_quadratic);
    if let Some(e) = &output.ellipsoid {
        let _ = writeln!(
            table,
            "  ellipsoid avg      : {} (<= {} * omega: {})",
            e.empirical_average, e.slack_factor, e.pass_printed
        );
    }
    if let Some(note) = &report.degenerate_note {
        let _ = writeln!(table, "  note               : {note}");
    }
    let _ = writeln!(table, "  note               : {}", report.statement_discrepancy_note);
    let _ = writeln!(table, "  verdict            : {:?}", report.verdict);
    print!("{table}");

    manifest.record_verdict("ergodic", &format!("{:?}", output.report.verdict));
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}

// ───────────────────────── convergence ─────────────────────────

#[derive(Serialize)]
struct ConvergencePair {
    em: ConvergenceReport,
    milstein: ConvergenceReport,
}

fn cmd_convergence(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(
        args,
        &["gbm-a", "gbm-b", "gbm-x0", "horizon", "base-steps", "levels", "reference"],
    )?;
    let mut cfg = build_config(&flags)?;
    // benchmark defaults differ from the simulation defaults
    if !flags.contains_key("paths") {
        cfg.n_paths = 2000;
    }
    let getf = |key: &str, default: f64| -> Result<f64, CliError> {
        match flags.get(key) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid number for --{key}: '{v}'"))),
            None => Ok(default),
        }
    };
    let getu = |key: &str, default: usize| -> Result<usize, CliError> {
        match flags.get(key) {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("invalid integer for --{key}: '{v}'"))),
            None => Ok(default),
        }
    };
    let a = getf("gbm-a", 0.05)?;
    let b = getf("gbm-b", 0.4)?;
    let x0 = getf("gbm-x0", 1.0)?;
    let horizon = getf("horizon", 1.0)?;
    let base_steps = getu("base-steps", 16)?;
    let levels = getu("levels", 7)?;
    if levels < 3 {
        return Err(CliError::Config("--levels must be >= 3".into()));
    }
    let horizon_ok = horizon > 0.0;
    if !horizon_ok {
        return Err(CliError::Config("--horizon must be > 0".into()));
    }
    let use_analytic = match flags.get("reference").map(String::as_str) {
        None | Some("analytic") => true,
        Some("finegrid") => false,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown reference '{other}' (expected analytic|finegrid)"
            )))
        }
    };

    let start = Instant::now();
    let mut manifest = RunManifest::new("convergence", &cfg);
    emit_config(&mut manifest, &cfg)?;
    let gbm = Gbm { a, b };
    let exact = move |w: &crate::wiener::IncrementMatrix| vec![gbm.exact_terminal(x0, w)];

    let run = |scheme: Scheme| -> Result<ConvergenceReport, CliError> {
        let reference = if use_analytic {
            ReferenceSolution::Analytic(&exact)
        } else {
            ReferenceSolution::FineGrid
        };
        Ok(strong_convergence(
            &gbm,
            &[x0],
            horizon,
            base_steps,
            levels,
            cfg.n_paths,
            cfg.master_seed,
            scheme,
            reference,
        )?)
    };
    let em = run(Scheme::EulerMaruyama)?;
    let milstein = run(Scheme::Milstein)?;

    println!(
        "fitted strong orders: euler-maruyama {:.4}, milstein {:.4}",
        em.fitted_order, milstein.fitted_order
    );

    let pair = ConvergencePair { em, milstein };
    write_output(&mut manifest, &cfg.out_dir.join("convergence.json"), &to_json(&pair))?;

    let mut rows = Vec::new();
    for (i, &dt) in pair.em.dt_ladder.iter().enumerate() {
        rows.push(vec![
            dt,
            pair.em.strong_errors[i],
            pair.milstein.strong_errors.get(i).copied().unwrap_or(f64::NAN),
        ]);
    }
    write_output(
        &mut manifest,
        &cfg.out_dir.join("convergence.csv"),
        &table_csv(&["dt", "err_em", "err_milstein"], &rows),
    )?;

    let mut panel = Panel::new("strong error at T", "dt", "E|X_dt(T) - X_ref(T)|")
        .with_series(
            "euler-maruyama",
            pair.em
                .dt_ladder
                .iter()
                .copied()
                .zip(pair.em.strong_errors.iter().copied())
                .collect(),
        )
        .with_series(
            "milstein",
            pair.milstein
                .dt_ladder
                .iter()
                .copied()
                .zip(pair.milstein.strong_errors.iter().copied())
                .collect(),
        );
    panel.log_log = true;
    write_output(
        &mut manifest,
        &cfg.out_dir.join("convergence.svg"),
        &render_panels(&[panel], 720, 420),
    )?;

    manifest.record_verdict("em_fitted_order", &format!("{:.6}", pair.em.fitted_order));
    manifest.record_verdict(
        "milstein_fitted_order",
        &format!("{:.6}", pair.milstein.fitted_order),
    );
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}

// ───────────────────────── lyapunov ─────────────────────────

#[derive(Serialize)]
struct LyapunovPath {
    path: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_squared: Option<f64>,
}

#[derive(Serialize)]
struct LyapunovOutput {
    tail_fraction: f64,
    n_paths: usize,
    n_fitted: usize,
    n_degenerate: usize,
    /// Fits with r² < 0.8; excluded from the summary claims below.
    n_low_confidence: usize,
    mean_slope: Option<f64>,
    fraction_negative: Option<f64>,
    bound: Option<f64>,
    per_path: Vec<LyapunovPath>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<crate::analysis::StabilityReport>,
}

/// Fits below this r² are reported but not counted as decay-rate claims.
const R_SQUARED_CLAIM_THRESHOLD: f64 = 0.8;

fn cmd_lyapunov(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &["input"])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("lyapunov", &cfg);
    emit_config(&mut manifest, &cfg)?;

    if let Some(input) = flags.get("input") {
        // Fit an existing trajectory file; no simulation.
        let text = std::fs::read_to_string(input)
            .map_err(|e| CliError::Config(format!("cannot read '{input}': {e}")))?;
        let traj = read_trajectory(&text).map_err(CliError::Config)?;
        let est: LyapunovEstimate = estimate_lyapunov(&traj, cfg.tail_fraction, None)?;
        if est.r_squared < R_SQUARED_CLAIM_THRESHOLD {
            println!(
                "fit quality too low for a decay-rate claim (r^2 {} < {}); slope {} reported as data only",
                est.r_squared, R_SQUARED_CLAIM_THRESHOLD, est.slope
            );
        } else {
            println!(
                "fitted slope {} (r^2 {}) over trailing fraction {}",
                est.slope, est.r_squared, est.tail_fraction
            );
        }
        write_output(&mut manifest, &cfg.out_dir.join("lyapunov.json"), &to_json(&est))?;
        manifest.duration_seconds = start.elapsed().as_secs_f64();
        manifest.write(&cfg.out_dir)?;
        return Ok(());
    }

    let grid = cfg.grid()?;
    let system = cfg.hbv().system();
    let initial = cfg.initial.as_array();
    let trajectories = simulate_paths(&cfg, &system, &initial, grid)?;

    // gamma for the attached stability report: explicit flag wins,
    // otherwise the observed running maximum of x across all paths.
    let observed_max_x = trajectories
        .iter()
        .flat_map(|t| t.component(0))
        .fold(f64::NEG_INFINITY, f64::max);
    let gamma = match cfg.gamma {
        Some(v) => GammaChoice::Value(v),
        None => GammaChoice::ObservedMax(observed_max_x),
    };
    let stability = check_stability(&cfg.model, &cfg.noise, gamma);
    let bound = stability.lyapunov_bound();

    let mut per_path = Vec::with_capacity(cfg.n_paths);
    let mut claims = Vec::new();
    let mut n_fitted = 0;
    for (p, traj) in trajectories.iter().enumerate() {
        match estimate_lyapunov(traj, cfg.tail_fraction, bound) {
            Ok(est) => {
                n_fitted += 1;
                if est.r_squared >= R_SQUARED_CLAIM_THRESHOLD {
                    claims.push(est.slope);
                }
                per_path.push(LyapunovPath {
                    path: p as u64,
                    slope: Some(est.slope),
                    r_squared: Some(est.r_squared),
                });
            }
            Err(AnalysisError::DegenerateTail) => {
                per_path.push(LyapunovPath { path: p as u64, slope: None, r_squared: None });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mean_slope = if claims.is_empty() {
        None
    } else {
        Some(claims.iter().sum::<f64>() / claims.len() as f64)
    };
    let fraction_negative = if claims.is_empty() {
        None
    } else {
        Some(claims.iter().filter(|&&s| s < 0.0).count() as f64 / claims.len() as f64)
    };

    let output = LyapunovOutput {
        tail_fraction: cfg.tail_fraction,
        n_paths: cfg.n_paths,
        n_fitted,
        n_degenerate: cfg.n_paths - n_fitted,
        n_low_confidence: n_fitted - claims.len(),
        mean_slope,
        fraction_negative,
        bound,
        per_path,
        stability: Some(stability),
    };
    write_output(&mut manifest, &cfg.out_dir.join("lyapunov.json"), &to_json(&output))?;

    let rows: Vec<Vec<f64>> = output
        .per_path
        .iter()
        .filter_map(|p| Some(vec![p.path as f64, p.slope?, p.r_squared?]))
        .collect();
    write_output(
        &mut manifest,
        &cfg.out_dir.join("lyapunov.csv"),
        &table_csv(&["path", "slope", "r_squared"], &rows),
    )?;

    // ln(y+z) traces for the first few paths
    let mut panel = Panel::new("ln(y+z) decay", "t", "ln(y+z)");
    for (p, traj) in trajectories.iter().take(8).enumerate() {
        let points: Vec<(f64, f64)> = (0..traj.len())
            .filter_map(|i| {
                let s = traj.state(i);
                let total = s[1] + s[2];
                (total > 0.0).then(|| (traj.grid().time_at(i), total.ln()))
            })
            .collect();
        panel = panel.with_series(&format!("path {p}"), points);
    }
    write_output(
        &mut manifest,
        &cfg.out_dir.join("lyapunov.svg"),
        &render_panels(&[panel], 720, 420),
    )?;

    match (output.mean_slope, output.fraction_negative) {
        (Some(m), Some(f)) => println!(
            "mean slope {} over {} confident fit(s), fraction negative {}",
            m,
            n_fitted - output.n_low_confidence,
            f
        ),
        _ => println!("no fit reached r^2 >= {R_SQUARED_CLAIM_THRESHOLD}; slopes reported as data only"),
    }
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}

// ───────────────────────── couple ─────────────────────────

fn cmd_couple(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &[])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("couple", &cfg);
    emit_config(&mut manifest, &cfg)?;
    let grid = cfg.grid()?;

    let report =
        coupling_experiment(&cfg.hbv(), grid, cfg.scheme, cfg.n_paths, cfg.master_seed)?;
    write_output(&mut manifest, &cfg.out_dir.join("couple.json"), &to_json(&report))?;

    let rows: Vec<Vec<f64>> = report
        .terminal_diff
        .iter()
        .zip(&report.tail_sup_abs_diff)
        .enumerate()
        .map(|(p, (d, s))| vec![p as f64, *d, *s])
        .collect();
    write_output(
        &mut manifest,
        &cfg.out_dir.join("couple.csv"),
        &table_csv(&["path", "terminal_diff", "tail_sup_abs_diff"], &rows),
    )?;

    let mut sorted_abs: Vec<f64> = report.terminal_diff.iter().map(|d| d.abs()).collect();
    crate::numeric::sort_finite(&mut sorted_abs);
    let panel = Panel::new(
        "|x(T) - x1(T)| across paths (sorted)",
        "path rank",
        "|x(T) - x1(T)|",
    )
    .with_series(
        "terminal abs diff",
        sorted_abs.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
    );
    write_output(
        &mut manifest,
        &cfg.out_dir.join("couple.svg"),
        &render_panels(&[panel], 720, 420),
    )?;

    println!(
        "median |x(T)-x1(T)| = {} at T = {}, max one-sided violation {}",
        report.median_terminal_abs_diff, report.horizon, report.max_one_sided_violation
    );
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}

// ───────────────────────── ensemble ─────────────────────────

fn cmd_ensemble(args: &[String]) -> Result<(), CliError> {
    let flags = parse_flags(args, &[])?;
    let cfg = build_config(&flags)?;
    let start = Instant::now();
    let mut manifest = RunManifest::new("ensemble", &cfg);
    emit_config(&mut manifest, &cfg)?;
    let grid = cfg.grid()?;
    let system = cfg.hbv().system();

    let times = sample_times(&grid, cfg.samples);
    let stats = run_ensemble(
        &system,
        &cfg.initial.as_array(),
        grid,
        cfg.scheme,
        cfg.policy,
        cfg.n_paths,
        cfg.master_seed,
        &times,
    )?;

    write_output(
        &mut manifest,
        &cfg.out_dir.join("ensemble.csv"),
        &ensemble_csv(&stats, &["x", "y", "z"]),
    )?;
    write_output(&mut manifest, &cfg.out_dir.join("ensemble.json"), &to_json(&stats))?;

    let mut panels = Vec::new();
    for (c, name) in ["x (uninfected)", "y (infected)", "z (virions)"].iter().enumerate() {
        let pts = |col: &[f64]| -> Vec<(f64, f64)> {
            stats.sample_times.iter().copied().zip(col.iter().copied()).collect()
        };
        panels.push(
            Panel::new(name, "t", name)
                .with_series("mean", pts(&stats.components[c].mean))
                .with_series("q05", pts(&stats.components[c].q05))
                .with_series("median", pts(&stats.components[c].q50))
                .with_series("q95", pts(&stats.components[c].q95)),
        );
    }
    write_output(
        &mut manifest,
        &cfg.out_dir.join("ensemble.svg"),
        &render_panels(&panels, 720, 260),
    )?;

    println!(
        "ensemble of {} path(s); negativity fractions x/y/z = {} / {} / {}",
        stats.n_paths,
        fmt_f64(stats.negativity_fraction[0]),
        fmt_f64(stats.negativity_fraction[1]),
        fmt_f64(stats.negativity_fraction[2]),
    );
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&cfg.out_dir)?;
    Ok(())
}
