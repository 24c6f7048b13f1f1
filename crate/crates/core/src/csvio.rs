//! CSV emission and import.
//!
//! Numeric formatting is pinned: every float is written with 17
//! significant digits in scientific notation (`{:.16e}`), `.` as the
//! decimal separator, `\n` line endings.  Identical data therefore yields
//! byte-identical files on every platform.

use crate::analysis::EnsembleStats;
use crate::grid::SimGrid;
use crate::sde::{Scheme, Trajectory};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Pinned float format: 17 significant digits, scientific.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory as `t,x,y,z` (or `t,c0,..` for other dimensions).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::new();
    match traj.dim() {
        3 => s.push_str("t,x,y,z\n"),
        1 => s.push_str("t,x\n"),
        d => {
            s.push('t');
            for c in 0..d {
                let _ = write!(s, ",c{c}");
            }
            s.push('\n');
        }
    }
    for i in 0..traj.len() {
        s.push_str(&fmt_f64(traj.grid().time_at(i)));
        for v in traj.state(i) {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// Parse a trajectory CSV produced by [`trajectory_csv`] (or any file with
/// a header row and `t` plus one column per component).
pub fn read_trajectory(text: &str) -> Result<Trajectory, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let dim = header.split(',').count().checked_sub(1).ok_or("missing columns")?;
    if dim == 0 {
        return Err("expected a time column plus at least one component".into());
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(format!("row {}: expected {} fields", lineno + 2, dim + 1));
        }
        let parse = |f: &str| -> Result<f64, String> {
            f.trim().parse::<f64>().map_err(|_| format!("row {}: bad number '{f}'", lineno + 2))
        };
        times.push(parse(fields[0])?);
        for f in &fields[1..] {
            data.push(parse(f)?);
        }
    }
    if times.len() < 2 {
        return Err("need at least two rows".into());
    }
    let n_steps = times.len() - 1;
    let grid = SimGrid::new(times[0], times[n_steps], n_steps)
        .map_err(|e| format!("invalid time span: {e}"))?;
    Ok(Trajectory::from_states(grid, dim, data, Scheme::EulerMaruyama))
}

/// Ensemble statistics as one row per sample time.
pub fn ensemble_csv(stats: &EnsembleStats, component_names: &[&str]) -> String {
    assert_eq!(stats.components.len(), component_names.len());
    let mut s = String::from("t");
    for name in component_names {
        let _ = write!(
            s,
            ",mean_{name},var_{name},q05_{name},q50_{name},q95_{name}"
        );
    }
    s.push('\n');
    for (k, t) in stats.sample_times.iter().enumerate() {
        s.push_str(&fmt_f64(*t));
        for comp in &stats.components {
            for col in [&comp.mean, &comp.variance, &comp.q05, &comp.q50, &comp.q95] {
                s.push(',');
                s.push_str(&fmt_f64(col[k]));
            }
        }
        s.push('\n');
    }
    s
}

/// Generic table writer: header plus rows, pinned formatting.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// Write a file, creating parent directories as needed.
pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)
}
