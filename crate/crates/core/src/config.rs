//! Run configuration: defaults, config-file parsing, and flag overrides.
//!
//! The config file is a flat key–value format with sections:
//!
//! ```text
//! # comment (also ';')
//! [model]
//! lambda = 100        # production rate of uninfected cells
//! mu1 = 20            # death rate of uninfected cells
//! mu2 = 5             # death rate of infected cells
//! mu3 = 7             # virion clearance rate
//! beta = 0.6          # infection rate
//! eta = 0.6           # infection-reducing drug efficacy, in [0,1]
//! epsilon = 0.2       # production-reducing drug efficacy, in [0,1]
//! p = 2               # virion production rate
//! q = 5               # spontaneous cure rate
//!
//! [noise]
//! sigma1 = 0.5
//! sigma2 = 0.6
//! sigma3 = 0.8
//!
//! [grid]
//! t0 = 0
//! t_end = 5
//! n_steps = 5000      # alternatively: dt = 0.001 (not both)
//!
//! [run]
//! scheme = em         # em | milstein
//! policy = raw        # raw | project
//! paths = 1
//! seed = 42
//! out = out
//! x0 = 5
//! y0 = 1
//! z0 = 1
//! samples = 201       # sample times for ensemble summaries
//! tail_fraction = 0.5 # trailing fraction used by decay fits
//! det_scheme = euler  # euler | rk4 (deterministic overlay in `compare`)
//! gamma = 5           # optional stability-bound override
//! ```
//!
//! Grammar: lines are `key = value` pairs inside `[section]` headers;
//! blank lines and `#`/`;` comments are ignored; whitespace around keys
//! and values is trimmed. Unknown sections or keys are errors. Every key
//! is optional and defaults to the values above. A later occurrence of a
//! key overrides an earlier one. CLI flags override the file.

use crate::grid::SimGrid;
use crate::hbv::HbvConfig;
use crate::params::{ModelParams, NoiseParams, StateVec};
use crate::sde::{NegativityPolicy, Scheme};
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;

/// Deterministic overlay integrator for the `compare` command.
///
/// `Euler` matches the stochastic discretization exactly (the zero-noise
/// ensemble reproduces it bit for bit); `Rk4` gives a higher-order
/// reference at the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetScheme {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub noise: NoiseParams,
    pub initial: StateVec,
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub policy: NegativityPolicy,
    pub n_paths: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub samples: usize,
    pub tail_fraction: f64,
    pub det_scheme: DetScheme,
    pub gamma: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelParams::default(),
            noise: NoiseParams::default(),
            initial: StateVec::new(5.0, 1.0, 1.0),
            t0: 0.0,
            t_end: 5.0,
            n_steps: 5000,
            scheme: Scheme::EulerMaruyama,
            policy: NegativityPolicy::Raw,
            n_paths: 1,
            master_seed: 42,
            out_dir: PathBuf::from("out"),
            samples: 201,
            tail_fraction: 0.5,
            det_scheme: DetScheme::Euler,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl RunConfig {
    pub fn grid(&self) -> Result<SimGrid, ConfigError> {
        SimGrid::new(self.t0, self.t_end, self.n_steps)
            .map_err(|e| err(format!("invalid grid: {e}")))
    }

    pub fn hbv(&self) -> HbvConfig {
        HbvConfig { params: self.model, noise: self.noise, initial: self.initial }
    }

    /// Validate parameters, initial state, and grid.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hbv().validate().map_err(|e| err(e.to_string()))?;
        self.grid()?;
        if self.n_paths == 0 {
            return Err(err("paths must be >= 1"));
        }
        if self.samples == 0 {
            return Err(err("samples must be >= 1"));
        }
        let tail_ok = self.tail_fraction > 0.0 && self.tail_fraction <= 1.0;
        if !tail_ok {
            return Err(err("tail_fraction must lie in (0, 1]"));
        }
        if let Some(g) = self.gamma {
            let gamma_ok = g > 0.0;
            if !gamma_ok {
                return Err(err("gamma must be > 0"));
            }
        }
        Ok(())
    }

    /// Parse a config file's text and apply it over `self`.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        let mut pending_dt: Option<f64> = None;
        let mut explicit_steps = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("line {}: unterminated section", lineno + 1)))?;
                section = name.trim().to_string();
                if !matches!(section.as_str(), "model" | "noise" | "grid" | "run") {
                    return Err(err(format!("line {}: unknown section [{section}]", lineno + 1)));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            self.apply_key(&section, key, value, &mut pending_dt, &mut explicit_steps)
                .map_err(|e| err(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        if let Some(dt) = pending_dt {
            if explicit_steps {
                return Err(err("[grid] specifies both dt and n_steps"));
            }
            self.set_dt(dt)?;
        }
        Ok(())
    }

    fn apply_key(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        pending_dt: &mut Option<f64>,
        explicit_steps: &mut bool,
    ) -> Result<(), ConfigError> {
        match (section, key) {
            ("model", "lambda") => self.model.lambda = parse_f64(key, value)?,
            ("model", "mu1") => self.model.mu1 = parse_f64(key, value)?,
            ("model", "mu2") => self.model.mu2 = parse_f64(key, value)?,
            ("model", "mu3") => self.model.mu3 = parse_f64(key, value)?,
            ("model", "beta") => self.model.beta = parse_f64(key, value)?,
            ("model", "eta") => self.model.eta = parse_f64(key, value)?,
            ("model", "epsilon") => self.model.epsilon = parse_f64(key, value)?,
            ("model", "p") => self.model.p = parse_f64(key, value)?,
            ("model", "q") => self.model.q = parse_f64(key, value)?,
            ("noise", "sigma1") => self.noise.sigma1 = parse_f64(key, value)?,
            ("noise", "sigma2") => self.noise.sigma2 = parse_f64(key, value)?,
            ("noise", "sigma3") => self.noise.sigma3 = parse_f64(key, value)?,
            ("grid", "t0") => self.t0 = parse_f64(key, value)?,
            ("grid", "t_end") => self.t_end = parse_f64(key, value)?,
            ("grid", "n_steps") => {
                self.n_steps = parse_usize(key, value)?;
                *explicit_steps = true;
            }
            ("grid", "dt") => *pending_dt = Some(parse_f64(key, value)?),
            ("run", "scheme") => self.scheme = parse_scheme(value)?,
            ("run", "policy") => self.policy = parse_policy(value)?,
            ("run", "paths") => self.n_paths = parse_usize(key, value)?,
            ("run", "seed") => {
                self.master_seed =
                    value.parse::<u64>().map_err(|_| err(format!("invalid seed '{value}'")))?
            }
            ("run", "out") => self.out_dir = PathBuf::from(value),
            ("run", "x0") => self.initial.x = parse_f64(key, value)?,
            ("run", "y0") => self.initial.y = parse_f64(key, value)?,
            ("run", "z0") => self.initial.z = parse_f64(key, value)?,
            ("run", "samples") => self.samples = parse_usize(key, value)?,
            ("run", "tail_fraction") => self.tail_fraction = parse_f64(key, value)?,
            ("run", "det_scheme") => self.det_scheme = parse_det_scheme(value)?,
            ("run", "gamma") => self.gamma = Some(parse_f64(key, value)?),
            ("", k) => return Err(err(format!("key '{k}' outside any section"))),
            (s, k) => return Err(err(format!("unknown key '{k}' in section [{s}]"))),
        }
        Ok(())
    }

    /// Derive `n_steps` from a step size over the configured span.
    pub fn set_dt(&mut self, dt: f64) -> Result<(), ConfigError> {
        let dt_ok = dt.is_finite() && dt > 0.0;
        if !dt_ok {
            return Err(err("dt must be positive and finite"));
        }
        let steps = ((self.t_end - self.t0) / dt).round();
        let steps_ok = (1.0..=1e9).contains(&steps);
        if !steps_ok {
            return Err(err(format!("dt = {dt} yields an unusable step count")));
        }
        self.n_steps = steps as usize;
        Ok(())
    }

    /// Serialize back to the config-file format; re-running from this
    /// text reproduces the run byte for byte.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[model]\n");
        s.push_str(&format!("lambda = {}\n", self.model.lambda));
        s.push_str(&format!("mu1 = {}\n", self.model.mu1));
        s.push_str(&format!("mu2 = {}\n", self.model.mu2));
        s.push_str(&format!("mu3 = {}\n", self.model.mu3));
        s.push_str(&format!("beta = {}\n", self.model.beta));
        s.push_str(&format!("eta = {}\n", self.model.eta));
        s.push_str(&format!("epsilon = {}\n", self.model.epsilon));
        s.push_str(&format!("p = {}\n", self.model.p));
        s.push_str(&format!("q = {}\n", self.model.q));
        s.push_str("\n[noise]\n");
        s.push_str(&format!("sigma1 = {}\n", self.noise.sigma1));
        s.push_str(&format!("sigma2 = {}\n", self.noise.sigma2));
        s.push_str(&format!("sigma3 = {}\n", self.noise.sigma3));
        s.push_str("\n[grid]\n");
        s.push_str(&format!("t0 = {}\n", self.t0));
        s.push_str(&format!("t_end = {}\n", self.t_end));
        s.push_str(&format!("n_steps = {}\n", self.n_steps));
        s.push_str("\n[run]\n");
        s.push_str(&format!(
            "scheme = {}\n",
            match self.scheme {
                Scheme::EulerMaruyama => "em",
                Scheme::Milstein => "milstein",
                Scheme::Rk4 => "rk4",
            }
        ));
        s.push_str(&format!(
            "policy = {}\n",
            match self.policy {
                NegativityPolicy::Raw => "raw",
                NegativityPolicy::ProjectToZero => "project",
            }
        ));
        s.push_str(&format!("paths = {}\n", self.n_paths));
        s.push_str(&format!("seed = {}\n", self.master_seed));
        s.push_str(&format!("out = {}\n", self.out_dir.display()));
        s.push_str(&format!("x0 = {}\n", self.initial.x));
        s.push_str(&format!("y0 = {}\n", self.initial.y));
        s.push_str(&format!("z0 = {}\n", self.initial.z));
        s.push_str(&format!("samples = {}\n", self.samples));
        s.push_str(&format!("tail_fraction = {}\n", self.tail_fraction));
        s.push_str(&format!(
            "det_scheme = {}\n",
            match self.det_scheme {
                DetScheme::Euler => "euler",
                DetScheme::Rk4 => "rk4",
            }
        ));
        if let Some(g) = self.gamma {
            s.push_str(&format!("gamma = {g}\n"));
        }
        s
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| err(format!("invalid number for '{key}': '{value}'")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| err(format!("invalid integer for '{key}': '{value}'")))
}

pub fn parse_scheme(value: &str) -> Result<Scheme, ConfigError> {
    match value {
        "em" | "euler-maruyama" => Ok(Scheme::EulerMaruyama),
        "milstein" => Ok(Scheme::Milstein),
        other => Err(err(format!("unknown scheme '{other}' (expected em|milstein)"))),
    }
}

pub fn parse_policy(value: &str) -> Result<NegativityPolicy, ConfigError> {
    match value {
        "raw" => Ok(NegativityPolicy::Raw),
        "project" => Ok(NegativityPolicy::ProjectToZero),
        other => Err(err(format!("unknown policy '{other}' (expected raw|project)"))),
    }
}

pub fn parse_det_scheme(value: &str) -> Result<DetScheme, ConfigError> {
    match value {
        "euler" => Ok(DetScheme::Euler),
        "rk4" => Ok(DetScheme::Rk4),
        other => Err(err(format!("unknown det_scheme '{other}' (expected euler|rk4)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_roundtrip_preserves_config() {
        let mut cfg = RunConfig::default();
        cfg.noise.sigma2 = 0.25;
        cfg.n_steps = 1234;
        cfg.gamma = Some(6.5);
        let text = cfg.to_config_string();
        let mut reparsed = RunConfig::default();
        reparsed.apply_file(&text).unwrap();
        assert_eq!(format!("{cfg:?}"), format!("{reparsed:?}"));
    }

    #[test]
    fn parses_sections_comments_and_dt() {
        let text = "\n# full run\n[grid]\nt_end = 2 ; two units\ndt = 0.01\n\n[run]\nscheme = milstein\npaths = 8\n";
        let mut cfg = RunConfig::default();
        cfg.apply_file(text).unwrap();
        assert_eq!(cfg.n_steps, 200);
        assert_eq!(cfg.scheme, Scheme::Milstein);
        assert_eq!(cfg.n_paths, 8);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_file("[model]\nfoo = 1\n").is_err());
        assert!(cfg.apply_file("[nope]\n").is_err());
        assert!(cfg.apply_file("lambda = 1\n").is_err());
        assert!(cfg.apply_file("[grid]\nn_steps = 10\ndt = 0.1\n").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.model.mu1 = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.tail_fraction = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.gamma = Some(-1.0);
        assert!(cfg.validate().is_err());
    }
}
