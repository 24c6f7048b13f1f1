//! Model parameters, noise amplitudes, and state vectors, with validation.
//!
//! The deterministic rates follow the usual within-host convention:
//! production `lambda`, per-compartment loss rates `mu1..mu3`, infection
//! rate `beta`, treatment efficacies `eta`/`epsilon` in `[0, 1]`, virion
//! production `p`, and spontaneous cure rate `q`.  The literature writes
//! the production rate both as `Λ` and as `λ`; this crate uses the single
//! field `lambda` for it.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Deterministic rate constants of the infection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Production rate of uninfected cells (cells/time).
    pub lambda: f64,
    /// Death rate of uninfected cells (1/time).
    pub mu1: f64,
    /// Death rate of infected cells (1/time).
    pub mu2: f64,
    /// Clearance rate of free virions (1/time).
    pub mu3: f64,
    /// Infection rate of uninfected cells by free virions (1/(virion·time)).
    pub beta: f64,
    /// Drug efficacy fraction reducing infection, in [0, 1].
    pub eta: f64,
    /// Drug efficacy fraction reducing virion production, in [0, 1].
    pub epsilon: f64,
    /// Virion production rate from infected cells (virions/(cell·time)).
    pub p: f64,
    /// Spontaneous cure rate of infected cells (1/time).
    pub q: f64,
}

impl Default for ModelParams {
    /// Reference parameter set used throughout the experiments.
    fn default() -> Self {
        ModelParams {
            lambda: 100.0,
            mu1: 20.0,
            mu2: 5.0,
            mu3: 7.0,
            beta: 0.6,
            eta: 0.6,
            epsilon: 0.2,
            p: 2.0,
            q: 5.0,
        }
    }
}

/// Multiplicative noise amplitudes for the three compartments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { sigma1: 0.5, sigma2: 0.6, sigma3: 0.8 }
    }
}

impl NoiseParams {
    /// All-zero noise reduces the stochastic system to the deterministic one.
    pub const ZERO: NoiseParams = NoiseParams { sigma1: 0.0, sigma2: 0.0, sigma3: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.sigma1 == 0.0 && self.sigma2 == 0.0 && self.sigma3 == 0.0
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma1, self.sigma2, self.sigma3]
    }
}

/// State of the system: uninfected cells, infected cells, free virions.
///
/// Exact solutions started in the open positive octant stay positive;
/// numerical states may transiently violate this, and integrators record
/// such events instead of discarding them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl StateVec {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        StateVec { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for StateVec {
    fn from(a: [f64; 3]) -> Self {
        StateVec { x: a[0], y: a[1], z: a[2] }
    }
}

/// A single violated parameter constraint, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ParamViolation {
    /// A rate that must be strictly positive is zero, negative, or NaN.
    NonPositiveRate(&'static str),
    /// An efficacy fraction lies outside [0, 1].
    FractionOutOfRange(&'static str),
    /// A noise amplitude is negative or NaN.
    NegativeNoise(&'static str),
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NonPositiveRate(field) => {
                write!(f, "{field} must be strictly positive")
            }
            ParamViolation::FractionOutOfRange(field) => {
                write!(f, "{field} must lie in [0, 1]")
            }
            ParamViolation::NegativeNoise(field) => {
                write!(f, "{field} must be nonnegative")
            }
        }
    }
}

/// Validation failure listing every violated constraint, not just the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub violations: Vec<ParamViolation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// A parameter bundle that has passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams {
    pub model: ModelParams,
    pub noise: NoiseParams,
}

/// Check every constraint and return the validated bundle, or an error
/// naming all violations.
pub fn validate_params(
    model: ModelParams,
    noise: NoiseParams,
) -> Result<ValidatedParams, ValidationError> {
    let mut violations = Vec::new();

    // NaN fails every comparison, so it lands in the matching violation.
    let rates = [
        ("lambda", model.lambda),
        ("mu1", model.mu1),
        ("mu2", model.mu2),
        ("mu3", model.mu3),
        ("beta", model.beta),
        ("p", model.p),
        ("q", model.q),
    ];
    for (name, v) in rates {
        let ok = v.is_finite() && v > 0.0;
        if !ok {
            violations.push(ParamViolation::NonPositiveRate(name));
        }
    }
    for (name, v) in [("eta", model.eta), ("epsilon", model.epsilon)] {
        if !(0.0..=1.0).contains(&v) {
            violations.push(ParamViolation::FractionOutOfRange(name));
        }
    }
    for (name, v) in [
        ("sigma1", noise.sigma1),
        ("sigma2", noise.sigma2),
        ("sigma3", noise.sigma3),
    ] {
        let ok = v.is_finite() && v >= 0.0;
        if !ok {
            violations.push(ParamViolation::NegativeNoise(name));
        }
    }

    if violations.is_empty() {
        Ok(ValidatedParams { model, noise })
    } else {
        Err(ValidationError { violations })
    }
}
