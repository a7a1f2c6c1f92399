//! Natural exponential-family primitives for the two supported GLMs.
//!
//! A family is described by its cumulant `b(θ)`, whose derivatives give the
//! mean `h(θ) = b'(θ)` and variance function `b''(θ)`, together with the map
//! from the nuisance parameter to the dispersion `d(γ)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Linear predictors are clamped to this range before exponentiation.
pub const ETA_CLAMP: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    /// Gaussian response, identity link; `d(γ) = σ²`.
    Gaussian,
    /// Bernoulli response, logit link; `d(γ) = 1`.
    Bernoulli,
}

impl GlmFamily {
    /// Cumulant function `b(θ)`.
    pub fn cumulant(self, theta: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => 0.5 * theta * theta,
            GlmFamily::Bernoulli => log1p_exp(clamp_eta(theta)),
        }
    }

    /// Mean function `h(θ) = b'(θ)`, the inverse of the canonical link.
    pub fn mean(self, theta: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => theta,
            GlmFamily::Bernoulli => expit(clamp_eta(theta)),
        }
    }

    /// Variance function `b''(θ)`.
    pub fn variance(self, theta: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => 1.0,
            GlmFamily::Bernoulli => {
                let mu = expit(clamp_eta(theta));
                mu * (1.0 - mu)
            }
        }
    }

    /// Dispersion `d(γ)`. For the Gaussian family `γ` is the error variance.
    pub fn dispersion(self, gamma: f64) -> f64 {
        match self {
            GlmFamily::Gaussian => gamma,
            GlmFamily::Bernoulli => 1.0,
        }
    }

    pub fn is_gaussian(self) -> bool {
        matches!(self, GlmFamily::Gaussian)
    }

    /// Checks a response value is in the support of the family.
    pub fn valid_response(self, y: f64) -> bool {
        match self {
            GlmFamily::Gaussian => y.is_finite(),
            GlmFamily::Bernoulli => y == 0.0 || y == 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GlmFamily::Gaussian => "gaussian",
            GlmFamily::Bernoulli => "bernoulli",
        }
    }
}

impl fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "linear" => Ok(GlmFamily::Gaussian),
            "bernoulli" | "binomial" | "logistic" => Ok(GlmFamily::Bernoulli),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }
}

/// Elementwise `h(η)`.
pub fn link_inverse(family: GlmFamily, eta: &DVector<f64>) -> DVector<f64> {
    eta.map(|e| family.mean(e))
}

#[inline]
fn clamp_eta(theta: f64) -> f64 {
    theta.clamp(-ETA_CLAMP, ETA_CLAMP)
}

#[inline]
fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}
