//! Posterior-mean soft estimation of differential increments.
//!
//! Given a noisy differential observable z and prior bit information, the
//! demapper returns the posterior mean of the unit increment rather than a
//! hard decision. Both estimators reduce to factorized tanh expressions,
//! with an optional piecewise-linear tanh for low-complexity receivers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::frame::Modulation;
use crate::mapping::DQPSK_ALPHABET;

/// Default linear region half-width for the saturating tanh profile.
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 1.0;

/// Prior log-likelihood ratios for the two increment components, oriented
/// as ln P[component positive] / P[component negative]. DBPSK uses only the
/// imaginary component. Values may be infinite (hard priors).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorLlrs {
    pub re: f64,
    pub im: f64,
}

impl PriorLlrs {
    /// Uniform priors: no bias on either component.
    pub fn uniform() -> Self {
        PriorLlrs { re: 0.0, im: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.re.is_nan() || self.im.is_nan() {
            return Err(Error::invalid("prior_llrs", "must be finite or +/-inf"));
        }
        Ok(())
    }
}

impl Default for PriorLlrs {
    fn default() -> Self {
        PriorLlrs::uniform()
    }
}

/// Piecewise-linear tanh: identity inside the linear region, hard-limited
/// outside. `linear_threshold` must be positive; thresholds above 1 let the
/// output exceed the unit interval, so 1.0 is the conventional choice.
pub fn saturating_tanh(x: f64, linear_threshold: f64) -> f64 {
    if x.abs() <= linear_threshold {
        x
    } else {
        x.signum()
    }
}

/// Nonlinearity profile applied to LLR halves inside the soft demapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum TanhShape {
    /// Exact hyperbolic tangent (default).
    Exact,
    /// Low-complexity piecewise-linear approximation.
    Saturating { threshold: f64 },
}

impl TanhShape {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            TanhShape::Exact => x.tanh(),
            TanhShape::Saturating { threshold } => saturating_tanh(x, threshold),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TanhShape::Exact => Ok(()),
            TanhShape::Saturating { threshold } => {
                if threshold > 0.0 && threshold.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("tanh_threshold", "must be finite and positive"))
                }
            }
        }
    }
}

impl Default for TanhShape {
    fn default() -> Self {
        TanhShape::Exact
    }
}

/// Posterior-mean increment estimate together with the LLR totals that
/// produced it. DBPSK carries a single LLR on the imaginary component and
/// reports `llr_re = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftIncrement {
    pub value: Complex64,
    pub llr_re: f64,
    pub llr_im: f64,
    pub modulation: Modulation,
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("sigma2", "must be finite and positive"))
    }
}

/// Soft DBPSK increment: d = j * tanh(L / 2) with L = prior + 2 Im{z} / s2.
///
/// This is the exact posterior mean over the increment alphabet {+j, -j}
/// for a circular-Gaussian observable with per-component variance `sigma2`.
pub fn soft_increment_dbpsk(
    priors: PriorLlrs,
    z: Complex64,
    sigma2: f64,
    shape: TanhShape,
) -> Result<SoftIncrement> {
    check_sigma2(sigma2)?;
    priors.validate()?;
    let llr = priors.im + 2.0 * z.im / sigma2;
    let value = Complex64::new(0.0, shape.apply(0.5 * llr));
    Ok(SoftIncrement {
        value,
        llr_re: 0.0,
        llr_im: llr,
        modulation: Modulation::Dbpsk,
    })
}

/// Soft DQPSK increment in factorized form: each component of d is
/// (sqrt(2)/2) * tanh(L / 2) with L = prior + 2 sqrt(2) Re-or-Im{z} / s2.
///
/// Because both the priors and the observation likelihood factor over the
/// two components, this equals the four-term posterior mean exactly.
pub fn soft_increment_dqpsk(
    priors: PriorLlrs,
    z: Complex64,
    sigma2: f64,
    shape: TanhShape,
) -> Result<SoftIncrement> {
    check_sigma2(sigma2)?;
    priors.validate()?;
    let scale = 2.0 * std::f64::consts::SQRT_2 / sigma2;
    let llr_re = priors.re + scale * z.re;
    let llr_im = priors.im + scale * z.im;
    let value = Complex64::new(
        FRAC_1_SQRT_2 * shape.apply(0.5 * llr_re),
        FRAC_1_SQRT_2 * shape.apply(0.5 * llr_im),
    );
    Ok(SoftIncrement {
        value,
        llr_re,
        llr_im,
        modulation: Modulation::Dqpsk,
    })
}

/// Logistic function with exact handling of infinite arguments.
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Prior probability of a DQPSK increment under component-oriented LLRs.
/// The four probabilities over the alphabet sum to one.
pub fn increment_prior_probability(priors: PriorLlrs, v: Complex64) -> Result<f64> {
    priors.validate()?;
    let member = DQPSK_ALPHABET
        .iter()
        .any(|(_, cand)| (v - cand).norm() < 1e-12);
    if !member {
        return Err(Error::invalid("v", "not a DQPSK increment alphabet member"));
    }
    let p_re = logistic(v.re.signum() * priors.re);
    let p_im = logistic(v.im.signum() * priors.im);
    Ok(p_re * p_im)
}
