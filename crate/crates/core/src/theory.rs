//! Closed-form SNR ratios between correlated-noise subtraction imaging and
//! its classical counterparts.
//!
//! All three ratios share the denominator `α²E + 2σ(1−α) + α`, the
//! normalized variance of the quantum absorption estimate. The numerators
//! are the corresponding classical variances: `2 − α` for the differential
//! scheme with an uncorrelated reference, `1 − α` for a noiseless reference,
//! and `α²⟨N_th⟩/M_th + 2 − α` for a differential scheme fed by
//! multithermal light.

use serde::Serialize;

use crate::error::{Error, Result};

/// Operating point for the ratio formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryPoint {
    pub alpha: f64,
    pub sigma: f64,
    /// Single-beam excess noise; values down to −1 are accepted so measured
    /// sub-Poissonian estimates can be substituted.
    pub excess: f64,
}

impl TheoryPoint {
    pub fn new(alpha: f64, sigma: f64, excess: f64) -> Self {
        TheoryPoint {
            alpha,
            sigma,
            excess,
        }
    }

    fn denominator(&self) -> Result<f64> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", self.alpha, "must lie in [0, 1]"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::param("sigma", self.sigma, "must be nonnegative"));
        }
        if !(self.excess >= -1.0) {
            return Err(Error::param("excess", self.excess, "must be at least -1"));
        }
        let a = self.alpha;
        let d = a * a * self.excess + 2.0 * self.sigma * (1.0 - a) + a;
        if !(d > 0.0) {
            return Err(Error::param("denominator", d, "must be positive"));
        }
        Ok(d)
    }
}

/// Correlation level reached by twin beams after balanced loss `eta`.
pub fn sigma_theory(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", eta, "must lie in [0, 1]"));
    }
    Ok(1.0 - eta)
}

/// SNR ratio against the differential classical scheme.
pub fn r_dcl(p: &TheoryPoint) -> Result<f64> {
    let d = p.denominator()?;
    Ok(((2.0 - p.alpha) / d).sqrt())
}

/// SNR ratio against direct classical imaging with a noiseless reference.
pub fn r_cl(p: &TheoryPoint) -> Result<f64> {
    let d = p.denominator()?;
    Ok(((1.0 - p.alpha) / d).sqrt())
}

/// SNR ratio against differential imaging with multithermal light of mean
/// `n_th` photons spread over `m_th` modes.
pub fn r_thermal(p: &TheoryPoint, n_th: f64, m_th: f64) -> Result<f64> {
    let d = p.denominator()?;
    let e_th = excess_noise_multithermal(n_th, m_th)?;
    Ok(((p.alpha * p.alpha * e_th + 2.0 - p.alpha) / d).sqrt())
}

/// Excess noise of multithermal light: mean photon number per mode.
pub fn excess_noise_multithermal(n: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::param("modes", m, "must be positive"));
    }
    if !(n >= 0.0) {
        return Err(Error::param("n", n, "must be nonnegative"));
    }
    if m.is_infinite() {
        return Ok(0.0);
    }
    Ok(n / m)
}

/// Correlation level below which the quantum scheme beats direct classical
/// imaging: `r_cl > 1 ⇔ σ < (1 − 2α − α²E) / (2(1 − α))`.
pub fn r_cl_break_even_sigma(alpha: f64, excess: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", alpha, "must lie in [0, 1)"));
    }
    Ok((1.0 - 2.0 * alpha - alpha * alpha * excess) / (2.0 * (1.0 - alpha)))
}

/// Same for the differential scheme: `r_dcl > 1 ⇔ σ < (2 − 2α − α²E) / (2(1 − α))`.
pub fn r_dcl_break_even_sigma(alpha: f64, excess: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", alpha, "must lie in [0, 1)"));
    }
    Ok((2.0 - 2.0 * alpha - alpha * alpha * excess) / (2.0 * (1.0 - alpha)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub sigma: f64,
    pub r_cl: f64,
    pub r_dcl: f64,
}

/// Tabulates both ratios over `sigmas` at fixed α and E.
pub fn tabulate_curves(alpha: f64, excess: f64, sigmas: &[f64]) -> Result<Vec<CurveRow>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let p = TheoryPoint::new(alpha, sigma, excess);
            Ok(CurveRow {
                sigma,
                r_cl: r_cl(&p)?,
                r_dcl: r_dcl(&p)?,
            })
        })
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
