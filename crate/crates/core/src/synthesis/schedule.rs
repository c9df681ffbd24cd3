//! Exponent schedules for powers of a compression with a ladder spectrum.
//!
//! Slab `j` of the flag carries eigenvalue `μ_j = exp(−λ_j)` of the compressed
//! operator. Rates are stored as `ln λ_j`, so slabs whose eigenvalue rounds
//! to one in floating point still carry exact information.

use crate::error::{Error, Result};
use crate::exponent::Exponent;

pub const DEFAULT_EXPONENT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    /// `ln λ_j` for every slab.
    pub ln_rates: Vec<f64>,
    /// One exponent per level.
    pub exponents: Vec<Exponent>,
    /// `‖X_k − P_k‖` realised by each exponent.
    pub achieved_errors: Vec<f64>,
}

impl PowerSchedule {
    /// `μ_j`, rounded to double precision.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.ln_rates.iter().map(|&l| (-l.exp()).exp()).collect()
    }
}

/// `ln λ` for an eigenvalue `μ ∈ [0, 1]`.
pub fn ln_rate_of(mu: f64) -> f64 {
    (-mu.ln()).ln()
}

/// Weight `μ^p = exp(−pλ)` that slab `ln_rate` keeps under exponent `exp(ln_p)`.
pub fn slab_weight(ln_rate: f64, ln_p: f64) -> f64 {
    (-(ln_rate + ln_p).exp()).exp()
}

/// `1 − μ^p`, accurate when tiny.
pub fn slab_deficit(ln_rate: f64, ln_p: f64) -> f64 {
    -(-(ln_rate + ln_p).exp()).exp_m1()
}

/// Distance from the power to the level-`k` projection (`k` from zero):
/// slabs above the level should vanish, those at or below should survive.
pub fn level_error(ln_rates: &[f64], k: usize, ln_p: f64) -> f64 {
    let above = ln_rates[..k].iter().map(|&l| slab_weight(l, ln_p)).fold(0.0, f64::max);
    let below = ln_rates[k..].iter().map(|&l| slab_deficit(l, ln_p)).fold(0.0, f64::max);
    above.max(below)
}

/// Smallest exponent per level found by the scan `p ← max(p + 1, ⌈1.1 p⌉)`.
pub fn power_schedule(mu: &[f64], deltas: &[f64], cap: u64) -> Result<PowerSchedule> {
    if mu.len() != deltas.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), found: deltas.len() });
    }
    if let Some(&bad) = mu.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::NumericalRange { context: "eigenvalue", value: bad });
    }
    let ln_rates: Vec<f64> = mu.iter().map(|&m| ln_rate_of(m)).collect();
    let mut exponents = Vec::with_capacity(mu.len());
    let mut achieved_errors = Vec::with_capacity(mu.len());
    for (k, &delta) in deltas.iter().enumerate() {
        let (p, err) = scan_level(&ln_rates, k, delta, cap)?;
        exponents.push(Exponent::from_u64(p)?);
        achieved_errors.push(err);
    }
    Ok(PowerSchedule { ln_rates, exponents, achieved_errors })
}

/// Scan for a single level `k` (from zero), returning the exponent and its error.
pub fn level_exponent(mu: &[f64], k: usize, delta: f64, cap: u64) -> Result<(u64, f64)> {
    let ln_rates: Vec<f64> = mu.iter().map(|&m| ln_rate_of(m)).collect();
    scan_level(&ln_rates, k, delta, cap)
}

fn scan_level(ln_rates: &[f64], k: usize, delta: f64, cap: u64) -> Result<(u64, f64)> {
    let mut p: u64 = 1;
    loop {
        let err = level_error(ln_rates, k, (p as f64).ln());
        if err < delta {
            return Ok((p, err));
        }
        p = (p + 1).max((p as f64 * 1.1).ceil() as u64);
        if p > cap {
            return Err(Error::Infeasible { level: k + 1 });
        }
    }
}

/// `μ_j = exp(−γ^j)` with `γ = (δ_min / 4)²`.
pub fn eigenvalue_ladder(slab_count: usize, delta_min: f64) -> Vec<f64> {
    ladder_ln_rates(slab_count, delta_min).into_iter().map(|l| (-l.exp()).exp()).collect()
}

/// `ln λ_j = j ln γ` for the ladder above.
pub fn ladder_ln_rates(slab_count: usize, delta_min: f64) -> Vec<f64> {
    let ln_gamma = 2.0 * (delta_min / 4.0).ln();
    (1..=slab_count).map(|j| j as f64 * ln_gamma).collect()
}

/// Ladder and exponents built together, level by level.
///
/// Level one uses `p = 1` with `λ_1 = −ln(1 − δ_1) / 2`. Each later level takes
/// `p_k = 2 ln(1/δ_k) / λ_{k−1}`, which suppresses every slab above it, and
/// then the next rate is chosen small enough that all levels so far keep it.
/// Exponents are unbounded; callers needing machine integers check them.
pub fn adapted_schedule(deltas: &[f64]) -> Result<PowerSchedule> {
    if let Some(&bad) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::NumericalRange { context: "level tolerance", value: bad });
    }
    let keep: Vec<f64> = deltas.iter().map(|&d| (-(-d).ln_1p()).ln()).collect();
    let mut ln_rates = Vec::with_capacity(deltas.len());
    let mut exponents: Vec<Exponent> = Vec::with_capacity(deltas.len());
    let mut tightest = f64::INFINITY;
    for (k, &delta) in deltas.iter().enumerate() {
        let p = if k == 0 {
            Exponent::one()
        } else {
            let ln_p = (2.0 * (1.0 / delta).ln()).ln() - ln_rates[k - 1];
            Exponent::from_ln(ln_p)
        };
        tightest = tightest.min(keep[k] - p.ln());
        ln_rates.push(tightest - std::f64::consts::LN_2);
        exponents.push(p);
    }
    let mut achieved_errors = Vec::with_capacity(deltas.len());
    for (k, (p, &delta)) in exponents.iter().zip(deltas).enumerate() {
        let err = level_error(&ln_rates, k, p.ln());
        if !(err < delta) {
            return Err(Error::Infeasible { level: k + 1 });
        }
        achieved_errors.push(err);
    }
    Ok(PowerSchedule { ln_rates, exponents, achieved_errors })
}
