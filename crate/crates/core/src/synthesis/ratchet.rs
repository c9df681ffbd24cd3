//! A near-identity unitary `V` and exponents `n(t)` such that
//! `∏_t (E V Q_t V* E)^{n(t)} e ≈ e'` for a unit-drop flag ending at a plane `E`.
//!
//! `V` is a product of small rotations, one per stage, each tilting the
//! dropped direction `g_t` towards a direction `d_t` of `E`. Compressing with
//! `Q_t` then gives `E − Σ_{s≤t} c_s c_sᵀ` with `c_s ≈ −sin α_s d_s`, a
//! cumulative ratchet whose soft directions sweep from `e` to `e'`.
//!
//! The angles follow a geometric profile over `range` natural-log units of
//! `|c|²`, and each exponent is `gain / λ_max` of the current deviation. Both
//! parameters are chosen by scanning and every candidate is checked by
//! evaluating the product.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::gram::GramCompression;
use crate::hilbert::{rotation_delta_apply, HVector, LinOp, Unitary};
use crate::proj::Flag;

const RANGES: [f64; 16] =
    [4.0, 8.0, 12.0, 16.0, 24.0, 32.0, 45.0, 60.0, 80.0, 100.0, 130.0, 160.0, 200.0, 250.0, 300.0, 360.0];
const GAINS: [f64; 10] = [0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
/// Fraction of the deviation budget spent on rotation angles.
const BUDGET_SHARE: f64 = 0.9;
const MAX_ANGLE: f64 = 1.2;
/// Smallest `ln α` whose square stays a normal double with headroom.
const MIN_LN_ANGLE: f64 = -335.0;
const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RatchetPlan {
    pub stage_count: usize,
    pub angles: Vec<f64>,
    pub exponents: Vec<Exponent>,
    /// `‖∏ (E V Q_t V* E)^{n(t)} e − e'‖`, evaluated from the built `V`.
    pub residual: f64,
    /// Measured `‖V − 1‖`.
    pub deviation: f64,
    /// `Σ 2 sin(α_t / 2)`, an upper bound for the deviation.
    pub deviation_bound: f64,
    pub range: f64,
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub struct Ratchet {
    pub unitary: Unitary,
    pub plan: RatchetPlan,
}

/// Fewest compression stages that can move `e` within `eps` of an orthogonal `e'`.
///
/// A positive contraction `C` satisfies `⟨Cx, x⟩ ≥ |Cx|²`, so turning a vector
/// by angle `ψ` costs at least a factor `cos ψ` of its norm. Ending within
/// `eps` of `e'` needs a total turn of `π/2 − asin(eps)` while keeping norm
/// `1 − eps`, and `cos(Ψ/T)^T` is the best `T` steps can do.
pub fn stage_lower_bound(eps: f64) -> usize {
    if eps >= 1.0 {
        return 1;
    }
    let turn = FRAC_PI_2 - eps.asin();
    let floor = (-eps).ln_1p();
    let mut t = 1usize;
    loop {
        let step = turn / t as f64;
        if step < FRAC_PI_2 && t as f64 * step.cos().ln() >= floor {
            return t;
        }
        t += 1;
    }
}

/// Starting stage count for the doubling search, `⌈π² / (4 eps)⌉`.
pub fn initial_stage_count(eps: f64) -> usize {
    (std::f64::consts::PI.powi(2) / (4.0 * eps)).ceil() as usize
}

struct Geometry {
    /// `g_t`, spanning `Q_{t−1} ⊖ Q_t`.
    dropped: Vec<HVector>,
    e: HVector,
    e_prime: HVector,
}

fn check_inputs(flag: &Flag, e: &HVector, e_prime: &HVector, eps: f64, eta: f64) -> Result<Geometry> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {eps}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Invalid(format!("deviation budget must lie in (0, 1), got {eta}")));
    }
    if flag.drops().iter().any(|&d| d != 1) {
        return Err(Error::Invalid("flag must drop rank by one at every step".into()));
    }
    let bottom = flag.member(flag.len() - 1);
    if bottom.rank() != 2 {
        return Err(Error::Invalid(format!("bottom member must have rank 2, has {}", bottom.rank())));
    }
    for v in [e, e_prime] {
        if v.len() != flag.dim() {
            return Err(Error::DimensionMismatch { expected: flag.dim(), found: v.len() });
        }
        if (v.norm() - 1.0).abs() > MEMBERSHIP_TOL || (bottom.apply(v) - v).norm() > MEMBERSHIP_TOL {
            return Err(Error::Invalid("endpoints must be unit vectors in the bottom member".into()));
        }
    }
    if e.dot(e_prime).abs() > MEMBERSHIP_TOL {
        return Err(Error::NotOrthonormalPair { defect: e.dot(e_prime).abs() });
    }
    let dropped = flag.slabs()?.into_iter().take(flag.len() - 1).map(|mut s| s.remove(0)).collect();
    Ok(Geometry { dropped, e: e.clone(), e_prime: e_prime.clone() })
}

fn geometric_angles(stages: usize, range: f64, eta: f64) -> Vec<f64> {
    let weights: Vec<f64> = if stages == 1 {
        vec![1.0]
    } else {
        (1..=stages).map(|t| (-range * (stages - t) as f64 / (2.0 * (stages - 1) as f64)).exp()).collect()
    };
    let total: f64 = weights.iter().sum();
    let top = (BUDGET_SHARE * eta / total).min(MAX_ANGLE);
    weights.into_iter().map(|w| w * top).collect()
}

/// `d_t = −sin θ_t e + cos θ_t e'` with `θ_t = t π / (2T)`.
fn tilt_direction(geo: &Geometry, t: usize, stages: usize) -> HVector {
    let theta = t as f64 * FRAC_PI_2 / stages as f64;
    &geo.e * (-theta.sin()) + &geo.e_prime * theta.cos()
}

/// Deviations `V* e − e` and `V* e' − e'` for `V = R_1 R_2 ⋯ R_T`.
fn adjoint_images(geo: &Geometry, angles: &[f64]) -> [HVector; 2] {
    let stages = angles.len();
    let mut out = [HVector::zeros(geo.e.len()), HVector::zeros(geo.e.len())];
    for (slot, base) in out.iter_mut().zip([&geo.e, &geo.e_prime]) {
        for (t, &alpha) in angles.iter().enumerate() {
            let d = tilt_direction(geo, t + 1, stages);
            let g = &geo.dropped[t];
            let step = rotation_delta_apply(&d, g, -alpha, base) + rotation_delta_apply(&d, g, -alpha, slot);
            *slot += step;
        }
    }
    out
}

fn build_unitary(geo: &Geometry, angles: &[f64]) -> Result<Unitary> {
    let stages = angles.len();
    let mut v = Unitary::identity(geo.e.len());
    for t in (0..stages).rev() {
        v = v.rotate_left(&tilt_direction(geo, t + 1, stages), &geo.dropped[t], angles[t])?;
    }
    Ok(v)
}

/// Factor of `E V Q_t V* E` in the frame `(e, e')`, rows indexed by the dropped directions.
fn stage_factor(geo: &Geometry, images: &[HVector; 2], t: usize) -> LinOp {
    let mut f = LinOp::zeros(t, 2);
    for s in 0..t {
        let g = &geo.dropped[s];
        f[(s, 0)] = g.dot(&geo.e) + g.dot(&images[0]);
        f[(s, 1)] = g.dot(&geo.e_prime) + g.dot(&images[1]);
    }
    f
}

/// Runs the ratchet with `n(t) = max(1, round(gain / λ_max))`, returning exponents and residual.
fn simulate(geo: &Geometry, images: &[HVector; 2], stages: usize, gain: f64) -> Option<(Vec<Exponent>, f64)> {
    let mut x = HVector::from_vec(vec![1.0, 0.0]);
    let mut exponents = Vec::with_capacity(stages);
    for t in 1..=stages {
        let c = GramCompression::new(stage_factor(geo, images, t));
        let top = c.max_deviation();
        if !(top > 0.0) {
            return None;
        }
        let n = Exponent::from_f64((gain / top).max(1.0)).ok()?;
        x = c.power(&n) * x;
        exponents.push(n);
    }
    Some((exponents, (x - HVector::from_vec(vec![0.0, 1.0])).norm()))
}

/// `‖∏_t (E V Q_t V* E)^{n(t)} e − e'‖`, evaluated from the deviation of `V`.
pub fn ratchet_residual(
    flag: &Flag,
    unitary: &Unitary,
    e: &HVector,
    e_prime: &HVector,
    exponents: &[Exponent],
) -> Result<f64> {
    let geo = check_inputs(flag, e, e_prime, 1.0, 0.5)?;
    if exponents.len() != geo.dropped.len() {
        return Err(Error::DimensionMismatch { expected: geo.dropped.len(), found: exponents.len() });
    }
    let images = [unitary.delta().tr_mul(e), unitary.delta().tr_mul(e_prime)];
    let mut x = HVector::from_vec(vec![1.0, 0.0]);
    for (t, n) in exponents.iter().enumerate() {
        x = GramCompression::new(stage_factor(&geo, &images, t + 1)).power(n) * x;
    }
    Ok((x - HVector::from_vec(vec![0.0, 1.0])).norm())
}

/// Smallest residual reachable over the parameter scan, without building `V`.
pub fn best_ratchet_residual(flag: &Flag, e: &HVector, e_prime: &HVector, eta: f64) -> Result<f64> {
    let geo = check_inputs(flag, e, e_prime, 1.0, eta)?;
    let stages = geo.dropped.len();
    let mut best = SQRT_2;
    for (r, &range) in RANGES.iter().enumerate() {
        let angles = geometric_angles(stages, range, eta);
        if angles[0].ln() < MIN_LN_ANGLE {
            // Longer ratchets only shrink the angles further.
            if r == 0 {
                return Err(Error::NumericalRange { context: "smallest ratchet angle", value: angles[0].ln() });
            }
            break;
        }
        let images = adjoint_images(&geo, &angles);
        for &gain in &GAINS {
            if let Some((_, r)) = simulate(&geo, &images, stages, gain) {
                best = best.min(r);
            }
        }
    }
    Ok(best)
}

pub fn synthesize_ratchet(flag: &Flag, e: &HVector, e_prime: &HVector, eps: f64, eta: f64) -> Result<Ratchet> {
    let geo = check_inputs(flag, e, e_prime, eps, eta)?;
    let stages = geo.dropped.len();
    if eps > SQRT_2 {
        return Ok(Ratchet {
            unitary: Unitary::identity(flag.dim()),
            plan: RatchetPlan {
                stage_count: 0,
                angles: Vec::new(),
                exponents: Vec::new(),
                residual: SQRT_2,
                deviation: 0.0,
                deviation_bound: 0.0,
                range: 0.0,
                gain: 0.0,
            },
        });
    }
    let required = (2 * stages).max(stage_lower_bound(eps));
    if stages < stage_lower_bound(eps) {
        return Err(Error::InsufficientStages { available: stages, required });
    }
    for (r, &range) in RANGES.iter().enumerate() {
        let angles = geometric_angles(stages, range, eta);
        if angles[0].ln() < MIN_LN_ANGLE {
            // Longer ratchets only shrink the angles further.
            if r == 0 {
                return Err(Error::NumericalRange { context: "smallest ratchet angle", value: angles[0].ln() });
            }
            break;
        }
        let images = adjoint_images(&geo, &angles);
        for &gain in &GAINS {
            let Some((exponents, predicted)) = simulate(&geo, &images, stages, gain) else { continue };
            if !(predicted < eps) {
                continue;
            }
            let unitary = build_unitary(&geo, &angles)?;
            let residual = ratchet_residual(flag, &unitary, e, e_prime, &exponents)?;
            if !(residual < eps) {
                continue;
            }
            let deviation_bound = angles.iter().map(|a| 2.0 * (0.5 * a).sin()).sum();
            let deviation = unitary.deviation();
            return Ok(Ratchet {
                unitary,
                plan: RatchetPlan {
                    stage_count: stages,
                    angles,
                    exponents,
                    residual,
                    deviation,
                    deviation_bound,
                    range,
                    gain,
                },
            });
        }
    }
    Err(Error::InsufficientStages { available: stages, required })
}
