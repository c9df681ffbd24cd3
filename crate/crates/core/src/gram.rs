//! Compressions of the form `I − FᵀF` evaluated from the factor `F`.
//!
//! When a compression is within `1e-100` of the identity, the dense matrix
//! rounds to the identity, yet its powers with exponents of order `1e100`
//! are far from it. Working with `F` through one-sided Jacobi keeps every
//! singular value to full relative accuracy, so powers stay accurate.

use crate::exponent::Exponent;
use crate::hilbert::{HVector, LinOp};

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Squared singular values and right singular vectors of a factor.
#[derive(Debug, Clone)]
pub struct GramSpectrum {
    pub sigma_sq: Vec<f64>,
    /// Columns are the right singular vectors.
    pub vectors: LinOp,
}

/// One-sided (Hestenes) Jacobi on the columns of `factor`.
pub fn gram_spectrum(factor: &LinOp) -> GramSpectrum {
    let mut work = factor.clone();
    let cols = work.ncols();
    let mut v = LinOp::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let a = work.column(i).norm_squared();
                let b = work.column(j).norm_squared();
                let g = work.column(i).dot(&work.column(j));
                if g == 0.0 || g.abs() <= JACOBI_TOL * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut work, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma_sq = (0..cols).map(|i| work.column(i).norm_squared()).collect();
    GramSpectrum { sigma_sq, vectors: v }
}

fn rotate_columns(m: &mut LinOp, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)];
        let y = m[(r, j)];
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

/// The contraction `I − FᵀF` on an `r`-dimensional frame.
#[derive(Debug, Clone)]
pub struct GramCompression {
    factor: LinOp,
}

impl GramCompression {
    pub fn new(factor: LinOp) -> Self {
        Self { factor }
    }

    pub fn dim(&self) -> usize {
        self.factor.ncols()
    }

    pub fn factor(&self) -> &LinOp {
        &self.factor
    }

    /// `FᵀF`, the deviation from the identity.
    pub fn deviation(&self) -> LinOp {
        self.factor.tr_mul(&self.factor)
    }

    pub fn matrix(&self) -> LinOp {
        LinOp::identity(self.dim(), self.dim()) - self.deviation()
    }

    pub fn spectrum(&self) -> GramSpectrum {
        gram_spectrum(&self.factor)
    }

    /// Largest squared singular value of the factor, i.e. the largest
    /// eigenvalue of the deviation.
    pub fn max_deviation(&self) -> f64 {
        self.spectrum().sigma_sq.into_iter().fold(0.0, f64::max)
    }

    /// `(I − FᵀF)^m` for `m = exp(ln_m)`.
    pub fn power_ln(&self, ln_m: f64) -> LinOp {
        let spec = self.spectrum();
        let r = self.dim();
        let mut out = LinOp::zeros(r, r);
        for (k, &s2) in spec.sigma_sq.iter().enumerate() {
            let weight = damped_power(s2, ln_m);
            if weight == 0.0 {
                continue;
            }
            let col = spec.vectors.column(k);
            out += col * col.transpose() * weight;
        }
        out
    }

    pub fn power(&self, m: &Exponent) -> LinOp {
        self.power_ln(m.ln())
    }

    pub fn apply_power(&self, m: &Exponent, x: &HVector) -> HVector {
        self.power(m) * x
    }
}

/// `(1 − s2)^m` with `m = exp(ln_m)`, accurate for tiny `s2` and huge `m`.
pub fn damped_power(s2: f64, ln_m: f64) -> f64 {
    if s2 >= 1.0 {
        return 0.0;
    }
    if s2 <= 0.0 {
        return 1.0;
    }
    let rate = -(-s2).ln_1p();
    (-(ln_m + rate.ln()).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_tiny_singular_values() {
        // Columns of wildly different size, nearly parallel.
        let f = LinOp::from_row_slice(3, 2, &[1e-60, 2e-60, 3e-90, 0.0, 0.0, 1e-80]);
        let spec = gram_spectrum(&f);
        let mut s = spec.sigma_sq.clone();
        s.sort_by(f64::total_cmp);
        let big = 5e-120;
        assert!((s[1] / big - 1.0).abs() < 1e-12);
        // det(FᵀF) = s0 * s1; compute it independently from the 2x2 minors.
        let minors: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| {
                let d = f[(a, 0)] * f[(b, 1)] - f[(b, 0)] * f[(a, 1)];
                d * d
            })
            .sum();
        assert!((s[0] * s[1] / minors - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_of_near_identity() {
        let f = LinOp::from_row_slice(1, 1, &[1e-50]);
        let c = GramCompression::new(f);
        assert_eq!(c.matrix()[(0, 0)], 1.0);
        let p = c.power_ln((1e100f64).ln());
        assert!((p[(0, 0)] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn power_matches_dense_at_moderate_scale() {
        let f = LinOp::from_row_slice(3, 2, &[0.3, 0.1, -0.2, 0.4, 0.05, 0.02]);
        let c = GramCompression::new(f);
        let m = c.matrix();
        let mut dense = LinOp::identity(2, 2);
        for _ in 0..7 {
            dense = &dense * &m;
        }
        assert!((c.power_ln(7f64.ln()) - dense).amax() < 1e-13);
    }

    #[test]
    fn full_kill_direction() {
        let f = LinOp::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = GramCompression::new(f).power_ln(0.0);
        assert_eq!(p[(0, 0)], 0.0);
        assert!((p[(1, 1)] - 1.0).abs() < 1e-15);
    }
}
