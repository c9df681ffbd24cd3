//! Finite-dimensional real Hilbert space primitives.
//!
//! Unitaries are stored through their deviation from the identity so that
//! rotations by angles far below machine epsilon keep full relative accuracy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type HVector = DVector<f64>;
pub type LinOp = DMatrix<f64>;

const JACOBI_SWEEPS: usize = 12;
const ORTHO_TOL: f64 = 1e-10;

/// Standard basis vector `e_index` in dimension `dim`.
pub fn unit(dim: usize, index: usize) -> HVector {
    let mut v = HVector::zeros(dim);
    v[index] = 1.0;
    v
}

/// Gram-Schmidt with one re-orthogonalisation pass.
pub fn orthonormalize(vectors: &[HVector]) -> Result<Vec<HVector>> {
    let mut out: Vec<HVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), found: v.len() });
            }
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let residual = w.norm();
        if residual < ORTHO_TOL * v.norm().max(1.0) {
            return Err(Error::RankDeficient { residual });
        }
        out.push(w / residual);
    }
    Ok(out)
}

pub fn asymmetry(a: &LinOp) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn check_square(a: &LinOp) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric operator, eigenvalues ascending.
pub fn sym_eig(a: &LinOp) -> Result<(Vec<f64>, Vec<HVector>)> {
    check_square(a)?;
    let asym = asymmetry(a);
    if asym > ORTHO_TOL * a.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let mut vectors = eig.eigenvectors;
    let mut diag = vectors.transpose() * &sym * &vectors;
    jacobi_polish(&mut diag, &mut vectors);
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| diag[(i, i)].total_cmp(&diag[(j, j)]));
    let values = order.iter().map(|&i| diag[(i, i)]).collect();
    let vectors = order.iter().map(|&i| vectors.column(i).into_owned()).collect();
    Ok((values, vectors))
}

/// Cyclic Jacobi sweeps on a nearly diagonal symmetric `b`, accumulating the
/// rotations into `v`. The QR-based solver alone can leave off-diagonal mass
/// near `1e-10`.
fn jacobi_polish(b: &mut LinOp, v: &mut LinOp) {
    let n = b.nrows();
    let scale = b.amax().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let bpq = b[(p, q)];
                off = off.max(bpq.abs());
                if bpq.abs() <= f64::EPSILON * 1e-3 * scale {
                    continue;
                }
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkq) = (b[(k, p)], b[(k, q)]);
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let (bpk, bqk) = (b[(p, k)], b[(q, k)]);
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if off <= f64::EPSILON * 1e-3 * scale {
            break;
        }
    }
}

/// Largest singular value.
pub fn op_norm(a: &LinOp) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.amax() == 0.0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// A unitary held as `identity + delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    delta: LinOp,
}

impl Unitary {
    pub fn identity(dim: usize) -> Self {
        Self { delta: LinOp::zeros(dim, dim) }
    }

    /// Wraps `identity + delta` after checking orthogonality.
    pub fn from_delta(delta: LinOp) -> Result<Self> {
        check_square(&delta)?;
        let u = Self { delta };
        let defect = u.defect();
        if defect > ORTHO_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(u)
    }

    pub fn from_matrix(m: &LinOp) -> Result<Self> {
        check_square(m)?;
        Self::from_delta(m - LinOp::identity(m.nrows(), m.ncols()))
    }

    pub fn dim(&self) -> usize {
        self.delta.nrows()
    }

    pub fn delta(&self) -> &LinOp {
        &self.delta
    }

    pub fn matrix(&self) -> LinOp {
        &self.delta + LinOp::identity(self.dim(), self.dim())
    }

    pub fn adjoint(&self) -> Self {
        Self { delta: self.delta.transpose() }
    }

    /// `self * other`.
    pub fn compose(&self, other: &Unitary) -> Unitary {
        Unitary { delta: &self.delta + &other.delta + &self.delta * &other.delta }
    }

    /// `R(u, w, alpha) · self` in `O(dim²)`.
    pub fn rotate_left(&self, u: &HVector, w: &HVector, alpha: f64) -> Result<Unitary> {
        if u.len() != self.dim() || w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.len() });
        }
        let defect = (u.norm() - 1.0).abs().max((w.norm() - 1.0).abs()).max(u.dot(w).abs());
        if defect > ORTHO_TOL {
            return Err(Error::NotOrthonormalPair { defect });
        }
        let half = (alpha * 0.5).sin();
        let cos_minus_one = -2.0 * half * half;
        let sin = alpha.sin();
        let row_u = u.transpose() + u.transpose() * &self.delta;
        let row_w = w.transpose() + w.transpose() * &self.delta;
        let mut delta = self.delta.clone();
        delta += u * (&row_u * cos_minus_one - &row_w * sin);
        delta += w * (&row_w * cos_minus_one + &row_u * sin);
        Ok(Unitary { delta })
    }

    pub fn apply(&self, v: &HVector) -> HVector {
        v + &self.delta * v
    }

    pub fn apply_adjoint(&self, v: &HVector) -> HVector {
        v + self.delta.tr_mul(v)
    }

    /// `‖U − 1‖`.
    pub fn deviation(&self) -> f64 {
        op_norm(&self.delta)
    }

    /// `‖U*U − 1‖`, evaluated without forming `U`.
    pub fn defect(&self) -> f64 {
        let d = &self.delta;
        op_norm(&(d + d.transpose() + d.tr_mul(d)))
    }

    /// `U X U* − X`, accurate to the size of the deviation.
    pub fn conjugation_defect(&self, x: &LinOp) -> LinOp {
        let d = &self.delta;
        let dx = d * x;
        let xdt = x * d.transpose();
        let dxdt = &dx * d.transpose();
        dx + xdt + dxdt
    }

    /// `U X U*` as a dense operator.
    pub fn conjugate_op(&self, x: &LinOp) -> LinOp {
        x + self.conjugation_defect(x)
    }
}

/// Rotation by `alpha` in the plane of the orthonormal pair `(u, w)`,
/// sending `u` to `cos(alpha) u + sin(alpha) w`, identity on the complement.
pub fn plane_rotation(u: &HVector, w: &HVector, alpha: f64) -> Result<Unitary> {
    if u.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: w.len() });
    }
    let defect = (u.norm() - 1.0).abs().max((w.norm() - 1.0).abs()).max(u.dot(w).abs());
    if defect > ORTHO_TOL {
        return Err(Error::NotOrthonormalPair { defect });
    }
    let half = (alpha * 0.5).sin();
    let cos_minus_one = -2.0 * half * half;
    let sin = alpha.sin();
    let delta = (u * u.transpose() + w * w.transpose()) * cos_minus_one + (w * u.transpose() - u * w.transpose()) * sin;
    Ok(Unitary { delta })
}

/// Applies `R(u, w, alpha) − 1` to `v` without forming the rotation.
pub fn rotation_delta_apply(u: &HVector, w: &HVector, alpha: f64, v: &HVector) -> HVector {
    let half = (alpha * 0.5).sin();
    let cos_minus_one = -2.0 * half * half;
    let sin = alpha.sin();
    let cu = u.dot(v);
    let cw = w.dot(v);
    u * (cos_minus_one * cu - sin * cw) + w * (cos_minus_one * cw + sin * cu)
}
