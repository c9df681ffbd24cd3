//! Orthogonal projections, decreasing flags of projections, and the
//! spectral operations used on compressions.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hilbert::{op_norm, orthonormalize, sym_eig, unit, HVector, LinOp, Unitary};

const PROJ_TOL: f64 = 1e-10;
const FLAG_TOL: f64 = 1e-9;

/// An orthogonal projection with an orthonormal basis of its range.
/// The dense matrix is formed on first use.
#[derive(Debug, Clone)]
pub struct Projection {
    dim: usize,
    basis: OnceLock<Vec<HVector>>,
    /// Set when the range is spanned by standard basis vectors.
    coords: Option<Vec<usize>>,
    matrix: OnceLock<LinOp>,
}

impl Projection {
    pub fn zero(dim: usize) -> Self {
        Self::coordinates(dim, &[])
    }

    /// Projection onto the listed coordinates.
    pub fn coordinates(dim: usize, coords: &[usize]) -> Self {
        Self { dim, basis: OnceLock::new(), coords: Some(coords.to_vec()), matrix: OnceLock::new() }
    }

    /// Trusts that `basis` is orthonormal.
    pub fn from_orthonormal_unchecked(dim: usize, basis: Vec<HVector>) -> Self {
        Self { dim, basis: OnceLock::from(basis), coords: None, matrix: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> Option<&[usize]> {
        self.coords.as_deref()
    }

    pub fn rank(&self) -> usize {
        match &self.coords {
            Some(cs) => cs.len(),
            None => self.basis().len(),
        }
    }

    pub fn basis(&self) -> &[HVector] {
        self.basis
            .get_or_init(|| self.coords.as_deref().unwrap_or_default().iter().map(|&c| unit(self.dim, c)).collect())
    }

    pub fn matrix(&self) -> &LinOp {
        self.matrix.get_or_init(|| {
            let b = self.basis_matrix();
            &b * b.transpose()
        })
    }

    /// Basis vectors as the columns of a `dim × rank` matrix.
    pub fn basis_matrix(&self) -> LinOp {
        let mut b = LinOp::zeros(self.dim(), self.rank());
        for (j, v) in self.basis().iter().enumerate() {
            b.set_column(j, v);
        }
        b
    }

    pub fn apply(&self, v: &HVector) -> HVector {
        match &self.coords {
            Some(cs) => {
                let mut out = HVector::zeros(self.dim);
                for &c in cs {
                    out[c] = v[c];
                }
                out
            }
            None => self.basis().iter().fold(HVector::zeros(self.dim), |acc, b| acc + b * b.dot(v)),
        }
    }

    /// `max(‖P² − P‖, ‖P − Pᵀ‖)`.
    pub fn defect(&self) -> f64 {
        let p = self.matrix();
        op_norm(&(p * p - p)).max(op_norm(&(p - p.transpose())))
    }

    pub fn complement(&self) -> Result<Projection> {
        let dim = self.dim();
        let mut candidates: Vec<(f64, HVector)> = (0..dim)
            .map(|i| {
                let r = unit(dim, i) - self.apply(&unit(dim, i));
                (r.norm(), r)
            })
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut basis: Vec<HVector> = Vec::new();
        for (_, r) in candidates {
            if basis.len() == dim - self.rank() {
                break;
            }
            let mut w = r;
            for _ in 0..2 {
                for q in self.basis().iter().chain(basis.iter()) {
                    let c = q.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let n = w.norm();
            if n > 1e-6 {
                basis.push(w / n);
            }
        }
        if basis.len() != dim - self.rank() {
            return Err(Error::RankDeficient { residual: 0.0 });
        }
        Ok(Self::from_orthonormal_unchecked(dim, basis))
    }
}

/// Projection onto the span of `vectors` (orthonormalised first).
pub fn proj_from_basis(vectors: &[HVector]) -> Result<Projection> {
    let dim = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Invalid("empty basis".into()))?;
    let basis = orthonormalize(vectors)?;
    Ok(Projection::from_orthonormal_unchecked(dim, basis))
}

/// Matrix of `E T E` in the stored basis of `E`.
pub fn compress(e: &Projection, t: &LinOp) -> Result<LinOp> {
    if t.nrows() != e.dim() || t.ncols() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: t.nrows() });
    }
    let b = e.basis_matrix();
    Ok(b.transpose() * t * b)
}

/// Compression embedded back into the ambient space, `E T E`.
pub fn compress_embedded(e: &Projection, t: &LinOp) -> LinOp {
    e.matrix() * t * e.matrix()
}

/// Principal angles between the ranges, ascending.
pub fn principal_angles(p: &Projection, q: &Projection) -> Result<Vec<f64>> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    let count = p.rank().min(q.rank());
    if count == 0 {
        return Ok(Vec::new());
    }
    let cross = p.basis_matrix().transpose() * q.basis_matrix();
    let mut cosines: Vec<f64> = cross.svd(false, false).singular_values.iter().copied().collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    Ok(cosines.into_iter().take(count).map(|c| c.clamp(-1.0, 1.0).acos()).collect())
}

pub fn proj_distance(p: &Projection, q: &Projection) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    Ok(op_norm(&(p.matrix() - q.matrix())))
}

/// `T^n` for a symmetric `T`, through its eigen-decomposition.
pub fn spectral_power(t: &LinOp, n: u64) -> Result<LinOp> {
    let (values, vectors) = sym_eig(t)?;
    let dim = t.nrows();
    let mut out = LinOp::zeros(dim, dim);
    for (lambda, v) in values.iter().zip(&vectors) {
        let w = signed_power(*lambda, n);
        if w != 0.0 {
            out += v * v.transpose() * w;
        }
    }
    Ok(out)
}

fn signed_power(lambda: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let magnitude = (n as f64 * lambda.abs().ln()).exp();
    if lambda < 0.0 && n % 2 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// `U P U*` as a projection with basis `U b`.
pub fn conjugate(u: &Unitary, p: &Projection) -> Result<Projection> {
    if u.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: u.dim() });
    }
    let defect = u.defect();
    if defect > PROJ_TOL {
        return Err(Error::NotUnitary { defect });
    }
    let basis = p.basis().iter().map(|b| u.apply(b)).collect();
    Ok(Projection::from_orthonormal_unchecked(p.dim(), basis))
}

/// A decreasing chain of projections with declared rank drops.
#[derive(Debug, Clone)]
pub struct Flag {
    members: Vec<Projection>,
    drops: Vec<usize>,
}

impl Flag {
    /// Validates `P_m P_{m+1} = P_{m+1}` within `1e-9` and the rank drops.
    pub fn new(members: Vec<Projection>, drops: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Invalid("flag needs at least one member".into()));
        }
        if drops.len() + 1 != members.len() {
            return Err(Error::Invalid(format!(
                "{} members need {} drops, got {}",
                members.len(),
                members.len() - 1,
                drops.len()
            )));
        }
        let dim = members[0].dim();
        for m in &members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
        }
        for (i, pair) in members.windows(2).enumerate() {
            let (upper, lower) = (&pair[0], &pair[1]);
            let defect = match (upper.coords(), lower.coords()) {
                (Some(u), Some(l)) => {
                    if l.iter().all(|c| u.contains(c)) {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => op_norm(&(upper.matrix() * lower.matrix() - lower.matrix())),
            };
            if defect > FLAG_TOL {
                return Err(Error::OrderingViolation { index: i, defect });
            }
            let found = upper.rank().checked_sub(lower.rank()).ok_or(Error::OrderingViolation { index: i, defect })?;
            if found != drops[i] {
                return Err(Error::RankDropMismatch { index: i, expected: drops[i], found });
            }
        }
        Ok(Self { members, drops })
    }

    pub fn members(&self) -> &[Projection] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Projection {
        &self.members[i]
    }

    pub fn drops(&self) -> &[usize] {
        &self.drops
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// Orthonormal bases of the slabs `P_m ⊖ P_{m+1}`, the last slab being the bottom member.
    pub fn slabs(&self) -> Result<Vec<Vec<HVector>>> {
        let mut out = Vec::with_capacity(self.members.len());
        for (i, upper) in self.members.iter().enumerate() {
            match self.members.get(i + 1) {
                None => out.push(upper.basis().to_vec()),
                Some(lower) => out.push(difference_basis(upper, lower)?),
            }
        }
        Ok(out)
    }
}

/// Orthonormal basis of `range(upper) ⊖ range(lower)` for `lower ≤ upper`.
fn difference_basis(upper: &Projection, lower: &Projection) -> Result<Vec<HVector>> {
    if let (Some(u), Some(l)) = (upper.coords(), lower.coords()) {
        return Ok(u.iter().filter(|c| !l.contains(c)).map(|&c| unit(upper.dim(), c)).collect());
    }
    let want = upper.rank() - lower.rank();
    let mut candidates: Vec<(f64, HVector)> = upper
        .basis()
        .iter()
        .map(|b| {
            let r = b - lower.apply(b);
            (r.norm(), r)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<HVector> = Vec::with_capacity(want);
    for (_, r) in candidates {
        if out.len() == want {
            break;
        }
        let mut w = r;
        for _ in 0..2 {
            for q in lower.basis().iter().chain(out.iter()) {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let n = w.norm();
        if n > 1e-6 {
            out.push(w / n);
        }
    }
    if out.len() != want {
        return Err(Error::RankDeficient { residual: 0.0 });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::plane_rotation;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn line_projection_matrix() {
        let p = proj_from_basis(&[HVector::from_vec(vec![1.0, 1.0])]).unwrap();
        for x in p.matrix().iter() {
            assert!((x - 0.5).abs() < 1e-15);
        }
        assert!(p.defect() < 1e-15);
    }

    #[test]
    fn angle_between_axis_and_diagonal() {
        let p = proj_from_basis(&[unit(2, 0)]).unwrap();
        let q = proj_from_basis(&[HVector::from_vec(vec![1.0, 1.0])]).unwrap();
        let a = principal_angles(&p, &q).unwrap();
        assert!((a[0] - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn compression_of_identity() {
        let e = Projection::coordinates(4, &[1, 3]);
        let c = compress(&e, &LinOp::identity(4, 4)).unwrap();
        assert_eq!(c, LinOp::identity(2, 2));
    }

    #[test]
    fn power_of_symmetric() {
        let t = LinOp::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.3]);
        let mut dense = LinOp::identity(2, 2);
        for _ in 0..9 {
            dense = &dense * &t;
        }
        assert!((spectral_power(&t, 9).unwrap() - dense).amax() < 1e-14);
    }

    #[test]
    fn conjugated_projection_is_projection() {
        let u = plane_rotation(&unit(3, 0), &unit(3, 2), 0.7).unwrap();
        let p = conjugate(&u, &Projection::coordinates(3, &[0, 1])).unwrap();
        assert!(p.defect() < 1e-14);
        assert!((u.conjugate_op(&Projection::coordinates(3, &[0, 1]).matrix().clone()) - p.matrix()).amax() < 1e-15);
    }

    #[test]
    fn flag_ordering() {
        let top = Projection::coordinates(3, &[0, 1, 2]);
        let mid = Projection::coordinates(3, &[0, 2]);
        let odd = Projection::coordinates(3, &[1]);
        assert!(Flag::new(vec![top.clone(), mid.clone()], vec![1]).is_ok());
        assert!(matches!(Flag::new(vec![mid, odd], vec![1]), Err(Error::OrderingViolation { .. })));
        assert!(matches!(
            Flag::new(vec![top, Projection::coordinates(3, &[0])], vec![1]),
            Err(Error::RankDropMismatch { .. })
        ));
    }

    #[test]
    fn slabs_partition_top() {
        let flag = Flag::new(
            vec![
                Projection::coordinates(4, &[0, 1, 2, 3]),
                Projection::coordinates(4, &[1, 3]),
                Projection::coordinates(4, &[3]),
            ],
            vec![2, 1],
        )
        .unwrap();
        let slabs = flag.slabs().unwrap();
        assert_eq!(slabs.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 1, 1]);
        let all: Vec<HVector> = slabs.into_iter().flatten().collect();
        let p = proj_from_basis(&all).unwrap();
        assert!((p.matrix() - LinOp::identity(4, 4)).amax() < 1e-14);
    }
}
