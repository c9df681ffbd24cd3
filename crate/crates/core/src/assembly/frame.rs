//! Compressions to the span of `e_1 .. e_{2K+1}` of projections conjugated by
//! a near-identity unitary, built from the unitary's deviation so that tiny
//! overlaps keep their relative accuracy.

use crate::exponent::Exponent;
use crate::gram::GramCompression;
use crate::hilbert::{HVector, LinOp, Unitary};

/// Coordinate frame of the compressions: the `e` coordinates in order.
#[derive(Debug, Clone)]
pub struct Frame {
    pub coords: Vec<usize>,
}

impl Frame {
    pub fn new(coords: Vec<usize>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Frame index of an ambient coordinate, if it belongs to the frame.
    pub fn position(&self, coord: usize) -> Option<usize> {
        self.coords.iter().position(|&c| c == coord)
    }

    /// Unit vector of `e_i` in frame coordinates (`i` from one).
    pub fn basis(&self, i: usize) -> HVector {
        let mut v = HVector::zeros(self.dim());
        v[i - 1] = 1.0;
        v
    }

    /// Row `(Y e_c)` restricted to the frame, i.e. `δ_{c,b} + (Y − 1)_{b,c}`.
    fn row(&self, conj: &Unitary, coord: usize) -> Vec<f64> {
        let delta = conj.delta();
        self.coords.iter().map(|&b| delta[(b, coord)] + if b == coord { 1.0 } else { 0.0 }).collect()
    }

    /// `E (Y P Y*) E` for the coordinate projection `P` onto `level`, where
    /// `Y` preserves the span of `pool` and the frame lies inside `pool`.
    pub fn level_compression(&self, conj: &Unitary, pool: &[usize], level: &[usize]) -> GramCompression {
        let rows: Vec<(usize, f64)> = pool.iter().filter(|c| !level.contains(c)).map(|&c| (c, 1.0)).collect();
        self.weighted_compression(conj, &rows)
    }

    /// `E − Σ w_c² E (Y e_c)(Y e_c)ᵀ E` over the listed `(coordinate, w_c)` rows.
    pub fn weighted_compression(&self, conj: &Unitary, rows: &[(usize, f64)]) -> GramCompression {
        let mut f = LinOp::zeros(rows.len(), self.dim());
        for (r, &(coord, weight)) in rows.iter().enumerate() {
            for (a, x) in self.row(conj, coord).into_iter().enumerate() {
                f[(r, a)] = weight * x;
            }
        }
        GramCompression::new(f)
    }
}

/// `∏ C_s^{m_s}` with the first factor applied first.
pub fn ordered_product(factors: &[(GramCompression, Exponent)], dim: usize) -> LinOp {
    let mut out = LinOp::identity(dim, dim);
    for (c, m) in factors {
        out = c.power(m) * out;
    }
    out
}

/// Frame operator embedded into the ambient space.
pub fn embed(frame: &Frame, op: &LinOp, ambient: usize) -> LinOp {
    let mut out = LinOp::zeros(ambient, ambient);
    for (a, &ca) in frame.coords.iter().enumerate() {
        for (b, &cb) in frame.coords.iter().enumerate() {
            out[(ca, cb)] = op[(a, b)];
        }
    }
    out
}
