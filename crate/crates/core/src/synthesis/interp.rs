//! A single projection `Q` whose compressed powers `(P₁ Q P₁)^{p_k}` approximate
//! every member `P_k` of a decreasing flag.
//!
//! Each basis vector `s` of slab `j` is tilted towards its own helper `h`,
//! `cos α_j s + sin α_j h` with `cos² α_j = μ_j`, so the compression of `Q`
//! to the top member is `Σ_j μ_j S_j` exactly.

use crate::error::{Error, Result};
use crate::hilbert::{op_norm, HVector, LinOp};
use crate::proj::{compress, spectral_power, Flag, Projection};

use super::schedule::{adapted_schedule, PowerSchedule};

const HELPER_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct InterpolatingProjection {
    pub q: Projection,
    pub schedule: PowerSchedule,
    /// Slab bases, ordered from the top of the flag down.
    pub slabs: Vec<Vec<HVector>>,
}

pub fn build_interpolating_projection(
    flag: &Flag,
    deltas: &[f64],
    helpers: &[HVector],
) -> Result<InterpolatingProjection> {
    if deltas.len() != flag.len() {
        return Err(Error::DimensionMismatch { expected: flag.len(), found: deltas.len() });
    }
    build_from_slabs(flag.dim(), flag.slabs()?, deltas, helpers)
}

/// Same construction from explicit slab bases, whose union spans the top member.
pub fn build_from_slabs(
    dim: usize,
    slabs: Vec<Vec<HVector>>,
    deltas: &[f64],
    helpers: &[HVector],
) -> Result<InterpolatingProjection> {
    if deltas.len() != slabs.len() {
        return Err(Error::DimensionMismatch { expected: slabs.len(), found: deltas.len() });
    }
    let needed: usize = slabs.iter().map(Vec::len).sum();
    if helpers.len() < needed {
        return Err(Error::MissingHelpers { needed, available: helpers.len() });
    }
    let top: Vec<&HVector> = slabs.iter().flatten().collect();
    for h in &helpers[..needed] {
        if h.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.len() });
        }
        let overlap = top.iter().map(|s| s.dot(h).abs()).fold(0.0, f64::max);
        if overlap > HELPER_TOL || (h.norm() - 1.0).abs() > HELPER_TOL {
            return Err(Error::Invalid("helpers must be unit vectors orthogonal to the top member".into()));
        }
    }
    let schedule = adapted_schedule(deltas)?;
    let mut basis = Vec::with_capacity(needed);
    let mut helper = helpers.iter();
    for (slab, &ln_rate) in slabs.iter().zip(&schedule.ln_rates) {
        let rate = ln_rate.exp();
        let cos = (-0.5 * rate).exp();
        let sin = (-(-rate).exp_m1()).sqrt();
        for s in slab {
            let h = helper.next().expect("counted above");
            basis.push(s * cos + h * sin);
        }
    }
    Ok(InterpolatingProjection { q: Projection::from_orthonormal_unchecked(dim, basis), schedule, slabs })
}

impl InterpolatingProjection {
    /// The top member, spanned by all slabs.
    pub fn top(&self) -> Projection {
        Projection::from_orthonormal_unchecked(self.q.dim(), self.slabs.iter().flatten().cloned().collect())
    }

    /// Largest gap between the spectrum of `P₁ Q P₁` on the top member and the ladder.
    pub fn spectrum_defect(&self) -> Result<f64> {
        let top = self.top();
        let c = compress(&top, self.q.matrix())?;
        let (mut values, _) = crate::hilbert::sym_eig(&c)?;
        let mut expected: Vec<f64> = self
            .slabs
            .iter()
            .zip(self.schedule.eigenvalues())
            .flat_map(|(s, mu)| std::iter::repeat_n(mu, s.len()))
            .collect();
        values.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        Ok(values.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn spectrum_ok(&self) -> Result<bool> {
        Ok(self.spectrum_defect()? <= SPECTRUM_TOL)
    }

    /// Dense `‖(P₁ Q P₁)^{p_k} − P_k‖` for each level against `flag`.
    /// Only available when every exponent fits a machine integer.
    pub fn dense_level_errors(&self, flag: &Flag) -> Result<Vec<f64>> {
        let top = self.top();
        let pqp = top.matrix() * self.q.matrix() * top.matrix();
        let sym = (&pqp + pqp.transpose()) * 0.5;
        self.schedule
            .exponents
            .iter()
            .zip(flag.members())
            .map(|(p, member)| {
                let n = p.to_u64().ok_or(Error::NumericalRange { context: "dense exponent", value: p.to_f64() })?;
                let power: LinOp = spectral_power(&sym, n)?;
                Ok(op_norm(&(power - member.matrix())))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::unit;

    fn four_level_flag(dim: usize) -> Flag {
        let members = (0..4).map(|k| Projection::coordinates(dim, &(k..4).collect::<Vec<_>>())).collect();
        Flag::new(members, vec![1, 1, 1]).unwrap()
    }

    #[test]
    fn powers_interpolate_the_flag() {
        let dim = 8;
        let flag = four_level_flag(dim);
        let deltas: Vec<f64> = (1..=4).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let helpers: Vec<HVector> = (4..8).map(|i| unit(dim, i)).collect();
        let ip = build_interpolating_projection(&flag, &deltas, &helpers).unwrap();
        assert!(ip.q.defect() < 1e-14);
        assert!(ip.spectrum_ok().unwrap());
        let errs = ip.dense_level_errors(&flag).unwrap();
        for (e, d) in errs.iter().zip(&deltas) {
            assert!(e < d, "{e} >= {d}");
        }
    }

    #[test]
    fn too_few_helpers() {
        let flag = four_level_flag(6);
        let helpers = vec![unit(6, 4), unit(6, 5)];
        let err = build_interpolating_projection(&flag, &[0.1; 4], &helpers).unwrap_err();
        assert_eq!(err, Error::MissingHelpers { needed: 4, available: 2 });
    }
}
