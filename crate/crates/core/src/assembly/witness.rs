//! The three projections `E`, `P₁`, `Q` and the certificates that their word
//! pushes `e_1` through `e_2, e_3, …` without converging.
//!
//! Every level `P̂` of the assembled sequence is replaced by
//! `E (P₁ Q P₁)^p E`. Since `Q` is slab-adapted, this is
//! `E − Σ_j (1 − μ_j^p) E S_j E` over the slabs `S_j = Y e_c` of `P₁`, which
//! is evaluated from the conjugating unitary's deviation and log-domain
//! slab weights. No dense power of `P₁ Q P₁` is ever formed.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::gram::GramCompression;
use crate::hilbert::{unit, HVector, Unitary};
use crate::proj::Projection;
use crate::synthesis::schedule::{level_error, slab_deficit};
use crate::synthesis::{build_from_slabs, InterpolatingProjection};

use super::frame::ordered_product;
use super::sequence::SequenceAssembly;
use super::transport::{product_transport_bound, BoundCheck, BoundFactor};
use super::word::{Term, Word};

/// Longest word that is applied letter by letter.
pub const FLATTEN_LIMIT: u64 = 10_000_000;
const MARK_TOL: f64 = 1e-12;
const NON_CAUCHY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Construction {
    pub assembly: SequenceAssembly,
    pub top: Projection,
    pub plane: Projection,
    pub interp: InterpolatingProjection,
    /// Coordinates of each slab of the global sequence, top first.
    pub slab_coords: Vec<Vec<usize>>,
    /// `δ_i = ε_i / (2 M_i)` for each chain.
    pub stage_deltas: Vec<f64>,
    pub level_deltas: Vec<f64>,
    pub word: Word,
}

pub fn compose_construction(assembly: SequenceAssembly) -> Result<Construction> {
    let dim = assembly.dim();
    let levels = &assembly.levels;
    let slab_coords: Vec<Vec<usize>> = levels
        .iter()
        .enumerate()
        .map(|(j, l)| match levels.get(j + 1) {
            Some(next) => l.coords.iter().copied().filter(|c| !next.coords.contains(c)).collect(),
            None => l.coords.clone(),
        })
        .collect();
    let stage_deltas: Vec<f64> = assembly
        .chains
        .iter()
        .map(|c| assembly.tol.eps(c.index) / (2.0 * c.multiplicities.iter().map(Exponent::to_f64).sum::<f64>()))
        .collect();
    let floor = stage_deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut level_deltas = vec![floor; levels.len()];
    for (chain, &delta) in assembly.chains.iter().zip(&stage_deltas) {
        for &l in &chain.levels {
            level_deltas[l] = delta;
        }
    }
    let slabs: Vec<Vec<HVector>> =
        slab_coords.iter().map(|cs| cs.iter().map(|&c| assembly.conj.apply(&unit(dim, c))).collect()).collect();
    let helpers: Vec<HVector> = assembly.plan.helper_indices.iter().map(|&h| unit(dim, h)).collect();
    let interp = build_from_slabs(dim, slabs, &level_deltas, &helpers)?;
    let top = interp.top();
    let plane = Projection::coordinates(dim, &assembly.plan.e_indices);

    let mut word = Word::default();
    for chain in &assembly.chains {
        for (&l, m) in chain.levels.iter().zip(&chain.multiplicities) {
            word.terms.push(Term::stage_factor(interp.schedule.exponents[l].clone(), m.clone()));
        }
        word.stage_marks.push(word.terms.len());
    }
    Ok(Construction { assembly, top, plane, interp, slab_coords, stage_deltas, level_deltas, word })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonCauchyCertificate {
    pub min_pairwise: f64,
    pub threshold: f64,
}

impl NonCauchyCertificate {
    pub fn pass(&self) -> bool {
        self.min_pairwise >= self.threshold - NON_CAUCHY_TOL
    }
}

/// Smallest distance between distinct stage-end iterates, against `√2 − 1`.
pub fn non_cauchy_certificate(stage_iterates: &[HVector]) -> NonCauchyCertificate {
    let mut min_pairwise = f64::INFINITY;
    for (a, x) in stage_iterates.iter().enumerate() {
        for y in &stage_iterates[a + 1..] {
            min_pairwise = min_pairwise.min((x - y).norm());
        }
    }
    NonCauchyCertificate { min_pairwise, threshold: std::f64::consts::SQRT_2 - 1.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fidelity {
    /// Largest gap between letter-by-letter and structured stage iterates.
    Checked { max_gap: f64 },
    /// The flattened word is too long to apply; natural log of its length.
    TooLong { ln_length: f64 },
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    /// `‖(P₁ Q P₁)^{p} − P_level‖` and `δ` per level.
    pub level_errors: Vec<(f64, f64)>,
    pub spectrum_defect: f64,
    pub generator_defects: [f64; 3],
    pub generators_used: Vec<u8>,
    /// Replacing every `E P̂ E` by `E (P₁ Q P₁)^p E` within each chain.
    pub defects: Vec<BoundCheck>,
    /// `‖A_{i−1} ⋯ A_1 e_1 − e_i‖` and `1/2 − 2^{−i}` for `i = 1 ..= 2K+1`.
    pub marks: Vec<(f64, f64)>,
    pub induction_holds: bool,
    pub non_cauchy: NonCauchyCertificate,
    pub fidelity: Fidelity,
}

impl WitnessReport {
    pub fn marks_pass(&self) -> bool {
        self.marks.iter().all(|(m, b)| *m <= b + MARK_TOL)
    }

    pub fn fidelity_pass(&self) -> bool {
        matches!(self.fidelity, Fidelity::Checked { max_gap } if max_gap <= 1e-8)
    }

    pub fn pass(&self) -> bool {
        self.level_errors.iter().all(|(e, d)| e < d)
            && self.spectrum_defect <= 1e-9
            && self.generator_defects.iter().all(|&d| d <= 1e-9)
            && self.generators_used == [1, 2, 3]
            && self.defects.iter().all(BoundCheck::pass)
            && self.marks_pass()
            && self.induction_holds
            && self.non_cauchy.pass()
            && self.fidelity_pass()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: u64,
    pub generator: String,
    pub norm: f64,
    pub dist_to_target: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// `x_1 = e_1` and the iterate after every stage, in frame coordinates.
    pub stage_iterates: Vec<HVector>,
}

impl Construction {
    pub fn dim(&self) -> usize {
        self.assembly.dim()
    }

    pub fn conj(&self) -> &Unitary {
        &self.assembly.conj
    }

    /// `E (P₁ Q P₁)^{p_level} E` in the frame.
    pub fn level_factor(&self, level: usize) -> GramCompression {
        let ln_p = self.interp.schedule.exponents[level].ln();
        let rows: Vec<(usize, f64)> = self
            .slab_coords
            .iter()
            .zip(&self.interp.schedule.ln_rates)
            .flat_map(|(cs, &lr)| {
                let w = slab_deficit(lr, ln_p).sqrt();
                cs.iter().map(move |&c| (c, w))
            })
            .collect();
        self.assembly.frame.weighted_compression(self.conj(), &rows)
    }

    fn chain_factors(&self, i: usize) -> Vec<(GramCompression, Exponent)> {
        let chain = &self.assembly.chains[i - 1];
        chain.levels.iter().zip(&chain.multiplicities).map(|(&l, m)| (self.level_factor(l), m.clone())).collect()
    }

    /// `A_i`, the frame operator of the `i`-th stage of the word.
    pub fn stage_operator(&self, i: usize) -> DMatrix<f64> {
        ordered_product(&self.chain_factors(i), self.assembly.frame.dim())
    }

    /// Dense generators `E`, `P₁`, `Q`.
    pub fn generators(&self) -> [DMatrix<f64>; 3] {
        [self.plane.matrix().clone(), self.top.matrix().clone(), self.interp.q.matrix().clone()]
    }

    pub fn stage_iterates(&self) -> Vec<HVector> {
        let frame = &self.assembly.frame;
        let mut x = frame.basis(1);
        let mut out = vec![x.clone()];
        for i in 1..=self.assembly.chains.len() {
            x = self.stage_operator(i) * x;
            out.push(x.clone());
        }
        out
    }

    pub fn certify(&self) -> Result<WitnessReport> {
        let schedule = &self.interp.schedule;
        let level_errors = schedule.achieved_errors.iter().copied().zip(self.level_deltas.iter().copied()).collect();
        let spectrum_defect = self.interp.spectrum_defect()?;
        let generator_defects = [self.plane.defect(), self.top.defect(), self.interp.q.defect()];
        let generators_used = self.word.generators().into_iter().collect();

        let r = self.assembly.frame.dim();
        let identity = DMatrix::identity(r, r);
        let mut defects = Vec::new();
        for (idx, chain) in self.assembly.chains.iter().enumerate() {
            let factors: Vec<BoundFactor> = chain
                .levels
                .iter()
                .zip(&chain.multiplicities)
                .map(|(&l, m)| BoundFactor {
                    reference: self.assembly.hatted_compression(l),
                    perturbed: self.level_factor(l),
                    defect: level_error(&schedule.ln_rates, l, schedule.exponents[l].ln()),
                    multiplicity: m.clone(),
                })
                .collect();
            defects.push(product_transport_bound(
                &factors,
                &identity,
                self.stage_deltas[idx],
                self.assembly.tol.eps(chain.index),
            ));
        }

        let iterates = self.stage_iterates();
        let frame = &self.assembly.frame;
        let marks: Vec<(f64, f64)> = iterates
            .iter()
            .enumerate()
            .map(|(a, x)| ((x - frame.basis(a + 1)).norm(), 0.5 - 0.5f64.powi(a as i32 + 1)))
            .collect();
        let mut induction_holds = true;
        for i in 1..marks.len() {
            let residual = self.assembly.chain_residual(i);
            if marks[i].0 > marks[i - 1].0 + defects[i - 1].measured + residual + MARK_TOL {
                induction_holds = false;
            }
        }
        let non_cauchy = non_cauchy_certificate(&iterates);
        let fidelity = self.fidelity(&iterates);
        Ok(WitnessReport {
            level_errors,
            spectrum_defect,
            generator_defects,
            generators_used,
            defects,
            marks,
            induction_holds,
            non_cauchy,
            fidelity,
        })
    }

    fn fidelity(&self, structured: &[HVector]) -> Fidelity {
        let x0 = unit(self.dim(), self.assembly.plan.e(1));
        match self.word.apply_flattened(&self.generators(), &x0, FLATTEN_LIMIT) {
            None => Fidelity::TooLong { ln_length: ln_big(&self.word.flattened_len()) },
            Some(flat) => {
                let frame = &self.assembly.frame;
                let max_gap = flat
                    .iter()
                    .zip(structured)
                    .map(|(f, s)| {
                        let restricted = HVector::from_iterator(frame.dim(), frame.coords.iter().map(|&c| f[c]));
                        (restricted - s).norm()
                    })
                    .fold(0.0, f64::max);
                Fidelity::Checked { max_gap }
            }
        }
    }
}

fn ln_big(n: &num_bigint::BigUint) -> f64 {
    Exponent::new(n.clone()).map(|e| e.ln()).unwrap_or(0.0)
}

/// One row per applied factor `(1 (2 3 2)^p 1)^m`, evaluated in the frame.
pub fn run_trajectory(inst: &Construction) -> Trajectory {
    let frame = &inst.assembly.frame;
    let mut x = frame.basis(1);
    let mut rows = vec![TrajectoryRow { step: 0, generator: "start".into(), norm: 1.0, dist_to_target: 0.0 }];
    let mut stage_iterates = vec![x.clone()];
    let mut step = 0u64;
    for (idx, chain) in inst.assembly.chains.iter().enumerate() {
        let target = frame.basis(chain.index + 1);
        for (s, ((&l, m), term)) in chain
            .levels
            .iter()
            .zip(&chain.multiplicities)
            .zip(&inst.word.terms[inst.word.stage_marks[idx] - chain.levels.len()..])
            .enumerate()
        {
            x = inst.level_factor(l).power(m) * x;
            step += 1;
            rows.push(TrajectoryRow {
                step,
                generator: format!("stage{}.{}:{}", chain.index, s + 1, term.render()),
                norm: x.norm(),
                dist_to_target: (&x - &target).norm(),
            });
        }
        stage_iterates.push(x.clone());
    }
    Trajectory { rows, stage_iterates }
}

/// Letter-by-letter trajectory of a word on dense generators; `targets[i]`
/// is the target while stage `i + 1` runs.
pub fn run_flattened_trajectory(
    word: &Word,
    gens: &[DMatrix<f64>; 3],
    x0: &HVector,
    targets: &[HVector],
    limit: u64,
) -> Result<Trajectory> {
    let mut x = x0.clone();
    let mut rows = vec![TrajectoryRow { step: 0, generator: "start".into(), norm: x.norm(), dist_to_target: 0.0 }];
    let mut stage_iterates = vec![x.clone()];
    let mut step = 0u64;
    let mut start = 0;
    for (i, &end) in word.stage_marks.iter().enumerate() {
        let part = Word { terms: word.terms[start..end].to_vec(), stage_marks: Vec::new() };
        let letters = part
            .letters(limit)
            .ok_or(Error::NumericalRange { context: "flattened word length", value: ln_big(&part.flattened_len()) })?;
        let target = targets.get(i).ok_or_else(|| Error::Invalid("missing stage target".into()))?;
        for g in letters {
            x = &gens[g as usize - 1] * x;
            step += 1;
            rows.push(TrajectoryRow {
                step,
                generator: g.to_string(),
                norm: x.norm(),
                dist_to_target: (&x - target).norm(),
            });
        }
        stage_iterates.push(x.clone());
        start = end;
    }
    Ok(Trajectory { rows, stage_iterates })
}
