//! Assembly of all stage ratchets into one decreasing sequence of projections
//! `P̂ = Ṽ Ũ P̃ Ũ* Ṽ*` whose compressions move `e_i` to `e_{i+1}`.
//!
//! Stage `k` owns the forward block `{e_{2k−1}, e_{2k}} ∪ F_k` and the backward
//! block `{e_{2k}, e_{2k+1}} ∪ G_k`. Every forward unitary lives on its forward
//! block and every backward unitary on its backward block, so `Ũ` and `Ṽ` are
//! plain sums of the stage deviations.

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::hilbert::{op_norm, LinOp, Unitary};
use crate::proj::{conjugate, Flag, Projection};
use crate::synthesis::{
    build_dimension_plan, build_stage_flags, initial_stage_count, synthesize_ratchet, DimensionPlan, Ratchet,
    StageFlags, StageSizes,
};

use super::frame::{embed, ordered_product, Frame};
use super::tolerance::ToleranceSchedule;
use super::transport::{
    check_bounded_transport, check_exact_transport, forward_transport_difference, product_transport_bound,
    product_transport_exact, BoundCheck, BoundFactor, TransportCheck, EXACT_TOL,
};

/// Deviation budget handed to the forward ratchets, which only need to fix
/// the complement of their block.
pub const FORWARD_DEVIATION: f64 = 0.5;
const MAX_DOUBLINGS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelTag {
    Backward { stage: usize, step: usize },
    Forward { stage: usize, step: usize },
}

/// A member of the global decreasing sequence, as the coordinates it is
/// conjugated from.
#[derive(Debug, Clone)]
pub struct GlobalLevel {
    pub tag: LevelTag,
    pub coords: Vec<usize>,
}

/// Levels and multiplicities of the compressions carrying `e_i` to `e_{i+1}`.
#[derive(Debug, Clone)]
pub struct StageChain {
    pub index: usize,
    pub levels: Vec<usize>,
    pub multiplicities: Vec<Exponent>,
}

#[derive(Debug, Clone)]
pub struct SequenceAssembly {
    pub plan: DimensionPlan,
    pub tol: ToleranceSchedule,
    pub stage_flags: Vec<StageFlags>,
    pub forward: Vec<Ratchet>,
    pub backward: Vec<Ratchet>,
    pub u_tilde: Unitary,
    pub v_tilde: Unitary,
    /// `Ṽ Ũ`.
    pub conj: Unitary,
    pub levels: Vec<GlobalLevel>,
    pub chains: Vec<StageChain>,
    pub frame: Frame,
}

/// Starting sizes `⌈π²/(4 eps)⌉` for each ratchet.
pub fn initial_sizes(tol: &ToleranceSchedule) -> Vec<StageSizes> {
    (1..=tol.stages)
        .map(|k| StageSizes {
            forward: initial_stage_count(tol.forward_eps(k)),
            backward: initial_stage_count(tol.backward_eps(k)),
        })
        .collect()
}

/// Builds every stage, doubling a ratchet's length whenever it cannot reach its tolerance.
pub fn assemble_sequence(tol: ToleranceSchedule, reserve: usize, cap: usize) -> Result<SequenceAssembly> {
    let mut sizes = initial_sizes(&tol);
    for _ in 0..=MAX_DOUBLINGS * 2 * tol.stages {
        match assemble_with_sizes(&tol, &sizes, reserve, cap) {
            Ok(a) => return Ok(a),
            Err(Grow::Forward(k)) => sizes[k - 1].forward *= 2,
            Err(Grow::Backward(k)) => sizes[k - 1].backward *= 2,
            Err(Grow::Fatal(e)) => return Err(e),
        }
    }
    Err(Error::Invalid("ratchet doubling did not converge".into()))
}

enum Grow {
    Forward(usize),
    Backward(usize),
    Fatal(Error),
}

impl From<Error> for Grow {
    fn from(e: Error) -> Self {
        Grow::Fatal(e)
    }
}

fn assemble_with_sizes(
    tol: &ToleranceSchedule,
    sizes: &[StageSizes],
    reserve: usize,
    cap: usize,
) -> std::result::Result<SequenceAssembly, Grow> {
    let plan = build_dimension_plan(sizes, reserve, cap)?;
    let dim = plan.total_dim;
    let stages = tol.stages;
    let stage_flags: Vec<StageFlags> = (1..=stages).map(|k| build_stage_flags(&plan, k)).collect::<Result<_>>()?;
    let e = |i: usize| crate::hilbert::unit(dim, plan.e(i));

    let mut forward = Vec::with_capacity(stages);
    for k in 1..=stages {
        match synthesize_ratchet(
            &stage_flags[k - 1].forward,
            &e(2 * k - 1),
            &e(2 * k),
            tol.forward_eps(k),
            FORWARD_DEVIATION,
        ) {
            Ok(r) => forward.push(r),
            Err(Error::InsufficientStages { .. }) => return Err(Grow::Forward(k)),
            Err(err) => return Err(Grow::Fatal(err)),
        }
    }
    let mut tol = tol.clone();
    let totals: Vec<f64> = forward.iter().map(|r| r.plan.exponents.iter().map(Exponent::to_f64).sum()).collect();
    tol.set_budgets(&totals)?;

    let mut backward = Vec::with_capacity(stages);
    for k in 1..=stages {
        match synthesize_ratchet(
            &stage_flags[k - 1].backward,
            &e(2 * k),
            &e(2 * k + 1),
            tol.backward_eps(k),
            tol.eta(k),
        ) {
            Ok(r) => backward.push(r),
            Err(Error::InsufficientStages { .. }) => return Err(Grow::Backward(k)),
            Err(err) => return Err(Grow::Fatal(err)),
        }
    }

    let sum = |rs: &[Ratchet]| rs.iter().fold(LinOp::zeros(dim, dim), |acc, r| acc + r.unitary.delta());
    let u_tilde = Unitary::from_delta(sum(&forward))?;
    let v_tilde = Unitary::from_delta(sum(&backward))?;
    let conj = v_tilde.compose(&u_tilde);

    let mut levels = Vec::new();
    let mut chains = Vec::new();
    for k in 1..=stages {
        let sz = plan.sizes(k);
        let tail = plan.tail(k);
        let mut forward_block = plan.forward_pair(k);
        forward_block.extend_from_slice(&plan.f_blocks[k - 1]);
        let mut backward_levels = Vec::with_capacity(sz.backward);
        for t in 0..=sz.backward {
            let mut c = forward_block.clone();
            c.extend_from_slice(&plan.g_blocks[k - 1][t..]);
            c.extend_from_slice(&tail);
            if t > 0 {
                backward_levels.push(levels.len());
            }
            levels.push(GlobalLevel { tag: LevelTag::Backward { stage: k, step: t }, coords: c });
        }
        let mut forward_levels = Vec::with_capacity(sz.forward);
        for s in 1..=sz.forward {
            let mut c = plan.forward_member(k, s);
            c.extend_from_slice(&tail);
            forward_levels.push(levels.len());
            levels.push(GlobalLevel { tag: LevelTag::Forward { stage: k, step: s }, coords: c });
        }
        chains.push(StageChain {
            index: 2 * k - 1,
            levels: forward_levels,
            multiplicities: forward[k - 1].plan.exponents.clone(),
        });
        chains.push(StageChain {
            index: 2 * k,
            levels: backward_levels,
            multiplicities: backward[k - 1].plan.exponents.clone(),
        });
    }
    let frame = Frame::new(plan.e_indices.clone());
    Ok(SequenceAssembly { plan, tol, stage_flags, forward, backward, u_tilde, v_tilde, conj, levels, chains, frame })
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: usize,
    pub backward_steps: Vec<TransportCheck>,
    pub forward_steps: Vec<TransportCheck>,
    pub backward_product: TransportCheck,
    pub forward_product: BoundCheck,
    /// `‖Ṽ P_0^k − P_0^k‖` and the bound `max(η_{k−1}, η_k)`.
    pub leak: f64,
    pub leak_bound: f64,
    /// `Ũ` agrees with `U_k` on its block and `Ṽ` fixes `F_k`.
    pub block_defect: f64,
}

impl StageReport {
    pub fn pass(&self) -> bool {
        self.backward_steps.iter().all(TransportCheck::pass)
            && self.forward_steps.iter().all(TransportCheck::pass)
            && self.backward_product.pass()
            && self.forward_product.pass()
            && self.leak <= self.leak_bound + EXACT_TOL
            && self.block_defect == 0.0
    }
}

#[derive(Debug, Clone)]
pub struct SequenceReport {
    pub stages: Vec<StageReport>,
    /// `Err` naming the first violation if the hatted sequence is not decreasing.
    pub ordering: std::result::Result<(), String>,
    /// `‖∏ (E P̂ E)^m e_i − e_{i+1}‖` per chain, against `ε_i`.
    pub residuals: Vec<(f64, f64)>,
    pub reserve_rank: usize,
    pub tolerances_consistent: bool,
}

impl SequenceReport {
    pub fn pass(&self) -> bool {
        self.ordering.is_ok()
            && self.tolerances_consistent
            && self.stages.iter().all(StageReport::pass)
            && self.residuals.iter().all(|(r, eps)| r < eps)
    }
}

impl SequenceAssembly {
    pub fn dim(&self) -> usize {
        self.plan.total_dim
    }

    pub fn level_projection(&self, level: usize) -> Projection {
        Projection::coordinates(self.dim(), &self.levels[level].coords)
    }

    /// The hatted sequence as a dense flag, validated for ordering and drops.
    pub fn hatted_flag(&self) -> Result<Flag> {
        let members = self
            .levels
            .iter()
            .map(|l| conjugate(&self.conj, &Projection::coordinates(self.dim(), &l.coords)))
            .collect::<Result<Vec<_>>>()?;
        let drops = self.levels.windows(2).map(|w| w[0].coords.len() - w[1].coords.len()).collect();
        Flag::new(members, drops)
    }

    /// `E P̂ E` for a global level, in the frame.
    pub fn hatted_compression(&self, level: usize) -> crate::gram::GramCompression {
        self.frame.level_compression(&self.conj, &self.plan.top(), &self.levels[level].coords)
    }

    /// `∏_s (E P̂_s E)^{m_s}` for chain `i`, in the frame.
    pub fn chain_product(&self, i: usize) -> LinOp {
        let chain = &self.chains[i - 1];
        let factors: Vec<_> = chain
            .levels
            .iter()
            .zip(&chain.multiplicities)
            .map(|(&l, m)| (self.hatted_compression(l), m.clone()))
            .collect();
        ordered_product(&factors, self.frame.dim())
    }

    pub fn chain_residual(&self, i: usize) -> f64 {
        let out = self.chain_product(i) * self.frame.basis(i);
        (out - self.frame.basis(i + 1)).norm()
    }

    pub fn certify(&self) -> Result<SequenceReport> {
        let ordering = self.hatted_flag().map(|_| ()).map_err(|e| e.to_string());
        let stages = (1..=self.tol.stages).map(|k| self.certify_stage(k)).collect::<Result<Vec<_>>>()?;
        let residuals = (1..=2 * self.tol.stages).map(|i| (self.chain_residual(i), self.tol.eps(i))).collect();
        Ok(SequenceReport {
            stages,
            ordering,
            residuals,
            reserve_rank: self.dim() - self.levels[0].coords.len(),
            tolerances_consistent: self.tol.is_consistent(),
        })
    }

    fn certify_stage(&self, k: usize) -> Result<StageReport> {
        let dim = self.dim();
        let flags = &self.stage_flags[k - 1];
        let u_k = &self.forward[k - 1].unitary;
        let v_k = &self.backward[k - 1].unitary;
        let levels_of = |i: usize| &self.chains[i - 1].levels;
        let sizes = self.plan.sizes(k);
        let top = self.plan.top();

        let q0 = flags.backward.member(0);
        let back_levels: Vec<usize> =
            std::iter::once(levels_of(2 * k)[0] - 1).chain(levels_of(2 * k).iter().copied()).collect();
        let backward_steps = (0..=sizes.backward)
            .map(|t| {
                check_exact_transport(
                    &self.u_tilde,
                    &self.v_tilde,
                    v_k,
                    &self.level_projection(back_levels[t]),
                    q0,
                    flags.backward.member(t),
                )
            })
            .collect();

        let p0 = flags.forward.member(0);
        let eta = 2.0 * self.tol.eta(k - 1).max(self.tol.eta(k));
        let forward_steps = (1..=sizes.forward)
            .map(|s| {
                check_bounded_transport(
                    &self.u_tilde,
                    &self.v_tilde,
                    u_k,
                    &self.level_projection(levels_of(2 * k - 1)[s - 1]),
                    p0,
                    flags.forward.member(s),
                    eta,
                )
            })
            .collect();

        let mut backward_pool = flags.backward_coords[0].clone();
        backward_pool.extend(self.plan.e_indices.iter().filter(|c| !flags.backward_coords[0].contains(c)));
        let mut a = Vec::with_capacity(sizes.backward);
        let mut b = Vec::with_capacity(sizes.backward);
        for (t, n) in self.chains[2 * k - 1].multiplicities.iter().enumerate() {
            let reference = self.frame.level_compression(v_k, &backward_pool, &flags.backward_coords[t + 1]);
            a.push(embed(&self.frame, &reference.power(n), dim));
            b.push(embed(&self.frame, &self.hatted_compression(levels_of(2 * k)[t]).power(n), dim));
        }
        let backward_product = product_transport_exact(&a, &b, q0);

        let mut forward_pool = flags.forward_coords[0].clone();
        forward_pool.extend(self.plan.e_indices.iter().filter(|c| !flags.forward_coords[0].contains(c)));
        let pair = self.plan.forward_pair(k);
        let pair_pos: Vec<usize> = pair.iter().map(|&c| self.frame.position(c).expect("pair in frame")).collect();
        let mut input = LinOp::zeros(self.frame.dim(), 2);
        for (j, &p) in pair_pos.iter().enumerate() {
            input[(p, j)] = 1.0;
        }
        let factors: Vec<BoundFactor> = (1..=sizes.forward)
            .map(|s| {
                let level = levels_of(2 * k - 1)[s - 1];
                let diff = forward_transport_difference(
                    &self.u_tilde,
                    &self.v_tilde,
                    u_k,
                    &self.level_projection(level),
                    flags.forward.member(s),
                );
                let mut restricted = LinOp::zeros(self.frame.dim(), 2);
                for (a, &ca) in self.frame.coords.iter().enumerate() {
                    for (j, &cj) in pair.iter().enumerate() {
                        restricted[(a, j)] = diff[(ca, cj)];
                    }
                }
                BoundFactor {
                    reference: self.frame.level_compression(u_k, &forward_pool, &flags.forward_coords[s]),
                    perturbed: self.frame.level_compression(&self.conj, &top, &self.levels[level].coords),
                    defect: op_norm(&restricted),
                    multiplicity: self.chains[2 * k - 2].multiplicities[s - 1].clone(),
                }
            })
            .collect();
        let forward_product =
            product_transport_bound(&factors, &input, self.tol.gammas[k - 1], self.tol.forward_eps(k));

        let p0m = p0.matrix();
        let leak = op_norm(&(self.v_tilde.delta() * p0m));
        let leak_bound = self.tol.eta(k - 1).max(self.tol.eta(k));

        let mut block_defect: f64 = 0.0;
        for &c in &flags.forward_coords[0] {
            for r in 0..dim {
                block_defect = block_defect.max((self.u_tilde.delta()[(r, c)] - u_k.delta()[(r, c)]).abs());
            }
        }
        for &c in &self.plan.f_blocks[k - 1] {
            for r in 0..dim {
                block_defect = block_defect.max(self.v_tilde.delta()[(r, c)].abs());
            }
        }

        Ok(StageReport {
            stage: k,
            backward_steps,
            forward_steps,
            backward_product,
            forward_product,
            leak,
            leak_bound,
            block_defect,
        })
    }
}
