//! Coordinate layout of the ambient space and the per-stage coordinate flags.

use crate::error::{Error, Result};
use crate::proj::{Flag, Projection};

/// Lengths of the forward (`s_k`) and backward (`t_k`) chains of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSizes {
    pub forward: usize,
    pub backward: usize,
}

/// Disjoint coordinate blocks covering `0..total_dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionPlan {
    pub stages: usize,
    /// `e_1 .. e_{2K+1}`.
    pub e_indices: Vec<usize>,
    /// Forward tail of stage `k`, one coordinate per forward step.
    pub f_blocks: Vec<Vec<usize>>,
    /// Backward tail of stage `k`, one coordinate per backward step.
    pub g_blocks: Vec<Vec<usize>>,
    pub helper_indices: Vec<usize>,
    pub reserve_indices: Vec<usize>,
    pub total_dim: usize,
}

/// Dimension the plan would need, without building it.
pub fn required_dimension(sizes: &[StageSizes], reserve: usize) -> usize {
    let top = 2 * sizes.len() + 1 + sizes.iter().map(|s| s.forward + s.backward).sum::<usize>();
    2 * top + reserve
}

/// One helper coordinate is allotted to each basis vector of the top projection.
pub fn build_dimension_plan(sizes: &[StageSizes], reserve: usize, cap: usize) -> Result<DimensionPlan> {
    if sizes.is_empty() {
        return Err(Error::Invalid("at least one stage is required".into()));
    }
    if sizes.iter().any(|s| s.forward == 0 || s.backward == 0) {
        return Err(Error::Invalid("every stage needs at least one forward and one backward step".into()));
    }
    let required = required_dimension(sizes, reserve);
    if required > cap {
        return Err(Error::BudgetExceeded { required, cap });
    }
    let stages = sizes.len();
    let mut next = 0usize;
    let mut take = |n: usize| {
        let block: Vec<usize> = (next..next + n).collect();
        next += n;
        block
    };
    let e_indices = take(2 * stages + 1);
    let mut f_blocks = Vec::with_capacity(stages);
    let mut g_blocks = Vec::with_capacity(stages);
    for s in sizes {
        f_blocks.push(take(s.forward));
        g_blocks.push(take(s.backward));
    }
    let top_rank = e_indices.len() + sizes.iter().map(|s| s.forward + s.backward).sum::<usize>();
    let helper_indices = take(top_rank);
    let reserve_indices = take(reserve);
    Ok(DimensionPlan { stages, e_indices, f_blocks, g_blocks, helper_indices, reserve_indices, total_dim: next })
}

impl DimensionPlan {
    /// Coordinate of `e_i`, `i` counted from one.
    pub fn e(&self, i: usize) -> usize {
        self.e_indices[i - 1]
    }

    pub fn sizes(&self, k: usize) -> StageSizes {
        StageSizes { forward: self.f_blocks[k - 1].len(), backward: self.g_blocks[k - 1].len() }
    }

    /// `{e_{2k-1}, e_{2k}}`.
    pub fn forward_pair(&self, k: usize) -> Vec<usize> {
        vec![self.e(2 * k - 1), self.e(2 * k)]
    }

    /// `{e_{2k}, e_{2k+1}}`.
    pub fn backward_pair(&self, k: usize) -> Vec<usize> {
        vec![self.e(2 * k), self.e(2 * k + 1)]
    }

    /// Coordinates of `P_s^k`: the forward pair and the forward tail from step `s` on.
    pub fn forward_member(&self, k: usize, s: usize) -> Vec<usize> {
        let mut c = self.forward_pair(k);
        c.extend_from_slice(&self.f_blocks[k - 1][s..]);
        c
    }

    /// Coordinates of `Q_t^k`.
    pub fn backward_member(&self, k: usize, t: usize) -> Vec<usize> {
        let mut c = self.backward_pair(k);
        c.extend_from_slice(&self.g_blocks[k - 1][t..]);
        c
    }

    /// Everything spanned by the later stages together with `e_{2k+1}`.
    pub fn tail(&self, k: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self.e_indices[2 * k..].to_vec();
        for l in k..self.stages {
            c.extend_from_slice(&self.f_blocks[l]);
            c.extend_from_slice(&self.g_blocks[l]);
        }
        c
    }

    /// Coordinates of the top projection: all `e`, forward and backward tails.
    pub fn top(&self) -> Vec<usize> {
        let mut c = self.e_indices.clone();
        for k in 0..self.stages {
            c.extend_from_slice(&self.f_blocks[k]);
            c.extend_from_slice(&self.g_blocks[k]);
        }
        c
    }
}

/// Coordinate flags `P_0^k ≥ … ≥ P_{s_k}^k` and `Q_0^k ≥ … ≥ Q_{t_k}^k` of one stage.
#[derive(Debug, Clone)]
pub struct StageFlags {
    pub forward: Flag,
    pub backward: Flag,
    pub forward_coords: Vec<Vec<usize>>,
    pub backward_coords: Vec<Vec<usize>>,
}

pub fn build_stage_flags(plan: &DimensionPlan, k: usize) -> Result<StageFlags> {
    if k == 0 || k > plan.stages {
        return Err(Error::Invalid(format!("stage {k} outside 1..={}", plan.stages)));
    }
    let sizes = plan.sizes(k);
    let forward_coords: Vec<Vec<usize>> = (0..=sizes.forward).map(|s| plan.forward_member(k, s)).collect();
    let backward_coords: Vec<Vec<usize>> = (0..=sizes.backward).map(|t| plan.backward_member(k, t)).collect();
    let dim = plan.total_dim;
    let to_flag = |coords: &[Vec<usize>]| {
        Flag::new(coords.iter().map(|c| Projection::coordinates(dim, c)).collect(), vec![1; coords.len() - 1])
    };
    Ok(StageFlags {
        forward: to_flag(&forward_coords)?,
        backward: to_flag(&backward_coords)?,
        forward_coords,
        backward_coords,
    })
}
