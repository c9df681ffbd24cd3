//! Per-stage tolerances.

use crate::error::{Error, Result};

/// `ε_i = scale · 2^{−i} / 4` for `i = 1..=2K`, with the stage budgets
/// `γ_k`, `η_k` filled in as the assembly proceeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSchedule {
    pub stages: usize,
    pub eps_scale: f64,
    eps: Vec<f64>,
    /// `γ_k`, stage `k` at index `k − 1`.
    pub gammas: Vec<f64>,
    /// `η_k`, stage `k` at index `k − 1`; `η_0 = 0`.
    pub etas: Vec<f64>,
}

impl ToleranceSchedule {
    pub fn new(stages: usize, eps_scale: f64) -> Result<Self> {
        if stages == 0 {
            return Err(Error::Invalid("stages must be positive".into()));
        }
        if !(eps_scale > 0.0 && eps_scale <= 1.0) {
            return Err(Error::Invalid(format!("eps_scale must lie in (0, 1], got {eps_scale}")));
        }
        let eps = (1..=2 * stages).map(|i| eps_scale * 0.5f64.powi(i as i32) / 4.0).collect();
        Ok(Self { stages, eps_scale, eps, gammas: Vec::new(), etas: Vec::new() })
    }

    /// `ε_i`, `i` counted from one.
    pub fn eps(&self, i: usize) -> f64 {
        self.eps[i - 1]
    }

    /// Budget for the forward ratchet of stage `k`, `ε_{2k−1} / 2`.
    pub fn forward_eps(&self, k: usize) -> f64 {
        self.eps(2 * k - 1) / 2.0
    }

    /// Budget for the backward ratchet of stage `k`, `ε_{2k}`.
    pub fn backward_eps(&self, k: usize) -> f64 {
        self.eps(2 * k)
    }

    /// `η_k`, with `η_0 = 0`.
    pub fn eta(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.etas[k - 1]
        }
    }

    /// Sets `γ_k = ε_{2k−1} / (4 M_k)` from the total forward multiplicities
    /// `M_k`, and `η_k = min(γ_k, γ_{k+1})`.
    pub fn set_budgets(&mut self, forward_multiplicities: &[f64]) -> Result<()> {
        if forward_multiplicities.len() != self.stages {
            return Err(Error::DimensionMismatch { expected: self.stages, found: forward_multiplicities.len() });
        }
        self.gammas =
            forward_multiplicities.iter().enumerate().map(|(k, &m)| self.forward_eps(k + 1) / (2.0 * m)).collect();
        self.etas = (0..self.stages)
            .map(|k| match self.gammas.get(k + 1) {
                Some(&next) => self.gammas[k].min(next),
                None => self.gammas[k],
            })
            .collect();
        if let Some(&bad) = self.etas.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::NumericalRange { context: "stage deviation budget", value: bad });
        }
        Ok(())
    }

    /// `ε_i > 0`, `η_k ≤ min(γ_k, γ_{k+1})` whenever budgets are set.
    pub fn is_consistent(&self) -> bool {
        let eps_ok = self.eps.iter().all(|&e| e > 0.0);
        let eta_ok = self
            .etas
            .iter()
            .enumerate()
            .all(|(k, &eta)| eta <= self.gammas[k] && self.gammas.get(k + 1).is_none_or(|&g| eta <= g));
        eps_ok && eta_ok
    }
}
