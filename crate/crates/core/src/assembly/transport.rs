//! Checks that conjugating a stage by the assembled unitaries transports its
//! compressions exactly (backward chains) or within a budget (forward chains).
//!
//! Differences of conjugated projections are computed from unitary
//! deviations, never by subtracting two rounded dense projections.

use crate::exponent::Exponent;
use crate::gram::GramCompression;
use crate::hilbert::{op_norm, LinOp, Unitary};
use crate::proj::Projection;

pub const HYPOTHESIS_TOL: f64 = 1e-10;
pub const EXACT_TOL: f64 = 1e-9;
pub const PRODUCT_EXACT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportCheck {
    pub measured: f64,
    pub threshold: f64,
    /// Named hypothesis residuals, each required to be at most `HYPOTHESIS_TOL`.
    pub hypotheses: Vec<(&'static str, f64)>,
}

impl TransportCheck {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|(_, v)| *v <= HYPOTHESIS_TOL)
    }

    pub fn pass(&self) -> bool {
        self.hypotheses_hold() && self.measured <= self.threshold
    }
}

/// `‖(Ṽ Ũ Q̃ Ũ* Ṽ* − V Q V*) Q₀‖` for the backward chain of one stage.
pub fn check_exact_transport(
    u_tilde: &Unitary,
    v_tilde: &Unitary,
    v_stage: &Unitary,
    q_tilde: &Projection,
    q0: &Projection,
    q: &Projection,
) -> TransportCheck {
    let qt = q_tilde.matrix();
    let q0m = q0.matrix();
    let u_shift = u_tilde.conjugation_defect(qt);
    let x = qt + &u_shift;
    let diff = (qt - q.matrix()) + &u_shift + v_tilde.conjugation_defect(&x) - v_stage.conjugation_defect(q.matrix());
    let wv = v_tilde.delta();
    TransportCheck {
        measured: op_norm(&(diff * q0m)),
        threshold: EXACT_TOL,
        hypotheses: vec![
            ("forward unitary fixes the extended member", op_norm(&u_shift)),
            ("assembled backward unitary agrees with the stage on Q0", op_norm(&((wv - v_stage.delta()) * q0m))),
            ("assembled backward unitary commutes with Q0", op_norm(&(wv * q0m - q0m * wv))),
            ("Q0 cuts the extended member down to the stage member", op_norm(&(q0m * qt - q.matrix()))),
        ],
    }
}

/// `Ṽ Ũ P̃ Ũ* Ṽ* − U P U*`, accurate to the size of the deviations.
pub fn forward_transport_difference(
    u_tilde: &Unitary,
    v_tilde: &Unitary,
    u_stage: &Unitary,
    p_tilde: &Projection,
    p: &Projection,
) -> LinOp {
    let pt = p_tilde.matrix();
    let u_shift = u_tilde.conjugation_defect(pt);
    let x = pt + &u_shift;
    (pt - p.matrix()) + u_shift - u_stage.conjugation_defect(p.matrix()) + v_tilde.conjugation_defect(&x)
}

/// `‖(Ṽ Ũ P̃ Ũ* Ṽ* − U P U*) P₀‖`, required below `eta`.
pub fn check_bounded_transport(
    u_tilde: &Unitary,
    v_tilde: &Unitary,
    u_stage: &Unitary,
    p_tilde: &Projection,
    p0: &Projection,
    p: &Projection,
    eta: f64,
) -> TransportCheck {
    let p0m = p0.matrix();
    let diff = forward_transport_difference(u_tilde, v_tilde, u_stage, p_tilde, p);
    let wu = u_tilde.delta();
    TransportCheck {
        measured: op_norm(&(diff * p0m)),
        threshold: eta,
        hypotheses: vec![
            ("assembled forward unitary agrees with the stage on P0", op_norm(&((wu - u_stage.delta()) * p0m))),
            ("assembled forward unitary commutes with P0", op_norm(&(wu * p0m - p0m * wu))),
            ("P0 cuts the extended member down to the stage member", op_norm(&(p0m * p_tilde.matrix() - p.matrix()))),
        ],
    }
}

/// Factors given in application order: `a[0]` acts first.
fn ordered(ops: &[LinOp], dim: usize) -> LinOp {
    ops.iter().fold(LinOp::identity(dim, dim), |acc, op| op * acc)
}

/// `‖(∏ B_m − ∏ A_m) Q₀‖` when each `A_m` leaves `Q₀` invariant and agrees
/// with `B_m` there; required at most `1e-8 · M`.
pub fn product_transport_exact(a: &[LinOp], b: &[LinOp], q0: &Projection) -> TransportCheck {
    let dim = q0.dim();
    let q0m = q0.matrix();
    let mut agree: f64 = 0.0;
    let mut invariant: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    for (am, bm) in a.iter().zip(b) {
        agree = agree.max(op_norm(&((am - bm) * q0m)));
        invariant = invariant.max(op_norm(&(am * q0m - q0m * am * q0m)));
        contraction = contraction.max(op_norm(am) - 1.0);
    }
    let count_mismatch = if a.len() == b.len() { 0.0 } else { 1.0 };
    TransportCheck {
        measured: op_norm(&((ordered(b, dim) - ordered(a, dim)) * q0m)),
        threshold: PRODUCT_EXACT_TOL * a.len().max(1) as f64,
        hypotheses: vec![
            ("factor lists have equal length", count_mismatch),
            ("factors agree on Q0", agree),
            ("reference factors leave Q0 invariant", invariant),
            ("reference factors are contractions", contraction.max(0.0)),
        ],
    }
}

/// One repeated factor of a bounded product: `reference` and `perturbed`
/// compressions in a common frame, with `‖(A − B) P₀‖` supplied by the caller
/// from an accurate difference.
#[derive(Debug, Clone)]
pub struct BoundFactor {
    pub reference: GramCompression,
    pub perturbed: GramCompression,
    pub defect: f64,
    pub multiplicity: Exponent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    /// `‖(∏ A^m − ∏ B^m) P₀‖`.
    pub measured: f64,
    pub target: f64,
    /// Largest per-factor defect and the budget it must stay below.
    pub worst_defect: f64,
    pub gamma: f64,
    /// `Σ m · defect`, the bound the telescoping argument gives.
    pub telescoped_bound: f64,
}

impl BoundCheck {
    pub fn pass(&self) -> bool {
        self.worst_defect < self.gamma && self.measured < self.target
    }
}

/// `input` maps the restriction space (columns) into the frame.
pub fn product_transport_bound(factors: &[BoundFactor], input: &LinOp, gamma: f64, target: f64) -> BoundCheck {
    let dim = input.nrows();
    let mut a = LinOp::identity(dim, dim);
    let mut b = LinOp::identity(dim, dim);
    let mut worst_defect: f64 = 0.0;
    let mut telescoped_bound = 0.0;
    for f in factors {
        a = f.reference.power(&f.multiplicity) * a;
        b = f.perturbed.power(&f.multiplicity) * b;
        worst_defect = worst_defect.max(f.defect);
        telescoped_bound += f.multiplicity.to_f64() * f.defect;
    }
    BoundCheck { measured: op_norm(&((a - b) * input)), target, worst_defect, gamma, telescoped_bound }
}
