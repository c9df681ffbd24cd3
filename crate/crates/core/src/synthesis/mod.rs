//! Building blocks: coordinate plans, ratchets, exponent schedules and the
//! interpolating projection.

pub mod interp;
pub mod plan;
pub mod ratchet;
pub mod schedule;

pub use interp::{build_from_slabs, build_interpolating_projection, InterpolatingProjection};
pub use plan::{build_dimension_plan, build_stage_flags, required_dimension, DimensionPlan, StageFlags, StageSizes};
pub use ratchet::{
    best_ratchet_residual, initial_stage_count, ratchet_residual, stage_lower_bound, synthesize_ratchet, Ratchet,
    RatchetPlan,
};
pub use schedule::{
    adapted_schedule, eigenvalue_ladder, level_exponent, power_schedule, PowerSchedule, DEFAULT_EXPONENT_CAP,
};
