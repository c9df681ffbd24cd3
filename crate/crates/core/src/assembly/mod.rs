//! Assembly of the stages into the decreasing sequence, the three
//! projections, and their certificates.

pub mod frame;
pub mod sequence;
pub mod tolerance;
pub mod transport;
pub mod witness;
pub mod word;

pub use sequence::{
    assemble_sequence, initial_sizes, GlobalLevel, LevelTag, SequenceAssembly, SequenceReport, StageChain, StageReport,
};
pub use tolerance::ToleranceSchedule;
pub use transport::{
    check_bounded_transport, check_exact_transport, product_transport_bound, product_transport_exact, BoundCheck,
    BoundFactor, TransportCheck,
};
pub use witness::{
    compose_construction, non_cauchy_certificate, run_flattened_trajectory, run_trajectory, Construction, Fidelity,
    NonCauchyCertificate, Trajectory, TrajectoryRow, WitnessReport,
};
pub use word::{Term, Word, GEN_INTERP, GEN_PLANE, GEN_TOP};
