//! Deterministic reference solutions: a dense Lindblad integrator, the
//! schedule-driven master equation, the squeezed-frame decay equation and the
//! exact single-pass map for an atom pair.

mod checks;
mod frame;
mod kick;
mod lindblad;
mod schedule;

pub use checks::{
    fit_slope, oracle_schedule, relaxation_check, stagger_check, unraveling_check, RelaxationReport, StaggerReport,
    UnravelingReport,
};
pub use frame::{effective_squeezed_frame_decay, squeezed_frame_mode, squeezed_frame_number};
pub use kick::{pairwise_kick_map, PairMode};
pub use lindblad::{integrate_lindblad, integrate_lindblad_with, IntegratorOptions, LindbladSpec, DEFAULT_DIM_CAP};
pub use schedule::{attach_atom_density, integrate_schedule, trace_out_atoms, trace_out_bit};
