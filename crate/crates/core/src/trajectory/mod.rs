//! Quantum-trajectory engine: stochastic atom injection with alternating
//! dipole phases, non-Hermitian evolution between events, photon jumps,
//! projective measurement of exiting atoms, and heralding.

mod config;
mod engine;
mod ensemble;
mod events;
mod restoration;
mod schedule;

pub use config::{
    characteristic_time, characteristic_time_pairwise, default_cutoff, default_register_cap, InjectionMode, SimConfig,
};
pub use engine::{
    quantum_rng, run_trajectory, run_trajectory_sampled, schedule_rng, sqvs_reference, steady_sample_times, Herald,
    Trajectory, TrajectoryOutput, TAIL_TOL,
};
pub use ensemble::{
    jackknife_ratio_se, par_map_indexed, standard_error, steady_run, steady_state_ensemble, trajectory_seed,
    SteadyEnsemble, SteadyRun,
};
pub use events::{
    write_event_log, write_samples_csv, EventKind, SampleRecord, TrajectoryEvent, SAMPLE_CSV_HEADER,
};
pub use restoration::{damp_field, run_restoration, BranchGroup, HeraldedRestoration};
pub use schedule::{AtomRecord, Schedule, ScheduledEvent, ScheduledKind};
