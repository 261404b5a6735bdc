//! Cat-state fidelities, heralded-state aggregation and parameter sweeps.

mod dynamics;
mod fidelity;
mod herald;
mod sweep;

pub use fidelity::{
    analyze_state, best_spcs_fidelity, best_sqspcs_fidelity, best_sqspcs_from, fidelity, FidelityReport, SpcsFit,
    SqSpcsFit, R_MAX,
};
pub use dynamics::{DynamicsRow, RestorationSeries, DYNAMICS_CSV_HEADER};
pub use herald::{herald_aggregate, herald_sum, HeraldFilter};
pub use sweep::{
    fitted_squeeze_r, sweep_point_config, sweep_series, write_sweep_csv, SweepFailure, SweepOptions, SweepResult,
    SweepRow, SWEEP_CSV_HEADER,
};
