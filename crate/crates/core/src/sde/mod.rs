//! Euler simulation of `dX = b(X) dt + dZ` and Monte Carlo resolvent estimates.

mod bifurcation;
mod estimator;
mod paths;
mod truncation;

pub use bifurcation::{bifurcation_gap, gap_streams, BifurcationSpec, GapRow, DEFAULT_THRESHOLD};
pub use estimator::{mc_resolvent, mc_resolvent_many, ResolventEstimate};
pub use paths::{
    euler_paths, exit_probability, path_stream, read_ensemble_binary, step_count, terminal_states, EnsembleDump,
    PathEnsemble, StartPoints, ENSEMBLE_MAGIC, MAX_INVALID_FRACTION, PATH_BATCH,
};
pub use truncation::{
    select_truncation, select_truncation_with_profile, BumpProfile, TruncationParams, HORIZON_GRID_RATIO,
};
