//! Symmetric α-stable Lévy measures given by their spectral measure, the
//! cone condition on their truncated second moments, and the resulting
//! drift-smallness constant.

mod cone;
mod epsilon0;
mod measure;
mod symbol;

pub use cone::{
    check_cone_condition, cone_second_moment, default_delta_grid, Cone, ConeConditionReport, DirectionRow,
    AXES_PER_ARC,
};
pub use epsilon0::{
    admissible_theta_interval, compute_epsilon0, critical_angle, epsilon0_profile, positivity_factor,
    Epsilon0Result, ThetaIntervals,
};
pub use measure::{Atom, MeasureKind, SpectralMeasure};
pub use symbol::{
    levy_symbol, sphere_abs_moment, stable_scale_constant, verified_stable_scale_constant, LevySymbol,
};
