//! Monotone finite-difference solver for `λu − Lu − b·u' = f` on the line,
//! the `b = 0` spectral reference, and discrete comparison diagnostics.

mod diagnostics;
mod operator;
mod solve;
mod spectral;

pub use diagnostics::{comparison_check, doubling_gap, min_doubling_constant, ComparisonResult, COMPARISON_TOL};
pub use operator::{assemble_operator, GridSpec, MatrixDiagnostics, ResolventOperator};
pub use solve::{solve_resolvent, solve_with, GridSolution, SolverKind, DENSE_LIMIT, RESIDUAL_TOL};
pub use spectral::{dft_frequency, fft_discounted_sum, fft_oracle, plancherel_sides};
