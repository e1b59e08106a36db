use std::io::Write;

use serde::{Deserialize, Serialize};

use super::operator::{assemble_operator, GridSpec, MatrixDiagnostics, ResolventOperator};
use crate::drift::Drift;
use crate::error::{domain, Error, Result};
use crate::levy_measure::SpectralMeasure;

/// Linear solver for `M u = f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Dense LU up to [`DENSE_LIMIT`] nodes, Jacobi beyond.
    #[default]
    Auto,
    DenseLu,
    /// Jacobi iteration with FFT products; converges because every row
    /// dominates by at least `λ`, and keeps `u ≥ 0` when `f ≥ 0`.
    Jacobi,
}

/// Largest grid solved densely under [`SolverKind::Auto`].
pub const DENSE_LIMIT: usize = 1501;

const JACOBI_MAX_SWEEPS: usize = 1_000_000;
/// Jacobi stops once `‖M u − f‖_∞ ≤ JACOBI_TOL · ‖f‖_∞`.
const JACOBI_TOL: f64 = 1e-12;
/// Bound required of every returned solution.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub grid: GridSpec,
    pub lambda: f64,
    pub alpha: f64,
    pub u: Vec<f64>,
    /// `‖M u − f‖_∞`.
    pub residual_norm: f64,
    pub f_sup: f64,
    pub matrix_diagnostics: MatrixDiagnostics,
    pub solver: SolverKind,
    pub iterations: usize,
}

impl GridSolution {
    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// Linear interpolation; `0` off the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let s = (x + self.grid.half_width) / self.grid.step;
        if !(s >= 0.0 && s <= (self.grid.nodes - 1) as f64) {
            return 0.0;
        }
        let j = (s.floor() as usize).min(self.grid.nodes - 2);
        let t = s - j as f64;
        (1.0 - t) * self.u[j] + t * self.u[j + 1]
    }

    /// CSV with header `x,u`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,u")?;
        for (x, u) in self.nodes().iter().zip(&self.u) {
            writeln!(out, "{x},{u}")?;
        }
        Ok(())
    }
}

/// Assembles and solves `(λ − A) u = f` on the grid.
pub fn solve_resolvent(
    grid: &GridSpec,
    measure: &SpectralMeasure,
    drift: &Drift,
    lambda: f64,
    f: &[f64],
    solver: SolverKind,
) -> Result<GridSolution> {
    let op = assemble_operator(grid, measure, drift, lambda)?;
    solve_with(&op, f, solver)
}

/// Solves with an already assembled operator.
pub fn solve_with(op: &ResolventOperator, f: &[f64], solver: SolverKind) -> Result<GridSolution> {
    let grid = *op.grid();
    if f.len() != grid.nodes {
        return domain(format!("right-hand side has {} values for {} nodes", f.len(), grid.nodes));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return domain("right-hand side must be finite");
    }
    let diagnostics = op.diagnostics();
    let f_sup = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let kind = match solver {
        SolverKind::Auto if grid.nodes <= DENSE_LIMIT => SolverKind::DenseLu,
        SolverKind::Auto => SolverKind::Jacobi,
        other => other,
    };
    let (u, iterations) = if f_sup == 0.0 {
        (vec![0.0; grid.nodes], 0)
    } else {
        match kind {
            SolverKind::DenseLu => {
                let lu = op.to_dense().lu();
                let rhs = nalgebra::DVector::from_column_slice(f);
                let sol = lu.solve(&rhs).ok_or_else(|| {
                    Error::Solver(format!("LU factorization is singular; diagnostics {diagnostics:?}"))
                })?;
                (sol.as_slice().to_vec(), 1)
            }
            _ => jacobi(op, f, f_sup, &diagnostics)?,
        }
    };
    let mu = op.apply(&u);
    let residual_norm = mu.iter().zip(f).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if !(residual_norm <= RESIDUAL_TOL * f_sup.max(f64::MIN_POSITIVE)) && f_sup > 0.0 {
        return Err(Error::Solver(format!(
            "residual {residual_norm:e} exceeds {RESIDUAL_TOL:e}·‖f‖ = {:e}; diagnostics {diagnostics:?}",
            RESIDUAL_TOL * f_sup
        )));
    }
    Ok(GridSolution {
        grid,
        lambda: op.lambda(),
        alpha: op.alpha(),
        u,
        residual_norm,
        f_sup,
        matrix_diagnostics: diagnostics,
        solver: kind,
        iterations,
    })
}

fn jacobi(op: &ResolventOperator, f: &[f64], f_sup: f64, diagnostics: &MatrixDiagnostics) -> Result<(Vec<f64>, usize)> {
    let n = f.len();
    let diag = op.diagonal();
    let mut u = vec![0.0; n];
    let mut off = vec![0.0; n];
    for sweep in 1..=JACOBI_MAX_SWEEPS {
        op.apply_off_diagonal(&u, &mut off);
        let mut residual: f64 = 0.0;
        for j in 0..n {
            residual = residual.max((diag[j] * u[j] - off[j] - f[j]).abs());
        }
        if residual <= JACOBI_TOL * f_sup {
            return Ok((u, sweep - 1));
        }
        for j in 0..n {
            u[j] = (f[j] + off[j]) / diag[j];
        }
    }
    Err(Error::Solver(format!(
        "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps; diagnostics {diagnostics:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{example1_drift, tanaka_drift};
    use crate::test_function::TestFunction;

    fn setup() -> (GridSpec, SpectralMeasure, Vec<f64>) {
        let grid = GridSpec::new(4.0, 0.05).unwrap();
        let mu = SpectralMeasure::symmetric_1d(0.5, 0.5).unwrap();
        let f = TestFunction::bump(vec![0.3], 1.0, 1.0).unwrap().sample_grid(&grid.nodes());
        (grid, mu, f)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (grid, mu, f) = setup();
        let sol = solve_resolvent(&grid, &mu, &Drift::zero(1), 1.0, &vec![0.0; f.len()], SolverKind::Auto).unwrap();
        assert!(sol.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn solvers_agree_and_respect_the_maximum_principle() {
        let (grid, mu, f) = setup();
        let drift = tanaka_drift(0.25, 1).unwrap();
        let lu = solve_resolvent(&grid, &mu, &drift, 1.5, &f, SolverKind::DenseLu).unwrap();
        let it = solve_resolvent(&grid, &mu, &drift, 1.5, &f, SolverKind::Jacobi).unwrap();
        assert!(it.iterations > 0);
        for (a, b) in lu.u.iter().zip(&it.u) {
            assert!((a - b).abs() < 1e-10);
        }
        for sol in [&lu, &it] {
            assert!(sol.residual_norm <= 1e-10);
            assert!(sol.u.iter().all(|v| *v >= 0.0));
            assert!(sol.u.iter().cloned().fold(0.0, f64::max) <= 1.0 / 1.5 + 1e-12);
        }
    }

    #[test]
    fn jacobi_iterates_stay_nonnegative() {
        let (grid, mu, f) = setup();
        let drift = example1_drift(0.5, 1.0, 1).unwrap();
        let sol = solve_resolvent(&grid, &mu, &drift, 0.5, &f, SolverKind::Jacobi).unwrap();
        assert!(sol.u.iter().all(|v| *v >= 0.0));
        assert!((sol.value_at(grid.node(100)) - sol.u[100]).abs() < 1e-15);
    }
}
