use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solve::GridSolution;
use crate::error::{domain, Result};

/// Slack allowed by the discrete comparison check.
pub const COMPARISON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub holds: bool,
    /// `max_j (u₁ − u₂)_j`, floored at 0.
    pub max_violation: f64,
}

fn same_grid(a: &GridSolution, b: &GridSolution) -> Result<()> {
    if !a.grid.matches(&b.grid) {
        return domain("solutions live on different grids");
    }
    Ok(())
}

/// Whether `u₁ ≤ u₂ + 1e−10` at every node.
pub fn comparison_check(sol1: &GridSolution, sol2: &GridSolution) -> Result<ComparisonResult> {
    same_grid(sol1, sol2)?;
    let max_violation = sol1.u.iter().zip(&sol2.u).map(|(a, b)| a - b).fold(0.0_f64, f64::max);
    Ok(ComparisonResult { holds: max_violation <= COMPARISON_TOL, max_violation })
}

fn check_gamma(u: &GridSolution, gamma: f64) -> Result<()> {
    if !(gamma > u.alpha && gamma < 2.0) {
        return domain(format!("gamma must lie in (alpha, 2) = ({}, 2), got {gamma}", u.alpha));
    }
    Ok(())
}

fn max_diagonal_gap(u: &GridSolution, v: &GridSolution) -> f64 {
    u.u.iter().zip(&v.u).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)
}

/// `sup_{j,k} (u_j − v_k − L|x_j − x_k|^γ) − max_j (u_j − v_j)`.
pub fn doubling_gap(u: &GridSolution, v: &GridSolution, l: f64, gamma: f64) -> Result<f64> {
    same_grid(u, v)?;
    check_gamma(u, gamma)?;
    let step = u.grid.step;
    let n = u.u.len();
    // penalty depends only on |j − k|
    let penalty: Vec<f64> = (0..n).map(|d| l * (d as f64 * step).powf(gamma)).collect();
    let sup = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| u.u[j] - v.u[k] - penalty[j.abs_diff(k)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(sup - max_diagonal_gap(u, v))
}

/// Smallest `L ≥ 0` with `doubling_gap(u, v, L, γ) ≤ 0`:
/// `max(0, max_{j≠k} (u_j − v_k − M)/|x_j − x_k|^γ)` with `M = max_j (u_j − v_j)`.
pub fn min_doubling_constant(u: &GridSolution, v: &GridSolution, gamma: f64) -> Result<f64> {
    same_grid(u, v)?;
    check_gamma(u, gamma)?;
    let m = max_diagonal_gap(u, v);
    let step = u.grid.step;
    let n = u.u.len();
    let inv: Vec<f64> = (0..n).map(|d| if d == 0 { 0.0 } else { (d as f64 * step).powf(-gamma) }).collect();
    let l = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .filter(|&k| k != j)
                .map(|k| (u.u[j] - v.u[k] - m) * inv[j.abs_diff(k)])
                .fold(0.0_f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::Drift;
    use crate::levy_measure::SpectralMeasure;
    use crate::resolvent::{solve_resolvent, GridSpec, SolverKind};
    use crate::test_function::TestFunction;

    fn solution(height: f64) -> GridSolution {
        let grid = GridSpec::new(3.0, 0.05).unwrap();
        let mu = SpectralMeasure::symmetric_1d(0.5, 0.5).unwrap();
        let f = TestFunction::bump(vec![0.0], 1.0, height).unwrap().sample_grid(&grid.nodes());
        solve_resolvent(&grid, &mu, &Drift::zero(1), 1.0, &f, SolverKind::Auto).unwrap()
    }

    #[test]
    fn comparison_basics() {
        let a = solution(1.0);
        let r = comparison_check(&a, &a).unwrap();
        assert!(r.holds && r.max_violation == 0.0);
        let b = solution(1.5);
        assert!(comparison_check(&a, &b).unwrap().holds);
        assert!(!comparison_check(&b, &a).unwrap().holds);
        let mut other = a.clone();
        other.grid = GridSpec::new(2.0, 0.05).unwrap();
        assert!(comparison_check(&a, &other).is_err());
    }

    #[test]
    fn doubling_gap_definitions() {
        let a = solution(1.0);
        assert!(doubling_gap(&a, &a, 0.0, 1.0).unwrap() >= 0.0);
        assert!(doubling_gap(&a, &a, 1.0, 1.0).unwrap() <= 0.0);
        let b = solution(0.8);
        let l = min_doubling_constant(&a, &b, 1.0).unwrap();
        assert!(doubling_gap(&a, &b, l, 1.0).unwrap() <= 1e-12);
        if l > 0.0 {
            assert!(doubling_gap(&a, &b, 0.9 * l, 1.0).unwrap() > 0.0);
        }
        assert!(doubling_gap(&a, &b, 1.0, 0.3).is_err());
    }
}
