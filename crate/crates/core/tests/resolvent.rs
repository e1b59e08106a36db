use proptest::prelude::*;
use stablesde::drift::{example1_drift, tanaka_drift, Drift};
use stablesde::experiments::regression_manifest;
use stablesde::levy_measure::SpectralMeasure;
use stablesde::resolvent::{
    assemble_operator, comparison_check, doubling_gap, fft_oracle, min_doubling_constant, plancherel_sides,
    solve_resolvent, solve_with, GridSolution, GridSpec, SolverKind,
};
use stablesde::test_function::TestFunction;

const FFT_NODES: usize = 1 << 18;
const FFT_STEP: f64 = 0.0125;

fn unit_symbol(alpha: f64) -> SpectralMeasure {
    SpectralMeasure::symmetric_1d_with_scale(alpha, 1.0).unwrap()
}

fn unit_bump() -> TestFunction {
    TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap()
}

fn spectral_reference(alpha: f64, f: &TestFunction) -> Vec<f64> {
    let half = (FFT_NODES / 2) as f64;
    let samples: Vec<f64> = (0..FFT_NODES).map(|j| f.eval_1d((j as f64 - half) * FFT_STEP)).collect();
    fft_oracle(1.0, alpha, 1.0, &samples, FFT_STEP).unwrap()
}

fn solve(half_width: f64, step: f64, measure: &SpectralMeasure, drift: &Drift, f: &TestFunction) -> GridSolution {
    let grid = GridSpec::new(half_width, step).unwrap();
    solve_resolvent(&grid, measure, drift, 1.0, &f.sample_grid(&grid.nodes()), SolverKind::Auto).unwrap()
}

fn max_error(sol: &GridSolution, reference: &[f64]) -> f64 {
    (-8..=8)
        .map(|k| {
            let x = k as f64 * 0.25;
            let j = (x / FFT_STEP).round() as i64 + (FFT_NODES / 2) as i64;
            (sol.value_at(x) - reference[j as usize]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn finite_differences_converge_to_the_spectral_solution() {
    let alpha = 0.5;
    let mu = unit_symbol(alpha);
    let f = unit_bump();
    let reference = spectral_reference(alpha, &f);
    let zero = Drift::zero(1);
    let by_step: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&d| max_error(&solve(25.0, d, &mu, &zero, &f), &reference)).collect();
    assert!(by_step[0] > by_step[1] && by_step[1] > by_step[2], "{by_step:?}");
    let by_width: Vec<f64> = [12.5, 25.0, 50.0].iter().map(|&x| max_error(&solve(x, 0.05, &mu, &zero, &f), &reference)).collect();
    assert!(by_width[0] > by_width[1] && by_width[1] > by_width[2], "{by_width:?}");
    let allowance = regression_manifest().resolvent.fd_allowance;
    assert!(by_width[2] <= allowance, "{} > {allowance}", by_width[2]);
}

#[test]
fn plancherel_identity_holds_for_the_spectral_solution() {
    let f = unit_bump();
    let n = 1 << 14;
    let step = 0.02;
    let samples: Vec<f64> = (0..n).map(|j| f.eval_1d((j as f64 - (n / 2) as f64) * step)).collect();
    for alpha in [0.3, 0.8] {
        let u = fft_oracle(0.7, alpha, 1.3, &samples, step).unwrap();
        let (lhs, rhs) = plancherel_sides(0.7, alpha, 1.3, &samples, &u, step);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs, "{lhs} vs {rhs}");
    }
}

#[test]
fn enlarging_the_domain_adds_a_bounded_nonnegative_correction() {
    // on the small grid u_{2X} − u_X solves the same equation with the outer
    // values of u_{2X} as exterior data, so it lies in [0, max_{|y|≥X} u_{2X}]
    let mu = unit_symbol(0.6);
    let drift = tanaka_drift(0.3, 1).unwrap();
    let f = TestFunction::bump(vec![0.4], 0.8, 1.0).unwrap();
    let small = solve(5.0, 0.05, &mu, &drift, &f);
    let large = solve(10.0, 0.05, &mu, &drift, &f);
    let offset = 100;
    let outer = large
        .nodes()
        .iter()
        .zip(&large.u)
        .filter(|(x, _)| x.abs() >= 5.0 - 1e-9)
        .map(|(_, u)| *u)
        .fold(0.0, f64::max);
    assert!(outer > 0.0);
    for (j, u) in small.u.iter().enumerate() {
        let d = large.u[j + offset] - u;
        assert!(d >= -1e-12 && d <= outer + 1e-12, "node {j}: {d} vs {outer}");
    }
}

#[test]
fn dense_and_iterative_solvers_agree() {
    let grid = GridSpec::new(10.0, 0.05).unwrap();
    let mu = unit_symbol(0.4);
    let drift = example1_drift(0.4, 1.0, 1).unwrap();
    let op = assemble_operator(&grid, &mu, &drift, 2.0).unwrap();
    let f = unit_bump().sample_grid(&grid.nodes());
    let dense = solve_with(&op, &f, SolverKind::DenseLu).unwrap();
    let jacobi = solve_with(&op, &f, SolverKind::Jacobi).unwrap();
    let diff = dense.u.iter().zip(&jacobi.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
    assert!(jacobi.iterations > 1 && jacobi.u.iter().all(|v| *v >= 0.0));

    let m = op.to_dense();
    let applied = op.apply(&f);
    for j in 0..grid.nodes {
        let row: f64 = (0..grid.nodes).map(|k| m[(j, k)] * f[k]).sum();
        assert!((row - applied[j]).abs() < 1e-11);
    }
    let d = op.diagnostics();
    assert!(d.max_off_diagonal <= 0.0 && d.min_dominance_margin >= 2.0 * (1.0 - 1e-12));
}

#[test]
fn doubling_constant_is_the_threshold_of_the_gap() {
    let mu = unit_symbol(0.5);
    let f = unit_bump();
    let u = solve(5.0, 0.05, &mu, &tanaka_drift(0.25, 1).unwrap(), &f);
    let v = solve(5.0, 0.05, &mu, &Drift::zero(1), &f);
    for gamma in [0.7, 1.2] {
        let l = min_doubling_constant(&u, &v, gamma).unwrap();
        assert!(l > 0.0);
        assert!(doubling_gap(&u, &v, l, gamma).unwrap() <= 1e-12);
        assert!(doubling_gap(&u, &v, 0.9 * l, gamma).unwrap() > 0.0);
    }
    assert!(min_doubling_constant(&u, &v, 0.4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_data_gives_larger_solutions(
        c1 in -3.0f64..3.0, r1 in 0.2f64..2.0, h1 in -1.0f64..1.0,
        c2 in -3.0f64..3.0, r2 in 0.2f64..2.0, h2 in 0.0f64..1.0,
        beta in 0.05f64..0.95,
    ) {
        let grid = GridSpec::new(8.0, 0.05).unwrap();
        let nodes = grid.nodes();
        let op = assemble_operator(&grid, &unit_symbol(0.5), &tanaka_drift(beta, 1).unwrap(), 1.0).unwrap();
        let low = TestFunction::bump(vec![c1], r1, h1).unwrap().sample_grid(&nodes);
        let extra = TestFunction::bump(vec![c2], r2, h2).unwrap().sample_grid(&nodes);
        let high: Vec<f64> = low.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let u1 = solve_with(&op, &low, SolverKind::DenseLu).unwrap();
        let u2 = solve_with(&op, &high, SolverKind::DenseLu).unwrap();
        let r = comparison_check(&u1, &u2).unwrap();
        prop_assert!(r.holds, "violation {}", r.max_violation);
    }
}
