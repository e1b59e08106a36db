use stablesde::drift::{tanaka_drift, Drift};
use stablesde::levy_measure::SpectralMeasure;
use stablesde::resolvent::fft_discounted_sum;
use stablesde::sampler::{sample_increments_flat, SamplerMethod, SamplerSpec};
use stablesde::sde::{
    euler_paths, exit_probability, mc_resolvent, mc_resolvent_many, read_ensemble_binary, select_truncation,
    terminal_states, StartPoints, HORIZON_GRID_RATIO,
};
use stablesde::stats::ks_two_sample;
use stablesde::test_function::TestFunction;

const SEED: u64 = 8_675_309;

fn rays_1d(alpha: f64) -> SamplerSpec {
    SamplerSpec::new(SpectralMeasure::symmetric_1d_with_scale(alpha, 1.0).unwrap(), SamplerMethod::RaySum, SEED)
}

#[test]
fn constant_drift_paths_match_the_shifted_stable_law() {
    // X_T = x₀ + bT + Z_T exactly, for every step size
    let alpha = 0.6;
    let (x0, b, horizon) = (0.3, 0.7, 1.0);
    let drift = Drift::constant(vec![b]);
    let reference: Vec<f64> = sample_increments_flat(&rays_1d(alpha).with_stream(99), horizon, 40_000)
        .unwrap()
        .iter()
        .map(|z| x0 + b * horizon + z)
        .collect();
    for h in [1.0, 0.1, 0.01] {
        let (x, invalid) = terminal_states(&[x0], &drift, &rays_1d(alpha), horizon, h, 40_000).unwrap();
        assert_eq!(invalid, 0);
        let ks = ks_two_sample(&x, &reference);
        assert!(ks.p_value > 1e-3, "h={h}: {ks:?}");
    }
}

#[test]
fn tanaka_paths_from_zero_are_symmetric() {
    let drift = tanaka_drift(0.3, 1).unwrap();
    let (x, _) = terminal_states(&[0.0], &drift, &rays_1d(0.5), 1.0, 0.01, 40_000).unwrap();
    let (a, b) = x.split_at(20_000);
    let flipped: Vec<f64> = b.iter().map(|v| -v).collect();
    let ks = ks_two_sample(a, &flipped);
    assert!(ks.p_value > 1e-3, "{ks:?}");
}

#[test]
fn terminal_states_agree_with_stored_paths_for_any_thread_count() {
    let drift = tanaka_drift(0.4, 1).unwrap();
    let spec = rays_1d(0.5).with_stream(3);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (x, _) = terminal_states(&[0.2], &drift, &spec, 0.5, 0.01, 1000).unwrap();
            let ens = euler_paths(StartPoints::Single(&[0.2]), &drift, &spec, 0.5, 0.01, 1000, 10).unwrap();
            (x, ens.terminal_states())
        })
    };
    let (x1, e1) = run(1);
    let (x4, e4) = run(4);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&x1), bits(&e1));
    assert_eq!(bits(&x1), bits(&x4));
    assert_eq!(bits(&e1), bits(&e4));
}

#[test]
fn ensemble_binary_round_trip() {
    let spec = SamplerSpec::new(SpectralMeasure::independent_coordinates(0.5).unwrap(), SamplerMethod::RaySum, 1);
    let starts = vec![vec![0.0, 0.0], vec![1.0, -1.0]];
    let ens = euler_paths(StartPoints::PerPath(&starts), &Drift::zero(2), &spec, 0.2, 0.05, 5, 2).unwrap();
    assert_eq!(ens.n_times(), 3);
    assert_eq!(ens.state(1, 0), &[1.0, -1.0]);
    assert_eq!(ens.state(2, 0), &[0.0, 0.0]);
    let mut bytes = Vec::new();
    ens.write_binary(&mut bytes).unwrap();
    let dump = read_ensemble_binary(bytes.as_slice()).unwrap();
    assert_eq!((dump.n_paths, dump.n_times, dump.dim), (5, 3, 2));
    assert_eq!(dump.states, ens.states);
    bytes[3] = 0;
    assert!(read_ensemble_binary(bytes.as_slice()).is_err());
    assert!(euler_paths(StartPoints::Single(&[0.0, 0.0]), &Drift::zero(2), &spec, 0.2, 0.05, 5, 3).is_err());
}

#[test]
fn truncation_constants_satisfy_their_bounds() {
    let mu = SpectralMeasure::lattice_of_rays(0.5, 0.8).unwrap();
    for (eps, lambda, f_sup, b_sup) in [(0.01, 1.0, 1.0, 0.0), (0.1, 0.3, 2.0, 1.5), (1e-4, 5.0, 0.5, 1.0)] {
        let t = select_truncation(eps, lambda, f_sup, b_sup, &mu, 0.5).unwrap();
        let bound = ((lambda * eps / (4.0 * f_sup)).ln() / lambda).abs();
        assert!(t.horizon > bound && t.horizon / HORIZON_GRID_RATIO <= bound.max(0.5));
        // μ(|z| > m) = Σ(S¹) m^{−α}/α
        let tail = mu.total_mass() * t.m.powf(-0.5) / 0.5;
        assert!((t.horizon * tail - eps / (4.0 * t.g_profile.sup_norm)).abs() < 1e-12 * eps);
        assert!(t.radius > 4.0 * b_sup * t.g_profile.grad_norm / eps);
        assert!((t.exit_bound() - 0.75 * lambda * eps / f_sup).abs() < 1e-15);
        assert!(t.tail_bias_bound() < eps / 4.0);
    }
    assert!(select_truncation(0.0, 1.0, 1.0, 0.0, &mu, 1.0).is_err());
    assert!(select_truncation(0.1, 1.0, 1.0, -1.0, &mu, 1.0).is_err());
}

#[test]
fn resolvent_estimate_matches_the_spectral_mean() {
    let alpha = 0.5;
    let lambda = 1.0;
    let f = TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
    let spec = rays_1d(alpha);
    let trunc = select_truncation(0.05, lambda, 1.0, 0.0, &spec.measure, 1.0).unwrap();
    let h = 0.01;
    let points = vec![vec![0.0], vec![1.5], vec![-4.0]];
    let est = mc_resolvent_many(&points, lambda, &f, &Drift::zero(1), &spec, &trunc, h, 20_000).unwrap();

    let steps = est[0].horizon / h;
    assert!((steps - steps.round()).abs() < 1e-9 && est[0].horizon >= trunc.horizon - 1e-12);
    let (nodes, step) = (1usize << 16, 0.01);
    let grid: Vec<f64> = (0..nodes).map(|j| f.eval_1d((j as f64 - (nodes / 2) as f64) * step)).collect();
    let mean = fft_discounted_sum(lambda, alpha, 1.0, &grid, step, h, steps.round() as usize).unwrap();
    for e in &est {
        let j = (e.x[0] / step).round() as i64 + (nodes / 2) as i64;
        let exact = mean[j as usize];
        assert!(e.std_error > 0.0);
        assert!((e.value - exact).abs() < 4.0 * e.std_error, "x={:?}: {} vs {exact} (se {})", e.x, e.value, e.std_error);
    }
    let single = mc_resolvent(&[1.5], lambda, &f, &Drift::zero(1), &spec, &trunc, h, 20_000).unwrap();
    assert_eq!(single.value.to_bits(), est[1].value.to_bits());

    let other = select_truncation(0.05, 2.0, 1.0, 0.0, &spec.measure, 1.0).unwrap();
    assert!(mc_resolvent(&[0.0], lambda, &f, &Drift::zero(1), &spec, &other, h, 10).is_err());
}

#[test]
fn exit_probability_is_monotone_in_radius_and_time() {
    let spec = rays_1d(0.5);
    let ens = euler_paths(StartPoints::Single(&[0.0]), &tanaka_drift(0.25, 1).unwrap(), &spec, 1.0, 0.01, 4000, 10)
        .unwrap();
    let mut last = 1.0;
    for r in [0.5, 1.0, 4.0, 16.0] {
        let p = exit_probability(&ens, r, 1.0).unwrap();
        assert!(p <= last);
        assert!(exit_probability(&ens, r, 0.5).unwrap() <= p);
        last = p;
    }
    assert_eq!(exit_probability(&ens, 0.0, 1.0).unwrap(), 1.0);
    assert!(exit_probability(&ens, 1.0, 2.0).is_err());
}
