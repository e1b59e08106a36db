use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{domain, Result};

fn check(lambda: f64, alpha: f64, symbol_scale: f64, step: f64, n: usize) -> Result<()> {
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("alpha must lie in (0,2), got {alpha}"));
    }
    if !(symbol_scale >= 0.0 && step > 0.0) || n == 0 {
        return domain("symbol scale must be non-negative, step positive, grid non-empty");
    }
    Ok(())
}

/// Angular frequency of DFT bin `k` on `n` nodes of spacing `step`.
pub fn dft_frequency(k: usize, n: usize, step: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / (n as f64 * step)
}

fn spectral_multiply(f: &[f64], multiplier: impl Fn(f64) -> f64, step: f64) -> Vec<f64> {
    let n = f.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        *b *= multiplier(dft_frequency(k, n, step));
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Periodic solution of `λu − Lu = f` for `ψ(ξ) = symbol_scale·|ξ|^α`:
/// `û = f̂ / (λ + ψ)`. `f` holds samples on `n` equispaced nodes of
/// spacing `step`; the period `n·step` should be several times the support of `f`.
pub fn fft_oracle(lambda: f64, alpha: f64, symbol_scale: f64, f: &[f64], step: f64) -> Result<Vec<f64>> {
    check(lambda, alpha, symbol_scale, step, f.len())?;
    Ok(spectral_multiply(f, |xi| 1.0 / (lambda + symbol_scale * xi.abs().powf(alpha)), step))
}

/// `h Σ_{k<K} e^{−λ t_k} E f(x + Z_{t_k})`, the exact mean of the left-endpoint
/// Monte Carlo estimator with `K` steps of size `h` and no drift:
/// multiplier `h (1 − q^K)/(1 − q)` with `q = e^{−(λ+ψ)h}`.
pub fn fft_discounted_sum(
    lambda: f64,
    alpha: f64,
    symbol_scale: f64,
    f: &[f64],
    step: f64,
    h: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    check(lambda, alpha, symbol_scale, step, f.len())?;
    if !(h > 0.0) {
        return domain(format!("time step must be positive, got {h}"));
    }
    Ok(spectral_multiply(
        f,
        |xi| {
            let rate = (lambda + symbol_scale * xi.abs().powf(alpha)) * h;
            h * -(-rate * steps as f64).exp_m1() / -(-rate).exp_m1()
        },
        step,
    ))
}

/// Both sides of `λ‖u‖² + Σ ψ|û|²/n = Re Σ f̂ conj(û)/n` for `u` from [`fft_oracle`].
pub fn plancherel_sides(lambda: f64, alpha: f64, symbol_scale: f64, f: &[f64], u: &[f64], step: f64) -> (f64, f64) {
    let n = f.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut fh: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut uh: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut fh);
    fft.process(&mut uh);
    let mut lhs = lambda * u.iter().map(|v| v * v).sum::<f64>();
    let mut rhs = 0.0;
    for k in 0..n {
        let psi = symbol_scale * dft_frequency(k, n, step).abs().powf(alpha);
        lhs += psi * uh[k].norm_sqr() / n as f64;
        rhs += (fh[k] * uh[k].conj()).re / n as f64;
    }
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_function::TestFunction;

    fn bump_samples(n: usize, step: f64) -> Vec<f64> {
        let f = TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
        (0..n).map(|j| f.eval_1d((j as f64 - (n / 2) as f64) * step)).collect()
    }

    #[test]
    fn zero_in_zero_out() {
        let u = fft_oracle(1.0, 0.5, 1.0, &[0.0; 64], 0.1).unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-300));
    }

    #[test]
    fn large_lambda_approaches_f_over_lambda() {
        let f = bump_samples(1024, 0.02);
        let mut last = f64::INFINITY;
        for lambda in [1e2, 1e4, 1e6] {
            let u = fft_oracle(lambda, 0.5, 1.0, &f, 0.02).unwrap();
            let err = u.iter().zip(&f).map(|(a, b)| (lambda * a - b).abs()).fold(0.0, f64::max);
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn plancherel_identity() {
        let f = bump_samples(2048, 0.01);
        let u = fft_oracle(1.0, 0.5, 0.8, &f, 0.01).unwrap();
        let (l, r) = plancherel_sides(1.0, 0.5, 0.8, &f, &u, 0.01);
        assert!((l - r).abs() <= 1e-8 * r.abs(), "{l} vs {r}");
    }

    #[test]
    fn discounted_sum_tends_to_resolvent() {
        let f = bump_samples(1024, 0.02);
        let u = fft_oracle(1.0, 0.5, 1.0, &f, 0.02).unwrap();
        let s = fft_discounted_sum(1.0, 0.5, 1.0, &f, 0.02, 1e-4, 400_000).unwrap();
        let err = u.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }
}
