use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::{check_invalid, path_stream, PATH_BATCH};
use super::truncation::TruncationParams;
use crate::drift::Drift;
use crate::error::{domain, Result};
use crate::rng::StreamRng;
use crate::sampler::{Sampler, SamplerSpec};
use crate::test_function::TestFunction;

/// Monte Carlo estimate of `u(x) = E_x ∫_0^∞ e^{−λt} f(X_t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventEstimate {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub value: f64,
    pub std_error: f64,
    /// `e^{−λT}‖f‖_∞/λ`: the neglected integral beyond the horizon.
    pub tail_bias_bound: f64,
    /// Valid paths used.
    #[serde(rename = "N")]
    pub n_paths: usize,
    pub h: f64,
    /// Simulated horizon, a whole number of steps.
    pub horizon: f64,
    pub seed: u64,
}

impl ResolventEstimate {
    pub const CSV_HEADER: &'static str = "x,lambda,value,std_error,tail_bias,N,h,seed";

    /// `x` is written with its coordinates separated by spaces.
    pub fn csv_row(&self) -> String {
        let x: Vec<String> = self.x.iter().map(|v| format!("{v}")).collect();
        format!(
            "{},{},{},{},{},{},{},{}",
            x.join(" "),
            self.lambda,
            self.value,
            self.std_error,
            self.tail_bias_bound,
            self.n_paths,
            self.h,
            self.seed
        )
    }
}

#[derive(Clone, Default)]
struct Moments {
    count: Vec<usize>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    invalid: Vec<usize>,
}

impl Moments {
    fn new(points: usize) -> Self {
        Self {
            count: vec![0; points],
            sum: vec![0.0; points],
            sum_sq: vec![0.0; points],
            invalid: vec![0; points],
        }
    }

    fn merge(&mut self, other: &Moments) {
        for i in 0..self.sum.len() {
            self.count[i] += other.count[i];
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.invalid[i] += other.invalid[i];
        }
    }
}

/// [`mc_resolvent_many`] at a single point.
#[allow(clippy::too_many_arguments)]
pub fn mc_resolvent(
    x: &[f64],
    lambda: f64,
    f: &TestFunction,
    drift: &Drift,
    sampler: &SamplerSpec,
    trunc: &TruncationParams,
    h: f64,
    n_paths: usize,
) -> Result<ResolventEstimate> {
    Ok(mc_resolvent_many(&[x.to_vec()], lambda, f, drift, sampler, trunc, h, n_paths)?.remove(0))
}

/// Estimates `u` at each point by `(1/N) Σ_paths Σ_{k<K} e^{−λ t_k} f(X_{t_k}) h`
/// with `K = ⌈T/h⌉`.
///
/// Path `i` of every start point is driven by the same noise stream, so the
/// estimates at different points are correlated but each is unbiased. Per-point
/// standard errors come from the sample variance of the path values,
/// accumulated in fixed batches and reduced in batch order.
#[allow(clippy::too_many_arguments)]
pub fn mc_resolvent_many(
    points: &[Vec<f64>],
    lambda: f64,
    f: &TestFunction,
    drift: &Drift,
    sampler: &SamplerSpec,
    trunc: &TruncationParams,
    h: f64,
    n_paths: usize,
) -> Result<Vec<ResolventEstimate>> {
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("step must be positive, got {h}"));
    }
    if n_paths == 0 || points.is_empty() {
        return domain("need at least one path and one point");
    }
    let dim = sampler.measure.dim();
    if drift.dim() != dim || f.dim() != dim || points.iter().any(|p| p.len() != dim) {
        return domain("drift, sampler, test function and points must share a dimension");
    }
    if (trunc.lambda - lambda).abs() > 1e-12 * lambda || trunc.f_sup < f.sup_norm() {
        return domain("truncation parameters were selected for a different lambda or a smaller ‖f‖");
    }
    let steps = ((trunc.horizon / h) - 1e-9).ceil().max(1.0) as usize;
    let horizon = steps as f64 * h;
    let tail_bias_bound = (-lambda * horizon).exp() * f.sup_norm() / lambda;

    let estimate = |value: f64, std_error: f64, n: usize, x: &Vec<f64>| ResolventEstimate {
        x: x.clone(),
        lambda,
        value,
        std_error,
        tail_bias_bound,
        n_paths: n,
        h,
        horizon,
        seed: sampler.seed,
    };
    if f.is_zero() {
        return Ok(points.iter().map(|x| estimate(0.0, 0.0, n_paths, x)).collect());
    }

    let engine = Sampler::new(sampler)?;
    let step = engine.at_step(h)?;
    let decay = (-lambda * h).exp();
    let n_points = points.len();
    let batches: Vec<Moments> = (0..n_paths.div_ceil(PATH_BATCH))
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(n_points);
            let mut states: Vec<f64> = points.iter().flatten().copied().collect();
            let mut acc = vec![0.0; n_points];
            let mut alive = vec![true; n_points];
            let (mut bx, mut dz) = (vec![0.0; dim], vec![0.0; dim]);
            for p in b * PATH_BATCH..((b + 1) * PATH_BATCH).min(n_paths) {
                let mut rng = StreamRng::new(sampler.seed, path_stream(sampler.stream_id, p as u64));
                for (s, x) in states.chunks_exact_mut(dim).zip(points) {
                    s.copy_from_slice(x);
                }
                acc.fill(0.0);
                alive.fill(true);
                let mut discount = h;
                for _ in 0..steps {
                    for (i, s) in states.chunks_exact(dim).enumerate() {
                        acc[i] += discount * f.eval(s);
                    }
                    if dim == 1 && drift.is_zero() {
                        let z = step.draw_1d(&mut rng);
                        for (i, s) in states.iter_mut().enumerate() {
                            *s += z;
                            alive[i] &= s.is_finite();
                        }
                    } else if dim == 1 {
                        let z = step.draw_1d(&mut rng);
                        for (i, s) in states.iter_mut().enumerate() {
                            *s += drift.eval_1d(*s) * h + z;
                            alive[i] &= s.is_finite();
                        }
                    } else {
                        step.draw(&mut rng, &mut dz);
                        for (i, s) in states.chunks_exact_mut(dim).enumerate() {
                            drift.eval_into(s, &mut bx);
                            for ((v, b), z) in s.iter_mut().zip(&bx).zip(&dz) {
                                *v += b * h + z;
                            }
                            alive[i] &= s.iter().all(|v| v.is_finite());
                        }
                    }
                    discount *= decay;
                }
                // a non-finite state stays non-finite, so its accumulator is simply dropped
                for i in 0..n_points {
                    if alive[i] {
                        m.count[i] += 1;
                        m.sum[i] += acc[i];
                        m.sum_sq[i] += acc[i] * acc[i];
                    } else {
                        m.invalid[i] += 1;
                    }
                }
            }
            m
        })
        .collect();
    let mut total = Moments::new(n_points);
    for b in &batches {
        total.merge(b);
    }
    let mut out = Vec::with_capacity(n_points);
    for (i, x) in points.iter().enumerate() {
        check_invalid(total.invalid[i], n_paths)?;
        let n = total.count[i] as f64;
        let mean = total.sum[i] / n;
        let var = if total.count[i] > 1 { ((total.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        out.push(estimate(mean, (var / n).sqrt(), total.count[i], x));
    }
    Ok(out)
}
