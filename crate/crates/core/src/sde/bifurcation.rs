use serde::{Deserialize, Serialize};

use super::paths::terminal_states;
use crate::drift::tanaka_drift;
use crate::error::{domain, Error, Result};
use crate::levy_measure::SpectralMeasure;
use crate::sampler::{SamplerMethod, SamplerSpec};
use crate::stats::binomial_std_error;

/// Default exceedance threshold `c`.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// One row of a bifurcation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub epsilon: f64,
    /// `P̂(X_T > c | X_0 = +ε)`
    pub p_plus: f64,
    /// `P̂(X_T > c | X_0 = −ε)`
    pub p_minus: f64,
    pub gap: f64,
    /// Binomial standard error of `gap` (independent runs).
    pub std_error: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Parameters of a bifurcation experiment for the odd drift
/// `sign(x)(1 ∧ |x|^β)` in one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSpec {
    pub beta: f64,
    /// Noise: a one-dimensional symmetric measure (its `α` is the stability index).
    pub measure: SpectralMeasure,
    pub epsilons: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n_paths: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub seed: u64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Stream bases for the `+ε` and `−ε` runs of epsilon index `i`; all distinct.
pub fn gap_streams(i: usize) -> (u64, u64) {
    (2 * i as u64 + 1, 2 * i as u64 + 2)
}

/// `P̂(X_T > c | X_0 = +ε) − P̂(X_T > c | X_0 = −ε)` for each `ε`, from
/// independent ray-sum driven runs of `N` paths each.
pub fn bifurcation_gap(spec: &BifurcationSpec) -> Result<Vec<GapRow>> {
    if spec.measure.dim() != 1 {
        return Err(Error::UnsupportedDimension(spec.measure.dim()));
    }
    if !(spec.threshold > 0.0 && spec.threshold < 1.0) {
        return domain(format!("threshold must lie in (0,1), got {}", spec.threshold));
    }
    if spec.epsilons.iter().any(|e| !(*e >= 0.0)) || spec.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return domain("epsilons must be non-negative and strictly decreasing");
    }
    if spec.n_paths == 0 {
        return domain("at least one path is required");
    }
    let drift = tanaka_drift(spec.beta, 1)?;
    let mut rows = Vec::with_capacity(spec.epsilons.len());
    for (i, &eps) in spec.epsilons.iter().enumerate() {
        let (plus_stream, minus_stream) = gap_streams(i);
        let run = |x0: f64, stream: u64| -> Result<(f64, usize)> {
            let sampler = SamplerSpec::new(spec.measure.clone(), SamplerMethod::RaySum, spec.seed).with_stream(stream);
            let (xs, _) = terminal_states(&[x0], &drift, &sampler, spec.horizon, spec.h, spec.n_paths)?;
            let hits = xs.iter().filter(|&&x| x > spec.threshold).count();
            Ok((hits as f64 / xs.len() as f64, xs.len()))
        };
        let (p_plus, n_plus) = run(eps, plus_stream)?;
        let (p_minus, n_minus) = run(-eps, minus_stream)?;
        let std_error = (binomial_std_error(p_plus, n_plus).powi(2) + binomial_std_error(p_minus, n_minus).powi(2)).sqrt();
        rows.push(GapRow { epsilon: eps, p_plus, p_minus, gap: p_plus - p_minus, std_error, n_plus, n_minus });
    }
    Ok(rows)
}
