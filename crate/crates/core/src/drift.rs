//! Drift coefficients `b : R^d → R^d` and sampled Hölder seminorm diagnostics.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::StreamRng;

type CustomFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum DriftKind {
    Zero,
    Constant(Vec<f64>),
    /// `scale · (1 ∧ |x|^{1−α} |log|x||^{−1}) e₁`
    Example1 { alpha: f64, scale: f64 },
    /// `sign(x) (1 ∧ |x|^β)`, one-dimensional
    Tanaka { beta: f64 },
    /// `scale · (1 ∧ |x|^p) e₁`
    PowerClamp { exponent: f64, scale: f64 },
    Custom(CustomFn),
}

/// A bounded drift with its metadata.
///
/// Evaluation is allocation-free through [`Drift::eval_into`] and safe to
/// call from many threads at once.
#[derive(Clone)]
pub struct Drift {
    name: String,
    dim: usize,
    kind: DriftKind,
    sup_bound: f64,
    declared_seminorm: Option<f64>,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Drift")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("sup_bound", &self.sup_bound)
            .field("declared_seminorm", &self.declared_seminorm)
            .field("params", &self.params)
            .finish()
    }
}

/// `1 ∧ r^{1−α} |log r|^{−1}`, with the value 0 at `r = 0` and 1 at `r = 1`.
fn example1_profile(r: f64, alpha: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let log = r.ln().abs();
    if log == 0.0 {
        return 1.0;
    }
    (r.powf(1.0 - alpha) / log).min(1.0)
}

impl Drift {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `‖b‖_∞`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// `[b]_{1−α}` when known analytically.
    pub fn declared_seminorm(&self) -> Option<f64> {
        self.declared_seminorm
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DriftKind::Zero)
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            DriftKind::Zero => out.fill(0.0),
            DriftKind::Constant(c) => out.copy_from_slice(c),
            DriftKind::Example1 { alpha, scale } => {
                out.fill(0.0);
                out[0] = scale * example1_profile(norm(x), *alpha);
            }
            DriftKind::Tanaka { beta } => {
                let v = x[0];
                let m = clamped_power(v.abs(), *beta);
                out[0] = if v > 0.0 {
                    m
                } else if v < 0.0 {
                    -m
                } else {
                    0.0
                };
            }
            DriftKind::PowerClamp { exponent, scale } => {
                out.fill(0.0);
                out[0] = scale * norm(x).powf(*exponent).min(1.0);
            }
            DriftKind::Custom(f) => f(x, out),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Scalar evaluation for one-dimensional drifts.
    #[inline]
    pub fn eval_1d(&self, x: f64) -> f64 {
        match &self.kind {
            DriftKind::Zero => return 0.0,
            DriftKind::Tanaka { beta } => {
                let m = clamped_power(x.abs(), *beta);
                return if x > 0.0 {
                    m
                } else if x < 0.0 {
                    -m
                } else {
                    0.0
                };
            }
            _ => {}
        }
        let mut out = [0.0];
        self.eval_into(&[x], &mut out);
        out[0]
    }

    /// `b ≡ 0` in `R^d`.
    pub fn zero(dim: usize) -> Self {
        Self {
            name: "zero".into(),
            dim,
            kind: DriftKind::Zero,
            sup_bound: 0.0,
            declared_seminorm: Some(0.0),
            params: BTreeMap::new(),
        }
    }

    /// `b ≡ c`.
    pub fn constant(value: Vec<f64>) -> Self {
        let sup = norm(&value);
        let mut params = BTreeMap::new();
        for (i, v) in value.iter().enumerate() {
            params.insert(format!("c{i}"), *v);
        }
        Self {
            name: "constant".into(),
            dim: value.len(),
            kind: DriftKind::Constant(value),
            sup_bound: sup,
            declared_seminorm: Some(0.0),
            params,
        }
    }

    /// `scale · (1 ∧ |x|^p)` along `e₁`. Its `p`-Hölder seminorm is `scale`.
    pub fn power_clamp(dim: usize, exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return domain(format!("power exponent must lie in (0,1], got {exponent}"));
        }
        if dim == 0 {
            return domain("dimension must be positive");
        }
        let params = BTreeMap::from([("exponent".to_string(), exponent), ("scale".to_string(), scale)]);
        Ok(Self {
            name: "power_clamp".into(),
            dim,
            kind: DriftKind::PowerClamp { exponent, scale },
            sup_bound: scale.abs(),
            declared_seminorm: None,
            params,
        })
    }

    /// A user-supplied drift. The caller vouches for `sup_bound`.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        sup_bound: f64,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            kind: DriftKind::Custom(Arc::new(f)),
            sup_bound,
            declared_seminorm: None,
            params: BTreeMap::new(),
        }
    }
}

/// `1 ∧ r^p`, avoiding `powf` for `r ≥ 1` and for `p ∈ {1/4, 1/2, 3/4}`.
#[inline]
fn clamped_power(r: f64, p: f64) -> f64 {
    if r >= 1.0 {
        return 1.0;
    }
    if p == 0.5 {
        r.sqrt()
    } else if p == 0.25 {
        r.sqrt().sqrt()
    } else if p == 0.75 {
        let s = r.sqrt();
        s * s.sqrt()
    } else {
        r.powf(p)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `b(x) = scale · (1 ∧ |x|^{1−α} |log|x||^{−1}) e₁` in `R^dim`.
///
/// The formula is singular at `|x| = 1`; there the clamp applies and the
/// value is `scale` (recorded in `params` as `value_at_unit_radius`).
pub fn example1_drift(alpha: f64, scale: f64, dim: usize) -> Result<Drift> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0,1), got {alpha}"));
    }
    if !(scale > 0.0) {
        return domain(format!("scale must be positive, got {scale}"));
    }
    if dim == 0 {
        return domain("dimension must be positive");
    }
    let params = BTreeMap::from([
        ("alpha".to_string(), alpha),
        ("scale".to_string(), scale),
        ("value_at_unit_radius".to_string(), scale),
    ]);
    Ok(Drift {
        name: "example1".into(),
        dim,
        kind: DriftKind::Example1 { alpha, scale },
        sup_bound: scale,
        declared_seminorm: None,
        params,
    })
}

/// `b(x) = (1 ∧ |x|^β) 1_{x≥0} − (1 ∧ |x|^β) 1_{x<0}` on the real line.
pub fn tanaka_drift(beta: f64, dim: usize) -> Result<Drift> {
    if dim != 1 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return domain(format!("beta must lie in (0,1), got {beta}"));
    }
    Ok(Drift {
        name: "tanaka".into(),
        dim: 1,
        kind: DriftKind::Tanaka { beta },
        sup_bound: 1.0,
        declared_seminorm: None,
        params: BTreeMap::from([("beta".to_string(), beta)]),
    })
}

/// Config-level drift description, e.g. `{"drift":"tanaka","beta":0.25}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "drift", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    Constant { value: Vec<f64> },
    Example1 { alpha: f64, #[serde(default = "one")] scale: f64 },
    Tanaka { beta: f64 },
    PowerClamp { exponent: f64, #[serde(default = "one")] scale: f64 },
}

fn one() -> f64 {
    1.0
}

impl DriftSpec {
    pub fn build(&self, dim: usize) -> Result<Drift> {
        match self {
            DriftSpec::Zero => Ok(Drift::zero(dim)),
            DriftSpec::Constant { value } => {
                if value.len() != dim {
                    return domain(format!("constant drift has {} components, expected {dim}", value.len()));
                }
                Ok(Drift::constant(value.clone()))
            }
            DriftSpec::Example1 { alpha, scale } => example1_drift(*alpha, *scale, dim),
            DriftSpec::Tanaka { beta } => tanaka_drift(*beta, dim),
            DriftSpec::PowerClamp { exponent, scale } => Drift::power_clamp(dim, *exponent, *scale),
        }
    }
}

/// Sampled Hölder ratio `sup |b(x) − b(y)| / |x − y|^γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    /// Largest ratio seen over all sampled pairs: a lower bound for the seminorm.
    pub global_estimate: f64,
    /// `(δ, sup over sampled pairs with |x − y| < δ)` for `δ = 10^0, 10^{−1}, …, 10^{−12}`.
    pub local_profile: Vec<(f64, f64)>,
}

const PROFILE_DECADES: usize = 13;
const PAIR_SEED: u64 = 0x4f1d_e7a5;

/// Lower-bound estimate of the `exponent`-Hölder seminorm of `drift`.
///
/// Pairs are drawn from a fixed counter-based stream so the pair set for a
/// larger budget always contains the pair set of a smaller one. Besides
/// uniform pairs in `[−window, window]^d`, each profile scale receives
/// pairs anchored at the origin, straddling it, and straddling the unit
/// sphere (where the clamps of the provided drifts switch on).
pub fn holder_seminorm_estimate(
    drift: &Drift,
    exponent: f64,
    window: f64,
    pair_budget: usize,
) -> Result<SeminormEstimate> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return domain(format!("exponent must lie in (0,1], got {exponent}"));
    }
    if !(window > 0.0) {
        return domain(format!("window must be positive, got {window}"));
    }
    let dim = drift.dim();
    let deltas: Vec<f64> = (0..PROFILE_DECADES).map(|k| 10f64.powi(-(k as i32))).collect();
    let mut profile = vec![0.0_f64; PROFILE_DECADES];
    let mut global: f64 = 0.0;
    let levels = PROFILE_DECADES + 1;
    let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut bx, mut by) = (vec![0.0; dim], vec![0.0; dim]);
    for i in 0..pair_budget {
        let mut rng = StreamRng::new(PAIR_SEED, i as u64);
        let level = i % levels;
        let kind = (i / levels) % 4;
        if level == PROFILE_DECADES {
            for k in 0..dim {
                x[k] = window * (2.0 * rng.uniform_open() - 1.0);
                y[k] = window * (2.0 * rng.uniform_open() - 1.0);
            }
        } else {
            let t = deltas[level] * rng.uniform_open();
            let u = random_unit(&mut rng, dim);
            let a = rng.uniform_open();
            match kind {
                0 => {
                    x.fill(0.0);
                    for k in 0..dim {
                        y[k] = t * u[k];
                    }
                }
                1 => {
                    for k in 0..dim {
                        x[k] = -a * t * u[k];
                        y[k] = (1.0 - a) * t * u[k];
                    }
                }
                2 => {
                    for k in 0..dim {
                        x[k] = (1.0 - a * t) * u[k];
                        y[k] = (1.0 + (1.0 - a) * t) * u[k];
                    }
                }
                _ => {
                    let v = random_unit(&mut rng, dim);
                    for k in 0..dim {
                        x[k] = window * (2.0 * rng.uniform_open() - 1.0);
                        y[k] = x[k] + t * v[k];
                    }
                }
            }
        }
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        drift.eval_into(&x, &mut bx);
        drift.eval_into(&y, &mut by);
        let diff = bx.iter().zip(&by).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let ratio = diff / dist.powf(exponent);
        if !ratio.is_finite() {
            continue;
        }
        global = global.max(ratio);
        for (k, &delta) in deltas.iter().enumerate() {
            if dist < delta {
                profile[k] = profile[k].max(ratio);
            }
        }
    }
    Ok(SeminormEstimate { global_estimate: global, local_profile: deltas.into_iter().zip(profile).collect() })
}

fn random_unit(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.uniform_open() < 0.5 { -1.0 } else { 1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
