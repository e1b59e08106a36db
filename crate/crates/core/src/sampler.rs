//! Increments of a symmetric α-stable Lévy process with a given spectral measure.
//!
//! Three constructions are provided:
//!
//! * `ray_sum` — discrete spectral measures. Each antipodal atom pair
//!   `{±θ, w}` contributes an independent one-dimensional symmetric stable
//!   variate (Chambers–Mallows–Stuck) along `θ`, scaled so that the pair's
//!   symbol is `w C(α) |⟨ξ, θ⟩|^α`.
//! * `subordination` — isotropic measures. `Z = √(2τS) G` with `S` a
//!   positive `(α/2)`-stable variate and `G` a standard Gaussian vector.
//! * `compound_poisson` — any kind. Jumps of size above the cutoff `ρ` are
//!   simulated exactly, smaller ones dropped; for `α < 1` the dropped part
//!   has finite first moment `Σ(S^{d−1}) ρ^{1−α}/(1−α)`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_measure::{sphere_abs_moment, verified_stable_scale_constant, MeasureKind, SpectralMeasure};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    RaySum,
    Subordination,
    CompoundPoisson,
}

/// What to sample and from which random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub measure: SpectralMeasure,
    pub method: SamplerMethod,
    /// Jump cutoff `ρ ∈ (0, 1]`; compound Poisson only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

impl SamplerSpec {
    pub fn new(measure: SpectralMeasure, method: SamplerMethod, seed: u64) -> Self {
        Self { measure, method, cutoff: None, seed, stream_id: 0 }
    }

    pub fn compound_poisson(measure: SpectralMeasure, cutoff: f64, seed: u64) -> Self {
        Self { measure, method: SamplerMethod::CompoundPoisson, cutoff: Some(cutoff), seed, stream_id: 0 }
    }

    pub fn with_stream(mut self, stream_id: u64) -> Self {
        self.stream_id = stream_id;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.method, self.measure.kind()) {
            (SamplerMethod::RaySum, MeasureKind::Isotropic { .. }) => {
                return Err(Error::Config("ray_sum requires a discrete spectral measure".into()))
            }
            (SamplerMethod::Subordination, MeasureKind::Discrete { .. }) => {
                return Err(Error::Config("subordination requires an isotropic spectral measure".into()))
            }
            _ => {}
        }
        match (self.method, self.cutoff) {
            (SamplerMethod::CompoundPoisson, None) => {
                Err(Error::Config("compound_poisson requires a cutoff".into()))
            }
            (SamplerMethod::CompoundPoisson, Some(rho)) if !(rho > 0.0 && rho <= 1.0) => {
                Err(Error::Config(format!("cutoff must lie in (0, 1], got {rho}")))
            }
            (SamplerMethod::CompoundPoisson, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::Config("cutoff only applies to compound_poisson".into())),
            (_, None) => Ok(()),
        }
    }
}

/// Chambers–Mallows–Stuck transform for `α ∈ (0, 1)`:
/// `sin(αu)/(cos u)^{1/α} · (cos((1−α)u)/e)^{(1−α)/α}`.
///
/// With `u ~ U(−π/2, π/2)` and `e ~ Exp(1)` the result has characteristic
/// function `exp(−|ξ|^α)`.
pub fn cms_standard_stable(alpha: f64, u: f64, e: f64) -> f64 {
    (alpha * u).sin() / u.cos().powf(1.0 / alpha) * (((1.0 - alpha) * u).cos() / e).powf((1.0 - alpha) / alpha)
}

/// Precomputed CMS transform with integer-power fast paths (e.g. `α = 1/2`).
#[derive(Debug, Clone, Copy)]
struct Cms {
    alpha: f64,
    inv_alpha: f64,
    tail_exp: f64,
    inv_alpha_int: Option<i32>,
    tail_exp_int: Option<i32>,
}

fn as_small_int(x: f64) -> Option<i32> {
    let r = x.round();
    ((x - r).abs() < 1e-14 && (1.0..=16.0).contains(&r)).then_some(r as i32)
}

impl Cms {
    fn new(alpha: f64) -> Self {
        let inv_alpha = 1.0 / alpha;
        let tail_exp = (1.0 - alpha) / alpha;
        Self { alpha, inv_alpha, tail_exp, inv_alpha_int: as_small_int(inv_alpha), tail_exp_int: as_small_int(tail_exp) }
    }

    #[inline]
    fn transform(&self, u: f64, e: f64) -> f64 {
        if self.alpha == 0.5 {
            // sin(u/2) cos(u/2) / (e cos²u) with cos u = 1 − 2 sin²(u/2)
            let (s, c) = libm::sincos(0.5 * u);
            let cu = 1.0 - 2.0 * s * s;
            return s * c / (e * cu * cu);
        }
        let c = u.cos();
        let head = match self.inv_alpha_int {
            Some(k) => c.powi(k),
            None => c.powf(self.inv_alpha),
        };
        let base = ((1.0 - self.alpha) * u).cos() / e;
        let tail = match self.tail_exp_int {
            Some(k) => base.powi(k),
            None => base.powf(self.tail_exp),
        };
        (self.alpha * u).sin() / head * tail
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let u = PI * (rng.uniform_open() - 0.5);
        let e = rng.exp1();
        self.transform(u, e)
    }
}

/// Positive stable variate with Laplace transform `exp(−s^a)`, `a ∈ (0, 1)` (Kanter).
#[inline]
fn positive_stable(a: f64, rng: &mut StreamRng) -> f64 {
    let u = PI * rng.uniform_open();
    let e = rng.exp1();
    let left = (a * u).sin() / u.sin().powf(1.0 / a);
    let right = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    left * right
}

#[derive(Debug, Clone)]
enum Engine {
    RaySum {
        cms: Cms,
        /// per pair: direction and unit-time scale `(w C(α))^{1/α}`
        rays: Vec<(Vec<f64>, f64)>,
    },
    Subordination {
        a: f64,
        /// `K` in `ψ(ξ) = K |ξ|^α`
        symbol_coefficient: f64,
    },
    CompoundPoisson {
        cutoff: f64,
        /// `μ(|z| > ρ)`
        rate: f64,
        directions: JumpDirections,
    },
}

#[derive(Debug, Clone)]
enum JumpDirections {
    Atoms { dirs: Vec<Vec<f64>>, cdf: Vec<f64> },
    Uniform,
}

/// A validated sampler; cheap to share between workers.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplerSpec,
    dim: usize,
    alpha: f64,
    engine: Engine,
}

impl Sampler {
    pub fn new(spec: &SamplerSpec) -> Result<Self> {
        spec.validate()?;
        let measure = &spec.measure;
        let alpha = measure.alpha();
        let c_alpha = verified_stable_scale_constant(alpha)?;
        let engine = match spec.method {
            SamplerMethod::RaySum => Engine::RaySum {
                cms: Cms::new(alpha),
                rays: measure
                    .symmetric_pairs()
                    .into_iter()
                    .map(|a| (a.dir, (a.w * c_alpha).powf(1.0 / alpha)))
                    .collect(),
            },
            SamplerMethod::Subordination => {
                let MeasureKind::Isotropic { c } = measure.kind() else { unreachable!("validated") };
                Engine::Subordination {
                    a: alpha / 2.0,
                    symbol_coefficient: c * 0.5 * c_alpha * sphere_abs_moment(measure.dim(), alpha),
                }
            }
            SamplerMethod::CompoundPoisson => {
                let cutoff = spec.cutoff.expect("validated");
                let directions = match measure.kind() {
                    MeasureKind::Discrete { atoms } => {
                        let mut acc = 0.0;
                        let cdf = atoms
                            .iter()
                            .map(|a| {
                                acc += a.w;
                                acc
                            })
                            .collect();
                        JumpDirections::Atoms { dirs: atoms.iter().map(|a| a.dir.clone()).collect(), cdf }
                    }
                    MeasureKind::Isotropic { .. } => JumpDirections::Uniform,
                };
                Engine::CompoundPoisson { cutoff, rate: measure.tail_mass(cutoff), directions }
            }
        };
        Ok(Self { spec: spec.clone(), dim: measure.dim(), alpha, engine })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∫_{|z| ≤ ρ} |z| μ(dz)`, the per-unit-time first moment of the dropped
    /// small jumps (0 for exact methods).
    pub fn truncation_bias_bound(&self) -> f64 {
        match &self.engine {
            Engine::CompoundPoisson { cutoff, .. } => {
                self.spec.measure.total_mass() * cutoff.powf(1.0 - self.alpha) / (1.0 - self.alpha)
            }
            _ => 0.0,
        }
    }

    /// Sampler specialized to a fixed time step.
    pub fn at_step(&self, h: f64) -> Result<StepSampler<'_>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {h}")));
        }
        let time_scale = h.powf(1.0 / self.alpha);
        let jump_count = match &self.engine {
            Engine::CompoundPoisson { rate, .. } if *rate * h > 0.0 => {
                Some(Poisson::new(rate * h).map_err(|e| Error::Domain(format!("jump rate: {e}")))?)
            }
            _ => None,
        };
        let subordinator_scale = match &self.engine {
            // τ = (hK)^{2/α}
            Engine::Subordination { symbol_coefficient, .. } => (h * symbol_coefficient).powf(2.0 / self.alpha),
            _ => 0.0,
        };
        Ok(StepSampler { sampler: self, time_scale, jump_count, subordinator_scale })
    }
}

/// A [`Sampler`] with the step-dependent constants precomputed.
#[derive(Debug, Clone)]
pub struct StepSampler<'a> {
    sampler: &'a Sampler,
    time_scale: f64,
    jump_count: Option<Poisson<f64>>,
    subordinator_scale: f64,
}

impl StepSampler<'_> {
    /// Writes one increment `Z_{t+h} − Z_t` into `out`.
    #[inline]
    pub fn draw(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match &self.sampler.engine {
            Engine::RaySum { cms, rays } => {
                if let [(dir, scale)] = rays.as_slice() {
                    let s = scale * self.time_scale * cms.draw(rng);
                    for (o, d) in out.iter_mut().zip(dir) {
                        *o = s * d;
                    }
                    return;
                }
                out.fill(0.0);
                for (dir, scale) in rays {
                    let s = scale * self.time_scale * cms.draw(rng);
                    for (o, d) in out.iter_mut().zip(dir) {
                        *o += s * d;
                    }
                }
            }
            Engine::Subordination { a, .. } => {
                let s = positive_stable(*a, rng);
                let r = (2.0 * self.subordinator_scale * s).sqrt();
                for o in out.iter_mut() {
                    *o = r * rng.normal();
                }
            }
            Engine::CompoundPoisson { cutoff, directions, .. } => {
                out.fill(0.0);
                let Some(poisson) = &self.jump_count else { return };
                let n = rng.sample(poisson) as u64;
                let inv_alpha = 1.0 / self.sampler.alpha;
                for _ in 0..n {
                    let r = cutoff * rng.uniform_open().powf(-inv_alpha);
                    match directions {
                        JumpDirections::Atoms { dirs, cdf } => {
                            let d = &dirs[rng.categorical(cdf)];
                            for (o, v) in out.iter_mut().zip(d) {
                                *o += r * v;
                            }
                        }
                        JumpDirections::Uniform => {
                            let g: Vec<f64> = (0..out.len()).map(|_| rng.normal()).collect();
                            let ng = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                            for (o, v) in out.iter_mut().zip(&g) {
                                *o += r * v / ng;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Scalar increment for one-dimensional samplers.
    #[inline]
    pub fn draw_1d(&self, rng: &mut StreamRng) -> f64 {
        let mut out = [0.0];
        self.draw(rng, &mut out);
        out[0]
    }

    /// For a one-dimensional ray sum with a single pair: the increment as
    /// `scale · cms(U, E)`, drawn without dispatch. Same stream usage as [`Self::draw_1d`].
    pub fn scalar(&self) -> Option<ScalarStep> {
        match &self.sampler.engine {
            Engine::RaySum { cms, rays } if self.sampler.dim == 1 && rays.len() == 1 => {
                Some(ScalarStep { cms: *cms, scale: rays[0].1 * self.time_scale * rays[0].0[0] })
            }
            _ => None,
        }
    }
}

/// See [`StepSampler::scalar`].
#[derive(Debug, Clone, Copy)]
pub struct ScalarStep {
    cms: Cms,
    scale: f64,
}

impl ScalarStep {
    #[inline(always)]
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        self.scale * self.cms.draw(rng)
    }
}

/// One increment over a step `h`, drawn from the spec's `(seed, stream_id)` stream.
pub fn sample_increment(spec: &SamplerSpec, h: f64) -> Result<Vec<f64>> {
    Ok(sample_increments(spec, h, 1)?.pop().expect("one draw"))
}

/// `n` consecutive increments from the spec's stream.
pub fn sample_increments(spec: &SamplerSpec, h: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let sampler = Sampler::new(spec)?;
    let step = sampler.at_step(h)?;
    let mut rng = StreamRng::new(spec.seed, spec.stream_id);
    Ok((0..n)
        .map(|_| {
            let mut z = vec![0.0; sampler.dim()];
            step.draw(&mut rng, &mut z);
            z
        })
        .collect())
}

/// `n` increments flattened row-major, for validation statistics.
pub fn sample_increments_flat(spec: &SamplerSpec, h: f64, n: usize) -> Result<Vec<f64>> {
    let sampler = Sampler::new(spec)?;
    let step = sampler.at_step(h)?;
    let dim = sampler.dim();
    let mut rng = StreamRng::new(spec.seed, spec.stream_id);
    let mut out = vec![0.0; n * dim];
    for z in out.chunks_exact_mut(dim) {
        step.draw(&mut rng, z);
    }
    Ok(out)
}

/// Magic header of raw increment dumps.
pub const INCREMENT_MAGIC: &[u8; 8] = b"STBLINC1";

/// Writes `STBLINC1`, then `count` and `dim` as little-endian `u64`, then the
/// increments as row-major little-endian `f64`.
pub fn write_increment_dump<W: Write>(mut out: W, dim: usize, flat: &[f64]) -> Result<()> {
    if dim == 0 || !flat.len().is_multiple_of(dim) {
        return Err(Error::Format("sample buffer is not a whole number of rows".into()));
    }
    out.write_all(INCREMENT_MAGIC)?;
    out.write_all(&((flat.len() / dim) as u64).to_le_bytes())?;
    out.write_all(&(dim as u64).to_le_bytes())?;
    for v in flat {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a dump written by [`write_increment_dump`]; returns `(dim, flat)`.
pub fn read_increment_dump<R: Read>(mut input: R) -> Result<(usize, Vec<f64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != INCREMENT_MAGIC {
        return Err(Error::Format("missing STBLINC1 header".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word) as usize;
    let mut flat = Vec::with_capacity(count * dim);
    for _ in 0..count * dim {
        input.read_exact(&mut word)?;
        flat.push(f64::from_le_bytes(word));
    }
    Ok((dim, flat))
}
