use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::levy_measure::{default_delta_grid, SpectralMeasure};
use crate::sampler::SamplerMethod;
use crate::test_function::TestFunction;

/// Named measures, or an explicit document, or a file holding one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Preset(MeasurePreset),
    File { file: PathBuf },
    Explicit(SpectralMeasure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurePreset {
    /// Unit atoms at `±e₁, ±e₂` in the plane.
    IndependentCoordinates { alpha: f64 },
    /// Unit atoms on the lines at angles `iϑ`, `i = 0..⌊π/ϑ⌋`.
    LatticeOfRays { alpha: f64, spacing: f64 },
    Isotropic { d: usize, alpha: f64, c: f64 },
    /// Two atoms `±1` with symbol `scale^α |ξ|^α`.
    Symmetric1d { alpha: f64, scale: f64 },
}

impl MeasureSpec {
    pub fn build(&self, base_dir: &Path) -> Result<SpectralMeasure> {
        match self {
            MeasureSpec::Preset(p) => match *p {
                MeasurePreset::IndependentCoordinates { alpha } => SpectralMeasure::independent_coordinates(alpha),
                MeasurePreset::LatticeOfRays { alpha, spacing } => SpectralMeasure::lattice_of_rays(alpha, spacing),
                MeasurePreset::Isotropic { d, alpha, c } => SpectralMeasure::isotropic(d, alpha, c),
                MeasurePreset::Symmetric1d { alpha, scale } => SpectralMeasure::symmetric_1d_with_scale(alpha, scale),
            },
            MeasureSpec::File { file } => {
                let path = base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read measure file {}: {e}", path.display())))?;
                Ok(serde_json::from_str(&text)?)
            }
            MeasureSpec::Explicit(m) => Ok(m.clone()),
        }
    }
}

fn default_direction_grid() -> usize {
    720
}
fn default_epsilon0_grid() -> (usize, usize) {
    (500, 500)
}
fn default_h() -> f64 {
    1.0
}
fn default_samples() -> usize {
    1_000_000
}
fn default_ks_samples() -> usize {
    100_000
}
fn default_ks_h() -> f64 {
    0.5
}
fn default_cf_factor() -> f64 {
    4.0
}
fn default_true() -> bool {
    true
}
fn default_lambda() -> f64 {
    1.0
}
fn default_zero_drift() -> DriftSpec {
    DriftSpec::Zero
}
fn default_threshold() -> f64 {
    crate::sde::DEFAULT_THRESHOLD
}
fn default_noise_scale() -> f64 {
    0.3
}
fn default_final_gap() -> f64 {
    0.05
}
fn default_sigmas() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HkCheckParams {
    pub measure: MeasureSpec,
    pub thetas: Vec<f64>,
    #[serde(default = "default_direction_grid")]
    pub direction_grid: usize,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    /// When set, every θ must produce this verdict.
    #[serde(default)]
    pub expect_satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Epsilon0Params {
    pub kappa: f64,
    pub alpha: f64,
    pub theta: f64,
    #[serde(default = "default_epsilon0_grid")]
    pub grid: (usize, usize),
    #[serde(default)]
    pub expect_feasible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerValidateParams {
    pub measure: MeasureSpec,
    pub method: SamplerMethod,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(rename = "N", default = "default_samples")]
    pub n: usize,
    /// Defaults to 20 frequencies spread in radius and angle.
    #[serde(default)]
    pub frequencies: Option<Vec<Vec<f64>>>,
    /// Pass if the largest CF deviation is below `cf_factor/√N`.
    #[serde(default = "default_cf_factor")]
    pub cf_factor: f64,
    /// Self-similarity KS test on the first coordinate; skipped when 0.
    #[serde(default = "default_ks_samples")]
    pub ks_samples: usize,
    /// Step compared against the unit step by the KS test.
    #[serde(default = "default_ks_h")]
    pub ks_h: f64,
    /// Also write the raw increments as `increments.bin`.
    #[serde(default)]
    pub dump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Target bias for the horizon choice.
    pub epsilon: f64,
    /// Defaults to ray_sum (discrete) or subordination (isotropic).
    #[serde(default)]
    pub method: Option<SamplerMethod>,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdParams {
    pub half_width: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FftParams {
    pub nodes: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventCompareParams {
    pub measure: MeasureSpec,
    #[serde(default = "default_zero_drift")]
    pub drift: DriftSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub f: TestFunction,
    pub points: Vec<f64>,
    pub mc: McParams,
    pub fd: FdParams,
    /// Spectral reference; zero drift only.
    #[serde(default)]
    pub fft: Option<FftParams>,
    /// Finite-difference allowance; if absent, twice the change under halving the step.
    #[serde(default)]
    pub fd_allowance: Option<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    /// Randomized discrete comparison checks on the same measure and `λ`.
    #[serde(default)]
    pub comparison: Option<ComparisonParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonParams {
    /// Pairs per drift.
    pub pairs: usize,
    pub drifts: Vec<DriftSpec>,
    pub half_width: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCheckParams {
    pub measure: MeasureSpec,
    #[serde(default = "default_zero_drift")]
    pub drift: DriftSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub f: TestFunction,
    pub epsilon: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Far-field points as multiples of `support_radius + R` along `e₁`.
    pub far_multiples: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationParams {
    pub alpha: f64,
    pub betas: Vec<f64>,
    /// Noise symbol `scale^α |ξ|^α`.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    pub epsilons: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// For `β < 1 − α`: every gap must stay at or above this.
    #[serde(default)]
    pub floor: Option<f64>,
    /// For `β > 1 − α`: the last gap must fall below this.
    #[serde(default = "default_final_gap")]
    pub final_gap: f64,
    /// Slack of the monotonicity check, in combined standard errors.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    /// Check the qualitative expectations.
    #[serde(default = "default_true")]
    pub assert: bool,
}

/// Which experiment to run and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    HkCheck(HkCheckParams),
    Epsilon0(Epsilon0Params),
    SamplerValidate(SamplerValidateParams),
    ResolventCompare(ResolventCompareParams),
    DecayCheck(DecayCheckParams),
    Bifurcation(BifurcationParams),
}

impl Experiment {
    pub fn command(&self) -> &'static str {
        match self {
            Experiment::HkCheck(_) => "hk-check",
            Experiment::Epsilon0(_) => "epsilon0",
            Experiment::SamplerValidate(_) => "sampler-validate",
            Experiment::ResolventCompare(_) => "resolvent-compare",
            Experiment::DecayCheck(_) => "decay-check",
            Experiment::Bifurcation(_) => "bifurcation",
        }
    }
}

pub const COMMANDS: [&str; 6] =
    ["hk-check", "epsilon0", "sampler-validate", "resolvent-compare", "decay-check", "bifurcation"];

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self { experiment, seed: Some(seed), output: None }
    }

    /// Reads a `.toml` or `.json` document.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml)
    }

    pub fn parse(text: &str, is_toml: bool) -> Result<Self> {
        if is_toml {
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML config: {e}")))
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot encode TOML: {e}")))
    }

    pub fn seed_or(&self, fallback: u64) -> u64 {
        self.seed.unwrap_or(fallback)
    }

    /// Precondition violations; empty when the config can run.
    pub fn validate(&self, base_dir: &Path) -> Vec<String> {
        let mut errors = Vec::new();
        let mut measure = |m: &MeasureSpec, want_dim: Option<usize>| -> Option<SpectralMeasure> {
            match m.build(base_dir) {
                Ok(m) => {
                    if let Some(d) = want_dim {
                        if m.dim() != d {
                            errors.push(format!("measure must be {d}-dimensional, got d={}", m.dim()));
                        }
                    }
                    Some(m)
                }
                Err(e) => {
                    errors.push(format!("measure: {e}"));
                    None
                }
            }
        };
        let mut problems: Vec<String> = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                problems.push(msg.to_string());
            }
        };
        match &self.experiment {
            Experiment::HkCheck(p) => {
                measure(&p.measure, None);
                need(!p.thetas.is_empty(), "thetas must be non-empty");
                need(p.thetas.iter().all(|t| *t > 0.0 && *t < std::f64::consts::PI), "thetas must lie in (0, π)");
                need(p.direction_grid >= 8, "direction_grid must be at least 8");
                need(!p.delta_grid.is_empty() && p.delta_grid.iter().all(|d| *d > 0.0 && *d <= 1.0), "delta_grid entries must lie in (0, 1]");
            }
            Experiment::Epsilon0(p) => {
                need(p.kappa > 0.0, "kappa must be positive");
                need(p.alpha > 0.0 && p.alpha < 1.0, "alpha must lie in (0, 1)");
                need(p.grid.0 > 0 && p.grid.1 > 0, "grid must be positive");
            }
            Experiment::SamplerValidate(p) => {
                if let Some(m) = measure(&p.measure, None) {
                    if let Some(fr) = &p.frequencies {
                        need(fr.iter().all(|xi| xi.len() == m.dim()), "frequency dimension must match the measure");
                    }
                }
                need(p.h > 0.0, "h must be positive");
                need(p.n >= 1, "N must be positive");
                need(p.ks_h > 0.0 && p.ks_h < 1.0, "ks_h must lie in (0, 1)");
            }
            Experiment::ResolventCompare(p) => {
                measure(&p.measure, Some(1));
                need(p.lambda > 0.0, "lambda must be positive");
                need(p.f.dim() == 1, "f must be one-dimensional");
                need(!p.points.is_empty(), "points must be non-empty");
                need(p.mc.method != Some(SamplerMethod::CompoundPoisson), "mc must use an exact sampler");
                need(p.drift.build(1).is_ok(), "drift must be valid in d=1");
                need(p.mc.h > 0.0 && p.mc.n >= 2 && p.mc.epsilon > 0.0, "mc needs h > 0, N ≥ 2, epsilon > 0");
                need(p.fd.half_width > 0.0 && p.fd.step > 0.0, "fd needs positive half_width and step");
                need(
                    p.points.iter().all(|x| x.abs() <= p.fd.half_width / 2.0),
                    "points must lie in the inner half of the fd grid",
                );
                if p.fft.is_some() {
                    need(p.drift == DriftSpec::Zero, "the spectral reference requires zero drift");
                }
                if let Some(c) = &p.comparison {
                    need(c.pairs >= 1 && !c.drifts.is_empty(), "comparison needs pairs ≥ 1 and at least one drift");
                    need(c.half_width > 0.0 && c.step > 0.0, "comparison needs positive half_width and step");
                    need(c.drifts.iter().all(|d| d.build(1).is_ok()), "comparison drifts must be valid in d=1");
                }
                if let Some(fft) = &p.fft {
                    need(
                        fft.nodes as f64 * fft.step >= 4.0 * 2.0 * p.f.support_radius(),
                        "fft period must be at least 4× the support of f",
                    );
                }
            }
            Experiment::DecayCheck(p) => {
                if let Some(m) = measure(&p.measure, None) {
                    need(p.drift.build(m.dim()).is_ok(), "drift must be valid in the measure's dimension");
                    need(p.f.dim() == m.dim(), "f must match the measure's dimension");
                }
                need(p.lambda > 0.0 && p.epsilon > 0.0 && p.h > 0.0 && p.n >= 2, "need lambda, epsilon, h > 0 and N ≥ 2");
                need(p.f.sup_norm() > 0.0, "f must be non-zero");
                need(p.far_multiples.iter().all(|m| *m >= 1.0), "far multiples must be at least 1");
            }
            Experiment::Bifurcation(p) => {
                need(p.alpha > 0.0 && p.alpha < 1.0, "alpha must lie in (0, 1)");
                need(!p.betas.is_empty() && p.betas.iter().all(|b| *b > 0.0 && *b < 1.0), "betas must lie in (0, 1)");
                need(
                    !p.epsilons.is_empty() && p.epsilons.windows(2).all(|w| w[1] < w[0]) && p.epsilons.iter().all(|e| *e >= 0.0),
                    "epsilons must be non-negative and strictly decreasing",
                );
                need(p.threshold > 0.0 && p.threshold < 1.0, "threshold must lie in (0, 1)");
                need(p.h > 0.0 && p.horizon >= p.h && p.n >= 1, "need h > 0, T ≥ h, N ≥ 1");
                need(crate::sde::step_count(p.horizon, p.h).is_ok(), "T must be a whole number of steps h");
            }
        }
        errors.extend(problems);
        errors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_toml_round_trip() {
        let cfg = ExperimentConfig::new(
            Experiment::HkCheck(HkCheckParams {
                measure: MeasureSpec::Preset(MeasurePreset::LatticeOfRays { alpha: 0.5, spacing: 0.3 }),
                thetas: vec![0.5],
                direction_grid: 720,
                delta_grid: default_delta_grid(),
                expect_satisfied: Some(true),
            }),
            7,
        );
        let json = cfg.to_json();
        assert_eq!(ExperimentConfig::parse(&json, false).unwrap(), cfg);
        let toml = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::parse(&toml, true).unwrap(), cfg);
    }

    #[test]
    fn explicit_measure_and_defaults() {
        let text = r#"{"command":"sampler-validate","method":"ray_sum",
            "measure":{"d":1,"alpha":0.5,"kind":"discrete","atoms":[{"dir":[1.0],"w":1.0},{"dir":[-1.0],"w":1.0}]}}"#;
        let cfg = ExperimentConfig::parse(text, false).unwrap();
        let Experiment::SamplerValidate(p) = &cfg.experiment else { panic!() };
        assert_eq!(p.n, 1_000_000);
        assert!(cfg.validate(Path::new(".")).is_empty());
    }

    #[test]
    fn validation_lists_every_problem() {
        let text = r#"{"command":"bifurcation","alpha":1.5,"betas":[0.25],"epsilons":[0.01,0.1],"T":1.0,"h":0.3,"N":10}"#;
        let cfg = ExperimentConfig::parse(text, false).unwrap();
        let errors = cfg.validate(Path::new("."));
        assert_eq!(errors.len(), 3, "{errors:?}");
        let missing = r#"{"command":"hk-check","measure":{"file":"does/not/exist.json"},"thetas":[0.5]}"#;
        let errors = ExperimentConfig::parse(missing, false).unwrap().validate(Path::new("."));
        assert_eq!(errors.len(), 1);
        assert!(ExperimentConfig::parse(r#"{"command":"nope"}"#, false).is_err());
    }
}
