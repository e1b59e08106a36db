use serde::{Deserialize, Serialize};

use super::config::*;
use super::run::DEFAULT_SEED;
use crate::drift::DriftSpec;
use crate::levy_measure::{default_delta_grid, stable_scale_constant};
use crate::sampler::SamplerMethod;
use crate::test_function::TestFunction;

/// Calibrated constants checked in alongside the code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionManifest {
    pub bifurcation: BifurcationCalibration,
    pub resolvent: ResolventCalibration,
}

/// Fine-step oracle run of the `β < 1 − α` bifurcation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCalibration {
    pub alpha: f64,
    pub beta: f64,
    pub noise_scale: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub threshold: f64,
    pub seed: u64,
    pub oracle_h: f64,
    pub oracle_n: usize,
    pub epsilons: Vec<f64>,
    pub oracle_gaps: Vec<f64>,
    pub oracle_std_errors: Vec<f64>,
    /// Half the smallest oracle gap.
    pub floor: f64,
}

/// Finite-difference allowance of the resolvent triangle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventCalibration {
    pub half_width: f64,
    pub step: f64,
    /// Largest change at the points from `Δ` to `Δ/2`.
    pub refinement_change: f64,
    /// Same from `Δ/2` to `Δ/4`.
    pub second_change: f64,
    pub observed_order: f64,
    /// Largest change from `X` to `2X`.
    pub domain_change: f64,
    pub fd_allowance: f64,
}

pub const REGRESSION_MANIFEST: &str = include_str!("../../data/regression_manifest.json");

pub fn regression_manifest() -> RegressionManifest {
    serde_json::from_str(REGRESSION_MANIFEST).expect("checked-in regression manifest parses")
}

fn cfg(experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig::new(experiment, DEFAULT_SEED)
}

fn preset(p: MeasurePreset) -> MeasureSpec {
    MeasureSpec::Preset(p)
}

/// `c` making the one-dimensional isotropic symbol exactly `|ξ|^α`.
pub fn unit_isotropic_constant(alpha: f64) -> f64 {
    1.0 / stable_scale_constant(alpha)
}

/// The resolvent triangle used by the default suite.
pub fn resolvent_triangle(fd_allowance: Option<f64>) -> ResolventCompareParams {
    let r = regression_manifest().resolvent;
    ResolventCompareParams {
        measure: preset(MeasurePreset::Isotropic { d: 1, alpha: 0.5, c: unit_isotropic_constant(0.5) }),
        drift: DriftSpec::Zero,
        lambda: 1.0,
        f: TestFunction::bump(vec![0.0], 1.0, 1.0).expect("valid bump"),
        points: (-4..=4).map(|k| 0.5 * k as f64).collect(),
        mc: McParams { h: 1e-3, n: 100_000, epsilon: 0.01, method: None, cutoff: None },
        fd: FdParams { half_width: r.half_width, step: r.step },
        fft: Some(FftParams { nodes: 1 << 18, step: 0.0125 }),
        fd_allowance,
        sigmas: 3.0,
        comparison: None,
    }
}

pub fn comparison_suite() -> ComparisonParams {
    ComparisonParams {
        pairs: 50,
        drifts: vec![DriftSpec::Example1 { alpha: 0.5, scale: 1.0 }, DriftSpec::Tanaka { beta: 0.25 }],
        half_width: 10.0,
        step: 0.05,
    }
}

pub fn decay_suite() -> DecayCheckParams {
    DecayCheckParams {
        measure: preset(MeasurePreset::Symmetric1d { alpha: 0.5, scale: 1.0 }),
        drift: DriftSpec::Tanaka { beta: 0.25 },
        lambda: 1.0,
        f: TestFunction::bump(vec![0.0], 1.0, 1.0).expect("valid bump"),
        epsilon: 0.01,
        h: 1e-2,
        n: 100_000,
        far_multiples: vec![1.0, 2.0],
        sigmas: 3.0,
    }
}

pub fn bifurcation_suite() -> BifurcationParams {
    let cal = regression_manifest().bifurcation;
    BifurcationParams {
        alpha: cal.alpha,
        betas: vec![cal.beta, 0.75],
        noise_scale: cal.noise_scale,
        epsilons: cal.epsilons.clone(),
        horizon: cal.horizon,
        h: 1e-4,
        n: 100_000,
        threshold: cal.threshold,
        floor: Some(cal.floor),
        final_gap: 0.05,
        sigmas: 3.0,
        assert: true,
    }
}

/// Sampler checks: every method on the measures it supports.
pub fn sampler_suite() -> Vec<(String, SamplerValidateParams)> {
    let mut out = Vec::new();
    let base = |measure: MeasureSpec, method: SamplerMethod, cutoff: Option<f64>| SamplerValidateParams {
        measure,
        method,
        cutoff,
        h: 1.0,
        n: 1_000_000,
        frequencies: None,
        cf_factor: 4.0,
        ks_samples: 100_000,
        ks_h: 0.5,
        dump: false,
    };
    for alpha in [0.3, 0.5, 0.7] {
        let tag = format!("a{}", (alpha * 10.0_f64).round());
        out.push((
            format!("sampler-ray-sum-1d-{tag}"),
            base(preset(MeasurePreset::Symmetric1d { alpha, scale: 1.0 }), SamplerMethod::RaySum, None),
        ));
        out.push((
            format!("sampler-ray-sum-lattice-{tag}"),
            base(preset(MeasurePreset::LatticeOfRays { alpha, spacing: 0.3 }), SamplerMethod::RaySum, None),
        ));
        for d in [1, 2] {
            out.push((
                format!("sampler-subordination-d{d}-{tag}"),
                base(preset(MeasurePreset::Isotropic { d, alpha, c: 1.0 }), SamplerMethod::Subordination, None),
            ));
        }
        // small-jump truncation bias grows like |ξ|²ρ^{2−α}, so frequencies stay moderate
        let mut cp = base(preset(MeasurePreset::Symmetric1d { alpha, scale: 1.0 }), SamplerMethod::CompoundPoisson, Some(1e-3));
        cp.frequencies = Some((1..=20).map(|k| vec![0.1 * k as f64]).collect());
        out.push((format!("sampler-compound-poisson-1d-{tag}"), cp));
        let mut cp2 = base(preset(MeasurePreset::IndependentCoordinates { alpha }), SamplerMethod::CompoundPoisson, Some(1e-3));
        cp2.frequencies =
            Some((1..=20).map(|k| { let a = 0.4 * k as f64; vec![0.1 * k as f64 * a.cos(), 0.1 * k as f64 * a.sin()] }).collect());
        out.push((format!("sampler-compound-poisson-coords-{tag}"), cp2));
    }
    out
}

/// The default suite run by `all`, in order.
pub fn default_suite() -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    for d in [1, 2] {
        for alpha in [0.3, 0.5, 0.7] {
            out.push((
                format!("hk-isotropic-d{d}-a{}", (alpha * 10.0_f64).round()),
                cfg(Experiment::HkCheck(HkCheckParams {
                    measure: preset(MeasurePreset::Isotropic { d, alpha, c: 1.0 }),
                    thetas: vec![0.3, 0.6],
                    direction_grid: 720,
                    delta_grid: default_delta_grid(),
                    expect_satisfied: Some(true),
                })),
            ));
        }
    }
    out.push((
        "hk-independent-coordinates".into(),
        cfg(Experiment::HkCheck(HkCheckParams {
            measure: preset(MeasurePreset::IndependentCoordinates { alpha: 0.5 }),
            thetas: vec![0.1, 0.3, 0.5, 0.7, std::f64::consts::FRAC_PI_4],
            direction_grid: 720,
            delta_grid: default_delta_grid(),
            expect_satisfied: Some(false),
        })),
    ));
    out.push((
        "hk-lattice-of-rays".into(),
        cfg(Experiment::HkCheck(HkCheckParams {
            measure: preset(MeasurePreset::LatticeOfRays { alpha: 0.5, spacing: 0.3 }),
            thetas: vec![0.2, 0.5],
            direction_grid: 720,
            delta_grid: default_delta_grid(),
            expect_satisfied: Some(true),
        })),
    ));
    out.push((
        "epsilon0-feasible".into(),
        cfg(Experiment::Epsilon0(Epsilon0Params {
            kappa: 2.0 / 3.0,
            alpha: 0.5,
            theta: 0.2,
            grid: (500, 500),
            expect_feasible: Some(true),
        })),
    ));
    out.push((
        "epsilon0-infeasible".into(),
        cfg(Experiment::Epsilon0(Epsilon0Params {
            kappa: 2.0 / 3.0,
            alpha: 0.5,
            theta: 0.7,
            grid: (500, 500),
            expect_feasible: Some(false),
        })),
    ));
    for (name, p) in sampler_suite() {
        out.push((name, cfg(Experiment::SamplerValidate(p))));
    }
    let mut triangle = resolvent_triangle(Some(regression_manifest().resolvent.fd_allowance));
    triangle.comparison = Some(comparison_suite());
    out.push(("resolvent-compare".into(), cfg(Experiment::ResolventCompare(triangle))));
    out.push(("decay-check".into(), cfg(Experiment::DecayCheck(decay_suite()))));
    out.push(("bifurcation".into(), cfg(Experiment::Bifurcation(bifurcation_suite()))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_valid_and_named_uniquely() {
        let suite = default_suite();
        let mut names: Vec<&str> = suite.iter().map(|(n, _)| n.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), suite.len());
        for (name, c) in &suite {
            assert!(c.validate(std::path::Path::new(".")).is_empty(), "{name}");
        }
    }

    #[test]
    fn regression_floor_is_half_the_smallest_oracle_gap() {
        let cal = regression_manifest().bifurcation;
        let min = cal.oracle_gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((cal.floor - 0.5 * min).abs() <= 1e-12 && cal.floor > 0.0);
        assert_eq!(cal.epsilons.len(), cal.oracle_gaps.len());
        let r = regression_manifest().resolvent;
        let grid = r.refinement_change / (1.0 - (-r.observed_order).exp2());
        let domain = r.domain_change / (1.0 - 0.5f64.sqrt());
        assert!((r.fd_allowance - 2.0 * (grid + domain)).abs() <= 1e-12 * r.fd_allowance);
        assert!(((r.refinement_change / r.second_change).log2() - r.observed_order).abs() < 1e-12);
    }
}
