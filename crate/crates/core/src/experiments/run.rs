use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::*;
use super::suite::ResolventCalibration;
use crate::drift::Drift;
use crate::error::{Error, Result};
use crate::levy_measure::{check_cone_condition, compute_epsilon0, LevySymbol, MeasureKind, SpectralMeasure};
use crate::resolvent::{
    assemble_operator, comparison_check, fft_discounted_sum, fft_oracle, solve_resolvent, solve_with, 
    GridSpec, SolverKind,
};
use crate::rng::StreamRng;
use crate::sampler::{sample_increments_flat, write_increment_dump, SamplerMethod, SamplerSpec};
use crate::sde::{
    bifurcation_gap, euler_paths, exit_probability, mc_resolvent_many, select_truncation, BifurcationSpec,
    StartPoints,
};
use crate::stats::{binomial_std_error, empirical_cf, ks_two_sample};
use crate::test_function::TestFunction;

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_531;

/// Smallest truncation horizon considered by the Monte Carlo commands.
const HORIZON_FLOOR: f64 = 1.0;

/// A configured check that did not hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionFailure {
    /// Output file holding the offending row.
    pub table: String,
    /// Zero-based data row, if the failure concerns one row.
    pub row: Option<usize>,
    pub message: String,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: &'static str,
    pub seed: u64,
    /// Command-specific summary, also written as `summary.json`.
    pub result: Value,
    pub failures: Vec<AssertionFailure>,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> Value {
        json!({
            "command": self.command,
            "seed": self.seed,
            "passed": self.passed(),
            "failures": self.failures,
            "result": self.result,
        })
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Vec<u8> {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s.into_bytes()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn json_artifact(name: &str, value: &impl Serialize) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    Artifact { name: name.to_string(), bytes }
}

fn fail(failures: &mut Vec<AssertionFailure>, table: &str, row: Option<usize>, message: String) {
    failures.push(AssertionFailure { table: table.to_string(), row, message });
}

/// Validates and runs one experiment. Relative measure files resolve against `base_dir`.
pub fn run(config: &ExperimentConfig, base_dir: &Path) -> Result<RunOutput> {
    let errors = config.validate(base_dir);
    if !errors.is_empty() {
        return Err(Error::Config(errors.join("; ")));
    }
    let seed = config.seed_or(DEFAULT_SEED);
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();
    let result = match &config.experiment {
        Experiment::HkCheck(p) => hk_check(p, base_dir, &mut artifacts, &mut failures)?,
        Experiment::Epsilon0(p) => epsilon0(p, &mut artifacts, &mut failures)?,
        Experiment::SamplerValidate(p) => sampler_validate(p, base_dir, seed, &mut artifacts, &mut failures)?,
        Experiment::ResolventCompare(p) => resolvent_compare(p, base_dir, seed, &mut artifacts, &mut failures)?,
        Experiment::DecayCheck(p) => decay_check(p, base_dir, seed, &mut artifacts, &mut failures)?,
        Experiment::Bifurcation(p) => bifurcation(p, seed, &mut artifacts, &mut failures)?,
    };
    let mut out = RunOutput { command: config.experiment.command(), seed, result, failures, artifacts };
    out.artifacts.push(json_artifact("summary.json", &out.summary()));
    Ok(out)
}

fn hk_check(
    p: &HkCheckParams,
    base_dir: &Path,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let measure = p.measure.build(base_dir)?;
    let mut summary = Table::new(&["theta", "kappa_hat", "worst_direction", "satisfied"]);
    let mut reports = Vec::new();
    for (i, &theta) in p.thetas.iter().enumerate() {
        let report = check_cone_condition(&measure, theta, p.direction_grid, &p.delta_grid)?;
        let worst: Vec<String> = report.worst_direction.iter().map(|v| num(*v)).collect();
        summary.push(vec![num(theta), num(report.kappa_hat), worst.join(" "), report.satisfied.to_string()]);
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        artifacts.push(Artifact { name: format!("cone_theta_{i}.csv"), bytes: csv });
        if let Some(want) = p.expect_satisfied {
            if report.satisfied != want {
                fail(
                    failures,
                    "hk_check.csv",
                    Some(i),
                    format!("theta={theta}: satisfied={} but expected {want} (kappa_hat={})", report.satisfied, report.kappa_hat),
                );
            }
        }
        reports.push(json!({
            "theta": report.theta,
            "kappa_hat": report.kappa_hat,
            "worst_direction": report.worst_direction,
            "satisfied": report.satisfied,
        }));
    }
    artifacts.push(Artifact { name: "hk_check.csv".into(), bytes: summary.to_csv() });
    Ok(json!({ "dim": measure.dim(), "alpha": measure.alpha(), "reports": reports }))
}

fn epsilon0(p: &Epsilon0Params, artifacts: &mut Vec<Artifact>, failures: &mut Vec<AssertionFailure>) -> Result<Value> {
    let r = compute_epsilon0(p.kappa, p.alpha, p.theta, p.grid)?;
    artifacts.push(json_artifact("epsilon0.json", &r));
    if let Some(want) = p.expect_feasible {
        if r.feasible != want {
            fail(failures, "epsilon0.json", None, format!("feasible={} but expected {want}", r.feasible));
        }
    }
    Ok(serde_json::to_value(r)?)
}

/// Twenty frequencies with radii `0.25, 0.5, …, 5` and rotating directions.
fn default_frequencies(dim: usize) -> Vec<Vec<f64>> {
    (1..=20)
        .map(|k| {
            let r = 0.25 * k as f64;
            let dir: Vec<f64> = match dim {
                1 => vec![1.0],
                _ => {
                    let v: Vec<f64> = (0..dim).map(|i| (k as f64 * 2.399_963 * (i + 1) as f64 + i as f64).cos()).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / n).collect()
                }
            };
            dir.iter().map(|x| r * x).collect()
        })
        .collect()
}

fn default_method(measure: &SpectralMeasure) -> SamplerMethod {
    match measure.kind() {
        MeasureKind::Discrete { .. } => SamplerMethod::RaySum,
        MeasureKind::Isotropic { .. } => SamplerMethod::Subordination,
    }
}

fn sampler_spec(measure: SpectralMeasure, method: SamplerMethod, cutoff: Option<f64>, seed: u64) -> SamplerSpec {
    SamplerSpec { measure, method, cutoff, seed, stream_id: 0 }
}

fn sampler_validate(
    p: &SamplerValidateParams,
    base_dir: &Path,
    seed: u64,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let measure = p.measure.build(base_dir)?;
    let dim = measure.dim();
    let symbol = LevySymbol::new(&measure)?;
    let spec = sampler_spec(measure, p.method, p.cutoff, seed);
    spec.validate()?;
    let flat = sample_increments_flat(&spec, p.h, p.n)?;
    let freqs = p.frequencies.clone().unwrap_or_else(|| default_frequencies(dim));
    let tol = p.cf_factor / (p.n as f64).sqrt();

    let mut header: Vec<String> = (0..dim).map(|i| format!("xi_{i}")).collect();
    header.extend(["empirical", "exact", "deviation"].map(String::from));
    let mut table = Table { header, rows: Vec::new() };
    let mut max_dev: f64 = 0.0;
    let mut worst_row = 0;
    for (i, xi) in freqs.iter().enumerate() {
        let emp = empirical_cf(&flat, dim, xi);
        let exact = (-p.h * symbol.eval(xi)).exp();
        let dev = (emp - exact).abs();
        if dev > max_dev {
            max_dev = dev;
            worst_row = i;
        }
        let mut row: Vec<String> = xi.iter().map(|v| num(*v)).collect();
        row.extend([num(emp), num(exact), num(dev)]);
        table.push(row);
    }
    artifacts.push(Artifact { name: "cf_deviation.csv".into(), bytes: table.to_csv() });
    if !(max_dev < tol) {
        fail(failures, "cf_deviation.csv", Some(worst_row), format!("CF deviation {max_dev:e} ≥ {tol:e}"));
    }

    // Z_h and h^{1/α} Z_1 must agree in law; with a jump cutoff ρ the unit-step
    // run uses ρ h^{−1/α}, which is exactly the rescaled cutoff
    let ks = if p.ks_samples > 0 {
        let alpha = spec.measure.alpha();
        let scale = p.ks_h.powf(1.0 / alpha);
        let mut unit = spec.clone().with_stream(2);
        unit.cutoff = spec.cutoff.map(|c| c / scale);
        if unit.cutoff.is_some_and(|c| c > 1.0) {
            return Err(Error::Config(format!("cutoff / ks_h^(1/alpha) = {} exceeds 1", unit.cutoff.unwrap())));
        }
        let a = sample_increments_flat(&spec.clone().with_stream(1), p.ks_h, p.ks_samples)?;
        let b = sample_increments_flat(&unit, 1.0, p.ks_samples)?;
        let a1: Vec<f64> = a.iter().step_by(dim).copied().collect();
        let b1: Vec<f64> = b.iter().step_by(dim).map(|v| v * scale).collect();
        let r = ks_two_sample(&a1, &b1);
        if !(r.p_value > 0.01) {
            fail(failures, "summary.json", None, format!("self-similarity KS p-value {} ≤ 0.01", r.p_value));
        }
        Some(r)
    } else {
        None
    };
    if p.dump {
        let mut bytes = Vec::new();
        write_increment_dump(&mut bytes, dim, &flat)?;
        artifacts.push(Artifact { name: "increments.bin".into(), bytes });
    }
    Ok(json!({
        "method": p.method,
        "h": p.h,
        "N": p.n,
        "max_cf_deviation": max_dev,
        "cf_tolerance": tol,
        "ks_statistic": ks.map(|k| k.statistic),
        "ks_p_value": ks.map(|k| k.p_value),
    }))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Linear interpolation of samples on `n` nodes `(j − n/2)·step`.
fn periodic_value(u: &[f64], step: f64, x: f64) -> f64 {
    let n = u.len();
    let s = x / step + (n / 2) as f64;
    let j = s.floor() as usize;
    let t = s - j as f64;
    (1.0 - t) * u[j.min(n - 1)] + t * u[(j + 1).min(n - 1)]
}

fn fft_values(
    p: &ResolventCompareParams,
    fft: &FftParams,
    scale: f64,
    alpha: f64,
    nodes: usize,
    time: Option<(f64, usize)>,
) -> Result<Vec<f64>> {
    let f: Vec<f64> = (0..nodes).map(|j| p.f.eval_1d((j as f64 - (nodes / 2) as f64) * fft.step)).collect();
    let u = match time {
        None => fft_oracle(p.lambda, alpha, scale, &f, fft.step)?,
        Some((h, k)) => fft_discounted_sum(p.lambda, alpha, scale, &f, fft.step, h, k)?,
    };
    Ok(p.points.iter().map(|&x| periodic_value(&u, fft.step, x)).collect())
}

/// Finite-difference error allowance at the comparison points: twice the sum
/// of the grid error, extrapolated from steps `Δ, Δ/2, Δ/4` at the observed
/// order, and the domain error, extrapolated from `X → 2X` at the tail decay
/// rate `α` of the exit probability.
pub fn calibrate_fd(p: &ResolventCompareParams, measure: &SpectralMeasure, drift: &Drift) -> Result<ResolventCalibration> {
    let values = |half_width: f64, step: f64| -> Result<Vec<f64>> {
        let grid = GridSpec::new(half_width, step)?;
        let sol = solve_resolvent(&grid, measure, drift, p.lambda, &p.f.sample_grid(&grid.nodes()), SolverKind::Auto)?;
        Ok(p.points.iter().map(|&x| sol.value_at(x)).collect())
    };
    let (x, d) = (p.fd.half_width, p.fd.step);
    let u1 = values(x, d)?;
    let u2 = values(x, d / 2.0)?;
    let u4 = values(x, d / 4.0)?;
    let wide = values(2.0 * x, d)?;
    let refinement_change = max_abs_diff(&u1, &u2);
    let second_change = max_abs_diff(&u2, &u4);
    // a non-converging refinement sequence gets no extrapolation credit
    let observed_order = if second_change > 0.0 { (refinement_change / second_change).log2() } else { f64::INFINITY };
    let grid_error = if observed_order > 0.0 {
        refinement_change / (1.0 - (-observed_order).exp2())
    } else {
        return Err(Error::Calibration(format!(
            "finite differences do not converge under refinement: changes {refinement_change:e}, {second_change:e}"
        )));
    };
    let domain_change = max_abs_diff(&u1, &wide);
    let domain_error = domain_change / (1.0 - (-measure.alpha()).exp2());
    Ok(ResolventCalibration {
        half_width: x,
        step: d,
        refinement_change,
        second_change,
        observed_order,
        domain_change,
        fd_allowance: 2.0 * (grid_error + domain_error),
    })
}

fn resolvent_compare(
    p: &ResolventCompareParams,
    base_dir: &Path,
    seed: u64,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let measure = p.measure.build(base_dir)?;
    let drift = p.drift.build(1)?;
    let alpha = measure.alpha();

    let grid = GridSpec::new(p.fd.half_width, p.fd.step)?;
    let coarse = solve_resolvent(&grid, &measure, &drift, p.lambda, &p.f.sample_grid(&grid.nodes()), SolverKind::Auto)?;
    let fd: Vec<f64> = p.points.iter().map(|&x| coarse.value_at(x)).collect();
    let (fd_allowance, calibration) = match p.fd_allowance {
        Some(a) => (a, None),
        None => {
            let c = calibrate_fd(p, &measure, &drift)?;
            (c.fd_allowance, Some(c))
        }
    };

    // Monte Carlo
    let trunc = select_truncation(p.mc.epsilon, p.lambda, p.f.sup_norm(), drift.sup_bound(), &measure, HORIZON_FLOOR)?;
    let method = p.mc.method.unwrap_or_else(|| default_method(&measure));
    let spec = sampler_spec(measure.clone(), method, p.mc.cutoff, seed);
    let pts: Vec<Vec<f64>> = p.points.iter().map(|&x| vec![x]).collect();
    let mc = mc_resolvent_many(&pts, p.lambda, &p.f, &drift, &spec, &trunc, p.mc.h, p.mc.n)?;
    let tail = mc[0].tail_bias_bound;
    let steps = (mc[0].horizon / p.mc.h).round() as usize;
    // spectral reference: the resolvent itself, the mean of the Monte Carlo
    // estimator, and a doubled period to bound periodization error
    let (fft, mc_time_bias, fft_allowance) = match &p.fft {
        Some(cfg) => {
            let scale = LevySymbol::new(&measure)?.one_dimensional_scale()?;
            let u = fft_values(p, cfg, scale, alpha, cfg.nodes, None)?;
            let u2 = fft_values(p, cfg, scale, alpha, 2 * cfg.nodes, None)?;
            let mean = fft_values(p, cfg, scale, alpha, cfg.nodes, Some((p.mc.h, steps)))?;
            // the tail beyond K steps is already covered by the tail bound
            let tail_part: Vec<f64> = u.iter().map(|v| v * (-p.lambda * mc[0].horizon).exp()).collect();
            let time_bias = u
                .iter()
                .zip(&mean)
                .zip(&tail_part)
                .fold(0.0_f64, |m, ((a, b), t)| m.max((a - b).abs() - t.abs()).max(0.0));
            (Some(u.clone()), time_bias, 2.0 * max_abs_diff(&u, &u2))
        }
        None => (None, 0.0, 0.0),
    };

    let mut table = Table::new(&[
        "x", "mc", "mc_std_error", "fd", "fft", "mc_fd_diff", "mc_fd_tol", "mc_fft_diff", "mc_fft_tol", "fd_fft_diff",
        "fd_fft_tol",
    ]);
    let mut agree = true;
    for (i, &x) in p.points.iter().enumerate() {
        let m = &mc[i];
        let mc_tol = p.sigmas * m.std_error + tail + mc_time_bias;
        let mc_fd = (m.value - fd[i]).abs();
        let mc_fd_tol = mc_tol + fd_allowance;
        let mut cells = vec![num(x), num(m.value), num(m.std_error), num(fd[i])];
        let mut check = |name: &str, diff: f64, tol: f64| {
            if !(diff <= tol) {
                agree = false;
                fail(failures, "resolvent_compare.csv", Some(i), format!("x={x}: |{name}| = {diff:e} > {tol:e}"));
            }
        };
        check("mc − fd", mc_fd, mc_fd_tol);
        match &fft {
            Some(u) => {
                let mc_fft = (m.value - u[i]).abs();
                let mc_fft_tol = mc_tol + fft_allowance;
                let fd_fft = (fd[i] - u[i]).abs();
                let fd_fft_tol = fd_allowance + fft_allowance;
                check("mc − fft", mc_fft, mc_fft_tol);
                check("fd − fft", fd_fft, fd_fft_tol);
                cells.extend([num(u[i]), num(mc_fd), num(mc_fd_tol), num(mc_fft), num(mc_fft_tol), num(fd_fft), num(fd_fft_tol)]);
            }
            None => cells.extend([String::new(), num(mc_fd), num(mc_fd_tol), String::new(), String::new(), String::new(), String::new()]),
        }
        table.push(cells);
    }
    artifacts.push(Artifact { name: "resolvent_compare.csv".into(), bytes: table.to_csv() });
    let mut fd_csv = Vec::new();
    coarse.write_csv(&mut fd_csv)?;
    artifacts.push(Artifact { name: "fd_solution.csv".into(), bytes: fd_csv });

    let comparison = match &p.comparison {
        Some(c) => Some(comparison_pairs(c, &measure, p.lambda, seed, artifacts, failures)?),
        None => None,
    };
    Ok(json!({
        "lambda": p.lambda,
        "truncation": trunc,
        "mc_horizon": mc[0].horizon,
        "mc_steps": steps,
        "tail_bias_bound": tail,
        "mc_time_bias": mc_time_bias,
        "fd_allowance": fd_allowance,
        "fd_calibration": calibration,
        "fft_allowance": fft_allowance,
        "fd_residual": coarse.residual_norm,
        "fd_solver": coarse.solver,
        "agree": agree,
        "comparison": comparison,
    }))
}

/// Sum of up to three random bumps inside `[−X/2, X/2]`.
fn random_bumps(rng: &mut StreamRng, half_width: f64) -> Result<Vec<TestFunction>> {
    let count = 1 + (rng.uniform_open() * 3.0) as usize;
    (0..count)
        .map(|_| {
            let center = (rng.uniform_open() - 0.5) * half_width;
            let radius = 0.2 + 1.8 * rng.uniform_open();
            TestFunction::bump(vec![center], radius, rng.uniform_open())
        })
        .collect()
}

fn sum_on(fs: &[TestFunction], nodes: &[f64]) -> Vec<f64> {
    nodes.iter().map(|&x| fs.iter().map(|f| f.eval_1d(x)).sum()).collect()
}

fn comparison_pairs(
    c: &ComparisonParams,
    measure: &SpectralMeasure,
    lambda: f64,
    seed: u64,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let grid = GridSpec::new(c.half_width, c.step)?;
    let nodes = grid.nodes();
    let mut table = Table::new(&["drift", "pair", "holds", "max_violation", "min_dominance_margin"]);
    let mut all_hold = true;
    let mut row = 0;
    for (di, spec) in c.drifts.iter().enumerate() {
        let drift = spec.build(1)?;
        let op = assemble_operator(&grid, measure, &drift, lambda)?;
        let margin = op.diagnostics().min_dominance_margin;
        for k in 0..c.pairs {
            let mut rng = StreamRng::new(seed, (1 << 48) + (di * c.pairs + k) as u64);
            let f1 = sum_on(&random_bumps(&mut rng, c.half_width)?, &nodes);
            let extra = sum_on(&random_bumps(&mut rng, c.half_width)?, &nodes);
            let f2: Vec<f64> = f1.iter().zip(&extra).map(|(a, b)| a + b).collect();
            let u1 = solve_with(&op, &f1, SolverKind::Auto)?;
            let u2 = solve_with(&op, &f2, SolverKind::Auto)?;
            let r = comparison_check(&u1, &u2)?;
            if !r.holds {
                all_hold = false;
                fail(failures, "comparison.csv", Some(row), format!("{} pair {k}: violation {:e}", drift.name(), r.max_violation));
            }
            table.push(vec![drift.name().to_string(), k.to_string(), r.holds.to_string(), num(r.max_violation), num(margin)]);
            row += 1;
        }
    }
    artifacts.push(Artifact { name: "comparison.csv".into(), bytes: table.to_csv() });
    Ok(json!({ "pairs": row, "all_hold": all_hold }))
}

fn decay_check(
    p: &DecayCheckParams,
    base_dir: &Path,
    seed: u64,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let measure = p.measure.build(base_dir)?;
    let dim = measure.dim();
    let drift: Drift = p.drift.build(dim)?;
    let trunc = select_truncation(p.epsilon, p.lambda, p.f.sup_norm(), drift.sup_bound(), &measure, HORIZON_FLOOR)?;
    let spec = sampler_spec(measure.clone(), default_method(&measure), None, seed);

    // whole steps covering [0, T]; exiting over the longer window is only more likely
    let steps = ((trunc.horizon / p.h) - 1e-9).ceil().max(1.0) as usize;
    let sim_horizon = steps as f64 * p.h;
    let origin = vec![0.0; dim];
    let ens = euler_paths(StartPoints::Single(&origin), &drift, &spec, sim_horizon, p.h, p.n, steps)?;
    let p_exit = exit_probability(&ens, trunc.radius, sim_horizon)?;
    let valid = ens.n_paths - ens.invalid_count;
    let se_exit = binomial_std_error(p_exit, valid);
    let exit_tol = trunc.exit_bound() + p.sigmas * se_exit;
    let mut exit_table = Table::new(&["R", "T", "simulated_horizon", "exit_probability", "std_error", "bound", "tolerance"]);
    exit_table.push(vec![
        num(trunc.radius),
        num(trunc.horizon),
        num(sim_horizon),
        num(p_exit),
        num(se_exit),
        num(trunc.exit_bound()),
        num(exit_tol),
    ]);
    if !(p_exit <= exit_tol) {
        fail(failures, "exit.csv", Some(0), format!("exit probability {p_exit} > {exit_tol}"));
    }
    artifacts.push(Artifact { name: "exit.csv".into(), bytes: exit_table.to_csv() });

    let reach = p.f.support_radius() + trunc.radius;
    let points: Vec<Vec<f64>> = p
        .far_multiples
        .iter()
        .map(|&m| {
            let mut x = vec![0.0; dim];
            x[0] = m * reach;
            x
        })
        .collect();
    let far = mc_resolvent_many(&points, p.lambda, &p.f, &drift, &spec.clone().with_stream(1), &trunc, p.h, p.n)?;
    let mut far_table = Table::new(&["distance", "value", "std_error", "tolerance"]);
    for (i, e) in far.iter().enumerate() {
        let tol = p.epsilon + p.sigmas * e.std_error;
        far_table.push(vec![num(e.x[0]), num(e.value), num(e.std_error), num(tol)]);
        if !(e.value.abs() < tol) {
            fail(failures, "far_field.csv", Some(i), format!("|u({})| = {} ≥ {tol}", e.x[0], e.value.abs()));
        }
    }
    artifacts.push(Artifact { name: "far_field.csv".into(), bytes: far_table.to_csv() });
    Ok(json!({
        "truncation": trunc,
        "exit_probability": p_exit,
        "exit_std_error": se_exit,
        "exit_bound": trunc.exit_bound(),
        "invalid_paths": ens.invalid_count,
    }))
}

fn bifurcation(
    p: &BifurcationParams,
    seed: u64,
    artifacts: &mut Vec<Artifact>,
    failures: &mut Vec<AssertionFailure>,
) -> Result<Value> {
    let measure = SpectralMeasure::symmetric_1d_with_scale(p.alpha, p.noise_scale)?;
    let mut table = Table::new(&["beta", "epsilon", "p_plus", "p_minus", "gap", "std_error", "n_plus", "n_minus"]);
    let mut out = Vec::new();
    let mut row = 0;
    for &beta in &p.betas {
        let spec = BifurcationSpec {
            beta,
            measure: measure.clone(),
            epsilons: p.epsilons.clone(),
            horizon: p.horizon,
            h: p.h,
            n_paths: p.n,
            threshold: p.threshold,
            seed,
        };
        let rows = bifurcation_gap(&spec)?;
        let first_row = row;
        for r in &rows {
            table.push(vec![
                num(beta),
                num(r.epsilon),
                num(r.p_plus),
                num(r.p_minus),
                num(r.gap),
                num(r.std_error),
                r.n_plus.to_string(),
                r.n_minus.to_string(),
            ]);
            row += 1;
        }
        if p.assert {
            let critical = 1.0 - p.alpha;
            if beta < critical {
                if let Some(floor) = p.floor {
                    for (k, r) in rows.iter().enumerate() {
                        if !(r.gap >= floor) {
                            fail(failures, "bifurcation.csv", Some(first_row + k), format!("beta={beta}, eps={}: gap {} < floor {floor}", r.epsilon, r.gap));
                        }
                    }
                }
            } else if beta > critical {
                for k in 1..rows.len() {
                    let (a, b) = (&rows[k - 1], &rows[k]);
                    let slack = p.sigmas * a.std_error.hypot(b.std_error);
                    if !(b.gap <= a.gap + slack) {
                        fail(
                            failures,
                            "bifurcation.csv",
                            Some(first_row + k),
                            format!("beta={beta}: gap rose from {} to {} (slack {slack:e})", a.gap, b.gap),
                        );
                    }
                }
                let last = rows.last().expect("non-empty");
                if !(last.gap < p.final_gap) {
                    fail(failures, "bifurcation.csv", Some(row - 1), format!("beta={beta}: final gap {} ≥ {}", last.gap, p.final_gap));
                }
            }
        }
        out.push(json!({ "beta": beta, "rows": rows }));
    }
    artifacts.push(Artifact { name: "bifurcation.csv".into(), bytes: table.to_csv() });
    Ok(json!({ "alpha": p.alpha, "noise_scale": p.noise_scale, "critical_beta": 1.0 - p.alpha, "tables": out }))
}

