use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::Drift;
use crate::error::{domain, Error, Result};
use crate::rng::StreamRng;
use crate::sampler::{Sampler, SamplerSpec, StepSampler};

/// Largest tolerated fraction of non-finite paths.
pub const MAX_INVALID_FRACTION: f64 = 1e-3;

/// Paths per work unit. Results are reduced unit by unit in index order, so
/// the outcome does not depend on the number of worker threads.
pub const PATH_BATCH: usize = 256;

/// Stream id of path `path` under a sampler spec's base stream.
#[inline]
pub fn path_stream(base: u64, path: u64) -> u64 {
    (base << 40) ^ path
}

/// Number of steps `K` with `K h = T`.
pub fn step_count(horizon: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("step must be positive, got {h}"));
    }
    if !(horizon >= h) {
        return domain(format!("horizon {horizon} must be at least one step {h}"));
    }
    let k = (horizon / h).round();
    if (k * h - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return domain(format!("horizon {horizon} is not a whole number of steps {h}"));
    }
    Ok(k as usize)
}

pub(crate) fn check_invalid(invalid: usize, total: usize) -> Result<()> {
    if invalid as f64 > MAX_INVALID_FRACTION * total as f64 {
        Err(Error::InvalidPaths { invalid, total })
    } else {
        Ok(())
    }
}

/// One Euler step `x ← x + b(x) h + ΔZ`; returns false once the state is non-finite.
#[inline]
pub(crate) fn euler_step(
    drift: &Drift,
    step: &StepSampler<'_>,
    rng: &mut StreamRng,
    h: f64,
    x: &mut [f64],
    bx: &mut [f64],
    dz: &mut [f64],
) -> bool {
    if x.len() == 1 {
        let v = x[0] + drift.eval_1d(x[0]) * h + step.draw_1d(rng);
        x[0] = v;
        return v.is_finite();
    }
    drift.eval_into(x, bx);
    step.draw(rng, dz);
    let mut ok = true;
    for ((xi, b), z) in x.iter_mut().zip(bx.iter()).zip(dz.iter()) {
        *xi += b * h + z;
        ok &= xi.is_finite();
    }
    ok
}

/// Stored Euler paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub dim: usize,
    pub n_paths: usize,
    pub h: f64,
    pub horizon: f64,
    /// Every `record_stride`-th grid time is stored.
    pub record_stride: usize,
    pub times: Vec<f64>,
    /// `n_paths × times.len() × dim`, row-major; NaN after a path turns invalid.
    pub states: Vec<f64>,
    /// `sup_{t_k ≤ times[j]} |X_{t_k} − X_0|` on the full step grid, same layout without `dim`.
    pub sup_displacement: Vec<f64>,
    pub valid: Vec<bool>,
    pub invalid_count: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub drift_name: String,
    pub sampler: SamplerSpec,
}

impl PathEnsemble {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, path: usize, time_index: usize) -> &[f64] {
        let start = (path * self.n_times() + time_index) * self.dim;
        &self.states[start..start + self.dim]
    }

    /// Final states of the valid paths, row-major.
    pub fn terminal_states(&self) -> Vec<f64> {
        let last = self.n_times() - 1;
        (0..self.n_paths).filter(|&p| self.valid[p]).flat_map(|p| self.state(p, last).to_vec()).collect()
    }

    /// Writes `PATHENS1`, then `n_paths`, `n_times`, `dim` as little-endian
    /// `u64`, then the states as row-major little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(ENSEMBLE_MAGIC)?;
        for v in [self.n_paths, self.n_times(), self.dim] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for v in &self.states {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub const ENSEMBLE_MAGIC: &[u8; 8] = b"PATHENS1";

/// Raw contents of a `PATHENS1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDump {
    pub n_paths: usize,
    pub n_times: usize,
    pub dim: usize,
    pub states: Vec<f64>,
}

pub fn read_ensemble_binary<R: Read>(mut input: R) -> Result<EnsembleDump> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    if &word != ENSEMBLE_MAGIC {
        return Err(Error::Format("missing PATHENS1 header".into()));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        input.read_exact(&mut word)?;
        *d = u64::from_le_bytes(word) as usize;
    }
    let [n_paths, n_times, dim] = dims;
    let len = n_paths
        .checked_mul(n_times)
        .and_then(|v| v.checked_mul(dim))
        .ok_or_else(|| Error::Format("ensemble dimensions overflow".into()))?;
    let mut states = Vec::with_capacity(len);
    for _ in 0..len {
        input.read_exact(&mut word)?;
        states.push(f64::from_le_bytes(word));
    }
    Ok(EnsembleDump { n_paths, n_times, dim, states })
}

/// Initial condition(s) of an ensemble.
#[derive(Debug, Clone, Copy)]
pub enum StartPoints<'a> {
    /// Every path starts here.
    Single(&'a [f64]),
    /// Path `i` starts at row `i mod rows`.
    PerPath(&'a [Vec<f64>]),
}

impl StartPoints<'_> {
    fn get(&self, path: usize) -> &[f64] {
        match self {
            StartPoints::Single(x) => x,
            StartPoints::PerPath(rows) => &rows[path % rows.len()],
        }
    }

    fn dims_ok(&self, dim: usize) -> bool {
        match self {
            StartPoints::Single(x) => x.len() == dim,
            StartPoints::PerPath(rows) => !rows.is_empty() && rows.iter().all(|r| r.len() == dim),
        }
    }
}

/// Simulates `N` Euler paths `X_{k+1} = X_k + b(X_k) h + ΔZ_k` on `[0, T]`,
/// each on its own random stream, storing every `record_stride`-th state.
pub fn euler_paths(
    x0: StartPoints<'_>,
    drift: &Drift,
    sampler: &SamplerSpec,
    horizon: f64,
    h: f64,
    n_paths: usize,
    record_stride: usize,
) -> Result<PathEnsemble> {
    let steps = step_count(horizon, h)?;
    if n_paths == 0 {
        return domain("at least one path is required");
    }
    if record_stride == 0 || steps % record_stride != 0 {
        return domain(format!("record stride {record_stride} must divide the step count {steps}"));
    }
    let dim = sampler.measure.dim();
    if drift.dim() != dim || !x0.dims_ok(dim) {
        return domain("drift, sampler and initial point dimensions differ");
    }
    let engine = Sampler::new(sampler)?;
    let step = engine.at_step(h)?;
    let n_times = steps / record_stride + 1;
    let times: Vec<f64> = (0..n_times).map(|j| (j * record_stride) as f64 * h).collect();
    let mut states = vec![0.0; n_paths * n_times * dim];
    let mut sup_displacement = vec![0.0; n_paths * n_times];
    let mut valid = vec![true; n_paths];

    states
        .par_chunks_mut(n_times * dim)
        .zip(sup_displacement.par_chunks_mut(n_times))
        .zip(valid.par_iter_mut())
        .enumerate()
        .for_each(|(p, ((row, sup_row), ok))| {
            let mut rng = StreamRng::new(sampler.seed, path_stream(sampler.stream_id, p as u64));
            let start = x0.get(p);
            let mut x = start.to_vec();
            let (mut bx, mut dz) = (vec![0.0; dim], vec![0.0; dim]);
            row[..dim].copy_from_slice(&x);
            let mut sup: f64 = 0.0;
            for k in 1..=steps {
                if !euler_step(drift, &step, &mut rng, h, &mut x, &mut bx, &mut dz) {
                    *ok = false;
                    row[((k - 1) / record_stride + 1) * dim..].fill(f64::NAN);
                    sup_row[(k - 1) / record_stride + 1..].fill(f64::NAN);
                    return;
                }
                let disp = x.iter().zip(start).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                sup = sup.max(disp);
                if k % record_stride == 0 {
                    let j = k / record_stride;
                    row[j * dim..(j + 1) * dim].copy_from_slice(&x);
                    sup_row[j] = sup;
                }
            }
        });
    let invalid_count = valid.iter().filter(|v| !**v).count();
    check_invalid(invalid_count, n_paths)?;
    Ok(PathEnsemble {
        dim,
        n_paths,
        h,
        horizon: steps as f64 * h,
        record_stride,
        times,
        states,
        sup_displacement,
        valid,
        invalid_count,
        seed: sampler.seed,
        stream_id: sampler.stream_id,
        drift_name: drift.name().to_string(),
        sampler: sampler.clone(),
    })
}

/// Terminal states `X_T` only (row-major, valid paths in index order) and
/// the number of discarded paths; memory is `O(N d)`.
pub fn terminal_states(
    x0: &[f64],
    drift: &Drift,
    sampler: &SamplerSpec,
    horizon: f64,
    h: f64,
    n_paths: usize,
) -> Result<(Vec<f64>, usize)> {
    let steps = step_count(horizon, h)?;
    let dim = sampler.measure.dim();
    if drift.dim() != dim || x0.len() != dim {
        return domain("drift, sampler and initial point dimensions differ");
    }
    let engine = Sampler::new(sampler)?;
    let step = engine.at_step(h)?;
    let scalar = step.scalar();
    let batches: Vec<(Vec<f64>, usize)> = (0..n_paths.div_ceil(PATH_BATCH))
        .into_par_iter()
        .map(|b| {
            let mut out = Vec::with_capacity(PATH_BATCH * dim);
            let mut invalid = 0;
            let (mut bx, mut dz) = (vec![0.0; dim], vec![0.0; dim]);
            for p in b * PATH_BATCH..((b + 1) * PATH_BATCH).min(n_paths) {
                let mut rng = StreamRng::new(sampler.seed, path_stream(sampler.stream_id, p as u64));
                let mut x = x0.to_vec();
                let mut ok = true;
                if let Some(scalar) = scalar {
                    let mut v = x[0];
                    for _ in 0..steps {
                        // same association as euler_step, so both paths agree bit for bit
                        v = v + drift.eval_1d(v) * h + scalar.draw(&mut rng);
                        if !v.is_finite() {
                            ok = false;
                            break;
                        }
                    }
                    x[0] = v;
                } else {
                    for _ in 0..steps {
                        if !euler_step(drift, &step, &mut rng, h, &mut x, &mut bx, &mut dz) {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    out.extend_from_slice(&x);
                } else {
                    invalid += 1;
                }
            }
            (out, invalid)
        })
        .collect();
    let invalid: usize = batches.iter().map(|b| b.1).sum();
    check_invalid(invalid, n_paths)?;
    Ok((batches.into_iter().flat_map(|b| b.0).collect(), invalid))
}

/// Fraction of valid paths with `sup_{t_k ≤ T} |X_{t_k} − X_0| ≥ R`,
/// monitored on the recorded grid (a one-sided underestimate of `P(τ_R ≤ T)`).
pub fn exit_probability(ensemble: &PathEnsemble, radius: f64, horizon: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return domain(format!("radius must be non-negative, got {radius}"));
    }
    if horizon > ensemble.horizon * (1.0 + 1e-12) {
        return domain(format!("horizon {horizon} exceeds the ensemble horizon {}", ensemble.horizon));
    }
    let j = ensemble.times.iter().rposition(|&t| t <= horizon * (1.0 + 1e-12)).unwrap_or(0);
    let n_times = ensemble.n_times();
    let mut hits = 0usize;
    let mut total = 0usize;
    for p in 0..ensemble.n_paths {
        if !ensemble.valid[p] {
            continue;
        }
        total += 1;
        if ensemble.sup_displacement[p * n_times + j] >= radius {
            hits += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_measure::SpectralMeasure;
    use crate::sampler::SamplerMethod;

    fn spec() -> SamplerSpec {
        SamplerSpec::new(SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap(), SamplerMethod::RaySum, 11)
    }

    #[test]
    fn step_count_requires_whole_steps() {
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(0.0001, 0.001).is_err());
    }

    #[test]
    fn ensemble_layout_and_initial_points() {
        let starts = vec![vec![1.0], vec![-2.0]];
        let e = euler_paths(StartPoints::PerPath(&starts), &Drift::zero(1), &spec(), 0.1, 0.01, 5, 2).unwrap();
        assert_eq!(e.n_times(), 6);
        assert!((e.times[5] - 0.1).abs() < 1e-15);
        for p in 0..5 {
            assert_eq!(e.state(p, 0), starts[p % 2].as_slice());
        }
        assert_eq!(exit_probability(&e, 0.0, 0.1).unwrap(), 1.0);
        assert_eq!(exit_probability(&e, f64::INFINITY, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_noise_follows_the_ode() {
        let zero = SamplerSpec::new(SpectralMeasure::zero(2, 0.5).unwrap(), SamplerMethod::RaySum, 1);
        let e = euler_paths(StartPoints::Single(&[1.0, 2.0]), &Drift::constant(vec![0.5, -1.0]), &zero, 2.0, 0.25, 3, 1)
            .unwrap();
        for p in 0..3 {
            assert_eq!(e.state(p, 8), &[2.0, 0.0]);
        }
    }

    #[test]
    fn terminal_states_match_full_ensemble() {
        let d = crate::drift::tanaka_drift(0.25, 1).unwrap();
        let e = euler_paths(StartPoints::Single(&[0.1]), &d, &spec(), 0.5, 0.01, 300, 10).unwrap();
        let (t, invalid) = terminal_states(&[0.1], &d, &spec(), 0.5, 0.01, 300).unwrap();
        assert_eq!(invalid, 0);
        assert_eq!(t, e.terminal_states());
    }

    #[test]
    fn binary_round_trip() {
        let e = euler_paths(StartPoints::Single(&[0.0]), &Drift::zero(1), &spec(), 0.05, 0.01, 4, 1).unwrap();
        let mut buf = Vec::new();
        e.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"PATHENS1");
        let d = read_ensemble_binary(buf.as_slice()).unwrap();
        assert_eq!((d.n_paths, d.n_times, d.dim), (4, 6, 1));
        assert_eq!(d.states, e.states);
    }
}
