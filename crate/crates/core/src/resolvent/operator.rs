use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::drift::Drift;
use crate::error::{domain, Error, Result};
use crate::levy_measure::SpectralMeasure;

/// Uniform grid `x_j = −X + jΔ`, `j = 0..J`, with `J` odd and `x_{(J−1)/2} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub step: f64,
    pub nodes: usize,
}

impl GridSpec {
    /// `X/Δ` must be a whole number.
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width > 0.0 && step > 0.0 && half_width.is_finite()) {
            return domain(format!("grid needs positive half width and step, got {half_width}, {step}"));
        }
        let half = (half_width / step).round();
        if half < 1.0 || (half * step - half_width).abs() > 1e-9 * half_width {
            return domain(format!("half width {half_width} is not a whole number of steps {step}"));
        }
        Ok(Self { half_width, step, nodes: 2 * half as usize + 1 })
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.node(j)).collect()
    }

    /// Index of the node nearest to `x`, if inside the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let j = ((x + self.half_width) / self.step).round();
        (j >= 0.0 && (j as usize) < self.nodes).then_some(j as usize)
    }

    /// Indices of nodes with `|x_j| ≤ X/2`.
    pub fn inner_half(&self) -> std::ops::RangeInclusive<usize> {
        let q = (self.nodes - 1) / 4;
        q..=self.nodes - 1 - q
    }

    /// Same grid geometry (within round-off).
    pub fn matches(&self, other: &GridSpec) -> bool {
        self.nodes == other.nodes
            && (self.step - other.step).abs() <= 1e-12 * self.step
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }
}

/// Sign and dominance certificate of an assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiagnostics {
    /// Largest off-diagonal entry; `≤ 0` for an M-matrix.
    pub max_off_diagonal: f64,
    /// `min_j (M_jj − Σ_{k≠j} |M_jk|)`; at least `λ`.
    pub min_dominance_margin: f64,
    /// `max_j Σ_{k≠j} |M_jk| / M_jj`, a bound on the Jacobi contraction rate.
    pub jacobi_rate: f64,
}

/// `M = λI − A` for `A u = Σ_k K_k (u_{j+k} − u_j) + upwind drift`, with
/// `u ≡ 0` off the grid.
///
/// `K_k` for `|k| ≥ 1` is the `μ`-mass of the cell of jump sizes nearest to
/// `kΔ` (`[Δ, 3Δ/2]` for `|k| = 1`, `[(|k| − ½)Δ, (|k| + ½)Δ]` beyond),
/// plus, for `|k| = 1`, the lumped near-origin term
/// `½ ∫_{|z|≤Δ} z² μ(dz) / Δ²`. Every entry off the diagonal is `≤ 0` and
/// the diagonal is `λ` plus the total outflow, so rows dominate by at least `λ`.
#[derive(Clone)]
pub struct ResolventOperator {
    grid: GridSpec,
    lambda: f64,
    alpha: f64,
    /// `kernel[k − 1]` = coupling to `j + k` for `k = 1..J`
    kernel_plus: Vec<f64>,
    /// coupling to `j − k`
    kernel_minus: Vec<f64>,
    /// drift coupling to `j + 1` and to `j − 1`
    up: Vec<f64>,
    down: Vec<f64>,
    diag: Vec<f64>,
    fft: Arc<FftConvolver>,
}

impl std::fmt::Debug for ResolventOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResolventOperator")
            .field("grid", &self.grid)
            .field("lambda", &self.lambda)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

/// `∫_a^b w z^{−1−α} dz`.
fn radial_mass(w: f64, alpha: f64, a: f64, b: f64) -> f64 {
    if b.is_infinite() {
        w * a.powf(-alpha) / alpha
    } else {
        w * (a.powf(-alpha) - b.powf(-alpha)) / alpha
    }
}

fn one_sided_kernel(w: f64, alpha: f64, step: f64, len: usize) -> Vec<f64> {
    // ½ ∫_{|z|≤Δ} z² μ(dz) / Δ² on each neighbor = w Δ^{−α}/(2−α) for this side's weight
    let lumped = w * step.powf(-alpha) / (2.0 - alpha);
    (1..=len)
        .map(|k| {
            let (a, b) = if k == 1 { (step, 1.5 * step) } else { ((k as f64 - 0.5) * step, (k as f64 + 0.5) * step) };
            radial_mass(w, alpha, a, b) + if k == 1 { lumped } else { 0.0 }
        })
        .collect()
}

/// Assembles `λI − (L + b·∇)` on the grid for a one-dimensional measure.
pub fn assemble_operator(
    grid: &GridSpec,
    measure: &SpectralMeasure,
    drift: &Drift,
    lambda: f64,
) -> Result<ResolventOperator> {
    if measure.dim() != 1 {
        return Err(Error::UnsupportedDimension(measure.dim()));
    }
    if drift.dim() != 1 {
        return Err(Error::UnsupportedDimension(drift.dim()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let alpha = measure.alpha();
    let (w_plus, w_minus) = measure.one_dimensional_weights()?;
    let j_count = grid.nodes;
    let step = grid.step;
    let kernel_plus = one_sided_kernel(w_plus, alpha, step, j_count - 1);
    let kernel_minus = one_sided_kernel(w_minus, alpha, step, j_count - 1);
    // total outflow of each side: lumped part + all cells out to infinity
    let side_total = |w: f64| w * step.powf(-alpha) / (2.0 - alpha) + radial_mass(w, alpha, step, f64::INFINITY);
    let jump_outflow = side_total(w_plus) + side_total(w_minus);

    let (up, down): (Vec<f64>, Vec<f64>) = (0..j_count)
        .into_par_iter()
        .map(|j| {
            let b = drift.eval_1d(grid.node(j));
            if b > 0.0 {
                (b / step, 0.0)
            } else {
                (0.0, -b / step)
            }
        })
        .unzip();
    let diag: Vec<f64> = up.iter().zip(&down).map(|(u, d)| lambda + jump_outflow + u + d).collect();

    let op = ResolventOperator {
        grid: *grid,
        lambda,
        alpha,
        fft: Arc::new(FftConvolver::new(&kernel_plus, &kernel_minus)),
        kernel_plus,
        kernel_minus,
        up,
        down,
        diag,
    };
    let diagnostics = op.diagnostics();
    assert!(
        diagnostics.max_off_diagonal <= 0.0 && diagnostics.min_dominance_margin >= lambda * (1.0 - 1e-12),
        "assembled operator is not an M-matrix: {diagnostics:?}"
    );
    Ok(op)
}

impl ResolventOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Sum of the absolute off-diagonal entries of row `j`.
    fn off_diagonal_mass(&self, j: usize) -> f64 {
        let right = self.grid.nodes - 1 - j;
        self.kernel_plus[..right].iter().sum::<f64>()
            + self.kernel_minus[..j].iter().sum::<f64>()
            + if right > 0 { self.up[j] } else { 0.0 }
            + if j > 0 { self.down[j] } else { 0.0 }
    }

    pub fn diagnostics(&self) -> MatrixDiagnostics {
        let max_off = self
            .kernel_plus
            .iter()
            .chain(&self.kernel_minus)
            .chain(&self.up)
            .chain(&self.down)
            .map(|v| -v)
            .fold(f64::NEG_INFINITY, f64::max);
        let (margin, rate) = (0..self.grid.nodes)
            .into_par_iter()
            .map(|j| {
                let off = self.off_diagonal_mass(j);
                (self.diag[j] - off, off / self.diag[j])
            })
            .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        MatrixDiagnostics { max_off_diagonal: max_off.min(0.0), min_dominance_margin: margin, jacobi_rate: rate }
    }

    /// `(Σ_{k≠j} |M_jk| u_k)_j`: the action of the negated off-diagonal part.
    pub fn apply_off_diagonal(&self, u: &[f64], out: &mut [f64]) {
        self.fft.correlate(u, out);
        let n = u.len();
        for j in 0..n {
            if j + 1 < n {
                out[j] += self.up[j] * u[j + 1];
            }
            if j > 0 {
                out[j] += self.down[j] * u[j - 1];
            }
        }
    }

    /// `M u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_off_diagonal(u, &mut out);
        for ((o, d), v) in out.iter_mut().zip(&self.diag).zip(u) {
            *o = d * v - *o;
        }
        out
    }

    /// The matrix `M` as a dense array (`O(J²)` memory).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.grid.nodes;
        DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                self.diag[j]
            } else if k > j {
                -(self.kernel_plus[k - j - 1] + if k == j + 1 { self.up[j] } else { 0.0 })
            } else {
                -(self.kernel_minus[j - k - 1] + if k + 1 == j { self.down[j] } else { 0.0 })
            }
        })
    }
}

/// Toeplitz product `y_j = Σ_{k≥1} K⁺_k u_{j+k} + K⁻_k u_{j−k}` by circular FFT convolution.
struct FftConvolver {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
}

impl FftConvolver {
    fn new(plus: &[f64], minus: &[f64]) -> Self {
        let n = plus.len() + 1;
        let len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        // y_j = Σ_m c_{j−m} u_m with c_{−k} = K⁺_k and c_{k} = K⁻_k
        let mut kernel = vec![Complex::new(0.0, 0.0); len];
        for (k, &v) in plus.iter().enumerate() {
            kernel[len - (k + 1)].re = v;
        }
        for (k, &v) in minus.iter().enumerate() {
            kernel[k + 1].re = v;
        }
        forward.process(&mut kernel);
        Self { len, forward, inverse, kernel_hat: kernel }
    }

    fn correlate(&self, u: &[f64], out: &mut [f64]) {
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (b, v) in buf.iter_mut().zip(u) {
            b.re = *v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re * scale;
        }
    }
}
