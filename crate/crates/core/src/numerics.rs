//! Small numerical kernels shared by the measure and sampler modules:
//! adaptive Gauss–Kronrod quadrature, golden-section search and a few
//! closed-form geometric constants.

use std::f64::consts::PI;

pub use statrs::function::gamma::gamma;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate falls below `max(abs_tol, rel_tol * |I|)` or the interval budget
/// is exhausted. Integrable endpoint singularities are fine since the nodes
/// never touch the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut intervals = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..20_000 {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // Sum small-to-large for a little extra accuracy.
    let mut parts: Vec<f64> = intervals.iter().map(|iv| iv.2).collect();
    parts.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    parts.iter().sum()
}

/// Maximizes a unimodal function on `[lo, hi]`; returns `(argmax, max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Surface area of the unit sphere `S^k` in `R^{k+1}`; `S^0 = {±1}` has measure 2.
pub fn sphere_area(k: usize) -> f64 {
    let n = (k + 1) as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// Closed form of `∫_0^∞ (1 − cos u) u^{−1−α} du` for `α ∈ (0, 1)`.
pub fn one_minus_cos_moment(alpha: f64) -> f64 {
    gamma(2.0 - alpha) * (PI * alpha / 2.0).cos() / (alpha * (1.0 - alpha))
}

/// Quadrature evaluation of `∫_0^∞ (1 − cos u) u^{−1−α} du`.
///
/// The finite part `[0, U]` is integrated adaptively; beyond `U` the
/// non-oscillatory piece `∫ u^{−1−α}` is exact and the oscillatory
/// remainder uses its asymptotic integration-by-parts series.
pub fn one_minus_cos_moment_quadrature(alpha: f64) -> f64 {
    let upper = 200.0 * PI;
    let mut head = 0.0;
    // Integrate period by period to keep the adaptive scheme well conditioned.
    let pieces = 200;
    let step = upper / pieces as f64;
    for k in 0..pieces {
        let a = k as f64 * step;
        head += integrate(
            |u| {
                if u == 0.0 {
                    0.0
                } else {
                    // 1 − cos u = 2 sin²(u/2) avoids cancellation near 0.
                    let s = (0.5 * u).sin();
                    2.0 * s * s * u.powf(-1.0 - alpha)
                }
            },
            a,
            a + step,
            1e-16,
            1e-14,
        );
    }
    let smooth_tail = upper.powf(-alpha) / alpha;
    // ∫_U^∞ e^{iu} u^{−s} du = i e^{iU} U^{−s} Σ_k (−i)^k (s)_k U^{−k}
    let s = 1.0 + alpha;
    let (mut re, mut im) = (0.0_f64, 0.0_f64);
    let mut coef = 1.0;
    // (−i)^k cycles through 1, −i, −1, i.
    for k in 0..12 {
        let (cr, ci) = match k % 4 {
            0 => (coef, 0.0),
            1 => (0.0, -coef),
            2 => (-coef, 0.0),
            _ => (0.0, coef),
        };
        re += cr;
        im += ci;
        coef *= (s + k as f64) / upper;
    }
    // multiply by i e^{iU} U^{−s}
    let (c, sn) = (upper.cos(), upper.sin());
    let scale = upper.powf(-s);
    // Re(i·e^{iU}·z) = −Im(e^{iU}·z)
    let cos_tail = -(c * im + sn * re) * scale;
    head + smooth_tail - cos_tail
}
