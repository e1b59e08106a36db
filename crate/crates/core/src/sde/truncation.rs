use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::levy_measure::SpectralMeasure;

/// Sup-norms of a radial cutoff `g` with `g(0) = 0` and `g ≡ 1` off the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub sup_norm: f64,
    pub grad_norm: f64,
    pub hess_norm: f64,
}

impl BumpProfile {
    /// `g(x) = q(|x|)` with the quintic `q(r) = 10r³ − 15r⁴ + 6r⁵` on `[0, 1]`,
    /// `q ≡ 1` beyond. `q'` and `q''` vanish at both ends, so `g ∈ C²`.
    ///
    /// `max q' = q'(1/2) = 15/8`; the Hessian's eigenvalues are `q''(r)` and
    /// `q'(r)/r`, maximized at `r = (3 − √3)/6` (value `10/√3`) and `r = 1/3`
    /// (value `40/9`).
    pub fn quintic() -> Self {
        Self { sup_norm: 1.0, grad_norm: 15.0 / 8.0, hess_norm: 10.0 / 3f64.sqrt() }
    }

    pub fn radial(r: f64) -> f64 {
        if r >= 1.0 {
            1.0
        } else {
            r * r * r * (10.0 + r * (-15.0 + 6.0 * r))
        }
    }
}

/// Truncation constants of the far-field decay argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub f_sup: f64,
    pub b_sup: f64,
    /// Horizon: `T > |log(λε/(4‖f‖_∞))/λ|`.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Jump cutoff: `T μ(|z| > m) ≤ ε/(4‖g‖_∞)`.
    pub m: f64,
    /// Exit radius: `R > (4T‖f‖_∞‖∇²g‖_∞ ∫_{|y|≤m}|y|²μ(dy)/(ελ))^{1/2} + 4‖b‖_∞‖∇g‖_∞/ε`.
    #[serde(rename = "R")]
    pub radius: f64,
    pub g_profile: BumpProfile,
}

impl TruncationParams {
    /// Right-hand side of the horizon bound.
    pub fn horizon_bound(&self) -> f64 {
        horizon_bound(self.epsilon, self.lambda, self.f_sup)
    }

    /// `3λε/(4‖f‖_∞)`, the bound on `P_x(τ_R ≤ T)`.
    pub fn exit_bound(&self) -> f64 {
        3.0 * self.lambda * self.epsilon / (4.0 * self.f_sup)
    }

    /// `e^{−λT}‖f‖_∞/λ`.
    pub fn tail_bias_bound(&self) -> f64 {
        (-self.lambda * self.horizon).exp() * self.f_sup / self.lambda
    }
}

fn horizon_bound(epsilon: f64, lambda: f64, f_sup: f64) -> f64 {
    ((lambda * epsilon / (4.0 * f_sup)).ln() / lambda).abs()
}

/// Geometric ratio of the horizon grid `{t_floor · 1.1^k}`.
pub const HORIZON_GRID_RATIO: f64 = 1.1;

/// [`select_truncation_with_profile`] with the quintic cutoff.
pub fn select_truncation(
    epsilon: f64,
    lambda: f64,
    f_sup: f64,
    b_sup: f64,
    measure: &SpectralMeasure,
    t_floor: f64,
) -> Result<TruncationParams> {
    select_truncation_with_profile(epsilon, lambda, f_sup, b_sup, measure, t_floor, BumpProfile::quintic())
}

/// Chooses `(T, m, R)`: `T` is the smallest point of `{t_floor · 1.1^k, k ≥ 0}`
/// strictly above the horizon bound, `m` solves the jump-cutoff bound with
/// equality, and `R` exceeds its bound by a relative `1e−12`.
pub fn select_truncation_with_profile(
    epsilon: f64,
    lambda: f64,
    f_sup: f64,
    b_sup: f64,
    measure: &SpectralMeasure,
    t_floor: f64,
    g: BumpProfile,
) -> Result<TruncationParams> {
    for (name, v) in [("epsilon", epsilon), ("lambda", lambda), ("f_sup", f_sup), ("t_floor", t_floor)] {
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    if !(b_sup >= 0.0 && b_sup.is_finite()) {
        return domain(format!("b_sup must be non-negative, got {b_sup}"));
    }
    let alpha = measure.alpha();
    let t_bound = horizon_bound(epsilon, lambda, f_sup);
    let mut horizon = t_floor;
    while horizon <= t_bound {
        horizon *= HORIZON_GRID_RATIO;
    }
    // μ(|z| > m) = Σ(S^{d−1}) m^{−α}/α
    let mass = measure.total_mass();
    let m = if mass > 0.0 {
        (horizon * mass * 4.0 * g.sup_norm / (alpha * epsilon)).powf(1.0 / alpha)
    } else {
        1.0
    };
    let second = measure.truncated_second_moment(m);
    let rhs = (4.0 * horizon * f_sup * g.hess_norm * second / (epsilon * lambda)).sqrt()
        + 4.0 * b_sup * g.grad_norm / epsilon;
    let radius = rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    Ok(TruncationParams { epsilon, lambda, f_sup, b_sup, horizon, m, radius, g_profile: g })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_profile_matches_finite_differences() {
        let h = 1e-5;
        let mut grad: f64 = 0.0;
        let mut radial2: f64 = 0.0;
        let mut tangential: f64 = 0.0;
        for i in 1..20_000 {
            let r = i as f64 / 20_000.0;
            let d1 = (BumpProfile::radial(r + h) - BumpProfile::radial(r - h)) / (2.0 * h);
            let d2 = (BumpProfile::radial(r + h) - 2.0 * BumpProfile::radial(r) + BumpProfile::radial(r - h)) / (h * h);
            grad = grad.max(d1.abs());
            radial2 = radial2.max(d2.abs());
            tangential = tangential.max((d1 / r).abs());
        }
        let p = BumpProfile::quintic();
        assert!((grad - p.grad_norm).abs() < 1e-6);
        assert!((radial2.max(tangential) - p.hess_norm).abs() < 1e-4);
        assert!((tangential - 40.0 / 9.0).abs() < 1e-4);
        assert_eq!(BumpProfile::radial(0.0), 0.0);
        assert_eq!(BumpProfile::radial(1.0), 1.0);
    }

    #[test]
    fn bounds_hold() {
        let mu = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        let t = select_truncation(0.01, 1.0, 1.0, 1.0, &mu, 1e-3).unwrap();
        assert!(t.horizon > t.horizon_bound());
        assert!(t.horizon / HORIZON_GRID_RATIO <= t.horizon_bound());
        assert!(t.horizon * mu.tail_mass(t.m) <= t.epsilon / 4.0 * (1.0 + 1e-12));
        assert!(t.radius > 0.0);
    }

    #[test]
    fn floor_applies_when_bound_is_small() {
        let mu = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        // λε/(4‖f‖) = 1 makes the horizon bound vanish.
        let t = select_truncation(4.0, 1.0, 1.0, 0.0, &mu, 0.01).unwrap();
        assert_eq!(t.horizon, 0.01);
    }

    #[test]
    fn larger_cutoff_norms_never_shrink_m_or_r() {
        let mu = SpectralMeasure::isotropic(2, 0.7, 0.5).unwrap();
        let g = BumpProfile::quintic();
        let a = select_truncation_with_profile(0.05, 2.0, 1.0, 1.0, &mu, 1e-3, g).unwrap();
        let g2 = BumpProfile { sup_norm: 2.0 * g.sup_norm, grad_norm: 2.0 * g.grad_norm, hess_norm: 2.0 * g.hess_norm };
        let b = select_truncation_with_profile(0.05, 2.0, 1.0, 1.0, &mu, 1e-3, g2).unwrap();
        assert!(b.m >= a.m && b.radius >= a.radius);
        assert_eq!(a.horizon, b.horizon);
    }
}
