use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::golden_section_max;

/// Apex-angle ranges for the cone condition at a given `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaIntervals {
    /// `(arccos √(1/(2−α)), π/4)` as stated with the hypothesis.
    pub stated: (f64, f64),
    /// Whether `cos²θ > 1/(2−α)` holds anywhere inside `stated`.
    pub stated_is_feasible: bool,
    /// `(0, arccos √(1/(2−α)))`: the angles for which the exponent interval
    /// `(α, 2 − 1/cos²θ)` is non-empty.
    pub feasible: (f64, f64),
}

/// `arccos √(1/(2−α))`, the boundary angle of exponent feasibility.
pub fn critical_angle(alpha: f64) -> f64 {
    (1.0 / (2.0 - alpha)).sqrt().acos()
}

pub fn admissible_theta_interval(alpha: f64) -> Result<ThetaIntervals> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0,1), got {alpha}"));
    }
    let lo = critical_angle(alpha);
    let hi = FRAC_PI_4;
    let threshold = 1.0 / (2.0 - alpha);
    // cos² is decreasing on (0, π/2): the supremum over the open interval is at `lo`,
    // where equality holds, so feasibility needs a point strictly inside.
    let probe = lo + 1e-12 * (1.0 + lo);
    let stated_is_feasible = lo < hi && probe < hi && probe.cos().powi(2) > threshold;
    Ok(ThetaIntervals { stated: (lo, hi), stated_is_feasible, feasible: (0.0, lo) })
}

/// Maximizer of the comparison constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Epsilon0Result {
    pub epsilon0: f64,
    /// Optimal Hölder exponent; 0 when infeasible.
    pub gamma_star: f64,
    /// Optimal scale ratio; 0 when infeasible.
    pub eta_star: f64,
    pub feasible: bool,
}

/// `(1+η)^{γ−2}(2−γ)cos²θ − (1−η)^{γ−2}`; must be positive.
pub fn positivity_factor(gamma: f64, eta: f64, theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    (1.0 + eta).powf(gamma - 2.0) * (2.0 - gamma) * c2 - (1.0 - eta).powf(gamma - 2.0)
}

/// `ε₀ / (2κ) = η^{2−α} γ · factor(γ, η)` on the constraint set, else 0.
pub fn epsilon0_profile(gamma: f64, eta: f64, alpha: f64, theta: f64) -> f64 {
    let f = positivity_factor(gamma, eta, theta);
    if f > 0.0 {
        eta.powf(2.0 - alpha) * gamma * f
    } else {
        0.0
    }
}

/// Maximizes `ε₀(γ, η) = 2κ η^{2−α} γ {(1+η)^{γ−2}(2−γ)cos²θ − (1−η)^{γ−2}}`
/// over `γ ∈ (α, 2 − 1/cos²θ)` and `η ∈ (0, 1)` under the positivity
/// constraint, by a `gamma_points × eta_points` grid search followed by
/// alternating golden-section refinement in each coordinate.
///
/// The positivity factor is decreasing in `η`, so for each `γ` the
/// constraint holds on `(0, η_max(γ))`. Near `α → 1` that band can be far
/// narrower than one grid cell, so the `η` grid is augmented with the
/// geometric points `2^{−k}` and the `η` refinement is restricted to the band.
///
/// The maximizer does not depend on `κ`, so the result is exactly linear in `κ`.
pub fn compute_epsilon0(kappa: f64, alpha: f64, theta: f64, grid: (usize, usize)) -> Result<Epsilon0Result> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be positive, got {kappa}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0,1), got {alpha}"));
    }
    let (gamma_points, eta_points) = grid;
    if gamma_points == 0 || eta_points == 0 {
        return domain("epsilon0 grid must have at least one point per axis");
    }
    let infeasible = Epsilon0Result { epsilon0: 0.0, gamma_star: 0.0, eta_star: 0.0, feasible: false };
    let c2 = theta.cos().powi(2);
    if !(c2 > 1.0 / (2.0 - alpha)) {
        return Ok(infeasible);
    }
    let (g_lo, g_hi) = (alpha, 2.0 - 1.0 / c2);
    if !(g_hi > g_lo) {
        return Ok(infeasible);
    }

    let objective = |g: f64, e: f64| epsilon0_profile(g, e, alpha, theta);
    let mut best = (f64::NAN, f64::NAN, 0.0);
    for i in 0..gamma_points {
        let g = g_lo + (g_hi - g_lo) * (i as f64 + 0.5) / gamma_points as f64;
        let uniform = (0..eta_points).map(|j| (j as f64 + 0.5) / eta_points as f64);
        for e in uniform.chain((1..=60).map(|k| 0.5f64.powi(k))) {
            let v = objective(g, e);
            if v > best.2 {
                best = (g, e, v);
            }
        }
    }
    if !(best.2 > 0.0) {
        return Ok(infeasible);
    }

    // The supremum may sit on the open boundary γ → α; keep the search strictly inside.
    let margin = 1e-12 * (g_hi - g_lo);
    let (g_min, g_max) = (g_lo + margin, g_hi - margin);
    let (mut g, mut e, mut v) = best;
    for _ in 0..500 {
        let before = v;
        let (e_new, _) = golden_section_max(|x| objective(g, x), 0.0, eta_band(g, theta), 1e-15 * e);
        let v_e = objective(g, e_new);
        if v_e > v {
            e = e_new;
            v = v_e;
        }
        let (g_new, _) = golden_section_max(|x| objective(x, e), g_min, g_max, 1e-15);
        let v_g = objective(g_new, e);
        if v_g > v {
            g = g_new;
            v = v_g;
        }
        if v - before <= 1e-16 * v {
            break;
        }
    }
    Ok(Epsilon0Result { epsilon0: 2.0 * kappa * v, gamma_star: g, eta_star: e, feasible: true })
}

/// Largest `η ∈ (0, 1)` with a positive [`positivity_factor`] at `γ`, by bisection.
fn eta_band(gamma: f64, theta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    if positivity_factor(gamma, hi, theta) > 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positivity_factor(gamma, mid, theta) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_interval_at_half() {
        let iv = admissible_theta_interval(0.5).unwrap();
        assert!((iv.stated.0 - (2.0f64 / 3.0).sqrt().acos()).abs() < 1e-15);
        assert!((iv.stated.0 - 0.6155).abs() < 1e-4);
        assert!((iv.stated.1 - FRAC_PI_4).abs() < 1e-15);
        assert!(!iv.stated_is_feasible);
        assert_eq!(iv.feasible.1, iv.stated.0);
    }

    #[test]
    fn stated_interval_near_one() {
        let iv = admissible_theta_interval(1.0 - 1e-12).unwrap();
        assert!(iv.stated.0 < 1e-5);
        assert!(admissible_theta_interval(1.0).is_err());
        assert!(admissible_theta_interval(0.0).is_err());
    }

    #[test]
    fn feasible_interval_alpha_09() {
        let iv = admissible_theta_interval(0.9).unwrap();
        // cos²θ = 1/1.1
        assert!((iv.feasible.1.cos().powi(2) - 1.0 / 1.1).abs() < 1e-14);
        assert!((iv.feasible.1 - 0.306_277).abs() < 1e-6);
    }

    #[test]
    fn infeasible_angles_give_zero() {
        let theta = critical_angle(0.5);
        let r = compute_epsilon0(1.0, 0.5, theta + 1e-9, (50, 50)).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.epsilon0, 0.0);
        let r = compute_epsilon0(1.0, 0.5, 0.7, (50, 50)).unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn kappa_must_be_positive() {
        assert!(compute_epsilon0(0.0, 0.5, 0.2, (10, 10)).is_err());
        assert!(compute_epsilon0(-1.0, 0.5, 0.2, (10, 10)).is_err());
    }

    #[test]
    fn optimum_satisfies_invariants() {
        let r = compute_epsilon0(2.0 / 3.0, 0.5, 0.2, (100, 100)).unwrap();
        assert!(r.feasible);
        assert!(r.epsilon0 > 0.0);
        let g_hi = 2.0 - 1.0 / 0.2f64.cos().powi(2);
        assert!(r.gamma_star > 0.5 && r.gamma_star < g_hi);
        assert!(r.eta_star > 0.0 && r.eta_star < 1.0);
        assert!(positivity_factor(r.gamma_star, r.eta_star, 0.2) > 0.0);
    }

    #[test]
    fn narrow_band_near_alpha_one_is_found() {
        let alpha = 0.8973000704837986;
        let theta = 0.9101711813230108 * critical_angle(alpha);
        let r = compute_epsilon0(1.0, alpha, theta, (40, 40)).unwrap();
        assert!(r.feasible && r.epsilon0 > 0.0);
        assert!(r.eta_star < 1.0 / 80.0);
        let fine = compute_epsilon0(1.0, alpha, theta, (400, 400)).unwrap();
        assert!((fine.epsilon0 - r.epsilon0).abs() <= 1e-9 * fine.epsilon0);
    }
}
