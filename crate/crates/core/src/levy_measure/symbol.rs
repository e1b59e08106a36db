use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use super::measure::{MeasureKind, SpectralMeasure};
use crate::error::{Error, Result};
use crate::numerics::{integrate, one_minus_cos_moment, one_minus_cos_moment_quadrature, sphere_area};

/// `C(α) = 2 ∫_0^∞ (1 − cos u) u^{−1−α} du = 2Γ(2−α) cos(πα/2) / (α(1−α))`:
/// the symbol of one antipodal pair of unit-weight rays is `C(α)|⟨ξ, θ⟩|^α`.
pub fn stable_scale_constant(alpha: f64) -> f64 {
    2.0 * one_minus_cos_moment(alpha)
}

/// [`stable_scale_constant`] after cross-checking the closed form against
/// quadrature to `1e−10` relative. Results are cached per `α`.
pub fn verified_stable_scale_constant(alpha: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("cache poisoned").get(&alpha.to_bits()) {
        return Ok(v);
    }
    let closed = stable_scale_constant(alpha);
    let quad = 2.0 * one_minus_cos_moment_quadrature(alpha);
    let rel = ((closed - quad) / closed).abs();
    if !(rel <= 1e-10) {
        return Err(Error::Calibration(format!(
            "stable scale constant C({alpha}) = {closed} disagrees with quadrature {quad} (rel {rel:e})"
        )));
    }
    cache.lock().expect("cache poisoned").insert(alpha.to_bits(), closed);
    Ok(closed)
}

/// `∫_{S^{d−1}} |θ₁|^α σ(dθ)` by quadrature over the polar angle.
pub fn sphere_abs_moment(dim: usize, alpha: f64) -> f64 {
    if dim == 1 {
        return 2.0;
    }
    let k = (dim - 2) as i32;
    sphere_area(dim - 2)
        * integrate(|phi| phi.cos().abs().powf(alpha) * phi.sin().powi(k), 0.0, PI, 1e-15, 1e-13)
}

/// Evaluator for `ψ(ξ) = ∫ (1 − cos⟨ξ, z⟩) μ(dz)` with the per-measure
/// constants computed once.
#[derive(Debug, Clone)]
pub struct LevySymbol {
    measure: SpectralMeasure,
    /// `∫_0^∞ (1 − cos u) u^{−1−α} du`
    half_constant: f64,
    /// isotropic kind: `c · k(d, α)`
    isotropic_coefficient: f64,
}

impl LevySymbol {
    pub fn new(measure: &SpectralMeasure) -> Result<Self> {
        let alpha = measure.alpha();
        let half_constant = verified_stable_scale_constant(alpha)? / 2.0;
        let isotropic_coefficient = match measure.kind() {
            MeasureKind::Isotropic { c } => c * half_constant * sphere_abs_moment(measure.dim(), alpha),
            MeasureKind::Discrete { .. } => 0.0,
        };
        Ok(Self { measure: measure.clone(), half_constant, isotropic_coefficient })
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    /// For a one-dimensional measure, `ψ(ξ) = scale · |ξ|^α`; returns `scale`.
    pub fn one_dimensional_scale(&self) -> Result<f64> {
        let (wp, wm) = self.measure.one_dimensional_weights()?;
        Ok(match self.measure.kind() {
            MeasureKind::Isotropic { .. } => self.isotropic_coefficient,
            MeasureKind::Discrete { .. } => (wp + wm) * self.half_constant,
        })
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        assert_eq!(xi.len(), self.measure.dim(), "frequency dimension mismatch");
        let alpha = self.measure.alpha();
        match self.measure.kind() {
            MeasureKind::Discrete { atoms } => {
                self.half_constant
                    * atoms
                        .iter()
                        .map(|a| {
                            let p: f64 = a.dir.iter().zip(xi).map(|(x, y)| x * y).sum();
                            a.w * p.abs().powf(alpha)
                        })
                        .sum::<f64>()
            }
            MeasureKind::Isotropic { .. } => {
                let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                self.isotropic_coefficient * norm.powf(alpha)
            }
        }
    }
}

/// `ψ(ξ) = ∫ (1 − cos⟨ξ, z⟩) μ(dz)`.
pub fn levy_symbol(measure: &SpectralMeasure, xi: &[f64]) -> Result<f64> {
    Ok(LevySymbol::new(measure)?.eval(xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gamma;

    #[test]
    fn symbol_vanishes_at_origin() {
        let m = SpectralMeasure::lattice_of_rays(0.5, 0.3).unwrap();
        assert_eq!(levy_symbol(&m, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_symbol_against_quadrature() {
        // ψ(1) = 2 ∫_0^∞ (1 − cos u) u^{−1.5} du for the unit two-atom measure.
        let m = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        let psi = levy_symbol(&m, &[1.0]).unwrap();
        let quad = 2.0 * one_minus_cos_moment_quadrature(0.5);
        assert!((psi - quad).abs() < 1e-10 * quad);
        assert!((psi - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_and_evenness() {
        let m = SpectralMeasure::independent_coordinates(0.7).unwrap();
        let s = LevySymbol::new(&m).unwrap();
        for xi in [[0.3, -1.2], [2.0, 0.5], [-0.1, 0.0]] {
            let a = s.eval(&xi);
            let b = s.eval(&[2.0 * xi[0], 2.0 * xi[1]]);
            assert!((b - 2f64.powf(0.7) * a).abs() < 1e-12 * b.max(1.0));
            assert!((s.eval(&[-xi[0], -xi[1]]) - a).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_moment_matches_closed_form() {
        // ∫_{S^{d−1}} |θ₁|^α dσ = 2π^{(d−1)/2} Γ((α+1)/2) / Γ((d+α)/2)
        for d in 1..=4 {
            for &alpha in &[0.3, 0.5, 0.7] {
                let closed = 2.0 * PI.powf((d as f64 - 1.0) / 2.0) * gamma((alpha + 1.0) / 2.0)
                    / gamma((d as f64 + alpha) / 2.0);
                let q = sphere_abs_moment(d, alpha);
                assert!(((q - closed) / closed).abs() < 1e-10, "d={d} alpha={alpha}: {q} vs {closed}");
            }
        }
    }

    #[test]
    fn isotropic_1d_equals_two_atoms() {
        let iso = SpectralMeasure::isotropic(1, 0.4, 1.5).unwrap();
        let atoms = SpectralMeasure::symmetric_1d(0.4, 1.5).unwrap();
        let a = levy_symbol(&iso, &[0.8]).unwrap();
        let b = levy_symbol(&atoms, &[0.8]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
