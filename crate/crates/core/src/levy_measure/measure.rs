use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::sphere_area;

const UNIT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// A point mass of the spectral measure: direction on the sphere and weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub dir: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    /// Finitely many rays; `μ = Σ w_i δ_{θ_i}(dθ) r^{−1−α} dr`.
    Discrete { atoms: Vec<Atom> },
    /// Rotationally invariant `c |z|^{−d−α} dz`.
    Isotropic { c: f64 },
}

/// Angular (spectral) measure `Σ` of a symmetric α-stable Lévy measure
/// together with the stability index.
///
/// The Lévy measure is the polar product of `Σ` with the radial density
/// `r^{−1−α} dr`, so all radial integrals are power laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct SpectralMeasure {
    dim: usize,
    alpha: f64,
    kind: MeasureKind,
}

/// Wire format: `{"d":2,"alpha":0.5,"kind":"discrete","atoms":[...]}` or
/// `{"d":2,"alpha":0.5,"kind":"isotropic","c":1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasureDoc {
    d: usize,
    alpha: f64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<Atom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

impl TryFrom<MeasureDoc> for SpectralMeasure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        match doc.kind.as_str() {
            "discrete" => {
                if doc.c.is_some() {
                    return domain("discrete measure must not carry an isotropic constant");
                }
                let atoms = doc
                    .atoms
                    .ok_or_else(|| Error::Domain("discrete measure requires `atoms`".into()))?;
                SpectralMeasure::discrete(doc.d, doc.alpha, atoms)
            }
            "isotropic" => {
                if doc.atoms.is_some() {
                    return domain("isotropic measure must not carry atoms");
                }
                let c = doc.c.ok_or_else(|| Error::Domain("isotropic measure requires `c`".into()))?;
                SpectralMeasure::isotropic(doc.d, doc.alpha, c)
            }
            other => domain(format!("unknown measure kind `{other}`")),
        }
    }
}

impl From<SpectralMeasure> for MeasureDoc {
    fn from(m: SpectralMeasure) -> Self {
        match m.kind {
            MeasureKind::Discrete { atoms } => MeasureDoc {
                d: m.dim,
                alpha: m.alpha,
                kind: "discrete".into(),
                atoms: Some(atoms),
                c: None,
            },
            MeasureKind::Isotropic { c } => MeasureDoc {
                d: m.dim,
                alpha: m.alpha,
                kind: "isotropic".into(),
                atoms: None,
                c: Some(c),
            },
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0,1), got {alpha}"));
    }
    Ok(())
}

impl SpectralMeasure {
    /// Discrete spectral measure. Atoms must be unit vectors with positive
    /// weights, and the atom set must be symmetric under `θ ↦ −θ`.
    pub fn discrete(dim: usize, alpha: f64, atoms: Vec<Atom>) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 {
            return domain("dimension must be positive");
        }
        for a in &atoms {
            if a.dir.len() != dim {
                return domain(format!("atom direction has {} coordinates, expected {dim}", a.dir.len()));
            }
            let norm = a.dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return domain(format!("atom direction {:?} is not a unit vector (|θ| = {norm})", a.dir));
            }
            if !(a.w > 0.0 && a.w.is_finite()) {
                return domain(format!("atom weight must be positive, got {}", a.w));
            }
        }
        for a in &atoms {
            let has_partner = atoms.iter().any(|b| {
                (a.w - b.w).abs() <= SYMMETRY_TOL
                    && a.dir.iter().zip(&b.dir).all(|(x, y)| (x + y).abs() <= SYMMETRY_TOL)
            });
            if !has_partner {
                return domain(format!("measure is not symmetric: atom {:?} has no antipodal partner", a.dir));
            }
        }
        Ok(Self { dim, alpha, kind: MeasureKind::Discrete { atoms } })
    }

    /// Rotationally invariant measure `c |z|^{−d−α} dz`.
    pub fn isotropic(dim: usize, alpha: f64, c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 {
            return domain("dimension must be positive");
        }
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("isotropic constant must be positive, got {c}"));
        }
        Ok(Self { dim, alpha, kind: MeasureKind::Isotropic { c } })
    }

    /// The zero measure (no jumps).
    pub fn zero(dim: usize, alpha: f64) -> Result<Self> {
        Self::discrete(dim, alpha, Vec::new())
    }

    /// One-dimensional measure `w |z|^{−1−α} dz` as two atoms at ±1.
    pub fn symmetric_1d(alpha: f64, w: f64) -> Result<Self> {
        Self::discrete(1, alpha, vec![Atom { dir: vec![1.0], w }, Atom { dir: vec![-1.0], w }])
    }

    /// One-dimensional measure whose symbol is `(scale·|ξ|)^α`, i.e. the
    /// process `scale · S_t` with `S` the standard symmetric stable process.
    pub fn symmetric_1d_with_scale(alpha: f64, scale: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let w = scale.powf(alpha) / crate::levy_measure::stable_scale_constant(alpha);
        Self::symmetric_1d(alpha, w)
    }

    /// Two independent one-dimensional stable coordinates: atoms at `±e₁, ±e₂`.
    pub fn independent_coordinates(alpha: f64) -> Result<Self> {
        let atoms = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
            .iter()
            .map(|d| Atom { dir: d.to_vec(), w: 1.0 })
            .collect();
        Self::discrete(2, alpha, atoms)
    }

    /// Jumps along the lines `x₂ = tan(iϑ) x₁`, `i = 0..=⌊π/ϑ⌋`, each line
    /// carrying the one-dimensional density `r^{−1−α} dr` in both directions.
    pub fn lattice_of_rays(alpha: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing < std::f64::consts::PI) {
            return domain(format!("ray spacing must lie in (0, π), got {spacing}"));
        }
        let count = (std::f64::consts::PI / spacing).floor() as usize;
        let mut atoms = Vec::with_capacity(2 * (count + 1));
        for i in 0..=count {
            let phi = i as f64 * spacing;
            if phi >= std::f64::consts::PI {
                break;
            }
            let (s, c) = phi.sin_cos();
            atoms.push(Atom { dir: vec![c, s], w: 1.0 });
            atoms.push(Atom { dir: vec![-c, -s], w: 1.0 });
        }
        Self::discrete(2, alpha, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            MeasureKind::Discrete { atoms } => Some(atoms),
            MeasureKind::Isotropic { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, MeasureKind::Discrete { .. })
    }

    /// Same measure with a different stability index.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, ..self.clone() })
    }

    /// Same measure with every direction negated.
    pub fn negated(&self) -> Self {
        match &self.kind {
            MeasureKind::Discrete { atoms } => Self {
                kind: MeasureKind::Discrete {
                    atoms: atoms
                        .iter()
                        .map(|a| Atom { dir: a.dir.iter().map(|x| -x).collect(), w: a.w })
                        .collect(),
                },
                ..self.clone()
            },
            MeasureKind::Isotropic { .. } => self.clone(),
        }
    }

    /// Total mass `Σ(S^{d−1})` of the spectral measure.
    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            MeasureKind::Discrete { atoms } => atoms.iter().map(|a| a.w).sum(),
            MeasureKind::Isotropic { c } => c * sphere_area(self.dim - 1),
        }
    }

    /// `μ({|z| > m}) = Σ(S^{d−1}) m^{−α} / α`.
    pub fn tail_mass(&self, m: f64) -> f64 {
        self.total_mass() * m.powf(-self.alpha) / self.alpha
    }

    /// `∫_{|z| ≤ m} |z|² μ(dz) = Σ(S^{d−1}) m^{2−α} / (2−α)`.
    pub fn truncated_second_moment(&self, m: f64) -> f64 {
        self.total_mass() * m.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// Radial density coefficients `(w₊, w₋)` of a one-dimensional measure,
    /// so that `μ(dz) = w₊ z^{−1−α} dz` on `z > 0` and `w₋ |z|^{−1−α} dz` on `z < 0`.
    pub fn one_dimensional_weights(&self) -> Result<(f64, f64)> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        Ok(match &self.kind {
            MeasureKind::Discrete { atoms } => {
                let plus = atoms.iter().filter(|a| a.dir[0] > 0.0).map(|a| a.w).sum();
                let minus = atoms.iter().filter(|a| a.dir[0] < 0.0).map(|a| a.w).sum();
                (plus, minus)
            }
            MeasureKind::Isotropic { c } => (*c, *c),
        })
    }

    /// Atoms grouped into antipodal pairs `(θ, w)`; each pair stands for
    /// the two atoms `±θ` of weight `w`.
    pub fn symmetric_pairs(&self) -> Vec<Atom> {
        let Some(atoms) = self.atoms() else { return Vec::new() };
        let mut used = vec![false; atoms.len()];
        let mut pairs = Vec::with_capacity(atoms.len() / 2);
        for i in 0..atoms.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            if let Some(j) = (i + 1..atoms.len()).find(|&j| {
                !used[j]
                    && (atoms[i].w - atoms[j].w).abs() <= SYMMETRY_TOL
                    && atoms[i].dir.iter().zip(&atoms[j].dir).all(|(x, y)| (x + y).abs() <= SYMMETRY_TOL)
            }) {
                used[j] = true;
            }
            pairs.push(atoms[i].clone());
        }
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_discrete() {
        let m = SpectralMeasure::independent_coordinates(0.5).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"discrete\""));
        let back: SpectralMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_isotropic() {
        let m: SpectralMeasure = serde_json::from_str(r#"{"d":2,"alpha":0.5,"kind":"isotropic","c":1.0}"#).unwrap();
        assert_eq!(m.kind(), &MeasureKind::Isotropic { c: 1.0 });
        assert!((m.total_mass() - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn rejects_asymmetric_measure() {
        let err = SpectralMeasure::discrete(1, 0.5, vec![Atom { dir: vec![1.0], w: 1.0 }]);
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = SpectralMeasure::discrete(
            1,
            0.5,
            vec![Atom { dir: vec![1.0], w: 1.0 }, Atom { dir: vec![-1.0], w: 2.0 }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_bad_alpha_and_non_unit_direction() {
        assert!(SpectralMeasure::symmetric_1d(1.0, 1.0).is_err());
        assert!(SpectralMeasure::symmetric_1d(0.0, 1.0).is_err());
        let atoms = vec![Atom { dir: vec![1.0, 1.0], w: 1.0 }, Atom { dir: vec![-1.0, -1.0], w: 1.0 }];
        assert!(SpectralMeasure::discrete(2, 0.5, atoms).is_err());
        assert!(serde_json::from_str::<SpectralMeasure>(r#"{"d":1,"alpha":0.5,"kind":"isotropic"}"#).is_err());
    }

    #[test]
    fn lattice_is_symmetric_and_counts_lines() {
        let m = SpectralMeasure::lattice_of_rays(0.5, 0.3).unwrap();
        // ⌊π/0.3⌋ = 10, so 11 lines and 22 atoms.
        assert_eq!(m.atoms().unwrap().len(), 22);
        assert_eq!(m.symmetric_pairs().len(), 11);
    }

    #[test]
    fn power_law_moments() {
        let m = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        assert!((m.tail_mass(4.0) - 2.0 * 0.5 / 0.5).abs() < 1e-14);
        assert!((m.truncated_second_moment(1.0) - 2.0 / 1.5).abs() < 1e-14);
        assert_eq!(m.one_dimensional_weights().unwrap(), (1.0, 1.0));
    }
}
