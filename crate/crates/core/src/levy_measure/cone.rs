use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{MeasureKind, SpectralMeasure};
use crate::error::{domain, Result};
use crate::numerics::{integrate, sphere_area};
use crate::rng::StreamRng;

/// Candidate axes tried per direction on the admissible arc (d = 2).
pub const AXES_PER_ARC: usize = 360;

/// Directions sampled in `d ≥ 3` are drawn from this stream.
const SPHERE_SAMPLING_SEED: u64 = 0x5eed_c0de;

/// Open circular cone `{x : ⟨x, n⟩ > |x| cos(θ/2)}` with vertex 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    axis: Vec<f64>,
    apex_angle: f64,
}

impl Cone {
    /// `axis` is normalized; `apex_angle` must lie in `(0, π)`.
    pub fn new(axis: &[f64], apex_angle: f64) -> Result<Self> {
        if !(apex_angle > 0.0 && apex_angle < PI) {
            return domain(format!("apex angle must lie in (0, π), got {apex_angle}"));
        }
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return domain("cone axis must be a non-zero finite vector");
        }
        Ok(Self { axis: axis.iter().map(|x| x / norm).collect(), apex_angle })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn apex_angle(&self) -> f64 {
        self.apex_angle
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let dot: f64 = x.iter().zip(&self.axis).map(|(a, b)| a * b).sum();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot > norm * (0.5 * self.apex_angle).cos()
    }
}

/// Surface measure of the spherical cap of half-angle `half_angle` in `S^{d−1}`.
/// For `d = 1` this is the number of points of `{±1}` within the cap.
fn cap_measure(dim: usize, half_angle: f64) -> f64 {
    match dim {
        1 => 1.0,
        2 => 2.0 * half_angle,
        _ => {
            let k = (dim - 2) as i32;
            sphere_area(dim - 2) * integrate(|phi| phi.sin().powi(k), 0.0, half_angle, 1e-15, 1e-13)
        }
    }
}

/// `I(n, θ, δ) = ∫_{B_δ ∩ S(n,θ)} |y|² μ(dy)`.
///
/// Every ray in the cone contributes `w δ^{2−α}/(2−α)`; for the isotropic
/// kind the angular weight is `c` times the cap measure.
pub fn cone_second_moment(measure: &SpectralMeasure, cone: &Cone, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("delta must lie in (0, 1], got {delta}"));
    }
    if cone.axis.len() != measure.dim() {
        return domain("cone axis dimension differs from the measure dimension");
    }
    let radial = delta.powf(2.0 - measure.alpha()) / (2.0 - measure.alpha());
    Ok(radial * angular_mass(measure, cone))
}

/// `Σ(S(n,θ) ∩ S^{d−1})`.
fn angular_mass(measure: &SpectralMeasure, cone: &Cone) -> f64 {
    match measure.kind() {
        MeasureKind::Discrete { atoms } => atoms.iter().filter(|a| cone.contains(&a.dir)).map(|a| a.w).sum(),
        MeasureKind::Isotropic { c } => {
            if measure.dim() == 1 {
                let inside = [1.0, -1.0].iter().filter(|&&s| cone.contains(&[s])).count();
                c * inside as f64
            } else {
                c * cap_measure(measure.dim(), 0.5 * cone.apex_angle)
            }
        }
    }
}

/// One row of the per-direction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRow {
    pub direction: Vec<f64>,
    pub best_axis: Vec<f64>,
    /// `inf_δ max_n I(n, θ, δ) / δ^{2−α}`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConditionReport {
    pub theta: f64,
    pub kappa_hat: f64,
    pub worst_direction: Vec<f64>,
    pub per_direction_table: Vec<DirectionRow>,
    pub satisfied: bool,
}

impl ConeConditionReport {
    /// CSV with one row per grid direction.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.worst_direction.len();
        let mut header: Vec<String> = (0..dim).map(|i| format!("dir_{i}")).collect();
        header.extend((0..dim).map(|i| format!("axis_{i}")));
        header.push("ratio".into());
        writeln!(out, "{}", header.join(","))?;
        for row in &self.per_direction_table {
            let cells: Vec<String> = row
                .direction
                .iter()
                .chain(&row.best_axis)
                .map(|v| format!("{v:.17e}"))
                .chain(std::iter::once(format!("{:.17e}", row.ratio)))
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// The geometric δ-grid `{2^{−k}}_{k=0..20}`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Checks the cone condition: every direction must be covered by some cone
/// of apex angle `theta` carrying truncated second moment at least
/// `κ δ^{2−α}` at every scale of `delta_grid`.
///
/// In `d = 1` the two directions `±1` are checked exactly. In `d = 2`,
/// `direction_grid_size` uniformly spaced directions are scanned; for each,
/// [`AXES_PER_ARC`] axes on the open admissible arc are tried and, for
/// discrete measures, the arc is refined at every breakpoint where an atom
/// enters or leaves the cone, which makes the axis maximization exact. In
/// `d ≥ 3` directions are sampled uniformly on the sphere from a fixed seed,
/// with axes sampled in the admissible cap plus the bisectors towards
/// nearby atoms.
pub fn check_cone_condition(
    measure: &SpectralMeasure,
    theta: f64,
    direction_grid_size: usize,
    delta_grid: &[f64],
) -> Result<ConeConditionReport> {
    if !(theta > 0.0 && theta < PI) {
        return domain(format!("theta must lie in (0, π), got {theta}"));
    }
    if delta_grid.is_empty() {
        return domain("delta grid is empty");
    }
    if let Some(bad) = delta_grid.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
        return domain(format!("delta grid entries must lie in (0, 1], got {bad}"));
    }
    if direction_grid_size < 8 {
        return domain(format!("direction grid needs at least 8 points, got {direction_grid_size}"));
    }
    let dim = measure.dim();
    let directions: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..direction_grid_size)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / direction_grid_size as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect(),
        _ => sample_sphere(dim, direction_grid_size),
    };

    let rows: Vec<(DirectionRow, f64)> = directions
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let axes = candidate_axes(measure, theta, d, i as u64);
            let (best_axis, _) = axes
                .into_iter()
                .map(|n| {
                    let cone = Cone::new(&n, theta).expect("valid cone");
                    let mass = angular_mass(measure, &cone);
                    (cone.axis, mass)
                })
                .fold((d.clone(), f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let cone = Cone::new(&best_axis, theta).expect("valid cone");
            let ratio = delta_grid
                .iter()
                .map(|&delta| {
                    cone_second_moment(measure, &cone, delta).expect("validated delta")
                        / delta.powf(2.0 - measure.alpha())
                })
                .fold(f64::INFINITY, f64::min);
            let exposure = uncovered_angle(measure, d);
            (DirectionRow { direction: d.clone(), best_axis, ratio }, exposure)
        })
        .collect();

    // Worst direction: smallest ratio; ties (within 1e-12 relative) go to the
    // direction farthest from the support of the measure.
    let mut worst = 0;
    for (i, (row, exposure)) in rows.iter().enumerate() {
        let (wrow, wexp) = &rows[worst];
        let tol = 1e-12 * wrow.ratio.abs().max(row.ratio.abs());
        if row.ratio < wrow.ratio - tol || ((row.ratio - wrow.ratio).abs() <= tol && *exposure > *wexp + 1e-12) {
            worst = i;
        }
    }
    let kappa_hat = rows.iter().map(|r| r.0.ratio).fold(f64::INFINITY, f64::min).max(0.0);
    let worst_direction = rows[worst].0.direction.clone();
    Ok(ConeConditionReport {
        theta,
        kappa_hat,
        worst_direction,
        per_direction_table: rows.into_iter().map(|r| r.0).collect(),
        satisfied: kappa_hat > 0.0,
    })
}

/// Angle between `d` and the closest atom (0 for isotropic measures).
fn uncovered_angle(measure: &SpectralMeasure, d: &[f64]) -> f64 {
    match measure.atoms() {
        Some(atoms) if !atoms.is_empty() => atoms
            .iter()
            .map(|a| angle_between(&a.dir, d))
            .fold(f64::INFINITY, f64::min),
        Some(_) => PI,
        None => 0.0,
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

fn candidate_axes(measure: &SpectralMeasure, theta: f64, d: &[f64], index: u64) -> Vec<Vec<f64>> {
    let half = 0.5 * theta;
    match d.len() {
        1 => vec![d.to_vec()],
        2 => {
            let phi = d[1].atan2(d[0]);
            let mut angles: Vec<f64> = (0..AXES_PER_ARC)
                .map(|j| phi + half * (-1.0 + (2.0 * j as f64 + 1.0) / AXES_PER_ARC as f64))
                .collect();
            if let Some(atoms) = measure.atoms() {
                // Breakpoints: axis angles where an atom crosses the cone boundary.
                let mut cuts = vec![phi - half, phi + half];
                for a in atoms {
                    let psi = a.dir[1].atan2(a.dir[0]);
                    for edge in [psi - half, psi + half] {
                        let rel = wrap_angle(edge - phi);
                        if rel.abs() < half {
                            cuts.push(phi + rel);
                        }
                    }
                }
                cuts.sort_by(f64::total_cmp);
                // Slivers narrower than 1e-12 rad are rounding artefacts of coincident edges.
                angles.extend(cuts.windows(2).filter(|w| w[1] - w[0] > 1e-12).map(|w| 0.5 * (w[0] + w[1])));
            }
            angles.into_iter().map(|a| vec![a.cos(), a.sin()]).collect()
        }
        dim => {
            let mut rng = StreamRng::new(SPHERE_SAMPLING_SEED, index.wrapping_add(1 << 32));
            let mut axes = vec![d.to_vec()];
            while axes.len() < AXES_PER_ARC {
                // Random tangent direction orthogonal to d, tilted by an angle below θ/2.
                let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                let along: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                let tangent: Vec<f64> = v.iter().zip(d).map(|(a, b)| a - along * b).collect();
                let nt = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nt == 0.0 {
                    continue;
                }
                let tilt = half * rng.uniform_open();
                let (s, c) = tilt.sin_cos();
                axes.push(d.iter().zip(&tangent).map(|(a, t)| c * a + s * t / nt).collect());
            }
            if let Some(atoms) = measure.atoms() {
                for a in atoms {
                    if angle_between(&a.dir, d) < theta {
                        let bis: Vec<f64> = a.dir.iter().zip(d).map(|(x, y)| x + y).collect();
                        let nb = bis.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if nb > 0.0 {
                            axes.push(bis.iter().map(|x| x / nb).collect());
                        }
                    }
                }
            }
            axes
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn sample_sphere(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = StreamRng::new(SPHERE_SAMPLING_SEED, 0);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_membership() {
        let c = Cone::new(&[0.0, 2.0], 1.0).unwrap();
        assert!(c.contains(&[0.0, 1.0]));
        assert!(!c.contains(&[0.0, -1.0]));
        assert!(!c.contains(&[1.0, 0.0]));
        assert!(Cone::new(&[1.0], PI).is_err());
        assert!(Cone::new(&[1.0], 0.0).is_err());
    }

    #[test]
    fn second_moment_one_dimensional() {
        let m = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        let cone = Cone::new(&[1.0], PI / 2.0).unwrap();
        let v = cone_second_moment(&m, &cone, 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert!(cone_second_moment(&m, &cone, 0.0).is_err());
        assert!(cone_second_moment(&m, &cone, 1.5).is_err());
    }

    #[test]
    fn independent_coordinates_miss_the_diagonal_cone() {
        let m = SpectralMeasure::independent_coordinates(0.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cone = Cone::new(&[s, s], PI / 4.0).unwrap();
        for delta in [1.0, 0.1, 1e-4] {
            assert_eq!(cone_second_moment(&m, &cone, delta).unwrap(), 0.0);
        }
    }

    #[test]
    fn cap_measure_quadrature_matches_closed_forms() {
        // S² cap: 2π(1 − cos a)
        let a = 0.7;
        assert!((cap_measure(3, a) - 2.0 * PI * (1.0 - a.cos())).abs() < 1e-12);
        assert!((cap_measure(2, a) - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-7.0, -PI, 0.0, 3.5, 10.0] {
            let w = wrap_angle(a);
            assert!(w > -PI - 1e-15 && w <= PI);
            assert!(((a - w) / (2.0 * PI)).round() * 2.0 * PI - (a - w) < 1e-12);
        }
    }

    #[test]
    fn empty_delta_grid_is_a_domain_error() {
        let m = SpectralMeasure::symmetric_1d(0.5, 1.0).unwrap();
        assert!(check_cone_condition(&m, 0.5, 8, &[]).is_err());
        assert!(check_cone_condition(&m, 0.5, 4, &[1.0]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = SpectralMeasure::isotropic(2, 0.5, 1.0).unwrap();
        let r = check_cone_condition(&m, 0.5, 16, &[1.0]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("dir_0,dir_1,axis_0,axis_1,ratio"));
    }
}
