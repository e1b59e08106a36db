//! Bounded, compactly supported right-hand sides `f`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `f` in `λu − Au = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Zero { dim: usize },
    /// `height · exp(1 − 1/(1 − r²))` for `r = |x − center| / radius < 1`, else 0.
    Bump { center: Vec<f64>, radius: f64, height: f64 },
}

impl TestFunction {
    pub fn bump(center: Vec<f64>, radius: f64, height: f64) -> Result<Self> {
        if center.is_empty() {
            return domain("bump center must have at least one coordinate");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("bump radius must be positive, got {radius}"));
        }
        if !height.is_finite() {
            return domain("bump height must be finite");
        }
        Ok(TestFunction::Bump { center, radius, height })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Zero { dim } => *dim,
            TestFunction::Bump { center, .. } => center.len(),
        }
    }

    /// `‖f‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::Zero { .. } => 0.0,
            TestFunction::Bump { height, .. } => height.abs(),
        }
    }

    /// Smallest `n` with `f = 0` outside `B(0, n)`.
    pub fn support_radius(&self) -> f64 {
        match self {
            TestFunction::Zero { .. } => 0.0,
            TestFunction::Bump { center, radius, .. } => {
                center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Zero { .. } => 0.0,
            TestFunction::Bump { center, radius, height } => {
                let r2 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / (radius * radius);
                if r2 < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Values at the given one-dimensional nodes.
    pub fn sample_grid(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval_1d(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let f = TestFunction::bump(vec![0.5], 0.25, 2.0).unwrap();
        assert_eq!(f.eval_1d(0.5), 2.0);
        assert_eq!(f.eval_1d(0.75), 0.0);
        assert_eq!(f.eval_1d(0.1), 0.0);
        assert!(f.eval_1d(0.6) > 0.0 && f.eval_1d(0.6) < 2.0);
        assert_eq!(f.eval_1d(0.4), f.eval_1d(0.6));
        assert_eq!(f.sup_norm(), 2.0);
        assert_eq!(f.support_radius(), 0.75);
    }

    #[test]
    fn serde_round_trip() {
        let f = TestFunction::bump(vec![0.0, 1.0], 1.0, 1.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<TestFunction>(&s).unwrap(), f);
        assert!(TestFunction::bump(vec![0.0], 0.0, 1.0).is_err());
    }
}
