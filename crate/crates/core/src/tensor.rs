//! Per-cell symmetric bilinear forms in one or two chart dimensions.
//!
//! Only the upper triangle is stored, so every tensor is exactly symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covector components in chart coordinates. One-dimensional covectors use
/// only the first slot.
pub type Covector = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub enum SymTensor {
    One(f64),
    Two { xx: f64, xy: f64, yy: f64 },
}

impl SymTensor {
    pub fn identity(dim: usize) -> Self {
        match dim {
            1 => SymTensor::One(1.0),
            _ => SymTensor::Two {
                xx: 1.0,
                xy: 0.0,
                yy: 1.0,
            },
        }
    }

    pub fn diag2(xx: f64, yy: f64) -> Self {
        SymTensor::Two { xx, xy: 0.0, yy }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymTensor::One(_) => 1,
            SymTensor::Two { .. } => 2,
        }
    }

    /// Packed upper-triangle coefficients: `[g11]` or `[g11, g12, g22]`.
    pub fn coefficients(&self) -> Vec<f64> {
        match *self {
            SymTensor::One(a) => vec![a],
            SymTensor::Two { xx, xy, yy } => vec![xx, xy, yy],
        }
    }

    pub fn from_coefficients(c: &[f64]) -> Result<Self> {
        match c {
            [a] => Ok(SymTensor::One(*a)),
            [xx, xy, yy] => Ok(SymTensor::Two {
                xx: *xx,
                xy: *xy,
                yy: *yy,
            }),
            _ => Err(Error::Parse(format!(
                "expected 1 or 3 metric coefficients, got {}",
                c.len()
            ))),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients().iter().all(|c| c.is_finite())
    }

    /// `v^T G v`.
    pub fn quad(&self, v: &[f64; 2]) -> f64 {
        match *self {
            SymTensor::One(a) => a * v[0] * v[0],
            SymTensor::Two { xx, xy, yy } => xx * v[0] * v[0] + 2.0 * xy * v[0] * v[1] + yy * v[1] * v[1],
        }
    }

    pub fn det(&self) -> f64 {
        match *self {
            SymTensor::One(a) => a,
            SymTensor::Two { xx, xy, yy } => xx * yy - xy * xy,
        }
    }

    pub fn trace(&self) -> f64 {
        match *self {
            SymTensor::One(a) => a,
            SymTensor::Two { xx, yy, .. } => xx + yy,
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(match *self {
            SymTensor::One(a) => SymTensor::One(1.0 / a),
            SymTensor::Two { xx, xy, yy } => SymTensor::Two {
                xx: yy / det,
                xy: -xy / det,
                yy: xx / det,
            },
        })
    }

    /// Largest and smallest eigenvalue.
    pub fn eigenvalues(&self) -> (f64, f64) {
        match *self {
            SymTensor::One(a) => (a, a),
            SymTensor::Two { xx, xy, yy } => {
                let half_tr = 0.5 * (xx + yy);
                let rad = (0.5 * (xx - yy)).hypot(xy);
                let max = half_tr + rad;
                // det / max avoids cancellation when the spectrum is spread
                let min = if max > 0.0 { self.det() / max } else { half_tr - rad };
                (max, min)
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.is_finite() && self.min_eigenvalue() > 0.0
    }

    /// Lower Cholesky factor as `(l11, l21, l22)`. `None` unless SPD.
    pub fn cholesky(&self) -> Option<(f64, f64, f64)> {
        match *self {
            SymTensor::One(a) => (a > 0.0).then(|| (a.sqrt(), 0.0, 0.0)),
            SymTensor::Two { xx, xy, yy } => {
                if !(xx > 0.0) {
                    return None;
                }
                let l11 = xx.sqrt();
                let l21 = xy / l11;
                let s = yy - l21 * l21;
                (s > 0.0).then(|| (l11, l21, s.sqrt()))
            }
        }
    }

    /// Smallest λ with `det(self − λ·base) = 0`, i.e. the minimum of
    /// `self(v,v) / base(v,v)` over nonzero `v`. `base` must be SPD.
    pub fn min_generalized_eigenvalue(&self, base: &SymTensor) -> Option<f64> {
        match (*self, *base) {
            (SymTensor::One(a), SymTensor::One(b)) => (b > 0.0).then(|| a / b),
            (SymTensor::Two { xx, xy, yy }, SymTensor::Two { .. }) => {
                let (l11, l21, l22) = base.cholesky()?;
                // C = L^{-1} A L^{-T}
                let c11 = xx / (l11 * l11);
                let t = (xy - l21 * c11 * l11) / l22; // (L^{-1} A)_{21} scaled
                let c12 = t / l11;
                let c22 = (yy - 2.0 * l21 * xy / l11 + l21 * l21 * xx / (l11 * l11)) / (l22 * l22);
                Some(
                    SymTensor::Two {
                        xx: c11,
                        xy: c12,
                        yy: c22,
                    }
                    .min_eigenvalue(),
                )
            }
            _ => None,
        }
    }

    /// Dual norm `sqrt(w^T G^{-1} w)`.
    pub fn dual_norm(&self, w: &Covector) -> Option<f64> {
        let inv = self.inverse()?;
        Some(inv.quad(w).max(0.0).sqrt())
    }

    /// `self + scale · w ⊗ w`.
    pub fn rank_one_update(&self, w: &Covector, scale: f64) -> Self {
        match *self {
            SymTensor::One(a) => SymTensor::One(a + scale * w[0] * w[0]),
            SymTensor::Two { xx, xy, yy } => SymTensor::Two {
                xx: xx + scale * w[0] * w[0],
                xy: xy + scale * w[0] * w[1],
                yy: yy + scale * w[1] * w[1],
            },
        }
    }
}

impl From<SymTensor> for Vec<f64> {
    fn from(t: SymTensor) -> Self {
        t.coefficients()
    }
}

impl TryFrom<Vec<f64>> for SymTensor {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SymTensor::from_coefficients(&v)
    }
}
