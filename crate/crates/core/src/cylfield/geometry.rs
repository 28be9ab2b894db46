use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};

/// Annular plate `r <= rho <= R`, `0 <= z <= h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WasherGeometry {
    pub inner: f64,
    pub outer: f64,
    pub thickness: f64,
    /// Thinness bound `c` in `h <= c r`.
    pub thinness: f64,
}

impl WasherGeometry {
    pub fn new(inner: f64, outer: f64, thickness: f64, thinness: f64) -> Result<Self> {
        let g = Self {
            inner,
            outer,
            thickness,
            thinness,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.inner, self.outer, self.thickness, self.thinness];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(KornError::InvalidGeometry("non-finite washer parameter".into()));
        }
        if !(self.inner > 0.0 && self.inner < self.outer) {
            return Err(KornError::InvalidGeometry(format!(
                "need 0 < r < R, got r={} R={}",
                self.inner, self.outer
            )));
        }
        if self.thickness <= 0.0 {
            return Err(KornError::InvalidGeometry(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        if self.thickness > self.thinness * self.inner {
            return Err(KornError::InvalidGeometry(format!(
                "h={} exceeds c*r={}",
                self.thickness,
                self.thinness * self.inner
            )));
        }
        Ok(())
    }

    /// Same radii and thinness bound, different thickness.
    pub fn with_thickness(&self, h: f64) -> Result<Self> {
        Self::new(self.inner, self.outer, h, self.thinness)
    }

    pub fn width(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn mid_radius(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }

    /// Volume of the solid, `pi h (R^2 - r^2)`.
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.thickness * (self.outer.powi(2) - self.inner.powi(2))
    }

    pub fn contains(&self, rho: f64, z: f64) -> bool {
        let tr = 1e-12 * self.outer;
        let tz = 1e-12 * self.thickness;
        rho >= self.inner - tr && rho <= self.outer + tr && z >= -tz && z <= self.thickness + tz
    }
}

/// Rectangle `T = (0, h) x (l, L)`; `x` is the thin direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectGeometry {
    pub width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RectGeometry {
    /// `l = 0` is accepted; the y-weighted inequalities additionally need
    /// [`RectGeometry::check_weighted`].
    pub fn new(width: f64, lower: f64, upper: f64) -> Result<Self> {
        let g = Self { width, lower, upper };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.width, self.lower, self.upper].iter().all(|v| v.is_finite()) {
            return Err(KornError::InvalidGeometry("non-finite rectangle parameter".into()));
        }
        if self.width <= 0.0 {
            return Err(KornError::InvalidGeometry(format!(
                "width must be positive, got {}",
                self.width
            )));
        }
        if !(self.lower >= 0.0 && self.upper > self.lower) {
            return Err(KornError::InvalidGeometry(format!(
                "need L > l >= 0, got l={} L={}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Hypothesis of the weighted rectangle inequalities: `l > 0` and `h <= c l`.
    pub fn check_weighted(&self, c: f64) -> Result<()> {
        if self.lower <= 0.0 {
            return Err(KornError::Hypothesis {
                hypothesis: "l > 0".into(),
                measured: self.lower,
            });
        }
        if self.width > c * self.lower {
            return Err(KornError::Hypothesis {
                hypothesis: format!("h <= c*l with c={c}"),
                measured: self.width / self.lower,
            });
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// `u_theta = u_rho = 0` on `rho = r` and `rho = R`.
    V1,
    /// `u_theta = u_z = 0` on `rho = r` and `rho = R`.
    V2,
    /// `f(x, l) = f(x, L) = 0`.
    RectFZero,
    /// `g(x, l) = 0`.
    RectGZeroAt0,
    /// `f(x, l) = f(x, L)`.
    RectFPeriodic,
}

impl BoundaryCondition {
    pub fn is_washer(self) -> bool {
        matches!(self, Self::V1 | Self::V2)
    }

    /// Which of `(u_rho, u_theta, u_z)` vanish on the lateral faces.
    pub fn washer_constraints(self) -> Option<[bool; 3]> {
        match self {
            Self::V1 => Some([true, true, false]),
            Self::V2 => Some([false, true, true]),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::V1 => "v1",
            Self::V2 => "v2",
            Self::RectFZero => "rect-f-zero",
            Self::RectGZeroAt0 => "rect-g-zero-at-0",
            Self::RectFPeriodic => "rect-f-periodic",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundaryCondition {
    type Err = KornError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v1" => Ok(Self::V1),
            "v2" => Ok(Self::V2),
            "rect-f-zero" | "rect_f_zero" => Ok(Self::RectFZero),
            "rect-g-zero-at-0" | "rect_g_zero_at_0" => Ok(Self::RectGZeroAt0),
            "rect-f-periodic" | "rect_f_periodic" => Ok(Self::RectFPeriodic),
            other => Err(KornError::InvalidArgument(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn washer_invariants() {
        assert!(WasherGeometry::new(0.5, 1.0, 0.1, 1.0).is_ok());
        assert!(WasherGeometry::new(1.0, 0.5, 0.1, 1.0).is_err());
        assert!(WasherGeometry::new(0.0, 0.5, 0.1, 1.0).is_err());
        assert!(WasherGeometry::new(0.5, 1.0, -0.1, 1.0).is_err());
        // h <= c r
        assert!(WasherGeometry::new(0.5, 1.0, 0.6, 1.0).is_err());
        assert!(WasherGeometry::new(0.5, 1.0, 0.6, 2.0).is_ok());
    }

    #[test]
    fn rect_invariants() {
        assert!(RectGeometry::new(0.1, 0.5, 1.0).is_ok());
        assert!(RectGeometry::new(0.1, 0.0, 1.0).is_ok());
        assert!(RectGeometry::new(0.1, 1.0, 1.0).is_err());
        let t = RectGeometry::new(0.1, 0.0, 1.0).unwrap();
        assert!(t.check_weighted(1.0).is_err());
        let t = RectGeometry::new(0.1, 0.05, 1.0).unwrap();
        assert!(t.check_weighted(1.0).is_err());
        assert!(t.check_weighted(2.0).is_ok());
    }

    #[test]
    fn bc_round_trip() {
        for bc in [
            BoundaryCondition::V1,
            BoundaryCondition::V2,
            BoundaryCondition::RectFZero,
            BoundaryCondition::RectGZeroAt0,
            BoundaryCondition::RectFPeriodic,
        ] {
            assert_eq!(bc.to_string().parse::<BoundaryCondition>().unwrap(), bc);
        }
        assert!("v3".parse::<BoundaryCondition>().is_err());
    }
}
