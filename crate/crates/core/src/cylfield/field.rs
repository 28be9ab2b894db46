use std::collections::BTreeSet;

use super::geometry::{BoundaryCondition, RectGeometry, WasherGeometry};
use super::profile::{Jet2, Profile};
use crate::error::{KornError, Result};

/// Coefficients of one Fourier mode:
/// `u_rho = a_rho cos(n theta) + b_rho sin(n theta)` and likewise for
/// `u_theta`, `u_z`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeCoeffs {
    pub n: u32,
    pub a_rho: Profile,
    pub b_rho: Profile,
    pub a_theta: Profile,
    pub b_theta: Profile,
    pub a_z: Profile,
    pub b_z: Profile,
}

/// Jets of all six coefficient functions at one `(rho, z)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModeJets {
    pub a_rho: Jet2,
    pub b_rho: Jet2,
    pub a_theta: Jet2,
    pub b_theta: Jet2,
    pub a_z: Jet2,
    pub b_z: Jet2,
}

impl ModeCoeffs {
    pub fn new(n: u32) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    pub fn jets(&self, rho: f64, z: f64) -> ModeJets {
        ModeJets {
            a_rho: self.a_rho.eval(rho, z),
            b_rho: self.b_rho.eval(rho, z),
            a_theta: self.a_theta.eval(rho, z),
            b_theta: self.b_theta.eval(rho, z),
            a_z: self.a_z.eval(rho, z),
            b_z: self.b_z.eval(rho, z),
        }
    }
}

/// Displacement on a washer given mode by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    geometry: WasherGeometry,
    modes: Vec<ModeCoeffs>,
}

impl FourierField {
    /// Mode numbers must be distinct. Sine parts of mode 0 are dropped.
    pub fn new(geometry: WasherGeometry, mut modes: Vec<ModeCoeffs>) -> Result<Self> {
        geometry.validate()?;
        let mut seen = BTreeSet::new();
        for m in &mut modes {
            if !seen.insert(m.n) {
                return Err(KornError::InvalidArgument(format!("mode {} listed twice", m.n)));
            }
            if m.n == 0 {
                m.b_rho = Profile::Zero;
                m.b_theta = Profile::Zero;
                m.b_z = Profile::Zero;
            }
        }
        modes.sort_by_key(|m| m.n);
        Ok(Self { geometry, modes })
    }

    pub fn geometry(&self) -> &WasherGeometry {
        &self.geometry
    }

    pub fn modes(&self) -> &[ModeCoeffs] {
        &self.modes
    }

    pub fn mode(&self, n: u32) -> Option<&ModeCoeffs> {
        self.modes.iter().find(|m| m.n == n)
    }

    pub fn max_mode(&self) -> u32 {
        self.modes.iter().map(|m| m.n).max().unwrap_or(0)
    }

    /// Field restricted to a single mode.
    pub fn single_mode(&self, n: u32) -> Option<FourierField> {
        self.mode(n).map(|m| FourierField {
            geometry: self.geometry,
            modes: vec![m.clone()],
        })
    }

    /// Multiply every coefficient function by `s`.
    pub fn scaled(&self, s: f64) -> FourierField {
        let scale = |p: &Profile| -> Profile {
            match p {
                Profile::Zero => Profile::Zero,
                other => {
                    let inner = other.clone();
                    Profile::closed(move |a, b| inner.eval(a, b).scale(s))
                }
            }
        };
        let modes = self
            .modes
            .iter()
            .map(|m| ModeCoeffs {
                n: m.n,
                a_rho: scale(&m.a_rho),
                b_rho: scale(&m.b_rho),
                a_theta: scale(&m.a_theta),
                b_theta: scale(&m.b_theta),
                a_z: scale(&m.a_z),
                b_z: scale(&m.b_z),
            })
            .collect();
        FourierField {
            geometry: self.geometry,
            modes,
        }
    }

    /// Cylindrical components `(u_rho, u_theta, u_z)` at a point.
    pub fn displacement(&self, rho: f64, theta: f64, z: f64) -> [f64; 3] {
        let mut u = [0.0; 3];
        for m in &self.modes {
            let (s, c) = (m.n as f64 * theta).sin_cos();
            let j = m.jets(rho, z);
            u[0] += j.a_rho.v * c + j.b_rho.v * s;
            u[1] += j.a_theta.v * c + j.b_theta.v * s;
            u[2] += j.a_z.v * c + j.b_z.v * s;
        }
        u
    }

    /// Largest boundary value of each component over `rho in {r, R}`,
    /// sampled at `samples` heights and all modes (cosine and sine parts).
    pub fn lateral_trace_max(&self, samples: usize) -> [f64; 3] {
        let g = &self.geometry;
        let mut out = [0.0f64; 3];
        let samples = samples.max(2);
        for m in &self.modes {
            for &rho in &[g.inner, g.outer] {
                for k in 0..samples {
                    let z = g.thickness * k as f64 / (samples - 1) as f64;
                    let j = m.jets(rho, z);
                    out[0] = out[0].max(j.a_rho.v.abs()).max(j.b_rho.v.abs());
                    out[1] = out[1].max(j.a_theta.v.abs()).max(j.b_theta.v.abs());
                    out[2] = out[2].max(j.a_z.v.abs()).max(j.b_z.v.abs());
                }
            }
        }
        out
    }

    /// Whether the lateral traces satisfy `bc` to within `tol`.
    pub fn satisfies(&self, bc: BoundaryCondition, tol: f64) -> bool {
        let Some(mask) = bc.washer_constraints() else {
            return false;
        };
        let t = self.lateral_trace_max(9);
        (0..3).all(|c| !mask[c] || t[c] <= tol)
    }

    /// First of `V1`, `V2` satisfied to within `tol`, if any.
    pub fn admissible_space(&self, tol: f64) -> Option<BoundaryCondition> {
        [BoundaryCondition::V1, BoundaryCondition::V2]
            .into_iter()
            .find(|&bc| self.satisfies(bc, tol))
    }
}

/// Planar displacement `U = (f, g)` on a rectangle; `f` is the component
/// along the thin `x` direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RectField {
    pub geometry: RectGeometry,
    pub f: Profile,
    pub g: Profile,
    pub bc: Option<BoundaryCondition>,
}

impl RectField {
    pub fn new(geometry: RectGeometry, f: Profile, g: Profile, bc: Option<BoundaryCondition>) -> Result<Self> {
        geometry.validate()?;
        if let Some(bc) = bc {
            if bc.is_washer() {
                return Err(KornError::UnsupportedPairing(format!(
                    "{bc} is a washer condition"
                )));
            }
        }
        Ok(Self { geometry, f, g, bc })
    }

    /// Largest violation of the attached boundary condition over `samples`
    /// points along the short edges.
    pub fn boundary_violation(&self, samples: usize) -> f64 {
        let t = &self.geometry;
        let samples = samples.max(2);
        let mut worst = 0.0f64;
        for k in 0..samples {
            let x = t.width * k as f64 / (samples - 1) as f64;
            let v = match self.bc {
                Some(BoundaryCondition::RectFZero) => {
                    self.f.eval(x, t.lower).v.abs().max(self.f.eval(x, t.upper).v.abs())
                }
                Some(BoundaryCondition::RectGZeroAt0) => self.g.eval(x, t.lower).v.abs(),
                Some(BoundaryCondition::RectFPeriodic) => {
                    (self.f.eval(x, t.lower).v - self.f.eval(x, t.upper).v).abs()
                }
                _ => 0.0,
            };
            worst = worst.max(v);
        }
        worst
    }
}
