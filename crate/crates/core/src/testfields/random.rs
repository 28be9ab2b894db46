use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::cylfield::{
    Axis, BoundaryCondition, EndCondition, FourierField, ModeCoeffs, PolyProfile, Profile, RectField, RectGeometry,
    WasherGeometry,
};
use crate::error::{KornError, Result};

/// Coefficient decay per polynomial degree.
pub const DEFAULT_DECAY: f64 = 0.5;
/// Highest polynomial degree per direction.
pub const MAX_DEGREE: usize = 6;
/// Random mode numbers are drawn from `0..=MAX_RANDOM_MODE` (or wider when
/// more modes are requested).
pub const MAX_RANDOM_MODE: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Washer(WasherGeometry),
    Rect(RectGeometry),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibleField {
    Washer(FourierField),
    Rect(RectField),
}

/// Deterministic random field on `domain` satisfying `bc` exactly.
pub fn random_admissible_field(
    seed: u64,
    domain: Domain,
    bc: BoundaryCondition,
    mode_count: usize,
    decay: f64,
) -> Result<AdmissibleField> {
    match domain {
        Domain::Washer(g) => random_washer_field(seed, &g, bc, mode_count, decay).map(AdmissibleField::Washer),
        Domain::Rect(g) => random_rect_field(seed, &g, bc, decay).map(AdmissibleField::Rect),
    }
}

fn check_decay(decay: f64) -> Result<()> {
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(KornError::InvalidArgument(format!("decay must be positive, got {decay}")));
    }
    Ok(())
}

fn random_poly(rng: &mut ChaCha8Rng, first: Axis, second: Axis, decay: f64) -> Profile {
    let mut coeffs = Vec::with_capacity((MAX_DEGREE + 1) * (MAX_DEGREE + 1));
    for i in 0..=MAX_DEGREE {
        for j in 0..=MAX_DEGREE {
            coeffs.push(rng.random_range(-1.0..1.0) * decay.powi((i + j) as i32));
        }
    }
    let p = PolyProfile::new(first, second, MAX_DEGREE, MAX_DEGREE, coeffs).expect("coefficient count matches");
    Profile::Poly(Arc::new(p))
}

/// Random washer field in `V1` or `V2` with `mode_count` distinct modes.
/// Constrained components carry the factor `s(1-s)`, `s = (rho-r)/(R-r)`,
/// so they vanish exactly at both lateral faces.
pub fn random_washer_field(
    seed: u64,
    geom: &WasherGeometry,
    bc: BoundaryCondition,
    mode_count: usize,
    decay: f64,
) -> Result<FourierField> {
    let mask = bc
        .washer_constraints()
        .ok_or_else(|| KornError::UnsupportedPairing(format!("{bc} is not a washer condition")))?;
    if mode_count == 0 {
        return Err(KornError::InvalidArgument("at least one mode is required".into()));
    }
    check_decay(decay)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = MAX_RANDOM_MODE.max(mode_count as u32 - 1);
    let mut pool: Vec<u32> = (0..=top).collect();
    pool.shuffle(&mut rng);
    let mut ns = pool[..mode_count].to_vec();
    ns.sort_unstable();

    let z_axis = Axis::new(0.0, geom.thickness, EndCondition::Free);
    let rho_axis = |c: usize| {
        let end = if mask[c] { EndCondition::ZeroBoth } else { EndCondition::Free };
        Axis::new(geom.inner, geom.outer, end)
    };
    let mut modes = Vec::with_capacity(mode_count);
    for n in ns {
        let mut m = ModeCoeffs::new(n);
        m.a_rho = random_poly(&mut rng, rho_axis(0), z_axis, decay);
        m.a_theta = random_poly(&mut rng, rho_axis(1), z_axis, decay);
        m.a_z = random_poly(&mut rng, rho_axis(2), z_axis, decay);
        if n > 0 {
            m.b_rho = random_poly(&mut rng, rho_axis(0), z_axis, decay);
            m.b_theta = random_poly(&mut rng, rho_axis(1), z_axis, decay);
            m.b_z = random_poly(&mut rng, rho_axis(2), z_axis, decay);
        }
        modes.push(m);
    }
    FourierField::new(*geom, modes)
}

/// Random planar field on `T = (0,h) x (l,L)` satisfying a rectangle
/// condition by construction.
pub fn random_rect_field(seed: u64, geom: &RectGeometry, bc: BoundaryCondition, decay: f64) -> Result<RectField> {
    check_decay(decay)?;
    let (f_end, g_end) = match bc {
        BoundaryCondition::RectFZero => (EndCondition::ZeroBoth, EndCondition::Free),
        BoundaryCondition::RectGZeroAt0 => (EndCondition::Free, EndCondition::ZeroLow),
        BoundaryCondition::RectFPeriodic => (EndCondition::EqualEnds, EndCondition::Free),
        other => {
            return Err(KornError::UnsupportedPairing(format!(
                "{other} is not a rectangle condition"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_axis = Axis::new(0.0, geom.width, EndCondition::Free);
    let f = random_poly(&mut rng, x_axis, Axis::new(geom.lower, geom.upper, f_end), decay);
    let g = random_poly(&mut rng, x_axis, Axis::new(geom.lower, geom.upper, g_end), decay);
    RectField::new(*geom, f, g, Some(bc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn washer() -> WasherGeometry {
        WasherGeometry::new(0.5, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn same_seed_same_field() {
        let a = random_washer_field(42, &washer(), BoundaryCondition::V1, 3, DEFAULT_DECAY).unwrap();
        let b = random_washer_field(42, &washer(), BoundaryCondition::V1, 3, DEFAULT_DECAY).unwrap();
        assert_eq!(a, b);
        let c = random_washer_field(43, &washer(), BoundaryCondition::V1, 3, DEFAULT_DECAY).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn constraints_hold_exactly() {
        for seed in 0..20 {
            let f = random_washer_field(seed, &washer(), BoundaryCondition::V1, 4, DEFAULT_DECAY).unwrap();
            let t = f.lateral_trace_max(7);
            assert_eq!(t[0], 0.0);
            assert_eq!(t[1], 0.0);
            assert!(t[2] > 0.0);
            let f = random_washer_field(seed, &washer(), BoundaryCondition::V2, 4, DEFAULT_DECAY).unwrap();
            let t = f.lateral_trace_max(7);
            assert_eq!(t[1], 0.0);
            assert_eq!(t[2], 0.0);
        }
    }

    #[test]
    fn modes_are_distinct() {
        let f = random_washer_field(9, &washer(), BoundaryCondition::V2, 5, DEFAULT_DECAY).unwrap();
        let ns: Vec<u32> = f.modes().iter().map(|m| m.n).collect();
        assert_eq!(ns.len(), 5);
        assert!(ns.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rect_conditions_hold() {
        let g = RectGeometry::new(0.1, 0.5, 1.0).unwrap();
        for bc in [
            BoundaryCondition::RectFZero,
            BoundaryCondition::RectGZeroAt0,
            BoundaryCondition::RectFPeriodic,
        ] {
            let f = random_rect_field(3, &g, bc, DEFAULT_DECAY).unwrap();
            assert!(f.boundary_violation(11) <= 1e-14, "{bc}");
        }
        assert!(random_rect_field(3, &g, BoundaryCondition::V1, 0.5).is_err());
        assert!(random_washer_field(3, &washer(), BoundaryCondition::RectFZero, 1, 0.5).is_err());
    }
}
