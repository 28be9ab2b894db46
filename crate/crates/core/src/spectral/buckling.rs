use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;

use super::forms::{assemble_buckling, Grid};
use super::korn::MAX_MODE_CUTOFF;
use super::stress::{ElasticityTensor, StressField};
use crate::cylfield::{sym, theta_weights, washer_integral, BoundaryCondition, FourierField, ModeGradient, QuadratureSpec, WasherGeometry, Weight};
use crate::error::{KornError, Result};
use crate::linalg::{smallest_eigenpairs, PencilOptions};

/// Value of `R(h, phi) = int (L0 e, e) rho / -int (sigma, grad^T grad) rho`.
///
/// The minus sign makes compressive prestress count as destabilizing, so
/// `sigma = -I` gives the denominator `||sqrt(rho) grad phi||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BucklingOutcome {
    Quotient { value: f64, numerator: f64, denominator: f64 },
    /// The prestress does no destabilizing work on this field.
    NonDestabilizing { numerator: f64, denominator: f64 },
}

impl BucklingOutcome {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Quotient { value, .. } => Some(value),
            Self::NonDestabilizing { .. } => None,
        }
    }
}

fn check_sigma(s: &Matrix3<f64>, rho: f64, z: f64) -> Result<()> {
    let scale = s.abs().max().max(1.0);
    if !s.iter().all(|v| v.is_finite()) || (s - s.transpose()).abs().max() > 1e-12 * scale {
        return Err(KornError::InvalidArgument(format!(
            "stress is not a finite symmetric matrix at rho = {rho}, z = {z}"
        )));
    }
    Ok(())
}

/// Both forms are integrated mode by mode: `sigma` does not depend on
/// `theta`, so distinct Fourier modes do not interact.
pub fn buckling_quotient(
    field: &FourierField,
    sigma: &StressField,
    l0: &ElasticityTensor,
    spec: &QuadratureSpec,
) -> Result<BucklingOutcome> {
    let geom = field.geometry();
    let mut failure = None;
    let den = washer_integral(geom, Weight::Rho, spec, |rho, z| {
        let s = sigma.at(rho, z);
        if failure.is_none() {
            failure = check_sigma(&s, rho, z).err();
        }
        let mut d = 0.0;
        for m in field.modes() {
            let g = ModeGradient::from_jets(m.n, &m.jets(rho, z), rho);
            let (wc, ws) = theta_weights(m.n);
            for (w, gm) in [(wc, g.cos), (ws, g.sin)] {
                if w == 0.0 {
                    continue;
                }
                d -= w * (gm * s * gm.transpose()).trace();
            }
        }
        d
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let numerator = washer_integral(geom, Weight::Rho, spec, |rho, z| {
        let mut acc = 0.0;
        for m in field.modes() {
            let g = ModeGradient::from_jets(m.n, &m.jets(rho, z), rho);
            let (wc, ws) = theta_weights(m.n);
            acc += wc * l0.energy(&sym(&g.cos)) + ws * l0.energy(&sym(&g.sin));
        }
        acc
    })?;
    if den > 0.0 {
        Ok(BucklingOutcome::Quotient {
            value: numerator / den,
            numerator,
            denominator: den,
        })
    } else {
        Ok(BucklingOutcome::NonDestabilizing {
            numerator,
            denominator: den,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeLoad {
    pub n: u32,
    /// `None` when no direction of this mode is destabilized.
    pub load: Option<f64>,
    pub residual: f64,
}

/// Smallest load factor over the discrete space, or the empty-cone tag.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CriticalLoad {
    Found {
        lambda: f64,
        mode: u32,
        #[serde(skip)]
        vector: Vec<f64>,
        residual: f64,
        per_mode: Vec<ModeLoad>,
    },
    /// No admissible field makes the denominator positive.
    EmptyCone { per_mode: Vec<ModeLoad> },
}

impl CriticalLoad {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::Found { lambda, .. } => Some(*lambda),
            Self::EmptyCone { .. } => None,
        }
    }

    pub fn per_mode(&self) -> &[ModeLoad] {
        match self {
            Self::Found { per_mode, .. } | Self::EmptyCone { per_mode } => per_mode,
        }
    }
}

/// Denominators within this fraction of the numerator scale count as zero.
const CONE_TOL: f64 = 1e-10;

/// Residual accepted once the iteration stalls. The stiffness sits on the
/// right of the pencil here, and its conditioning grows like `h^-2` times
/// the mesh term, so on the finest thin grids the attainable residual is a
/// little above the generic `1e-8`.
const BUCKLING_ACCEPT_TOL: f64 = 1e-7;

fn mode_load(
    geom: &WasherGeometry,
    n: u32,
    bc: BoundaryCondition,
    grid: Grid,
    sigma: &StressField,
    l0: &ElasticityTensor,
) -> Result<(ModeLoad, Vec<f64>)> {
    let forms = assemble_buckling(geom, n, bc, grid, sigma, l0)?;
    // Smallest mu of (-D) x = mu N x; a negative mu means D / N reaches
    // -mu > 0, i.e. the load 1 / (-mu).
    let neg_d = forms.denominator.scaled(-1.0);
    let opts = PencilOptions {
        accept_tol: BUCKLING_ACCEPT_TOL,
        ..PencilOptions::default()
    };
    let sol = smallest_eigenpairs(&neg_d, &forms.numerator, 1, &opts)?;
    let pair = sol.pairs.into_iter().next().expect("one pair requested");
    let scale = forms.denominator.max_abs() / forms.numerator.max_abs().max(f64::MIN_POSITIVE);
    let load = (pair.value < -CONE_TOL * scale.max(1.0)).then(|| -1.0 / pair.value);
    Ok((
        ModeLoad {
            n,
            load,
            residual: pair.residual,
        },
        pair.vector,
    ))
}

fn solve_modes(
    geom: &WasherGeometry,
    bc: BoundaryCondition,
    modes: &[u32],
    grid: Grid,
    sigma: &StressField,
    l0: &ElasticityTensor,
) -> Result<Vec<(ModeLoad, Vec<f64>)>> {
    modes
        .par_iter()
        .map(|&n| {
            mode_load(geom, n, bc, grid, sigma, l0).map_err(|e| KornError::Task {
                key: format!("h={} mode={n}", geom.thickness),
                source: Box::new(e),
            })
        })
        .collect()
}

fn argmin(all: &[(ModeLoad, Vec<f64>)]) -> Option<usize> {
    all.iter()
        .enumerate()
        .filter_map(|(i, (m, _))| m.load.map(|l| (i, l)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// `lambda(h) = inf R(h, phi)` over modes `0..=cutoff` on `grid`, extending
/// the cutoff while the minimizing mode sits on it.
pub fn critical_load(
    geom: &WasherGeometry,
    sigma: &StressField,
    l0: &ElasticityTensor,
    bc: BoundaryCondition,
    cutoff: u32,
    grid: Grid,
) -> Result<CriticalLoad> {
    let modes: Vec<u32> = (0..=cutoff).collect();
    let mut all = solve_modes(geom, bc, &modes, grid, sigma, l0)?;
    let mut top = cutoff;
    while let Some(i) = argmin(&all) {
        if all[i].0.n < top || top >= MAX_MODE_CUTOFF {
            break;
        }
        let next = (top + 4).min(MAX_MODE_CUTOFF);
        let extra: Vec<u32> = (top + 1..=next).collect();
        all.extend(solve_modes(geom, bc, &extra, grid, sigma, l0)?);
        top = next;
    }
    let per_mode: Vec<ModeLoad> = all.iter().map(|(m, _)| *m).collect();
    Ok(match argmin(&all) {
        Some(i) => {
            let (m, v) = all.swap_remove(i);
            CriticalLoad::Found {
                lambda: m.load.expect("argmin only picks loaded modes"),
                mode: m.n,
                vector: v,
                residual: m.residual,
                per_mode,
            }
        }
        None => CriticalLoad::EmptyCone { per_mode },
    })
}
