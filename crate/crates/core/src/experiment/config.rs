use serde::Serialize;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::audit::InequalityId;
use crate::cylfield::{BoundaryCondition, QuadratureSpec, WasherGeometry};
use crate::error::{KornError, Result};
use crate::spectral::{ElasticityTensor, Grid, DEFAULT_MODE_CUTOFF};
use crate::testfields::BumpKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Korn constant `K(h)` of the washer.
    Korn1,
    /// Empirical first-and-a-half constant.
    Korn15,
    /// Norms of the bending ansatz.
    Ansatz,
    /// Critical load against the Korn constant.
    Buckling,
    /// Randomized inequality audits.
    Audit,
}

impl Study {
    pub const ALL: [Study; 5] = [Study::Korn1, Study::Korn15, Study::Ansatz, Study::Buckling, Study::Audit];

    pub fn name(self) -> &'static str {
        match self {
            Study::Korn1 => "korn1",
            Study::Korn15 => "korn15",
            Study::Ansatz => "ansatz",
            Study::Buckling => "buckling",
            Study::Audit => "audit",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = KornError;
    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| KornError::InvalidArgument(format!("unknown study `{s}`")))
    }
}

/// Grid of the coarsest level for thickness `h`: `n_z` cells across the
/// thickness and enough radial cells that `d_rho / d_z <= aspect`.
///
/// Bilinear elements lock in bending when cells are much longer than they
/// are thick, so the radial count has to grow like `1/h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRule {
    pub n_z: usize,
    pub aspect: f64,
    pub min_rho: usize,
    /// Number of grids in the refinement ladder.
    pub levels: usize,
    /// Fixed coarsest grid overriding the rule.
    pub fixed: Option<Grid>,
}

impl Default for GridRule {
    fn default() -> Self {
        Self {
            n_z: 4,
            aspect: 0.625,
            min_rho: 16,
            levels: 3,
            fixed: None,
        }
    }
}

impl GridRule {
    pub fn base(&self, geom: &WasherGeometry) -> Grid {
        if let Some(g) = self.fixed {
            return g;
        }
        let dz = geom.thickness / self.n_z as f64;
        let n_rho = (geom.width() / (self.aspect * dz) - 1e-9).ceil() as usize;
        Grid::new(n_rho.max(self.min_rho), self.n_z)
    }
}

/// Settings of a thickness sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub inner: f64,
    pub outer: f64,
    /// `c` in `h <= c r`.
    pub thinness: f64,
    /// Strictly decreasing thicknesses.
    pub h_list: Vec<f64>,
    pub bc: BoundaryCondition,
    pub mode_cutoff: u32,
    pub grid: GridRule,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
    pub trials: u64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub bump: BumpKind,
    /// Compression exponent of the ansatz support (`0` = Kirchhoff).
    pub alpha: f64,
    pub lame: ElasticityTensor,
    pub audit_ids: Vec<InequalityId>,
    pub candidate: Option<f64>,
    pub korn15_starts: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            inner: 0.5,
            outer: 1.0,
            thinness: 1.0,
            h_list: vec![0.1, 0.05, 0.025, 0.0125],
            bc: BoundaryCondition::V2,
            mode_cutoff: DEFAULT_MODE_CUTOFF,
            grid: GridRule::default(),
            quadrature: QuadratureSpec::default(),
            seed: 0,
            trials: 1000,
            out_dir: PathBuf::from("out"),
            workers: None,
            bump: BumpKind::ExpMollifier,
            alpha: 0.0,
            lame: ElasticityTensor::default(),
            audit_ids: InequalityId::FIXED.to_vec(),
            candidate: None,
            korn15_starts: 20,
        }
    }
}

/// Keys accepted in config files and as overrides.
pub const CONFIG_KEYS: &str = "\
r             inner radius (0.5)
R             outer radius (1.0)
c             thinness bound, h <= c r (1.0)
h_list        comma-separated decreasing thicknesses (0.1,0.05,0.025,0.0125)
h             single thickness (same as a one-element h_list)
bc            v1 | v2 (v2)
modes         Fourier mode cutoff (8)
grid          fixed coarsest grid AxB; default follows the thickness
grid_nz       cells across the thickness (4)
grid_aspect   largest cell aspect d_rho/d_z (0.625)
grid_levels   grids in the refinement ladder (3)
quadrature    panels and order N1xN2:K (8x2:5)
seed          first seed (0)
trials        number of seeds (1000)
out           output directory (out)
workers       worker threads (all cores)
bump          mollifier | poly:K (mollifier)
alpha         support compression exponent of the ansatz (0)
lame_lambda   first Lame parameter (1)
lame_mu       second Lame parameter (1)
audit         comma-separated inequality names (all with stated constants)
candidate     candidate constant for empirical inequalities
starts        starts per mode of the first-and-a-half search (20)";

fn bad(key: &str, value: &str) -> KornError {
    KornError::InvalidArgument(format!("invalid value `{value}` for `{key}`"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

impl SweepConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "r" => self.inner = num(key, v)?,
            "R" => self.outer = num(key, v)?,
            "c" => self.thinness = num(key, v)?,
            "h_list" => {
                self.h_list = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_>>()?
            }
            "h" => self.h_list = vec![num(key, v)?],
            "bc" => self.bc = v.parse().map_err(|_| bad(key, v))?,
            "modes" => self.mode_cutoff = num(key, v)?,
            "grid" => self.grid.fixed = Some(v.parse()?),
            "grid_nz" => self.grid.n_z = num(key, v)?,
            "grid_aspect" => self.grid.aspect = num(key, v)?,
            "grid_levels" => self.grid.levels = num(key, v)?,
            "quadrature" => {
                let (panels, order) = v.split_once(':').ok_or_else(|| bad(key, v))?;
                let g: Grid = panels.parse().map_err(|_| bad(key, v))?;
                self.quadrature = QuadratureSpec::gauss(g.n_rho, g.n_z, num(key, order)?);
            }
            "seed" => self.seed = num(key, v)?,
            "trials" => self.trials = num(key, v)?,
            "out" => self.out_dir = PathBuf::from(v),
            "workers" => self.workers = Some(num(key, v)?),
            "bump" => {
                self.bump = match v {
                    "mollifier" => BumpKind::ExpMollifier,
                    _ => {
                        let k = v.strip_prefix("poly:").ok_or_else(|| bad(key, v))?;
                        BumpKind::PolySpline(num(key, k)?)
                    }
                }
            }
            "alpha" => self.alpha = num(key, v)?,
            "lame_lambda" => self.lame.lambda = num(key, v)?,
            "lame_mu" => self.lame.mu = num(key, v)?,
            "audit" => {
                self.audit_ids = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse())
                    .collect::<Result<_>>()?
            }
            "candidate" => self.candidate = Some(num(key, v)?),
            "starts" => self.korn15_starts = num(key, v)?,
            other => return Err(KornError::InvalidArgument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KornError::Parse {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(k, v).map_err(|e| KornError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn geometry(&self, h: f64) -> Result<WasherGeometry> {
        WasherGeometry::new(self.inner, self.outer, h, self.thinness)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_list.is_empty() {
            return Err(KornError::InvalidArgument("h_list is empty".into()));
        }
        if self.h_list.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(KornError::InvalidArgument("h_list must be strictly decreasing".into()));
        }
        for &h in &self.h_list {
            self.geometry(h)?;
        }
        if !self.bc.is_washer() {
            return Err(KornError::UnsupportedPairing(format!("{} is not a washer condition", self.bc)));
        }
        if self.grid.levels < 2 {
            return Err(KornError::InvalidArgument("grid_levels must be at least 2".into()));
        }
        if !(self.grid.aspect > 0.0) || self.grid.n_z < 4 {
            return Err(KornError::InvalidArgument("grid rule needs aspect > 0 and grid_nz >= 4".into()));
        }
        if !(0.0..=0.5).contains(&self.alpha) {
            return Err(KornError::InvalidArgument(format!("alpha must lie in [0, 1/2], got {}", self.alpha)));
        }
        ElasticityTensor::new(self.lame.lambda, self.lame.mu)?;
        if self.trials == 0 {
            return Err(KornError::InvalidArgument("trials must be positive".into()));
        }
        Ok(())
    }
}
