use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{KornError, Result};

/// Isotropic `L0 e = lambda tr(e) I + 2 mu e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for ElasticityTensor {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0 }
    }
}

impl ElasticityTensor {
    /// Requires `mu > 0` and `lambda + 2 mu / 3 >= 0` so that `L0` is
    /// positive semidefinite on symmetric matrices.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lambda + 2.0 * mu / 3.0 >= 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(KornError::InvalidArgument(format!(
                "Lame parameters (lambda = {lambda}, mu = {mu}) are not admissible"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.lambda * t, self.mu * t)
    }

    pub fn apply(&self, e: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::identity() * (self.lambda * e.trace()) + e * (2.0 * self.mu)
    }

    /// `(L0 e, e)`.
    pub fn energy(&self, e: &Matrix3<f64>) -> f64 {
        self.lambda * e.trace().powi(2) + 2.0 * self.mu * e.norm_squared()
    }
}

/// Axisymmetric prestress `sigma(rho, z)` in the cylindrical frame.
#[derive(Clone)]
pub struct StressField {
    label: String,
    f: Arc<dyn Fn(f64, f64) -> Matrix3<f64> + Send + Sync>,
}

impl std::fmt::Debug for StressField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StressField({})", self.label)
    }
}

impl StressField {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// `sigma = -e_rho (x) e_rho`.
    pub fn radial_compression() -> Self {
        let mut s = Matrix3::zeros();
        s[(0, 0)] = -1.0;
        Self::new("radial-compression", move |_, _| s)
    }

    /// `sigma = -I`.
    pub fn uniform_compression() -> Self {
        Self::new("uniform-compression", |_, _| -Matrix3::identity())
    }

    pub fn scaled(&self, t: f64) -> Self {
        let inner = self.f.clone();
        Self::new(format!("{t}*{}", self.label), move |rho, z| inner(rho, z) * t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at(&self, rho: f64, z: f64) -> Matrix3<f64> {
        (self.f)(rho, z)
    }
}
