use serde::Serialize;

use crate::error::{KornError, Result};

/// Least-squares line through `(log h, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub pairs: Vec<(f64, f64)>,
    /// Slope: `value ~ exp(intercept) h^exponent`.
    pub exponent: f64,
    pub intercept: f64,
    /// Largest `|log value - fitted|`.
    pub max_residual: f64,
}

impl ScalingFit {
    /// `|exponent - target| <= tol`.
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.exponent - target).abs() <= tol
    }
}

/// Ordinary least squares on log-log data; needs three or more positive pairs.
pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(KornError::InvalidArgument(format!(
            "a scaling fit needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    if let Some(&(h, v)) = pairs.iter().find(|(h, v)| !(*h > 0.0 && *v > 0.0 && h.is_finite() && v.is_finite())) {
        return Err(KornError::InvalidArgument(format!("scaling fit needs positive finite data, got ({h}, {v})")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(KornError::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).abs())
        .fold(0.0, f64::max);
    if !exponent.is_finite() {
        return Err(KornError::NonFinite("fitted exponent".into()));
    }
    Ok(ScalingFit {
        pairs: pairs.to_vec(),
        exponent,
        intercept,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_exponent(&[(0.1, 0.01), (0.05, 0.0025), (0.025, 0.000625)]).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
        let pairs: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| (h, 7.0 * h)).collect();
        let f = fit_exponent(&pairs).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_exponent(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_exponent(&[(0.1, 1.0), (0.2, -2.0), (0.3, 1.0)]).is_err());
        assert!(fit_exponent(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]).is_err());
    }
}
