use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylfield::gauss_legendre;
use crate::error::{KornError, Result};

/// Continuous piecewise-cubic Hermite function: values and slopes at knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline1D {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl Spline1D {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || values.len() != knots.len() || slopes.len() != knots.len() {
            return Err(KornError::InvalidArgument("spline needs >= 2 knots with one value and slope each".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(KornError::InvalidArgument("spline knots must increase strictly".into()));
        }
        if knots.iter().chain(&values).chain(&slopes).any(|v| !v.is_finite()) {
            return Err(KornError::NonFinite("spline data".into()));
        }
        Ok(Self { knots, values, slopes })
    }

    /// Constant function on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, c: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![c, c], vec![0.0, 0.0])
    }

    /// Random spline with `pieces` pieces on `[lo, hi]`, optionally pinned to
    /// zero at `lo`.
    pub fn random(seed: u64, lo: f64, hi: f64, pieces: usize, zero_at_lo: bool) -> Result<Self> {
        if pieces == 0 || !(lo < hi) {
            return Err(KornError::InvalidArgument("random spline needs pieces >= 1 on a nonempty interval".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Jittered interior knots keep the pieces from degenerating.
        let step = (hi - lo) / pieces as f64;
        let mut knots = vec![lo];
        for i in 1..pieces {
            knots.push(lo + step * (i as f64 + rng.random_range(-0.3..0.3)));
        }
        knots.push(hi);
        let scale = 1.0 / (hi - lo);
        let values: Vec<f64> = (0..=pieces)
            .map(|i| if i == 0 && zero_at_lo { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let slopes = (0..=pieces).map(|_| rng.random_range(-2.0..2.0) * scale).collect();
        Self::new(knots, values, slopes)
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().expect("at least two knots")
    }

    /// `(f, f')`; constant extension outside the knot range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return (self.values[0], if t == self.knots[0] { self.slopes[0] } else { 0.0 });
        }
        if t >= self.knots[n - 1] {
            return (self.values[n - 1], if t == self.knots[n - 1] { self.slopes[n - 1] } else { 0.0 });
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let d = x1 - x0;
        let s = (t - x0) / d;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.slopes[i] * d, self.slopes[i + 1] * d);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let dv = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1;
        (v, dv / d)
    }

    /// `int_lo^hi g(t, f(t), f'(t)) dt` with an 8-point Gauss rule on every
    /// piece between consecutive knots (and `lo`, `hi`). Exact whenever `g`
    /// is a polynomial of degree <= 15 in `t` on each piece.
    pub fn integrate(&self, lo: f64, hi: f64, g: impl Fn(f64, f64, f64) -> f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        let mut cuts = vec![lo];
        cuts.extend(self.knots.iter().copied().filter(|&k| k > lo && k < hi));
        cuts.push(hi);
        let rule = gauss_legendre(8);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(x, wt) in &rule {
                let t = mid + half * x;
                let (f, df) = self.eval(t);
                total += half * wt * g(t, f, df);
            }
        }
        total
    }

    pub fn scaled(&self, s: f64) -> Spline1D {
        Spline1D {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            slopes: self.slopes.iter().map(|v| v * s).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_a_cubic_exactly() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let dp = |t: f64| -2.0 + 1.5 * t * t;
        let knots = vec![0.0, 0.3, 1.0];
        let s = Spline1D::new(knots.clone(), knots.iter().map(|&t| p(t)).collect(), knots.iter().map(|&t| dp(t)).collect()).unwrap();
        for t in [0.1, 0.5, 0.77] {
            let (v, d) = s.eval(t);
            assert!((v - p(t)).abs() < 1e-14);
            assert!((d - dp(t)).abs() < 1e-13);
        }
        let int = s.integrate(0.0, 1.0, |_, f, _| f * f);
        let exact: f64 = crate::cylfield::composite_nodes(0.0, 1.0, 4, crate::cylfield::Rule::Gauss(8))
            .iter()
            .map(|&(t, w)| w * p(t) * p(t))
            .sum();
        assert!((int - exact).abs() < 1e-14);
    }

    #[test]
    fn random_spline_is_pinned_and_deterministic() {
        let a = Spline1D::random(1, 0.1, 1.0, 6, true).unwrap();
        assert_eq!(a.eval(0.1).0, 0.0);
        assert_eq!(a, Spline1D::random(1, 0.1, 1.0, 6, true).unwrap());
    }
}
