use serde::Serialize;

use super::registry::{InequalityId, InputClass};
use crate::cylfield::{rect_integral, washer_norm_set, BoundaryCondition, FourierField, QuadratureSpec, RectField, Weight};
use crate::error::{KornError, Result};
use crate::testfields::{HarmonicRectField, Spline1D};

/// Smallest slack granted to any comparison.
pub const MIN_SLACK: f64 = 1e-6;
/// `lhs <= DEGENERATE_TOL * scale` passes when the right side vanishes.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Largest admissible relative Laplacian of a "harmonic" input.
pub const HARMONIC_TOL: f64 = 1e-8;
/// Relative tolerance on boundary traces.
pub const TRACE_TOL: f64 = 1e-9;

/// Input of one evaluation; see [`InputClass`] for which entry takes what.
#[derive(Debug, Clone)]
pub enum AuditInput {
    Washer(FourierField),
    Rect(RectField),
    Harmonic(HarmonicRectField),
    Spline(Spline1D),
}

impl AuditInput {
    fn kind(&self) -> &'static str {
        match self {
            Self::Washer(_) => "washer",
            Self::Rect(_) => "rect",
            Self::Harmonic(_) => "harmonic",
            Self::Spline(_) => "spline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditParams {
    /// Rule on the washer cross-section, panels `(rho, z)`.
    pub washer_spec: QuadratureSpec,
    /// Rule on rectangles, panels `(x, y)`.
    pub rect_spec: QuadratureSpec,
    /// `eps` of the interval Hardy inequality.
    pub epsilon: f64,
    /// `c` in `h <= c l` for the weighted rectangle inequality.
    pub thinness: f64,
    /// Candidate constant for entries without a stated one.
    pub candidate: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for AuditParams {
    fn default() -> Self {
        Self {
            washer_spec: QuadratureSpec::gauss(4, 1, 8),
            rect_spec: QuadratureSpec::gauss(2, 4, 8),
            epsilon: 0.5,
            thinness: 1.0,
            candidate: None,
            seed: None,
        }
    }
}

/// Both sides of the printed reading of the weighted rectangle inequality,
/// `||sqrt(y) f||^2 ||sqrt(y) e||^2 / h + ||sqrt(y) e||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlternateReading {
    pub rhs: f64,
    pub ratio: f64,
    pub raw_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub seed: Option<u64>,
    pub lhs: f64,
    /// `applied constant * bracket`, or the bare bracket without a constant.
    pub rhs: f64,
    /// `lhs / rhs`.
    pub ratio: f64,
    /// Constant used; `None` reads as "empirical".
    pub constant: Option<f64>,
    pub pass: bool,
    /// Right side without the constant.
    pub bracket: f64,
    /// `lhs / bracket`: the smallest constant that would make this input pass.
    pub raw_ratio: f64,
    pub slack: f64,
    pub quadrature_error_estimate: f64,
    pub alternate: Option<AlternateReading>,
    pub input_digest: String,
}

struct Sides {
    lhs: f64,
    bracket: f64,
    alt_bracket: Option<f64>,
    /// Norm scale used for the degenerate-zero test.
    scale: f64,
}

fn hypothesis(h: impl Into<String>, measured: f64) -> KornError {
    KornError::Hypothesis {
        hypothesis: h.into(),
        measured,
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// `q / d` without NaN: a vanishing denominator gives `0` for a negligible
/// numerator and `+inf` otherwise.
fn safe_ratio(q: f64, d: f64, scale: f64) -> f64 {
    if d > 0.0 {
        q / d
    } else if q <= DEGENERATE_TOL * scale {
        0.0
    } else {
        f64::INFINITY
    }
}

fn check_washer(id: InequalityId, field: &FourierField, grad: f64) -> Result<()> {
    let g = field.geometry();
    let amplitude = (grad / g.volume()).sqrt() * g.width();
    let tol = TRACE_TOL * amplitude.max(1.0);
    let ok = match id.input_class() {
        InputClass::WasherV1 => field.satisfies(BoundaryCondition::V1, tol),
        InputClass::WasherV2 => field.satisfies(BoundaryCondition::V2, tol),
        _ => field.admissible_space(tol).is_some(),
    };
    if !ok {
        let t = field.lateral_trace_max(9);
        let what = match id.input_class() {
            InputClass::WasherV1 => "u in V1",
            InputClass::WasherV2 => "u in V2",
            _ => "u in V1 or V2",
        };
        return Err(hypothesis(what, t.iter().fold(0.0, |a: f64, b| a.max(*b))));
    }
    Ok(())
}

fn washer_sides(id: InequalityId, field: &FourierField, spec: &QuadratureSpec) -> Result<Sides> {
    let n = washer_norm_set(field, spec)?;
    let g = field.geometry();
    let h = g.thickness;
    let (lhs, bracket) = match id {
        InequalityId::Korn15Washer => (n.grad, (n.uz * n.strain).max(0.0).sqrt() / h + n.strain),
        InequalityId::Korn1Washer => (n.grad, n.strain / (h * h)),
        InequalityId::BlockZ => (n.block_z, n.strain),
        InequalityId::RadialTrace => (n.urho_inv, n.strain),
        InequalityId::PoincareUzV2 => (n.uz, n.uz_rho),
        InequalityId::PoincareUzV1 => {
            // || sqrt(rho)(u_z - m) ||^2 with m the rho-weighted mean.
            let shifted = (n.uz - n.uz_mean * n.uz_mean / g.volume()).max(0.0);
            (shifted, n.grad_uz)
        }
        other => unreachable!("{other} is not a washer entry"),
    };
    Ok(Sides {
        lhs,
        bracket,
        alt_bracket: None,
        scale: n.grad.max(n.uz),
    })
}

fn rect_sides(id: InequalityId, field: &RectField, spec: &QuadratureSpec) -> Result<Sides> {
    let g = &field.geometry;
    let weight = if id == InequalityId::Korn15RectW { Weight::Y } else { Weight::Unit };
    let sq = |v: f64| v * v;
    let grad = rect_integral(g, weight, spec, |x, y| {
        let (f, gg) = (field.f.eval(x, y), field.g.eval(x, y));
        sq(f.d1) + sq(f.d2) + sq(gg.d1) + sq(gg.d2)
    })?;
    let e2 = rect_integral(g, weight, spec, |x, y| {
        let (f, gg) = (field.f.eval(x, y), field.g.eval(x, y));
        sq(f.d1) + sq(gg.d2) + 2.0 * sq(0.5 * (f.d2 + gg.d1))
    })?;
    let f2 = rect_integral(g, weight, spec, |x, y| sq(field.f.eval(x, y).v))?;
    let h = g.width;
    let bracket = (f2 * e2).max(0.0).sqrt() / h + e2;
    let alt_bracket = (id == InequalityId::Korn15RectW).then(|| f2 * e2 / h + e2);
    Ok(Sides {
        lhs: grad,
        bracket,
        alt_bracket,
        scale: grad + f2,
    })
}

fn check_rect(id: InequalityId, field: &RectField, params: &AuditParams) -> Result<()> {
    let g = &field.geometry;
    let samples = 33;
    let xs = (0..samples).map(|k| g.width * k as f64 / (samples - 1) as f64);
    let mut amp = 0.0f64;
    for i in 0..samples {
        for j in 0..samples {
            let x = g.width * i as f64 / (samples - 1) as f64;
            let y = g.lower + g.length() * j as f64 / (samples - 1) as f64;
            amp = amp.max(field.f.eval(x, y).v.abs()).max(field.g.eval(x, y).v.abs());
        }
    }
    let tol = TRACE_TOL * amp.max(1.0);
    match id {
        InequalityId::Korn15RectW => {
            g.check_weighted(params.thinness)?;
            let worst = xs
                .map(|x| field.f.eval(x, g.lower).v.abs().max(field.f.eval(x, g.upper).v.abs()))
                .fold(0.0, f64::max);
            if worst > tol {
                return Err(hypothesis("f(x,l) = f(x,L) = 0", worst));
            }
        }
        InequalityId::Korn15RectU => {
            if g.lower != 0.0 {
                return Err(hypothesis("rectangle (0,h) x (0,L)", g.lower));
            }
            let (mut zero_g, mut periodic_f) = (0.0f64, 0.0f64);
            for x in xs {
                zero_g = zero_g.max(field.g.eval(x, 0.0).v.abs());
                periodic_f = periodic_f.max((field.f.eval(x, 0.0).v - field.f.eval(x, g.upper).v).abs());
            }
            if zero_g > tol && periodic_f > tol {
                return Err(hypothesis("g(x,0) = 0 or f(x,0) = f(x,L)", zero_g.min(periodic_f)));
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn check_harmonic(field: &HarmonicRectField) -> Result<()> {
    let g = &field.geometry;
    if g.lower <= 0.0 {
        return Err(hypothesis("l > 0", g.lower));
    }
    // Relative Laplacian: |f_xx + f_yy| against |f_xx| + |f_yy| term by term.
    let l = g.length();
    let mut scale = 0.0;
    for t in &field.terms {
        let w = t.k as f64 * std::f64::consts::PI / l;
        scale += w * w * (t.a.abs() * (w * g.width).cosh() + t.b.abs() * (w * g.width).sinh());
    }
    let mut worst = 0.0f64;
    let mut edge = 0.0f64;
    for i in 0..=8 {
        let x = g.width * i as f64 / 8.0;
        for j in 0..=8 {
            let y = g.lower + l * j as f64 / 8.0;
            worst = worst.max(field.laplacian(x, y).abs());
        }
        edge = edge.max(field.eval(x, g.lower).v.abs()).max(field.eval(x, g.upper).v.abs());
    }
    if worst > HARMONIC_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(hypothesis("harmonic", worst / scale));
    }
    if edge > TRACE_TOL * (scale * l * l).max(1.0) {
        return Err(hypothesis("f(x,l) = f(x,L) = 0", edge));
    }
    Ok(())
}

fn harmonic_sides(id: InequalityId, field: &HarmonicRectField, spec: &QuadratureSpec) -> Result<Sides> {
    let g = &field.geometry;
    let h = g.width;
    let sq = |v: f64| v * v;
    match id {
        InequalityId::HarmonicSep => {
            let fy = rect_integral(g, Weight::Y, spec, |x, y| sq(field.eval(x, y).d2))?;
            let fx = rect_integral(g, Weight::Y, spec, |x, y| sq(field.eval(x, y).d1))?;
            let f = rect_integral(g, Weight::Y, spec, |x, y| sq(field.eval(x, y).v))?;
            Ok(Sides {
                lhs: fy,
                bracket: (fx * f).sqrt() / h + fx,
                alt_bracket: None,
                scale: fx + fy + f,
            })
        }
        InequalityId::CaccioppoliW => {
            // delta has a kink at h/2, which must fall on a panel boundary.
            let mut s = *spec;
            if s.n1 % 2 == 1 {
                s.n1 += 1;
            }
            let lhs = rect_integral(g, Weight::Y, &s, |x, y| {
                let j = field.eval(x, y);
                sq(x.min(h - x)) * (sq(j.d1) + sq(j.d2))
            })?;
            let f = rect_integral(g, Weight::Y, &s, |x, y| sq(field.eval(x, y).v))?;
            Ok(Sides {
                lhs,
                bracket: f,
                alt_bracket: None,
                scale: f + lhs,
            })
        }
        other => unreachable!("{other} is not a harmonic entry"),
    }
}

fn spline_sides(id: InequalityId, f: &Spline1D, params: &AuditParams) -> Result<Sides> {
    let (a, b) = (f.lo(), f.hi());
    let scale = f.integrate(a, b, |_, v, d| v * v + d * d);
    match id {
        InequalityId::HardyInterval => {
            let eps = params.epsilon;
            // Only `b - t` enters, so the inequality is translation invariant
            // and a left end at the origin is harmless.
            if a < 0.0 {
                return Err(hypothesis("b > a >= 0", a));
            }
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(hypothesis("eps in (0, 1]", eps));
            }
            let m = a + eps * (b - a);
            let lhs = if m < b { f.integrate(m, b, |_, v, _| v * v) } else { 0.0 };
            let near = f.integrate(a, m, |_, v, _| v * v);
            let tail = f.integrate(a, b, |t, _, d| d * d * (b - t) * (b - t));
            Ok(Sides {
                lhs,
                bracket: 2.0 / eps * near + 4.0 * tail,
                alt_bracket: None,
                scale,
            })
        }
        InequalityId::HardyAnnulus => {
            let (r, big_r) = (a, b);
            if !(big_r > 2.0 * r && r > 0.0) {
                return Err(hypothesis("R > 2r > 0", big_r / r));
            }
            let f0 = f.eval(r).0.abs();
            if f0 > TRACE_TOL * scale.sqrt().max(1.0) {
                return Err(hypothesis("f(r) = 0", f0));
            }
            let mid = 0.5 * (big_r + r);
            let lhs = f.integrate(r, mid, |t, v, _| t * v * v);
            let outer = f.integrate(mid, big_r, |t, v, _| t * v * v);
            let slope = f.integrate(r, big_r, |t, _, d| t * d * d);
            Ok(Sides {
                lhs,
                bracket: 4.0 * outer + big_r * big_r * slope,
                alt_bracket: None,
                scale,
            })
        }
        other => unreachable!("{other} is not a one-dimensional entry"),
    }
}

fn spec_for(input: &AuditInput, params: &AuditParams) -> QuadratureSpec {
    match input {
        AuditInput::Washer(_) => params.washer_spec,
        _ => params.rect_spec,
    }
}

fn sides(id: InequalityId, input: &AuditInput, params: &AuditParams, spec: &QuadratureSpec) -> Result<Sides> {
    match input {
        AuditInput::Washer(f) => washer_sides(id, f, spec),
        AuditInput::Rect(f) => rect_sides(id, f, spec),
        AuditInput::Harmonic(f) => harmonic_sides(id, f, spec),
        AuditInput::Spline(f) => spline_sides(id, f, params),
    }
}

fn check_class(id: InequalityId, input: &AuditInput) -> Result<()> {
    let ok = matches!(
        (id.input_class(), input),
        (InputClass::Washer | InputClass::WasherV1 | InputClass::WasherV2, AuditInput::Washer(_))
            | (InputClass::RectWeighted | InputClass::RectUnweighted, AuditInput::Rect(_))
            | (InputClass::Harmonic, AuditInput::Harmonic(_))
            | (InputClass::Spline | InputClass::SplineZeroAtLo, AuditInput::Spline(_))
    );
    if ok {
        Ok(())
    } else {
        Err(KornError::UnsupportedPairing(format!("{id} does not take a {} input", input.kind())))
    }
}

fn digest(input: &AuditInput, params: &AuditParams) -> String {
    let body = match input {
        AuditInput::Washer(f) => {
            let g = f.geometry();
            let modes: Vec<String> = f.modes().iter().map(|m| m.n.to_string()).collect();
            format!("washer r={} R={} h={} modes={}", g.inner, g.outer, g.thickness, modes.join("/"))
        }
        AuditInput::Rect(f) => {
            let g = &f.geometry;
            format!("rect h={} l={} L={}", g.width, g.lower, g.upper)
        }
        AuditInput::Harmonic(f) => {
            let g = &f.geometry;
            format!("harmonic h={} l={} L={} terms={}", g.width, g.lower, g.upper, f.terms.len())
        }
        AuditInput::Spline(f) => format!("spline [{}, {}] pieces={} eps={}", f.lo(), f.hi(), f.knots.len() - 1, params.epsilon),
    };
    match params.seed {
        Some(s) => format!("seed={s} {body}"),
        None => body,
    }
}

/// Evaluates one inequality on one input. Both sides use the same
/// quadrature; the quadrature error estimate is the relative change of
/// either side when every panel is split in two.
pub fn evaluate(id: InequalityId, input: &AuditInput, params: &AuditParams) -> Result<InequalityReport> {
    check_class(id, input)?;
    let spec = spec_for(input, params);
    let s = sides(id, input, params, &spec)?;
    match input {
        AuditInput::Washer(f) => check_washer(id, f, s.scale)?,
        AuditInput::Rect(f) => check_rect(id, f, params)?,
        AuditInput::Harmonic(f) => check_harmonic(f)?,
        AuditInput::Spline(_) => {}
    }
    let estimate = match input {
        AuditInput::Spline(_) => 0.0,
        _ => {
            let fine = sides(id, input, params, &spec.refined())?;
            rel_diff(s.lhs, fine.lhs).max(rel_diff(s.bracket, fine.bracket))
        }
    };
    for v in [s.lhs, s.bracket, s.scale] {
        if !v.is_finite() {
            return Err(KornError::NonFinite(format!("{id} norms")));
        }
    }
    let constant = match input {
        AuditInput::Washer(f) => id.constant_for(f.geometry().inner, f.geometry().outer),
        _ => id.constant(),
    }
    .or(params.candidate);
    let applied = constant.map_or(1.0, |c| id.applied_constant(c));
    let rhs = applied * s.bracket;
    let slack = MIN_SLACK.max(estimate);
    let pass = if constant.is_none() {
        true
    } else if rhs > 0.0 {
        s.lhs <= rhs * (1.0 + slack)
    } else {
        s.lhs <= DEGENERATE_TOL * s.scale
    };
    let alternate = s.alt_bracket.map(|ab| AlternateReading {
        rhs: applied * ab,
        ratio: safe_ratio(s.lhs, applied * ab, s.scale),
        raw_ratio: safe_ratio(s.lhs, ab, s.scale),
    });
    Ok(InequalityReport {
        id,
        seed: params.seed,
        lhs: s.lhs,
        rhs,
        ratio: safe_ratio(s.lhs, rhs, s.scale),
        constant,
        pass,
        bracket: s.bracket,
        raw_ratio: safe_ratio(s.lhs, s.bracket, s.scale),
        slack,
        quadrature_error_estimate: estimate,
        alternate,
        input_digest: digest(input, params),
    })
}
