//! Finite witnesses that a decaying radial kernel admits no expansion with
//! summable weights and bounded, non-vanishing basis functions.
//!
//! For a profile `F` and an oscillating template `ψ` the builder picks points
//! `y_1 < y_2 < …` with `|ψ(y_i)| > δ`, each far enough from the previous one
//! that `F(y_{i+1} - y_i) < ε / 2^{i+1}`, and coefficients
//! `a_i = sign(ψ(y_i)) / √n`. Then
//!
//! * `1 - ε < Σ_{ij} a_i a_j F(|y_i - y_j|) < 1 + ε`, since the diagonal gives
//!   exactly 1 and the off-diagonal mass is below `ε`;
//! * `(Σ_i a_i ψ(y_i))² > n δ²`.
//!
//! If `K = Σ λ_k φ_k φ_k` with one `φ_k = ψ`, the first quantity bounds
//! `λ_k (Σ a_i ψ(y_i))²` from above, so `λ_k < (1 + ε) / (n δ²)`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::SCHEMA_VERSION;
use crate::numerics::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialProfile {
    /// `e^{-u²}`
    Gaussian,
    /// `e^{-u}`
    Laplace,
    /// `1 / (1 + u²)`
    Cauchy,
}

impl RadialProfile {
    pub const ALL: [RadialProfile; 3] = [RadialProfile::Gaussian, RadialProfile::Laplace, RadialProfile::Cauchy];

    pub fn name(&self) -> &'static str {
        match self {
            RadialProfile::Gaussian => "gaussian",
            RadialProfile::Laplace => "laplace",
            RadialProfile::Cauchy => "cauchy",
        }
    }

    /// `ln F(|u|)`.
    pub fn ln_value(&self, u: f64) -> f64 {
        let u = u.abs();
        match self {
            RadialProfile::Gaussian => -u * u,
            RadialProfile::Laplace => -u,
            RadialProfile::Cauchy if u > 1e150 => -2.0 * u.ln() - (1.0 / (u * u)).ln_1p(),
            RadialProfile::Cauchy => -(u * u).ln_1p(),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.ln_value(u).exp()
    }

    /// Radius beyond which `F < e^{-level}`, for `level > 0`.
    fn radius_for_level(&self, level: f64) -> f64 {
        match self {
            RadialProfile::Gaussian => level.sqrt(),
            RadialProfile::Laplace => level,
            RadialProfile::Cauchy => level.exp_m1().sqrt(),
        }
    }
}

impl std::str::FromStr for RadialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(RadialProfile::Gaussian),
            "laplace" => Ok(RadialProfile::Laplace),
            "cauchy" => Ok(RadialProfile::Cauchy),
            other => Err(Error::Format(format!("unknown kernel profile '{other}'"))),
        }
    }
}

/// Smallest `r` with `F(u) < threshold` for every `u > r`; 0 once the
/// threshold reaches `F(0) = 1`.
pub fn decay_radius(f: RadialProfile, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("threshold {threshold} must be positive")));
    }
    if threshold >= 1.0 {
        return Ok(0.0);
    }
    Ok(f.radius_for_level(-threshold.ln()))
}

/// Bounded template the candidate basis function is modelled on.
#[derive(Clone)]
pub enum Oscillator {
    Cosine,
    /// `+1` on `[2jπ, (2j+1)π)`, `-1` elsewhere.
    Square,
    Custom(CustomOscillator),
}

/// User-supplied template: value function, an upper bound on `|ψ|` and
/// the scan resolution used when searching for points.
#[derive(Clone)]
pub struct CustomOscillator {
    pub name: String,
    pub sup: f64,
    pub step: f64,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Oscillator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oscillator({})", self.name())
    }
}

impl Oscillator {
    pub fn name(&self) -> &str {
        match self {
            Oscillator::Cosine => "cos",
            Oscillator::Square => "square",
            Oscillator::Custom(c) => &c.name,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Oscillator::Cosine => x.cos(),
            Oscillator::Square => {
                if (x / PI).floor().rem_euclid(2.0) == 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Oscillator::Custom(c) => (c.f)(x),
        }
    }

    fn sup(&self) -> f64 {
        match self {
            Oscillator::Cosine | Oscillator::Square => 1.0,
            Oscillator::Custom(c) => c.sup,
        }
    }

    fn step(&self) -> f64 {
        match self {
            Oscillator::Cosine | Oscillator::Square => 2.0 * PI / 4096.0,
            Oscillator::Custom(c) => c.step,
        }
    }

    /// Built-in template by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "cos" => Ok(Oscillator::Cosine),
            "square" => Ok(Oscillator::Square),
            other => Err(Error::Format(format!("unknown template '{other}'"))),
        }
    }
}

pub const DEFAULT_DELTA: f64 = 0.9;

/// Candidate points examined per certificate point before giving up.
pub const MAX_SCAN: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeCertificate {
    pub schema_version: u32,
    pub kernel: RadialProfile,
    pub psi: String,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub points: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub quad_form: f64,
    pub lin_form_sq: f64,
}

/// `1/√n`.
pub fn coefficient_magnitude(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// `ln(ε / 2^i)`.
fn ln_threshold(epsilon: f64, i: usize) -> f64 {
    epsilon.ln() - i as f64 * LN_2
}

pub fn build_certificate(
    f: RadialProfile,
    psi: &Oscillator,
    epsilon: f64,
    delta: f64,
    n: usize,
) -> Result<ProbeCertificate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta {delta} must be positive")));
    }
    if n == 0 {
        return Err(Error::Domain("a certificate needs at least one point".into()));
    }
    if delta >= psi.sup() {
        return Err(Error::Infeasible(format!(
            "|{}| never exceeds delta = {delta} (sup {})",
            psi.name(),
            psi.sup()
        )));
    }
    let step = psi.step();
    let advance = |t: f64| (t + step).max(t.next_up());
    let large = |t: f64| psi.value(t).abs() > delta;

    let mut points: Vec<f64> = Vec::with_capacity(n);
    let mut t: f64 = 0.0;
    for i in 1..=n {
        // point i (1-based) must sit where F(y_i - y_{i-1}) < ε/2^i
        let (start, level) = match points.last() {
            None => (0.0, None),
            Some(&prev) => {
                let level = ln_threshold(epsilon, i);
                let r = f.radius_for_level(-level);
                (advance(prev + r * (1.0 + 1e-9)), Some((prev, level)))
            }
        };
        t = t.max(start);
        let mut found = false;
        for _ in 0..MAX_SCAN {
            let far = level.is_none_or(|(prev, level)| f.ln_value(t - prev) < level);
            if far && large(t) {
                found = true;
                break;
            }
            t = advance(t);
        }
        if !found || !t.is_finite() {
            return Err(Error::Infeasible(format!(
                "no admissible point {i} found within {MAX_SCAN} template steps (epsilon {epsilon}, delta {delta})"
            )));
        }
        points.push(t);
    }
    let a = coefficient_magnitude(n);
    let coefficients: Vec<f64> = points.iter().map(|&y| a.copysign(psi.value(y))).collect();
    let quad_form = quadratic_form(f, &points, &coefficients);
    let lin = linear_form(psi, &points, &coefficients);
    Ok(ProbeCertificate {
        schema_version: SCHEMA_VERSION,
        kernel: f,
        psi: psi.name().to_string(),
        epsilon,
        delta,
        n,
        points,
        coefficients,
        quad_form,
        lin_form_sq: lin * lin,
    })
}

/// `Σ_{ij} a_i a_j F(|y_i - y_j|)`, rows in parallel and reduced in order.
pub fn quadratic_form(f: RadialProfile, points: &[f64], coefficients: &[f64]) -> f64 {
    let rows: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            points
                .iter()
                .zip(coefficients)
                .map(|(&yj, &aj)| coefficients[i] * aj * f.value(points[i] - yj))
                .collect::<CompensatedSum>()
                .total()
        })
        .collect();
    rows.into_iter().collect::<CompensatedSum>().total()
}

/// `Σ_i a_i ψ(y_i)`.
pub fn linear_form(psi: &Oscillator, points: &[f64], coefficients: &[f64]) -> f64 {
    points.iter().zip(coefficients).map(|(&y, &a)| a * psi.value(y)).collect::<CompensatedSum>().total()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum VerifyFailure {
    Empty,
    LengthMismatch { points: usize, coefficients: usize, n: usize },
    KernelMismatch,
    TemplateMismatch,
    CoefficientMagnitude { i: usize },
    PointsNotIncreasing { i: usize },
    SignMismatch { i: usize },
    QuadFormOutside { value: f64 },
    LinearFormTooSmall { value: f64 },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyFailure::Empty => write!(f, "empty certificate"),
            VerifyFailure::LengthMismatch { points, coefficients, n } => {
                write!(f, "n = {n} but {points} points and {coefficients} coefficients")
            }
            VerifyFailure::KernelMismatch => write!(f, "certificate issued for another kernel"),
            VerifyFailure::TemplateMismatch => write!(f, "certificate issued for another template"),
            VerifyFailure::CoefficientMagnitude { i } => write!(f, "|a_{i}| differs from 1/sqrt(n)"),
            VerifyFailure::PointsNotIncreasing { i } => write!(f, "points not increasing at {i}"),
            VerifyFailure::SignMismatch { i } => write!(f, "sign of a_{i} opposes psi(y_{i})"),
            VerifyFailure::QuadFormOutside { value } => write!(f, "quadratic form {value} outside (1-eps, 1+eps)"),
            VerifyFailure::LinearFormTooSmall { value } => write!(f, "linear form {value} not above sqrt(n)*delta"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub quad_form: Option<f64>,
    pub lin_form_sq: Option<f64>,
    pub failure: Option<VerifyFailure>,
}

/// Recomputes both forms from the points and coefficients alone and checks
/// them strictly; stored form values are ignored.
pub fn verify_certificate(c: &ProbeCertificate, f: RadialProfile, psi: &Oscillator) -> Verdict {
    let fail = |failure, quad_form, lin_form_sq| Verdict { passed: false, quad_form, lin_form_sq, failure: Some(failure) };
    if c.n == 0 {
        return fail(VerifyFailure::Empty, None, None);
    }
    if c.points.len() != c.n || c.coefficients.len() != c.n {
        let failure = VerifyFailure::LengthMismatch { points: c.points.len(), coefficients: c.coefficients.len(), n: c.n };
        return fail(failure, None, None);
    }
    if c.kernel != f {
        return fail(VerifyFailure::KernelMismatch, None, None);
    }
    if c.psi != psi.name() {
        return fail(VerifyFailure::TemplateMismatch, None, None);
    }
    let a = coefficient_magnitude(c.n);
    for (i, (&y, &ai)) in c.points.iter().zip(&c.coefficients).enumerate() {
        if ai.abs() != a {
            return fail(VerifyFailure::CoefficientMagnitude { i: i + 1 }, None, None);
        }
        if i > 0 && !(y > c.points[i - 1]) {
            return fail(VerifyFailure::PointsNotIncreasing { i: i + 1 }, None, None);
        }
        if (ai > 0.0) != (psi.value(y) > 0.0) {
            return fail(VerifyFailure::SignMismatch { i: i + 1 }, None, None);
        }
    }
    let q = quadratic_form(f, &c.points, &c.coefficients);
    let lin = linear_form(psi, &c.points, &c.coefficients);
    let (quad, lin_sq) = (Some(q), Some(lin * lin));
    if !(q > 1.0 - c.epsilon && q < 1.0 + c.epsilon) {
        return fail(VerifyFailure::QuadFormOutside { value: q }, quad, lin_sq);
    }
    if !(lin > (c.n as f64).sqrt() * c.delta) {
        return fail(VerifyFailure::LinearFormTooSmall { value: lin }, quad, lin_sq);
    }
    Verdict { passed: true, quad_form: quad, lin_form_sq: lin_sq, failure: None }
}

/// Off-diagonal mass `Σ_{j<i} F(y_i - y_j)` of row `i` against its bound
/// `(i-1) ε / 2^i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowMass {
    pub i: usize,
    pub mass: f64,
    pub bound: f64,
}

impl RowMass {
    pub fn holds(&self) -> bool {
        self.mass < self.bound
    }
}

/// Row masses for `i ≥ 2`; the first row has no off-diagonal entries.
pub fn row_masses(c: &ProbeCertificate, f: RadialProfile) -> Vec<RowMass> {
    (1..c.points.len())
        .into_par_iter()
        .map(|idx| {
            let i = idx + 1;
            let yi = c.points[idx];
            let mass = c.points[..idx].iter().map(|&yj| f.value(yi - yj)).collect::<CompensatedSum>().total();
            let bound = (i - 1) as f64 * ln_threshold(c.epsilon, i).exp();
            RowMass { i, mass, bound }
        })
        .collect()
}

/// `(1 + ε) / (n δ²)`: no weight of an expansion of this kernel can exceed
/// it on a basis function agreeing with the template at the points.
pub fn implied_weight_bound(c: &ProbeCertificate) -> f64 {
    (1.0 + c.epsilon) / (c.n as f64 * c.delta * c.delta)
}

impl ProbeCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ProbeCertificate = serde_json::from_str(text)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("schema version {} not supported", c.schema_version)));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_closed_forms() {
        let g = decay_radius(RadialProfile::Gaussian, (-4f64).exp()).unwrap();
        assert!((g - 2.0).abs() < 1e-9);
        let l = decay_radius(RadialProfile::Laplace, (-3f64).exp()).unwrap();
        assert!((l - 3.0).abs() < 1e-9);
        let c = decay_radius(RadialProfile::Cauchy, 0.01).unwrap();
        assert!((c - 99f64.sqrt()).abs() < 1e-9);
        assert_eq!(decay_radius(RadialProfile::Laplace, 1.5).unwrap(), 0.0);
        assert!(decay_radius(RadialProfile::Laplace, 0.0).is_err());
    }

    #[test]
    fn cauchy_radius_agrees_with_bisection() {
        let t = 0.01;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if RadialProfile::Cauchy.value(mid) < t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((decay_radius(RadialProfile::Cauchy, t).unwrap() - hi).abs() < 1e-9);
    }

    #[test]
    fn profiles_start_at_one_and_decrease() {
        for f in RadialProfile::ALL {
            assert_eq!(f.value(0.0), 1.0);
            let samples: Vec<f64> = (0..200).map(|i| f.value(i as f64 * 0.1)).collect();
            assert!(samples.windows(2).all(|w| w[1] < w[0]), "{f:?}");
            assert_eq!(f.value(-1.3), f.value(1.3));
        }
        let u = 3e151;
        assert!((RadialProfile::Cauchy.ln_value(u) + 2.0 * u.ln()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_certificate() {
        let c = build_certificate(RadialProfile::Gaussian, &Oscillator::Cosine, 0.1, 0.9, 100).unwrap();
        assert!(c.quad_form > 0.9 && c.quad_form < 1.1);
        assert!(c.lin_form_sq > 81.0);
        assert!(verify_certificate(&c, RadialProfile::Gaussian, &Oscillator::Cosine).passed);
        assert!(row_masses(&c, RadialProfile::Gaussian).iter().all(RowMass::holds));
        assert!((implied_weight_bound(&c) - 1.1 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_certificate() {
        for f in RadialProfile::ALL {
            let c = build_certificate(f, &Oscillator::Cosine, 0.2, 0.9, 1).unwrap();
            assert_eq!(c.quad_form, 1.0);
            assert!(c.lin_form_sq > 0.81 && c.lin_form_sq <= 1.0);
            assert!(implied_weight_bound(&c) > 1.0);
        }
    }

    #[test]
    fn square_template_and_custom_hook() {
        let c = build_certificate(RadialProfile::Laplace, &Oscillator::Square, 0.1, 0.9, 50).unwrap();
        assert!(verify_certificate(&c, RadialProfile::Laplace, &Oscillator::Square).passed);
        let custom = Oscillator::Custom(CustomOscillator {
            name: "sin2x".into(),
            sup: 1.0,
            step: 1e-3,
            f: Arc::new(|x: f64| (2.0 * x).sin()),
        });
        let c = build_certificate(RadialProfile::Gaussian, &custom, 0.1, 0.5, 20).unwrap();
        assert!(verify_certificate(&c, RadialProfile::Gaussian, &custom).passed);
    }

    #[test]
    fn infeasible_requests_fail_loudly() {
        let r = build_certificate(RadialProfile::Gaussian, &Oscillator::Cosine, 0.1, 1.0, 5);
        assert!(matches!(r, Err(Error::Infeasible(_))));
        let flat = Oscillator::Custom(CustomOscillator {
            name: "decaying".into(),
            sup: 1.0,
            step: 0.5,
            f: Arc::new(|x: f64| (-x).exp()),
        });
        assert!(matches!(build_certificate(RadialProfile::Laplace, &flat, 0.1, 0.9, 3), Err(Error::Infeasible(_))));
        assert!(build_certificate(RadialProfile::Laplace, &Oscillator::Cosine, 1.0, 0.9, 3).is_err());
        assert!(build_certificate(RadialProfile::Laplace, &Oscillator::Cosine, 0.1, 0.9, 0).is_err());
    }

    #[test]
    fn tampered_gap_is_caught_by_recomputation() {
        let f = RadialProfile::Laplace;
        let mut c = build_certificate(f, &Oscillator::Cosine, 0.1, 0.9, 10).unwrap();
        // pull the second point next to the first
        c.points[1] = c.points[0] + 1e-3;
        c.coefficients[1] = c.coefficients[0];
        let v = verify_certificate(&c, f, &Oscillator::Cosine);
        assert!(!v.passed);
        assert!(matches!(v.failure, Some(VerifyFailure::QuadFormOutside { .. })));
    }

    #[test]
    fn sign_sabotage_is_caught() {
        let f = RadialProfile::Laplace;
        let mut c = build_certificate(f, &Oscillator::Cosine, 0.1, 0.9, 10).unwrap();
        for a in &mut c.coefficients {
            *a = -*a;
        }
        let v = verify_certificate(&c, f, &Oscillator::Cosine);
        assert!(matches!(v.failure, Some(VerifyFailure::SignMismatch { i: 1 })));
    }

    #[test]
    fn structural_checks() {
        let f = RadialProfile::Cauchy;
        let c = build_certificate(f, &Oscillator::Cosine, 0.1, 0.9, 5).unwrap();
        let mut short = c.clone();
        short.points.pop();
        assert!(matches!(verify_certificate(&short, f, &Oscillator::Cosine).failure, Some(VerifyFailure::LengthMismatch { .. })));
        assert!(matches!(verify_certificate(&c, RadialProfile::Gaussian, &Oscillator::Cosine).failure, Some(VerifyFailure::KernelMismatch)));
        let mut scaled = c.clone();
        scaled.coefficients[2] *= 2.0;
        assert!(matches!(verify_certificate(&scaled, f, &Oscillator::Cosine).failure, Some(VerifyFailure::CoefficientMagnitude { i: 3 })));
    }

    #[test]
    fn weight_bound_decreases_with_n() {
        let mut prev = f64::INFINITY;
        for n in [1, 2, 10, 100] {
            let c = build_certificate(RadialProfile::Gaussian, &Oscillator::Cosine, 0.1, 0.9, n).unwrap();
            let b = implied_weight_bound(&c);
            assert!(b < prev);
            prev = b;
        }
        let mut c = build_certificate(RadialProfile::Gaussian, &Oscillator::Cosine, 0.1, 0.9, 2).unwrap();
        c.n = 10_000;
        assert!((implied_weight_bound(&c) - 1.1 / 8100.0).abs() < 1e-18);
    }

    #[test]
    fn json_round_trip() {
        let c = build_certificate(RadialProfile::Laplace, &Oscillator::Cosine, 0.05, 0.9, 30).unwrap();
        let back = ProbeCertificate::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(verify_certificate(&back, RadialProfile::Laplace, &Oscillator::Cosine).passed);
    }
}
