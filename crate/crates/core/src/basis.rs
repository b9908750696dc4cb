//! The basis functions `ψ_k(x) = √(2^k / k!) x^k e^{-x²}` of the power-series
//! expansion of the unit-width Gaussian kernel,
//!
//! ```text
//! exp(-(x - t)²) = Σ_k ψ_k(x) ψ_k(t),
//! ```
//!
//! together with their maxima, the bounded-interval variants `h_k = k ψ_k`
//! and the Gaussian-bump approximation of a single `ψ_k` near its peak.
//!
//! Every evaluation goes through a peak-centred form of the logarithm. With
//! `x = x_k (1 + u)` and `x_k = √(k/2)`,
//!
//! ```text
//! ln |ψ_k(x)| = k (ln(1+u) - u) - k u²/2 - ¼ ln(2πk) - ½ S(k)
//! ```
//!
//! where `S(k) = ln k! - (k ln k - k + ½ ln 2πk)`. The large terms
//! `k ln 2`, `ln k!` and `k ln x` cancel analytically, so the result is
//! accurate to a few ulps of its own magnitude even for `k` in the millions.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::numerics::{log1pmx, maximize_on_interval, stirling_correction, SignedLogValue, SupSearch};

/// Location and height of the maximum of `|ψ_k|` on `x ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakInfo {
    pub k: u64,
    /// `x_k = √(k/2)`.
    pub x_peak: f64,
    /// `ln m_k` where `m_k = ‖ψ_k‖∞`.
    pub ln_m: f64,
    /// `2 ln m_k`.
    pub m_squared_log: f64,
}

impl PeakInfo {
    pub fn m(&self) -> f64 {
        self.ln_m.exp()
    }

    pub fn m_squared(&self) -> f64 {
        self.m_squared_log.exp()
    }
}

/// `ln m_k` for `k ≥ 1`.
fn ln_peak(k: u64) -> f64 {
    -0.25 * (2.0 * PI * k as f64).ln() - 0.5 * stirling_correction(k)
}

/// Peak of `ψ_k`: `x_k = √(k/2)`, `m_k = √(k^k / k!) e^{-k/2}`.
///
/// For `k = 0` the peak is `(0, 1)` since `ψ_0(x) = e^{-x²}`.
pub fn peak(k: u64) -> PeakInfo {
    if k == 0 {
        return PeakInfo { k, x_peak: 0.0, ln_m: 0.0, m_squared_log: 0.0 };
    }
    let ln_m = ln_peak(k);
    PeakInfo { k, x_peak: (k as f64 / 2.0).sqrt(), ln_m, m_squared_log: 2.0 * ln_m }
}

/// `ln |ψ_k(x)|`; `-inf` at `x = 0` for `k ≥ 1`.
pub fn ln_psi_abs(k: u64, x: f64) -> f64 {
    if k == 0 {
        return -x * x;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let x_peak = (kf / 2.0).sqrt();
    let ratio = ax / x_peak;
    let u = ratio - 1.0;
    let shape = if u.abs() < 0.25 { log1pmx(u) } else { ratio.ln() - u };
    kf * shape - 0.5 * kf * u * u + ln_peak(k)
}

/// `ψ_k(x)` in the log domain.
pub fn eval_psi(k: u64, x: f64) -> SignedLogValue {
    let ln = ln_psi_abs(k, x);
    let sign = if x < 0.0 && k % 2 == 1 { -1 } else { 1 };
    SignedLogValue::from_ln(sign, ln)
}

/// Right-hand side of the bump approximation
/// `ψ_k(x) ≈ (2πk)^{-1/4} e^{-2 (x - √(k/2))²}`, for `k ≥ 1`.
pub fn bump_approx(k: u64, x: f64) -> f64 {
    let kf = k as f64;
    let y = x - (kf / 2.0).sqrt();
    (2.0 * PI * kf).powf(-0.25) * (-2.0 * y * y).exp()
}

/// Largest deviation `|ψ_k - bump_k| / m_k` over `[x_k - w, x_k + w]`.
pub fn bump_error(k: u64, window_halfwidth: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("bump approximation needs k >= 1".into()));
    }
    if !(window_halfwidth > 0.0) {
        return Err(Error::Domain(format!("window half-width {window_halfwidth} must be positive")));
    }
    let p = peak(k);
    let deviation = |x: f64| (eval_psi(k, x).to_real() - bump_approx(k, x)).abs() / p.m();
    let (_, worst) = maximize_on_interval(
        deviation,
        p.x_peak - window_halfwidth,
        p.x_peak + window_halfwidth,
        &SupSearch::default(),
    );
    Ok(worst)
}

/// `h_k(x) = k ψ_k(x)`, with `h_0 = ψ_0` so the bounded-domain expansion
/// keeps its constant term.
pub fn eval_h(k: u64, x: f64) -> SignedLogValue {
    let psi = eval_psi(k, x);
    if k == 0 {
        psi
    } else {
        psi.scale_ln((k as f64).ln())
    }
}

/// `max |h_k|` over `[0, N]`: the interior peak `k m_k` when `√(k/2) ≤ N`,
/// the boundary value `k ψ_k(N)` otherwise.
pub fn h_sup_norm(k: u64, domain_edge: f64) -> Result<SignedLogValue> {
    if !(domain_edge > 0.0) || !domain_edge.is_finite() {
        return Err(Error::Domain(format!("domain edge {domain_edge} must be positive")));
    }
    let p = peak(k);
    if p.x_peak <= domain_edge {
        let h = SignedLogValue::from_ln(1, p.ln_m);
        Ok(if k == 0 { h } else { h.scale_ln((k as f64).ln()) })
    } else {
        Ok(eval_h(k, domain_edge).abs())
    }
}

/// Exponential envelope `A k^{3/4} e^{-B k}` dominating `‖h_k‖∞` on `[0, N]`
/// for every `k ≥ k0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEnvelope {
    pub domain_edge: f64,
    pub k0: u64,
    pub a: f64,
    pub b: f64,
}

impl DecayEnvelope {
    /// Envelope constants for a starting index `k0 > 2eN²`.
    ///
    /// For boundary-dominated `k`, `‖h_k‖ = e^{-N²} (2π)^{-1/4} k^{3/4}
    /// e^{-S(k)/2} (2eN²/k)^{k/2}`; dropping `e^{-S/2} < 1` and bounding
    /// `ln k ≥ ln k0` gives `A = e^{-N²} (2π)^{-1/4}` and
    /// `B = ½ ln(k0 / 2eN²)`.
    pub fn new(domain_edge: f64, k0: u64) -> Result<Self> {
        if !(domain_edge > 0.0) {
            return Err(Error::Domain(format!("domain edge {domain_edge} must be positive")));
        }
        let crossover = 2.0 * E * domain_edge * domain_edge;
        if (k0 as f64) <= crossover {
            return Err(Error::Domain(format!("k0 = {k0} must exceed 2eN² = {crossover}")));
        }
        let a = (-domain_edge * domain_edge).exp() * (2.0 * PI).powf(-0.25);
        let b = 0.5 * (k0 as f64 / crossover).ln();
        Ok(Self { domain_edge, k0, a, b })
    }

    /// Smallest admissible `k0`, i.e. `⌊2eN²⌋ + 1`.
    pub fn minimal(domain_edge: f64) -> Result<Self> {
        let k0 = (2.0 * E * domain_edge * domain_edge).floor() as u64 + 1;
        Self::new(domain_edge, k0)
    }

    /// `ln(A k^{3/4} e^{-B k})`.
    pub fn ln_bound(&self, k: u64) -> f64 {
        let kf = k as f64;
        self.a.ln() + 0.75 * kf.ln() - self.b * kf
    }
}

/// Rescales an input for a kernel of width `eta` onto the unit-width kernel,
/// `exp(-(x - y)²/η) = exp(-(x' - y')²)` with `x' = x / √η`.
pub fn rescale(x: f64, eta: f64) -> f64 {
    x / eta.sqrt()
}
