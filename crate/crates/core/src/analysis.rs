//! Weight statistics of block-recombined expansions.
//!
//! `G(n, p) = Σ λ^p` over the terms of block `n`. Asymptotically
//! `G(n, p) ≈ A(p) / b(p)^n` with `A(p) = 135·4^{p-1} / (√(90π))^p` and
//! `b(p) = 4^{p-1}`: for `p = 1` every block contributes about
//! `135/√(90π) ≈ 8` and the weights are not summable, for `p > 1` the masses
//! decay geometrically. The partial sums grow like `D ln m` with
//! `D = 135 / (√(90π) ln 4)`.

use std::f64::consts::PI;

use crate::blocks::block_spec;
use crate::error::{Error, Result};
use crate::expansion::{Expansion, Scheme};
use crate::numerics::CompensatedSum;
use crate::report::{fmt_real, Table};

/// `A(p)`.
pub fn mass_constant(p: f64) -> f64 {
    135.0 * 4f64.powf(p - 1.0) / (90.0 * PI).sqrt().powf(p)
}

/// `b(p) = 4^{p-1}`.
pub fn mass_ratio(p: f64) -> f64 {
    4f64.powf(p - 1.0)
}

/// `A(p) / b(p)^n`.
pub fn predicted_mass(n: u32, p: f64) -> f64 {
    mass_constant(p) / mass_ratio(p).powi(n as i32)
}

/// `D = 135 / (√(90π) ln 4)`.
pub fn divergence_constant() -> f64 {
    135.0 / ((90.0 * PI).sqrt() * 4f64.ln())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("exponent p = {p} must be at least 1")));
    }
    Ok(())
}

/// `G(n, p)`, summed with compensation in term order.
pub fn block_mass(e: &Expansion, n: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(e.block_terms(n)?.iter().map(|t| t.weight.powf(p)).collect::<CompensatedSum>().total())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpCheck {
    pub p: f64,
    /// Computed sum plus the tail estimate.
    pub total: f64,
    pub computed: f64,
    pub tail: f64,
    pub converged: bool,
}

/// Tail fraction below which [`lp_norm_check`] reports convergence.
pub const TAIL_FRACTION: f64 = 0.01;

/// `Σ λ^p` over all terms, completed by the geometric tail
/// `G(N, p) / (b - 1)` continuing from the last block `N`.
pub fn lp_norm_check(e: &Expansion, p: f64) -> Result<LpCheck> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p = {p}: weights are only p-summable for p > 1")));
    }
    let last = e
        .max_block()
        .filter(|_| e.scheme() == Scheme::Combo)
        .ok_or_else(|| Error::Domain("lp check needs a combo expansion".into()))?;
    let computed = e.terms().iter().map(|t| t.weight.powf(p)).collect::<CompensatedSum>().total();
    let tail = block_mass(e, last, p)? / (mass_ratio(p) - 1.0);
    let total = computed + tail;
    Ok(LpCheck { p, total, computed, tail, converged: tail < TAIL_FRACTION * total })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightStats {
    pub p: f64,
    pub per_block: Vec<(u32, f64)>,
    /// `(m, Σ_{k<m} λ_k^p)` at block boundaries `m = y_2, y_3, …`.
    pub partial_sums: Vec<(u64, f64)>,
    pub model_d: f64,
    /// Least-squares line `S(m) ≈ intercept + slope · ln m`.
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
}

/// Smallest block whose completed partial sum enters the fit.
pub const FIT_FIRST_BLOCK: u32 = 3;

pub fn weight_stats(e: &Expansion, p: f64) -> Result<WeightStats> {
    check_p(p)?;
    let last = e
        .max_block()
        .filter(|_| e.scheme() == Scheme::Combo)
        .ok_or_else(|| Error::Domain("weight statistics need a combo expansion".into()))?;
    let per_block: Vec<(u32, f64)> =
        (1..=last).map(|n| Ok((n, block_mass(e, n, p)?))).collect::<Result<_>>()?;
    let mut running = CompensatedSum::new();
    let mut partial_sums = Vec::with_capacity(per_block.len());
    for &(n, g) in &per_block {
        running.add(g);
        partial_sums.push((block_spec(n)?.end(), running.total()));
    }
    let fit: Vec<(f64, f64)> = partial_sums
        .iter()
        .zip(&per_block)
        .filter(|(_, (n, _))| *n >= FIT_FIRST_BLOCK)
        .map(|(&(m, s), _)| ((m as f64).ln(), s))
        .collect();
    let (fitted_slope, fitted_intercept) = match least_squares(&fit) {
        Some((s, i)) => (Some(s), Some(i)),
        None => (None, None),
    };
    Ok(WeightStats { p, per_block, partial_sums, model_d: divergence_constant(), fitted_slope, fitted_intercept })
}

/// Partial sums of the weights and their logarithmic fit. Needs a combo
/// expansion with at least four blocks.
pub fn divergence_profile(e: &Expansion) -> Result<WeightStats> {
    if e.scheme() != Scheme::Combo || e.max_block().is_none_or(|mb| mb < 4) {
        return Err(Error::Domain("divergence profile needs a combo expansion with at least 4 blocks".into()));
    }
    weight_stats(e, 1.0)
}

fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

impl WeightStats {
    /// `n, p, G_np, predicted, ratio`.
    pub fn mass_table(&self) -> Table {
        let mut t = Table::new(&["n", "p", "G_np", "predicted", "ratio"]);
        for &(n, g) in &self.per_block {
            let pred = predicted_mass(n, self.p);
            t.push(vec![n.to_string(), fmt_real(self.p), fmt_real(g), fmt_real(pred), fmt_real(g / pred)]);
        }
        t
    }

    /// `term_count, partial_sum, D_ln_fit`; the last column is the fitted
    /// line evaluated at the term count, empty when no fit exists.
    pub fn partial_sum_table(&self) -> Table {
        let mut t = Table::new(&["term_count", "partial_sum", "D_ln_fit"]);
        for &(m, s) in &self.partial_sums {
            let fit = match (self.fitted_slope, self.fitted_intercept) {
                (Some(a), Some(b)) => fmt_real(b + a * (m as f64).ln()),
                _ => String::new(),
            };
            t.push(vec![m.to_string(), fmt_real(s), fit]);
        }
        t
    }

    /// `G(n+1, p) / G(n, p)` for consecutive blocks.
    pub fn successive_ratios(&self) -> Vec<(u32, f64)> {
        self.per_block.windows(2).map(|w| (w[0].0, w[1].1 / w[0].1)).collect()
    }
}
