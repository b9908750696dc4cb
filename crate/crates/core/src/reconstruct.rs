//! Truncated series against the closed-form kernel, with a rigorous bound
//! on the omitted terms.
//!
//! All three schemes reproduce the raw series term for term (the bounded
//! scheme as `(1/k²)(kψ_k)(kψ_k)`, the combo scheme row by row through the
//! orthogonality of the signs), so the raw remainder bound applies to each.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::{eval_combo_row, BlockSpec, SignMatrix};
use crate::basis::eval_psi;
use crate::error::{Error, Result};
use crate::expansion::{BasisDescriptor, Expansion, Scheme, Term};
use crate::numerics::{log_factorial, slv_sum, CompensatedSum, SignedLogValue};
use crate::report::{fmt_real, Table};

pub fn exact_kernel(x: f64, y: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("kernel width {eta} must be positive")));
    }
    Ok((-(x - y) * (x - y) / eta).exp())
}

/// Smallest magnitude for which the linear accumulation path is taken.
const LINEAR_FLOOR: f64 = 1e-300;

/// Rows whose contribution is bounded by `e^{ROW_SKIP_LN}` are below the
/// smallest subnormal and are not evaluated.
const ROW_SKIP_LN: f64 = -760.0;

/// Series value plus `Σ |term|`, which scales the rounding error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub abs_sum: f64,
}

pub fn series_kernel(e: &Expansion, x: f64, y: f64) -> Result<f64> {
    Ok(series_kernel_detailed(e, x, y)?.value)
}

pub fn series_kernel_detailed(e: &Expansion, x: f64, y: f64) -> Result<SeriesValue> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain("kernel arguments must be finite".into()));
    }
    if let (Scheme::Bounded, Some(edge)) = (e.scheme(), e.domain_edge()) {
        for v in [x, y] {
            if !(0.0..=edge).contains(&v) {
                return Err(Error::Domain(format!("{v} outside the domain [0, {edge}]")));
            }
        }
    }
    let mut parts = Vec::with_capacity(e.terms().len());
    let terms = e.terms();
    let mut i = 0;
    while i < terms.len() {
        match row_group(&terms[i..]) {
            Some((block, row, signs, len)) => {
                combo_row_contributions(&terms[i..i + len], block, row, signs, x, y, &mut parts);
                i += len;
            }
            None => {
                parts.push(terms[i].contribution(x, y));
                i += 1;
            }
        }
    }
    Ok(accumulate(&parts))
}

/// A complete combo row at the start of `terms`, in slot order.
fn row_group(terms: &[Term]) -> Option<(&BlockSpec, u64, &SignMatrix, usize)> {
    let BasisDescriptor::Combo(first) = &terms[0].basis else {
        return None;
    };
    let c = first.block.c as usize;
    if first.slot != 0 || terms.len() < c {
        return None;
    }
    let complete = terms[..c].iter().enumerate().all(|(j, t)| match &t.basis {
        BasisDescriptor::Combo(d) => d.block == first.block && d.row == first.row && d.slot == j,
        _ => false,
    });
    complete.then(|| (&first.block, first.row, first.sign_matrix().as_ref(), c))
}

fn combo_row_contributions(
    terms: &[Term],
    block: &BlockSpec,
    row: u64,
    signs: &SignMatrix,
    x: f64,
    y: f64,
    out: &mut Vec<SignedLogValue>,
) {
    // |φ_j| ≤ √c max|ψ|, and the weights times the normalizations are √c-scale free
    let max_ln = |v: f64| {
        (0..block.c)
            .map(|k| eval_psi(block.y + row + k * block.r, v).log_mag())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let ln_c = (block.c as f64).ln();
    let bound = 2.0 * ln_c + max_ln(x) + max_ln(y);
    if bound < ROW_SKIP_LN {
        return;
    }
    let fx = eval_combo_row(block, row, signs, x);
    let fy = eval_combo_row(block, row, signs, y);
    for ((t, a), b) in terms.iter().zip(fx).zip(fy) {
        out.push((a * b).scale_ln(t.weight.ln() - 2.0 * t.ln_scale));
    }
}

/// Compensated linear sum when every nonzero part is comfortably inside the
/// normal range, log-domain reduction otherwise.
fn accumulate(parts: &[SignedLogValue]) -> SeriesValue {
    let nonzero = parts.iter().filter(|p| !p.is_zero());
    let linear_ok = nonzero.clone().all(|p| {
        let v = p.to_real().abs();
        v > LINEAR_FLOOR && v.is_finite()
    });
    let abs_sum = nonzero.clone().map(|p| p.to_real().abs()).collect::<CompensatedSum>().total();
    let value = if linear_ok {
        nonzero.map(|p| p.to_real()).collect::<CompensatedSum>().total()
    } else {
        slv_sum(parts).to_real()
    };
    SeriesValue { value, abs_sum }
}

/// Bound on `|exp(-(x-y)²) - Σ_{k<H} ψ_k(x) ψ_k(y)|`.
///
/// The omitted terms are `e^{-x²-y²} Σ_{k≥H} (2xy)^k/k!`; with
/// `z = |2xy| ≤ H/2` the ratio of consecutive terms stays below `1/2`, so the
/// remainder is at most `2 e^{-x²-y²} z^H / H!`. `None` when `H < 2z`.
pub fn tail_bound(horizon: u64, x: f64, y: f64) -> Option<f64> {
    let z = (2.0 * x * y).abs();
    if z == 0.0 {
        return Some(0.0);
    }
    if (horizon as f64) < 2.0 * z || !z.is_finite() {
        return None;
    }
    let h = horizon as f64;
    Some((2f64.ln() - x * x - y * y + h * z.ln() - log_factorial(horizon)).exp())
}

/// Rounding slack allowed on top of the tail bound when comparing a series
/// value with the closed form: `64 ε (Σ|terms| + 1)`.
pub fn rounding_allowance(abs_sum: f64) -> f64 {
    64.0 * f64::EPSILON * (abs_sum + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `lo, lo + step, …` up to `hi`, guarding against rounding at the end.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        let count = ((self.hi - self.lo) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| (self.lo + i as f64 * step).min(self.hi)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub exact: f64,
    pub series: f64,
    pub abs_error: f64,
    pub tail_bound: Option<f64>,
    pub allowance: f64,
}

impl GridPoint {
    /// Error within the tail bound plus rounding slack.
    pub fn certified(&self) -> bool {
        self.tail_bound.is_some_and(|t| self.abs_error <= t + self.allowance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub scheme: Scheme,
    pub horizon: u64,
    pub x_range: Interval,
    pub y_range: Interval,
    pub step: f64,
    pub max_abs_error: f64,
    /// Largest tail bound over the points where one is available.
    pub tail_bound: f64,
    pub max_allowance: f64,
    pub points_without_bound: usize,
    pub certified: bool,
    #[serde(skip)]
    pub points: Vec<GridPoint>,
}

pub fn grid_report(e: &Expansion, x_range: Interval, y_range: Interval, step: f64) -> Result<ReconstructionReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("grid step {step} must be positive")));
    }
    let xs = x_range.grid(step);
    let ys = y_range.grid(step);
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let horizon = e.horizon();
    let points: Vec<GridPoint> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let s = series_kernel_detailed(e, x, y)?;
            let exact = exact_kernel(x, y, 1.0)?;
            Ok(GridPoint {
                x,
                y,
                exact,
                series: s.value,
                abs_error: (exact - s.value).abs(),
                tail_bound: tail_bound(horizon, x, y),
                allowance: rounding_allowance(s.abs_sum),
            })
        })
        .collect::<Result<_>>()?;
    let max_abs_error = points.iter().map(|p| p.abs_error).fold(0.0, f64::max);
    let tail = points.iter().filter_map(|p| p.tail_bound).fold(0.0, f64::max);
    let max_allowance = points.iter().map(|p| p.allowance).fold(0.0, f64::max);
    let points_without_bound = points.iter().filter(|p| p.tail_bound.is_none()).count();
    let certified = points.iter().all(GridPoint::certified);
    Ok(ReconstructionReport {
        scheme: e.scheme(),
        horizon,
        x_range,
        y_range,
        step,
        max_abs_error,
        tail_bound: tail,
        max_allowance,
        points_without_bound,
        certified,
        points,
    })
}

impl ReconstructionReport {
    /// `x, y, exact, series, abs_error, tail_bound`; an empty bound field
    /// marks a point where the bound is unavailable.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["x", "y", "exact", "series", "abs_error", "tail_bound"]);
        for p in &self.points {
            t.push(vec![
                fmt_real(p.x),
                fmt_real(p.y),
                fmt_real(p.exact),
                fmt_real(p.series),
                fmt_real(p.abs_error),
                p.tail_bound.map(fmt_real).unwrap_or_default(),
            ]);
        }
        t
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            #[serde(flatten)]
            report: &'a ReconstructionReport,
        }
        Ok(serde_json::to_string_pretty(&Summary { schema_version: crate::expansion::SCHEMA_VERSION, report: self })?)
    }
}

/// Largest `|a(x, y) - b(x, y)|` over the product grid.
pub fn compare_schemes(a: &Expansion, b: &Expansion, xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let gaps: Vec<f64> = pairs
        .par_iter()
        .map(|&(x, y)| Ok((series_kernel(a, x, y)? - series_kernel(b, x, y)?).abs()))
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// `(Σ_j φ_j(x) φ_j(y), Σ_k ψ_{P_k}(x) ψ_{P_k}(y))` for one block row.
pub fn row_kernel_sums(block: &BlockSpec, row: u64, signs: &SignMatrix, x: f64, y: f64) -> (f64, f64) {
    let fx = eval_combo_row(block, row, signs, x);
    let fy = eval_combo_row(block, row, signs, y);
    let combo: Vec<SignedLogValue> = fx.into_iter().zip(fy).map(|(a, b)| a * b).collect();
    let raw: Vec<SignedLogValue> = (0..block.c)
        .map(|k| {
            let p = block.y + row + k * block.r;
            eval_psi(p, x) * eval_psi(p, y)
        })
        .collect();
    (accumulate(&combo).value, accumulate(&raw).value)
}
