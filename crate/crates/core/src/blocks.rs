//! Block partition of the basis indices and the sign recombination applied
//! within each block row.
//!
//! Block `n` is an `r_n × c_n` matrix of consecutive indices filled column by
//! column, with `r_n = 135·2^{n-1}`, `c_n = 2^{n-1}` and first entry
//! `y_n = 45(4^{n-1} - 1)`. Row `h` of block `n` holds
//! `y_n + h, y_n + h + r_n, …, y_n + h + (c_n - 1) r_n`; the peaks of those
//! `ψ`s sit more than 3.5 apart, so the functions barely overlap.
//!
//! The `c_n` functions of a row are replaced by `c_n` signed combinations
//! `c_n^{-1/2} Σ_k s_{jk} ψ_{P_k}`. The sign matrix comes from `n - 1` rounds of
//! pairwise sums and differences (sums fill the first half of the slots,
//! differences the second half); it is orthogonal up to the factor `c_n`, so
//! `Σ_j φ_j(x) φ_j(y) = Σ_k ψ_{P_k}(x) ψ_{P_k}(y)` while every combination
//! has a sup-norm about `c_n^{-1/2}` times that of its leading bump.

use std::collections::HashMap;
use std::sync::Arc;

use crate::basis::{eval_psi, peak};
use crate::error::{Error, Result};
use crate::numerics::{maximize_on_interval, slv_sum, SignedLogValue, SupSearch};

/// Default upper limit on the order `c_n` of a sign matrix.
pub const MAX_SIGN_ORDER: usize = 1 << 15;

/// Default largest block used when building expansions.
pub const DEFAULT_MAX_BLOCK: u32 = 8;

/// Half-width of the window searched around each peak of a combination.
pub const PEAK_WINDOW: f64 = 2.0;

/// Limit of the smallest peak gap `(√P_k - √P_{k-1})/√2` as `n → ∞`,
/// namely `135 / (4√90)`.
pub fn separation_limit() -> f64 {
    135.0 / (4.0 * 90f64.sqrt())
}

/// Bookkeeping for block `n`: first index `y`, `r` rows, `c` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockSpec {
    pub n: u32,
    pub y: u64,
    pub r: u64,
    pub c: u64,
}

impl BlockSpec {
    /// First index of the following block, `y + c r`.
    pub fn end(&self) -> u64 {
        self.y + self.c * self.r
    }

    pub fn len(&self) -> u64 {
        self.c * self.r
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: u64) -> bool {
        index >= self.y && index < self.end()
    }
}

pub fn block_spec(n: u32) -> Result<BlockSpec> {
    if n == 0 {
        return Err(Error::Domain("block numbers start at 1".into()));
    }
    let overflow = || Error::Range(format!("block {n} overflows 64-bit indices"));
    let c = 1u64.checked_shl(n - 1).filter(|_| n <= 63).ok_or_else(overflow)?;
    let r = c.checked_mul(135).ok_or_else(overflow)?;
    let pow4 = 4u64.checked_pow(n - 1).ok_or_else(overflow)?;
    let y = (pow4 - 1).checked_mul(45).ok_or_else(overflow)?;
    c.checked_mul(r)
        .and_then(|len| y.checked_add(len))
        .ok_or_else(overflow)?;
    Ok(BlockSpec { n, y, r, c })
}

/// Block, row and slot holding a raw index.
pub fn locate(index: u64) -> Result<(BlockSpec, u64, u64)> {
    let mut n = 1;
    loop {
        let spec = block_spec(n)?;
        if spec.contains(index) {
            let offset = index - spec.y;
            return Ok((spec, offset % spec.r, offset / spec.r));
        }
        n += 1;
    }
}

/// The raw indices `y + h + k r`, `k = 0..c`, of row `h`.
pub fn row_indices(spec: &BlockSpec, h: u64) -> Result<Vec<u64>> {
    if h >= spec.r {
        return Err(Error::Range(format!("row {h} outside block {} with {} rows", spec.n, spec.r)));
    }
    Ok((0..spec.c).map(|k| spec.y + h + k * spec.r).collect())
}

/// `c × c` matrix of `±1` produced by the pairwise sum/difference recursion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    n: u32,
    order: usize,
    entries: Vec<i8>,
}

impl SignMatrix {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, slot: usize) -> &[i8] {
        &self.entries[slot * self.order..(slot + 1) * self.order]
    }

    pub fn get(&self, slot: usize, column: usize) -> i8 {
        self.entries[slot * self.order + column]
    }

    /// Row-major CSV: header `a1..ac`, one line of `1`/`-1` per slot.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.order).map(|i| format!("a{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for slot in 0..self.order {
            let line: Vec<&str> = self.row(slot).iter().map(|&s| if s > 0 { "1" } else { "-1" }).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn sign_matrix(n: u32) -> Result<SignMatrix> {
    sign_matrix_capped(n, MAX_SIGN_ORDER)
}

pub fn sign_matrix_capped(n: u32, max_order: usize) -> Result<SignMatrix> {
    if n == 0 {
        return Err(Error::Domain("block numbers start at 1".into()));
    }
    let order = 1usize
        .checked_shl(n - 1)
        .filter(|&c| n <= 63 && c <= max_order)
        .ok_or_else(|| Error::Range(format!("sign matrix of block {n} exceeds order {max_order}")))?;
    // row i holds the coefficients of combination i over the original functions
    let mut rows = vec![0i8; order * order];
    for i in 0..order {
        rows[i * order + i] = 1;
    }
    let half = order / 2;
    for _ in 1..n {
        let mut next = vec![0i8; order * order];
        for j in 0..half {
            let (a, b) = (2 * j * order, (2 * j + 1) * order);
            for col in 0..order {
                next[j * order + col] = rows[a + col] + rows[b + col];
                next[(half + j) * order + col] = rows[a + col] - rows[b + col];
            }
        }
        rows = next;
    }
    debug_assert!(rows.iter().all(|s| s.abs() == 1));
    Ok(SignMatrix { n, order, entries: rows })
}

/// One recombined basis function: slot `j` of row `h` in block `n`.
#[derive(Clone, Debug)]
pub struct ComboDescriptor {
    pub block: BlockSpec,
    pub row: u64,
    pub slot: usize,
    signs: Arc<SignMatrix>,
}

impl PartialEq for ComboDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.block == other.block && self.row == other.row && self.slot == other.slot
    }
}

impl ComboDescriptor {
    pub fn new(n: u32, row: u64, slot: usize) -> Result<Self> {
        let block = block_spec(n)?;
        Self::with_signs(block, row, slot, Arc::new(sign_matrix(n)?))
    }

    /// Shares an already built sign matrix between descriptors of one block.
    pub fn with_signs(block: BlockSpec, row: u64, slot: usize, signs: Arc<SignMatrix>) -> Result<Self> {
        if signs.n() != block.n {
            return Err(Error::Domain(format!(
                "sign matrix of block {} used for block {}",
                signs.n(),
                block.n
            )));
        }
        if row >= block.r || slot as u64 >= block.c {
            return Err(Error::Range(format!(
                "(row {row}, slot {slot}) outside block {} of shape {}x{}",
                block.n, block.r, block.c
            )));
        }
        Ok(Self { block, row, slot, signs })
    }

    pub fn signs(&self) -> &[i8] {
        self.signs.row(self.slot)
    }

    pub fn sign_matrix(&self) -> &Arc<SignMatrix> {
        &self.signs
    }

    /// Raw indices `P_k` combined by this function.
    pub fn raw_indices(&self) -> impl Iterator<Item = u64> + '_ {
        let b = self.block;
        (0..b.c).map(move |k| b.y + self.row + k * b.r)
    }

    /// Index this function takes over in the expansion ordering.
    pub fn index(&self) -> u64 {
        self.block.y + self.row + self.slot as u64 * self.block.r
    }

    fn ln_scale(&self) -> f64 {
        -0.5 * (self.block.c as f64).ln()
    }
}

/// `c^{-1/2} Σ_k s_k ψ_{P_k}(x)`.
pub fn eval_combo(d: &ComboDescriptor, x: f64) -> SignedLogValue {
    let ln_scale = d.ln_scale();
    let terms: Vec<SignedLogValue> = d
        .raw_indices()
        .zip(d.signs())
        .map(|(p, &s)| signed(eval_psi(p, x), s).scale_ln(ln_scale))
        .collect();
    slv_sum(&terms)
}

/// All `c` combinations of one row at `x`. Each entry is computed exactly
/// as [`eval_combo`] would, but the raw functions are evaluated once.
pub fn eval_combo_row(block: &BlockSpec, row: u64, signs: &SignMatrix, x: f64) -> Vec<SignedLogValue> {
    let ln_scale = -0.5 * (block.c as f64).ln();
    let raw: Vec<SignedLogValue> = (0..block.c).map(|k| eval_psi(block.y + row + k * block.r, x)).collect();
    let mut terms = Vec::with_capacity(raw.len());
    (0..signs.order())
        .map(|slot| {
            terms.clear();
            terms.extend(raw.iter().zip(signs.row(slot)).map(|(&v, &s)| signed(v, s).scale_ln(ln_scale)));
            slv_sum(&terms)
        })
        .collect()
}

fn signed(v: SignedLogValue, s: i8) -> SignedLogValue {
    if s < 0 {
        -v
    } else {
        v
    }
}

/// Location and value of the maximum of `|φ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComboPeak {
    pub x_star: f64,
    pub value: f64,
}

/// Neighbours on each side evaluated inside a peak window. Bumps three or
/// more peaks away are at least 8.5 from the window and contribute below
/// `e^{-144}` of the leading peak.
const NEAR: usize = 2;

/// Windows of a row that can host the maximum, decided from sign-free upper
/// and lower bounds so that every slot of the row shares the plan.
#[derive(Clone, Debug)]
pub struct RowPlan {
    block: BlockSpec,
    row: u64,
    windows: Vec<usize>,
}

impl RowPlan {
    pub fn new(block: BlockSpec, row: u64) -> Self {
        let c = block.c as usize;
        let idx = |k: usize| block.y + row + k as u64 * block.r;
        let centers: Vec<f64> = (0..c).map(|k| peak(idx(k)).x_peak).collect();
        // largest |ψ_P| over [a, b]
        let sup_abs = |p: u64, a: f64, b: f64| -> f64 {
            let xp = peak(p).x_peak;
            if (a..=b).contains(&xp) || (a..=b).contains(&-xp) {
                return peak(p).m();
            }
            eval_psi(p, a).to_real().abs().max(eval_psi(p, b).to_real().abs())
        };
        let neighbours = |k: usize| k.saturating_sub(NEAR)..(k + NEAR + 1).min(c);
        let far_mass = |k: usize, a: f64, b: f64| -> f64 {
            let mut mass = 0.0;
            let hi = k + NEAR + 1;
            if hi < c {
                // |ψ_P(x)| decreases in P for |x| below the peaks
                mass += if b <= centers[hi] {
                    (c - hi) as f64 * sup_abs(idx(hi), a, b)
                } else {
                    (hi..c).map(|j| sup_abs(idx(j), a, b)).sum()
                };
            }
            if k > NEAR {
                let lo = k - NEAR - 1;
                // and increases in P above them
                mass += if a >= centers[lo] {
                    (lo + 1) as f64 * sup_abs(idx(lo), a, b)
                } else {
                    (0..=lo).map(|j| sup_abs(idx(j), a, b)).sum()
                };
            }
            mass
        };
        let x0 = centers[0];
        let rest_at_first: f64 = neighbours(0)
            .filter(|&j| j != 0)
            .map(|j| eval_psi(idx(j), x0).to_real().abs())
            .sum::<f64>()
            + far_mass(0, x0, x0);
        let lower = peak(idx(0)).m() - rest_at_first;
        let windows = (0..c)
            .filter(|&k| {
                if k == 0 {
                    return true;
                }
                let (a, b) = (centers[k] - PEAK_WINDOW, centers[k] + PEAK_WINDOW);
                let upper: f64 = neighbours(k).map(|j| sup_abs(idx(j), a, b)).sum::<f64>() + far_mass(k, a, b);
                upper >= lower
            })
            .collect();
        Self { block, row, windows }
    }

    /// Indices (within the row) of the windows to search.
    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    /// Columns whose signs influence the search result.
    fn influential_columns(&self) -> Vec<usize> {
        let c = self.block.c as usize;
        let mut cols: Vec<usize> = self
            .windows
            .iter()
            .flat_map(|&k| k.saturating_sub(NEAR)..(k + NEAR + 1).min(c))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    fn search(&self, signs: &[i8], search: &SupSearch) -> ComboPeak {
        let c = self.block.c as usize;
        let ln_scale = -0.5 * (c as f64).ln();
        let idx = |k: usize| self.block.y + self.row + k as u64 * self.block.r;
        let mut best: Option<ComboPeak> = None;
        for &k in &self.windows {
            let near: Vec<usize> = (k.saturating_sub(NEAR)..(k + NEAR + 1).min(c)).collect();
            let local = |x: f64| {
                let terms: Vec<SignedLogValue> = near
                    .iter()
                    .map(|&j| signed(eval_psi(idx(j), x), signs[j]).scale_ln(ln_scale))
                    .collect();
                slv_sum(&terms).to_real().abs()
            };
            let center = peak(idx(k)).x_peak;
            let (x, v) = maximize_on_interval(local, center - PEAK_WINDOW, center + PEAK_WINDOW, search);
            if best.is_none_or(|b| v > b.value) {
                best = Some(ComboPeak { x_star: x, value: v });
            }
        }
        best.expect("plan always contains the first window")
    }
}

/// Sup-norm of a combination over its peak windows, with the default
/// 1e-3 grid and 1e-10 refinement.
pub fn combo_sup_norm(d: &ComboDescriptor) -> ComboPeak {
    combo_sup_norm_with(d, &SupSearch::default())
}

pub fn combo_sup_norm_with(d: &ComboDescriptor, search: &SupSearch) -> ComboPeak {
    RowPlan::new(d.block, d.row).search(d.signs(), search)
}

/// Sup-norms of every slot of a row. Slots agreeing on the signs that
/// matter for the searched windows share one search.
pub fn row_sup_norms(block: &BlockSpec, row: u64, signs: &SignMatrix, search: &SupSearch) -> Vec<ComboPeak> {
    let plan = RowPlan::new(*block, row);
    let cols = plan.influential_columns();
    let mut memo: HashMap<Vec<i8>, ComboPeak> = HashMap::new();
    (0..signs.order())
        .map(|slot| {
            let row_signs = signs.row(slot);
            let key: Vec<i8> = cols.iter().map(|&j| row_signs[j]).collect();
            *memo.entry(key).or_insert_with(|| plan.search(row_signs, search))
        })
        .collect()
}

/// Smallest `(√P_k - √P_{k-1})/√2` over all adjacent pairs in all rows.
/// `None` for single-column blocks.
pub fn min_peak_separation(spec: &BlockSpec) -> Option<f64> {
    if spec.c < 2 {
        return None;
    }
    let mut min = f64::INFINITY;
    for h in 0..spec.r {
        let mut prev = ((spec.y + h) as f64).sqrt();
        for k in 1..spec.c {
            let cur = ((spec.y + h + k * spec.r) as f64).sqrt();
            min = min.min((cur - prev) / std::f64::consts::SQRT_2);
            prev = cur;
        }
    }
    Some(min)
}
