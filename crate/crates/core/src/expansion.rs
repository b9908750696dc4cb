//! Truncated expansions `K(x, y) = Σ λ_k φ_k(x) φ_k(y)` of the unit-width
//! Gaussian kernel `exp(-(x - y)²)`.
//!
//! Three schemes are provided:
//!
//! * raw: `λ_k = 1`, `φ_k = ψ_k`;
//! * bounded: on `[0, N]`, `λ_k = 1/k²` and `φ_k = h_k = k ψ_k` (with `h_0 = ψ_0`);
//! * combo: every block row of raw functions replaced by its signed
//!   recombinations, each normalized to unit sup-norm.
//!
//! In normalized form each basis function is divided by its sup-norm and the
//! weight absorbs the square of it, so every stored function has `‖φ‖∞ = 1`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_h, eval_psi, h_sup_norm, peak};
use crate::blocks::{
    block_spec, eval_combo, row_sup_norms, sign_matrix, BlockSpec, ComboDescriptor, SignMatrix,
    DEFAULT_MAX_BLOCK,
};
use crate::error::{Error, Result};
use crate::numerics::{SignedLogValue, SupSearch};

pub const SCHEMA_VERSION: u32 = 1;

/// Weights with `|ln λ|` below this also carry a linear value.
pub const LINEAR_MIRROR_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Raw,
    Bounded,
    Combo,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Raw => "raw",
            Scheme::Bounded => "bounded",
            Scheme::Combo => "combo",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Scheme::Raw),
            "bounded" => Ok(Scheme::Bounded),
            "combo" => Ok(Scheme::Combo),
            other => Err(Error::Format(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisDescriptor {
    RawPsi(u64),
    ScaledH { k: u64, domain_edge: f64 },
    Combo(ComboDescriptor),
}

impl BasisDescriptor {
    /// Value of the function before any normalization.
    pub fn eval(&self, x: f64) -> SignedLogValue {
        match self {
            BasisDescriptor::RawPsi(k) => eval_psi(*k, x),
            BasisDescriptor::ScaledH { k, .. } => eval_h(*k, x),
            BasisDescriptor::Combo(d) => eval_combo(d, x),
        }
    }
}

/// A non-negative weight kept as `ln λ`, with the plain value alongside
/// whenever it is comfortably inside the `f64` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    ln: f64,
    linear: Option<f64>,
}

impl Weight {
    pub fn from_ln(ln: f64) -> Self {
        let linear = (ln.abs() < LINEAR_MIRROR_LIMIT).then(|| ln.exp());
        Self { ln, linear }
    }

    /// For `value > 0`; the linear mirror keeps the given value exactly.
    pub fn from_linear(value: f64) -> Self {
        debug_assert!(value > 0.0);
        let ln = value.ln();
        let linear = (ln.abs() < LINEAR_MIRROR_LIMIT).then_some(value);
        Self { ln, linear }
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn linear(&self) -> Option<f64> {
        self.linear
    }

    pub fn value(&self) -> f64 {
        self.linear.unwrap_or_else(|| self.ln.exp())
    }

    /// `λ^p`, through the linear mirror when one exists.
    pub fn powf(&self, p: f64) -> f64 {
        match self.linear {
            Some(v) => v.powf(p),
            None => (p * self.ln).exp(),
        }
    }

    fn scaled_ln(&self, delta: f64) -> Self {
        if delta == 0.0 {
            *self
        } else {
            Self::from_ln(self.ln + delta)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    /// Position of the function in the raw index ordering.
    pub index: u64,
    pub weight: Weight,
    pub basis: BasisDescriptor,
    /// `ln ‖basis‖∞` of the unnormalized function.
    pub ln_sup: f64,
    /// Where the sup-norm is attained.
    pub argmax: f64,
    /// The stored function is `basis(x) · exp(-ln_scale)`.
    pub ln_scale: f64,
}

impl Term {
    /// The stored (possibly normalized) basis function at `x`.
    pub fn eval(&self, x: f64) -> SignedLogValue {
        self.basis.eval(x).scale_ln(-self.ln_scale)
    }

    pub fn is_normalized(&self) -> bool {
        self.ln_scale == self.ln_sup
    }

    /// `λ φ(x) φ(y)` in the log domain.
    pub fn contribution(&self, x: f64, y: f64) -> SignedLogValue {
        (self.eval(x) * self.eval(y)).scale_ln(self.weight.ln)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    scheme: Scheme,
    max_block: Option<u32>,
    domain_edge: Option<f64>,
    terms: Vec<Term>,
}

impl Expansion {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of retained terms.
    pub fn horizon(&self) -> u64 {
        self.terms.len() as u64
    }

    pub fn max_block(&self) -> Option<u32> {
        self.max_block
    }

    pub fn domain_edge(&self) -> Option<f64> {
        self.domain_edge
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.terms.iter().all(Term::is_normalized)
    }

    /// Term taking raw index `index`, if retained.
    pub fn term(&self, index: u64) -> Option<&Term> {
        match self.scheme {
            Scheme::Raw | Scheme::Bounded => self.terms.get(index as usize),
            Scheme::Combo => self.terms.iter().find(|t| t.index == index),
        }
    }

    /// Terms belonging to block `n` of a combo expansion.
    pub fn block_terms(&self, n: u32) -> Result<&[Term]> {
        if self.scheme != Scheme::Combo || self.max_block.is_none_or(|mb| n > mb || n == 0) {
            return Err(Error::Range(format!("block {n} not present in this expansion")));
        }
        let spec = block_spec(n)?;
        Ok(&self.terms[spec.y as usize..spec.end() as usize])
    }

    /// Moves every sup-norm into the weights. Idempotent.
    pub fn normalize(&self) -> Expansion {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                weight: t.weight.scaled_ln(2.0 * (t.ln_sup - t.ln_scale)),
                ln_scale: t.ln_sup,
                ..t.clone()
            })
            .collect();
        Expansion { terms, ..self.clone() }
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if horizon > u32::MAX as u64 {
        return Err(Error::Range(format!("horizon {horizon} too large")));
    }
    Ok(())
}

/// Terms `(1, ψ_k)` for `k < horizon`.
pub fn build_raw(horizon: u64) -> Result<Expansion> {
    check_horizon(horizon)?;
    let terms = (0..horizon)
        .map(|k| {
            let p = peak(k);
            Term {
                index: k,
                weight: Weight::from_linear(1.0),
                basis: BasisDescriptor::RawPsi(k),
                ln_sup: p.ln_m,
                argmax: p.x_peak,
                ln_scale: 0.0,
            }
        })
        .collect();
    Ok(Expansion { scheme: Scheme::Raw, max_block: None, domain_edge: None, terms })
}

/// Terms `(1/k², h_k)` on `[0, domain_edge]`, with `(1, ψ_0)` first.
pub fn build_bounded(domain_edge: f64, horizon: u64) -> Result<Expansion> {
    if !(domain_edge > 0.0) || !domain_edge.is_finite() {
        return Err(Error::Domain(format!("domain edge {domain_edge} must be positive")));
    }
    check_horizon(horizon)?;
    let terms = (0..horizon)
        .map(|k| -> Result<Term> {
            let kf = k.max(1) as f64;
            Ok(Term {
                index: k,
                weight: Weight::from_linear(1.0 / (kf * kf)),
                basis: BasisDescriptor::ScaledH { k, domain_edge },
                ln_sup: h_sup_norm(k, domain_edge)?.log_mag(),
                argmax: peak(k).x_peak.min(domain_edge),
                ln_scale: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Expansion { scheme: Scheme::Bounded, max_block: None, domain_edge: Some(domain_edge), terms })
}

/// Settings for [`build_combo_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComboBuild {
    pub cap: u32,
    pub search: SupSearch,
}

impl Default for ComboBuild {
    fn default() -> Self {
        Self { cap: DEFAULT_MAX_BLOCK, search: SupSearch::coarse() }
    }
}

/// Normalized block-recombined expansion over blocks `1..=max_block`.
pub fn build_combo(max_block: u32) -> Result<Expansion> {
    build_combo_with(max_block, &ComboBuild::default())
}

pub fn build_combo_with(max_block: u32, opts: &ComboBuild) -> Result<Expansion> {
    if max_block == 0 || max_block > opts.cap {
        return Err(Error::Range(format!("max_block {max_block} outside 1..={}", opts.cap)));
    }
    let blocks: Vec<(BlockSpec, Arc<SignMatrix>)> = (1..=max_block)
        .map(|n| Ok((block_spec(n)?, Arc::new(sign_matrix(n)?))))
        .collect::<Result<_>>()?;
    let rows: Vec<(usize, u64)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, (spec, _))| (0..spec.r).map(move |h| (b, h)))
        .collect();
    let norms: Vec<_> = rows
        .par_iter()
        .map(|&(b, h)| row_sup_norms(&blocks[b].0, h, &blocks[b].1, &opts.search))
        .collect();

    let total = blocks.last().map_or(0, |(spec, _)| spec.end()) as usize;
    let mut terms = Vec::with_capacity(total);
    for (&(b, h), row_norms) in rows.iter().zip(norms) {
        let (spec, signs) = &blocks[b];
        for (slot, pk) in row_norms.into_iter().enumerate() {
            let d = ComboDescriptor::with_signs(*spec, h, slot, signs.clone())?;
            let ln_sup = pk.value.ln();
            terms.push(Term {
                index: d.index(),
                weight: Weight::from_linear(pk.value * pk.value),
                basis: BasisDescriptor::Combo(d),
                ln_sup,
                argmax: pk.x_star,
                ln_scale: ln_sup,
            });
        }
    }
    // block-major, then row, then slot
    terms.sort_by_key(|t| match &t.basis {
        BasisDescriptor::Combo(d) => (d.block.n, d.row, d.slot),
        _ => unreachable!(),
    });
    Ok(Expansion { scheme: Scheme::Combo, max_block: Some(max_block), domain_edge: None, terms })
}

#[derive(Serialize, Deserialize)]
struct Document {
    schema_version: u32,
    scheme: Scheme,
    parameters: Parameters,
    normalized: bool,
    terms: Vec<TermRecord>,
}

#[derive(Serialize, Deserialize)]
struct Parameters {
    horizon: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    max_block: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    domain_edge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sign_recursion: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    index: u64,
    basis: BasisRecord,
    lambda: Option<f64>,
    ln_lambda: f64,
    ln_sup: f64,
    argmax: f64,
    ln_scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BasisRecord {
    RawPsi { k: u64 },
    ScaledH { k: u64, domain_edge: f64 },
    /// `signs` names the row of the block's sign matrix.
    Combo { block: u32, row: u64, signs: usize },
}

/// The sign matrices are referenced by block and slot; this tag names the
/// construction they are regenerated from.
const SIGN_RECURSION: &str = "pairwise-sum-difference";

impl Expansion {
    pub fn to_json(&self) -> Result<String> {
        let terms = self
            .terms
            .iter()
            .map(|t| TermRecord {
                index: t.index,
                basis: match &t.basis {
                    BasisDescriptor::RawPsi(k) => BasisRecord::RawPsi { k: *k },
                    BasisDescriptor::ScaledH { k, domain_edge } => {
                        BasisRecord::ScaledH { k: *k, domain_edge: *domain_edge }
                    }
                    BasisDescriptor::Combo(d) => BasisRecord::Combo { block: d.block.n, row: d.row, signs: d.slot },
                },
                lambda: t.weight.linear,
                ln_lambda: t.weight.ln,
                ln_sup: t.ln_sup,
                argmax: t.argmax,
                ln_scale: t.ln_scale,
            })
            .collect();
        let doc = Document {
            schema_version: SCHEMA_VERSION,
            scheme: self.scheme,
            parameters: Parameters {
                horizon: self.horizon(),
                max_block: self.max_block,
                domain_edge: self.domain_edge,
                sign_recursion: (self.scheme == Scheme::Combo).then(|| SIGN_RECURSION.to_string()),
            },
            normalized: self.is_normalized(),
            terms,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Expansion> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "schema version {} not supported (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        if doc.terms.len() as u64 != doc.parameters.horizon {
            return Err(Error::Format("term count does not match horizon".into()));
        }
        let mut matrices: HashMap<u32, (BlockSpec, Arc<SignMatrix>)> = HashMap::new();
        let terms = doc
            .terms
            .into_iter()
            .map(|r| -> Result<Term> {
                let basis = match r.basis {
                    BasisRecord::RawPsi { k } => BasisDescriptor::RawPsi(k),
                    BasisRecord::ScaledH { k, domain_edge } => BasisDescriptor::ScaledH { k, domain_edge },
                    BasisRecord::Combo { block, row, signs } => {
                        let (spec, matrix) = match matrices.get(&block) {
                            Some(entry) => entry.clone(),
                            None => {
                                let entry = (block_spec(block)?, Arc::new(sign_matrix(block)?));
                                matrices.insert(block, entry.clone());
                                entry
                            }
                        };
                        BasisDescriptor::Combo(ComboDescriptor::with_signs(spec, row, signs, matrix)?)
                    }
                };
                if r.lambda.is_some_and(|v| !(v >= 0.0)) {
                    return Err(Error::Format(format!("negative weight at index {}", r.index)));
                }
                Ok(Term {
                    index: r.index,
                    weight: Weight { ln: r.ln_lambda, linear: r.lambda },
                    basis,
                    ln_sup: r.ln_sup,
                    argmax: r.argmax,
                    ln_scale: r.ln_scale,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Expansion {
            scheme: doc.scheme,
            max_block: doc.parameters.max_block,
            domain_edge: doc.parameters.domain_edge,
            terms,
        })
    }
}
