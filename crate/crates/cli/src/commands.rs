use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use gaussbound::analysis::{divergence_constant, lp_norm_check, mass_ratio, predicted_mass, weight_stats};
use gaussbound::basis::{bump_error, h_sup_norm, peak, DecayEnvelope};
use gaussbound::blocks::{block_spec, row_sup_norms, sign_matrix};
use gaussbound::expansion::{build_bounded, build_combo, build_raw, BasisDescriptor, Expansion, Scheme, SCHEMA_VERSION};
use gaussbound::numerics::SupSearch;
use gaussbound::probe::{build_certificate, row_masses, verify_certificate, Oscillator, ProbeCertificate};
use gaussbound::reconstruct::grid_report;
use gaussbound::report::{fmt_real, Table};

use crate::config::{BumpConfig, Common, Format, ProbeConfig, SchemeConfig, WeightsConfig};

/// A failed run: invalid input (exit 2) or a computation that could not
/// complete (exit 1).
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Compute(String),
}

impl From<gaussbound::Error> for Failure {
    fn from(e: gaussbound::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

/// Result of a completed command.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    common: &'a Common,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(common: &'a Common) -> Result<Self, Failure> {
        fs::create_dir_all(&common.out_dir)?;
        Ok(Self { common, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.common.out_dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(gaussbound::Error::from)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(self, passed: bool, summary: String) -> Outcome {
        Outcome { passed, summary, files: self.files }
    }
}

fn build(cfg: &SchemeConfig) -> Result<Expansion, Failure> {
    Ok(match cfg.scheme {
        Scheme::Raw => build_raw(cfg.horizon)?,
        Scheme::Bounded => build_bounded(cfg.domain_edge, cfg.horizon)?,
        Scheme::Combo => build_combo(cfg.max_block)?,
    })
}

pub fn reconstruct(common: &Common, cfg: &SchemeConfig) -> Result<Outcome, Failure> {
    let e = build(cfg)?;
    let report = grid_report(&e, cfg.x_range, cfg.y_range, cfg.step)?;
    let mut out = Writer::new(common)?;
    let stem = format!("reconstruct_{}", cfg.scheme.as_str());
    match common.format {
        Format::Csv => {
            out.write(&format!("{stem}.csv"), &report.table().to_csv())?;
            let mut summary = report.summary_json()?;
            summary.push('\n');
            out.write(&format!("{stem}.json"), &summary)?;
        }
        Format::Json => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "summary": &report,
                "points": &report.points,
            });
            out.json(&format!("{stem}.json"), &doc)?;
        }
    }
    let summary = format!(
        "reconstruct {} horizon={} points={} max_abs_error={} tail_bound={} unbounded_points={}",
        cfg.scheme.as_str(),
        report.horizon,
        report.points.len(),
        fmt_real(report.max_abs_error),
        fmt_real(report.tail_bound),
        report.points_without_bound
    );
    Ok(out.finish(report.certified, summary))
}

/// One line of the norms table.
struct NormRow {
    id: String,
    sup: f64,
    predicted: Option<f64>,
    checked: bool,
}

/// Smallest raw index held to the peak law in `norms --scheme raw`.
pub const RAW_LAW_FROM: u64 = 10;
/// Smallest block held to the recombination law in `norms --scheme combo`.
pub const COMBO_LAW_FROM: u32 = 3;

fn sample_rows(r: u64) -> Vec<u64> {
    let mut rows = vec![0, r / 4, r / 2, 3 * r / 4, r - 1];
    rows.dedup();
    rows
}

pub fn norms(common: &Common, cfg: &SchemeConfig) -> Result<Outcome, Failure> {
    let mut rows = Vec::new();
    // ratio column: (sup / predicted)² except for the bounded envelope
    let mut squared = true;
    match cfg.scheme {
        Scheme::Raw => {
            for k in 1..cfg.horizon {
                let p = peak(k);
                rows.push(NormRow {
                    id: k.to_string(),
                    sup: p.m(),
                    predicted: Some((2.0 * std::f64::consts::PI * k as f64).powf(-0.25)),
                    checked: k >= RAW_LAW_FROM,
                });
            }
        }
        Scheme::Combo => {
            for n in 1..=cfg.max_block {
                let spec = block_spec(n)?;
                let signs = sign_matrix(n)?;
                for h in sample_rows(spec.r) {
                    let index = spec.y + h;
                    if index == 0 {
                        continue;
                    }
                    let law = (1.0 / (spec.c as f64 * (2.0 * std::f64::consts::PI * index as f64).sqrt())).sqrt();
                    for (j, pk) in row_sup_norms(&spec, h, &signs, &SupSearch::default()).into_iter().enumerate() {
                        rows.push(NormRow {
                            id: format!("{n}/{h}/{j}"),
                            sup: pk.value,
                            predicted: Some(law),
                            checked: n >= COMBO_LAW_FROM,
                        });
                    }
                }
            }
        }
        Scheme::Bounded => {
            squared = false;
            let env = DecayEnvelope::minimal(cfg.domain_edge)?;
            for k in 0..cfg.horizon {
                let sup = h_sup_norm(k, cfg.domain_edge)?.to_real();
                let in_tail = k >= env.k0;
                rows.push(NormRow {
                    id: k.to_string(),
                    sup,
                    predicted: in_tail.then(|| env.ln_bound(k).exp()),
                    checked: in_tail,
                });
            }
        }
    }

    let mut table = Table::new(&["identifier", "sup_norm", "predicted", "ratio"]);
    let mut passed = rows.iter().all(|r| r.sup.is_finite());
    let mut worst: f64 = 0.0;
    let mut records = Vec::new();
    for r in &rows {
        let ratio = r.predicted.map(|p| if squared { (r.sup / p).powi(2) } else { r.sup / p });
        if r.checked {
            let ok = match (ratio, squared) {
                (Some(q), true) => (q - 1.0).abs() <= cfg.tolerance,
                (Some(q), false) => q <= 1.0,
                (None, _) => false,
            };
            passed &= ok;
            if let (Some(q), true) = (ratio, squared) {
                worst = worst.max((q - 1.0).abs());
            }
        }
        table.push(vec![
            r.id.clone(),
            fmt_real(r.sup),
            r.predicted.map(fmt_real).unwrap_or_default(),
            ratio.map(fmt_real).unwrap_or_default(),
        ]);
        records.push(json!({ "identifier": r.id, "sup_norm": r.sup, "predicted": r.predicted, "ratio": ratio }));
    }
    let sup_max = rows.iter().map(|r| r.sup).fold(0.0, f64::max);
    let mut out = Writer::new(common)?;
    let stem = format!("norms_{}", cfg.scheme.as_str());
    match common.format {
        Format::Csv => out.write(&format!("{stem}.csv"), &table.to_csv())?,
        Format::Json => out.json(
            &format!("{stem}.json"),
            &json!({ "schema_version": SCHEMA_VERSION, "scheme": cfg.scheme, "rows": records }),
        )?,
    }
    let summary = format!(
        "norms {} rows={} max_sup={} worst_law_deviation={}",
        cfg.scheme.as_str(),
        rows.len(),
        fmt_real(sup_max),
        fmt_real(worst)
    );
    Ok(out.finish(passed, summary))
}

/// Band for `G(n, 1)` on blocks 4 and up.
pub const MASS_BAND: (f64, f64) = (7.2, 8.8);
pub const RATIO_TOLERANCE: f64 = 0.1;
pub const SLOPE_TOLERANCE: f64 = 0.15;
pub const FIRST_ASYMPTOTIC_BLOCK: u32 = 4;

pub fn weights(common: &Common, cfg: &WeightsConfig) -> Result<Outcome, Failure> {
    let e = build_combo(cfg.max_block)?;
    let stats = weight_stats(&e, cfg.p)?;
    let mut checks = Vec::new();
    if cfg.p == 1.0 {
        for &(n, g) in stats.per_block.iter().filter(|(n, _)| *n >= FIRST_ASYMPTOTIC_BLOCK) {
            checks.push((format!("G({n},1)"), g, (MASS_BAND.0..=MASS_BAND.1).contains(&g)));
        }
        let slope = stats.fitted_slope.unwrap_or(f64::NAN);
        let d = divergence_constant();
        checks.push(("fitted_slope".into(), slope, ((slope - d) / d).abs() <= SLOPE_TOLERANCE));
    } else {
        let target = 1.0 / mass_ratio(cfg.p);
        for (n, q) in stats.successive_ratios().into_iter().filter(|(n, _)| *n >= FIRST_ASYMPTOTIC_BLOCK) {
            let rel = q / target;
            checks.push((format!("G({},p)/G({n},p)", n + 1), rel, (rel - 1.0).abs() <= RATIO_TOLERANCE));
        }
    }
    let lp = if cfg.p > 1.0 { Some(lp_norm_check(&e, cfg.p)?) } else { None };
    let passed = checks.iter().all(|c| c.2);

    let p_tag = fmt_real(cfg.p);
    let mut out = Writer::new(common)?;
    match common.format {
        Format::Csv => {
            out.write(&format!("weights_p{p_tag}.csv"), &stats.mass_table().to_csv())?;
            out.write(&format!("weights_partial_p{p_tag}.csv"), &stats.partial_sum_table().to_csv())?;
        }
        Format::Json => {
            let per_block: Vec<_> = stats
                .per_block
                .iter()
                .map(|&(n, g)| json!({ "n": n, "G_np": g, "predicted": predicted_mass(n, cfg.p) }))
                .collect();
            let partial: Vec<_> =
                stats.partial_sums.iter().map(|&(m, s)| json!({ "term_count": m, "partial_sum": s })).collect();
            let check_records: Vec<_> =
                checks.iter().map(|(name, v, ok)| json!({ "check": name, "value": v, "passed": ok })).collect();
            out.json(
                &format!("weights_p{p_tag}.json"),
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "p": cfg.p,
                    "max_block": cfg.max_block,
                    "per_block": per_block,
                    "partial_sums": partial,
                    "fitted_slope": stats.fitted_slope,
                    "model_D": stats.model_d,
                    "lp": lp.map(|c| json!({ "total": c.total, "computed": c.computed, "tail": c.tail, "converged": c.converged })),
                    "checks": check_records,
                }),
            )?;
        }
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.2).map(|c| format!("{}={}", c.0, fmt_real(c.1))).collect();
    let mut summary = format!("weights p={p_tag} max_block={} checks={}", cfg.max_block, checks.len());
    if let Some(slope) = stats.fitted_slope.filter(|_| cfg.p == 1.0) {
        summary.push_str(&format!(" fitted_slope={} D={}", fmt_real(slope), fmt_real(stats.model_d)));
    }
    if !failed.is_empty() {
        summary.push_str(&format!(" failed: {}", failed.join(" ")));
    }
    Ok(out.finish(passed, summary))
}

pub fn signs(common: &Common, n: u32) -> Result<Outcome, Failure> {
    let s = sign_matrix(n)?;
    let c = s.order();
    let mut orthogonal = true;
    'outer: for i in 0..c {
        for j in i..c {
            let dot: i64 = s.row(i).iter().zip(s.row(j)).map(|(&a, &b)| (a * b) as i64).sum();
            if dot != if i == j { c as i64 } else { 0 } {
                orthogonal = false;
                break 'outer;
            }
        }
    }
    let mut out = Writer::new(common)?;
    match common.format {
        Format::Csv => out.write(&format!("signs_n{n}.csv"), &s.to_csv())?,
        Format::Json => {
            let rows: Vec<&[i8]> = (0..c).map(|j| s.row(j)).collect();
            out.json(&format!("signs_n{n}.json"), &json!({ "schema_version": SCHEMA_VERSION, "n": n, "order": c, "rows": rows }))?;
        }
    }
    Ok(out.finish(orthogonal, format!("signs n={n} order={c} orthogonal={orthogonal}")))
}

pub fn certificate_file_name(cfg: &ProbeConfig) -> String {
    format!("probe_{}_{}_n{}.json", cfg.kernel.name(), cfg.psi.name(), cfg.n)
}

pub fn probe(common: &Common, cfg: &ProbeConfig) -> Result<Outcome, Failure> {
    let cert = build_certificate(cfg.kernel, &cfg.psi, cfg.epsilon, cfg.delta, cfg.n)?;
    let verdict = verify_certificate(&cert, cfg.kernel, &cfg.psi);
    let rows_hold = row_masses(&cert, cfg.kernel).iter().all(|r| r.holds());
    let mut out = Writer::new(common)?;
    let mut text = cert.to_json()?;
    text.push('\n');
    out.write(&certificate_file_name(cfg), &text)?;
    let summary = format!(
        "probe {} {} epsilon={} n={} quad_form={} lin_form_sq={} weight_bound={} verified={} row_bounds={}",
        cfg.kernel.name(),
        cfg.psi.name(),
        fmt_real(cfg.epsilon),
        cfg.n,
        fmt_real(cert.quad_form),
        fmt_real(cert.lin_form_sq),
        fmt_real(gaussbound::probe::implied_weight_bound(&cert)),
        verdict.passed,
        rows_hold
    );
    Ok(out.finish(verdict.passed && rows_hold, summary))
}

pub fn verify(common: &Common, path: &Path) -> Result<Outcome, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cert = ProbeCertificate::from_json(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let psi = Oscillator::builtin(&cert.psi).map_err(|e| Failure::Config(e.to_string()))?;
    let verdict = verify_certificate(&cert, cert.kernel, &psi);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("certificate");
    let mut out = Writer::new(common)?;
    out.json(&format!("verify_{stem}.json"), &json!({ "schema_version": SCHEMA_VERSION, "verdict": &verdict }))?;
    let reason = verdict.failure.as_ref().map(|f| format!(" reason: {f}")).unwrap_or_default();
    Ok(out.finish(verdict.passed, format!("verify {} n={}{reason}", path.display(), cert.n)))
}

pub fn bumpcheck(common: &Common, cfg: &BumpConfig) -> Result<Outcome, Failure> {
    let errors: Vec<(u64, f64)> = cfg.ks.iter().map(|&k| Ok((k, bump_error(k, cfg.window)?))).collect::<Result<_, Failure>>()?;
    let decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
    let &(k_max, e_max) = errors.iter().max_by_key(|(k, _)| *k).expect("at least one index");
    let small_at_large_k = k_max < 1_000_000 || e_max < 0.01;
    let mut out = Writer::new(common)?;
    match common.format {
        Format::Csv => {
            let mut t = Table::new(&["k", "window", "bump_error"]);
            for &(k, e) in &errors {
                t.push(vec![k.to_string(), fmt_real(cfg.window), fmt_real(e)]);
            }
            out.write("bumpcheck.csv", &t.to_csv())?;
        }
        Format::Json => {
            let rows: Vec<_> = errors.iter().map(|&(k, e)| json!({ "k": k, "bump_error": e })).collect();
            out.json("bumpcheck.json", &json!({ "schema_version": SCHEMA_VERSION, "window": cfg.window, "rows": rows }))?;
        }
    }
    let summary = format!(
        "bumpcheck window={} decreasing={decreasing} error_at_k{k_max}={}",
        fmt_real(cfg.window),
        fmt_real(e_max)
    );
    Ok(out.finish(decreasing && small_at_large_k, summary))
}

pub fn expand(common: &Common, cfg: &SchemeConfig) -> Result<Outcome, Failure> {
    let e = build(cfg)?;
    let mut out = Writer::new(common)?;
    let stem = format!("expansion_{}", cfg.scheme.as_str());
    match common.format {
        Format::Json => {
            let mut text = e.to_json()?;
            text.push('\n');
            out.write(&format!("{stem}.json"), &text)?;
        }
        Format::Csv => {
            let mut t = Table::new(&["index", "basis", "lambda", "ln_lambda", "ln_sup", "argmax"]);
            for term in e.terms() {
                let basis = match &term.basis {
                    BasisDescriptor::RawPsi(k) => format!("psi/{k}"),
                    BasisDescriptor::ScaledH { k, .. } => format!("h/{k}"),
                    BasisDescriptor::Combo(d) => format!("combo/{}/{}/{}", d.block.n, d.row, d.slot),
                };
                t.push(vec![
                    term.index.to_string(),
                    basis,
                    term.weight.linear().map(fmt_real).unwrap_or_default(),
                    fmt_real(term.weight.ln()),
                    fmt_real(term.ln_sup),
                    fmt_real(term.argmax),
                ]);
            }
            out.write(&format!("{stem}.csv"), &t.to_csv())?;
        }
    }
    let summary = format!("expand {} terms={} normalized={}", cfg.scheme.as_str(), e.horizon(), e.is_normalized());
    Ok(out.finish(true, summary))
}
