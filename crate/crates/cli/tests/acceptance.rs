//! One PASS/FAIL line per acceptance criterion; exits non-zero when any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gaussbound::analysis::{divergence_constant, weight_stats};
use gaussbound::basis::{bump_error, h_sup_norm, peak, DecayEnvelope};
use gaussbound::blocks::{
    block_spec, combo_sup_norm, min_peak_separation, row_indices, separation_limit, sign_matrix, ComboDescriptor,
};
use gaussbound::expansion::{build_bounded, build_combo, Expansion};
use gaussbound::probe::{build_certificate, row_masses, verify_certificate, Oscillator, RadialProfile, DEFAULT_DELTA};
use gaussbound::reconstruct::{row_kernel_sums, grid_report, Interval};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn combo8() -> &'static Expansion {
    static E: OnceLock<Expansion> = OnceLock::new();
    E.get_or_init(|| build_combo(8).unwrap())
}

fn gaussbound(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gaussbound"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("GAUSSBOUND_OUT_DIR")
        .output()
        .unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn raw_reconstruction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = gaussbound(
        dir.path(),
        &["reconstruct", "--scheme", "raw", "--horizon", "200", "--range", "-3:3", "--step", "0.25", "--threads", "1"],
    );
    let elapsed = start.elapsed();
    let csv = std::fs::read_to_string(dir.path().join("reconstruct_raw.csv")).unwrap();
    let mut max_err = 0f64;
    let mut rows = 0;
    let mut beyond_bound = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let err: f64 = f[4].parse().unwrap();
        max_err = max_err.max(err);
        rows += 1;
        if f[5].is_empty() || err > f[5].parse::<f64>().unwrap() {
            beyond_bound += 1;
        }
    }
    // the exit code carries the per-point check including the rounding allowance
    let certified = o.status.code() == Some(0);
    outcome(
        certified && rows == 625 && max_err < 1e-10 && elapsed < Duration::from_secs(10),
        format!(
            "{rows} points, max error {max_err:e}, certified {certified}, {beyond_bound} points above the bare tail bound, {}",
            secs(elapsed)
        ),
    )
}

fn energy_invariance() -> Outcome {
    let start = Instant::now();
    let mut worst = 0f64;
    let mut checked = 0usize;
    for n in 1..=6 {
        let spec = block_spec(n).unwrap();
        let signs = sign_matrix(n).unwrap();
        let half = 1.5 * (block_spec(n + 1).unwrap().y as f64 / 2.0).sqrt();
        let grid: Vec<f64> = (0..21).map(|i| -half + 2.0 * half * i as f64 / 20.0).collect();
        for s in 0..10 {
            let h = s * (spec.r - 1) / 9;
            for &x in &grid {
                for &y in &grid {
                    let (combo, raw) = row_kernel_sums(&spec, h, &signs, x, y);
                    worst = worst.max((combo - raw).abs());
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(60),
        format!("{checked} (row, x, y) checks, max gap {worst:e}, {}", secs(elapsed)),
    )
}

const TABLE_ONE: &str = "a1,a2,a3,a4,a5,a6,a7,a8
1,1,1,1,1,1,1,1
1,-1,1,-1,1,-1,1,-1
1,1,-1,-1,1,1,-1,-1
1,-1,-1,1,1,-1,-1,1
1,1,1,1,-1,-1,-1,-1
1,-1,1,-1,-1,1,-1,1
1,1,-1,-1,-1,-1,1,1
1,-1,-1,1,-1,1,1,-1
";

fn sign_table() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussbound(dir.path(), &["signs", "--n", "4"]);
    let csv = std::fs::read_to_string(dir.path().join("signs_n4.csv")).unwrap_or_default();
    let golden = o.status.code() == Some(0) && csv == TABLE_ONE;
    let mut orthogonal = true;
    for n in 1..=10 {
        let s = sign_matrix(n).unwrap();
        let c = s.order();
        for i in 0..c {
            for j in 0..c {
                let dot: i64 = s.row(i).iter().zip(s.row(j)).map(|(&a, &b)| (a * b) as i64).sum();
                orthogonal &= dot == if i == j { c as i64 } else { 0 };
            }
        }
    }
    outcome(golden && orthogonal, format!("table matches {golden}, orthogonal for n <= 10 {orthogonal}"))
}

fn worked_indices() -> Outcome {
    let spec = block_spec(4).unwrap();
    let row = row_indices(&spec, 0).unwrap();
    let ok = (spec.y, spec.r, spec.c) == (2835, 1080, 8) && row == [2835, 3915, 4995, 6075, 7155, 8235, 9315, 10395];
    outcome(ok, format!("block 4 = ({}, {}, {}), first row {row:?}", spec.y, spec.r, spec.c))
}

fn sup_norm_laws() -> Outcome {
    let start = Instant::now();
    let mut raw_range = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..50 {
        let k = 10f64.powf(3.0 + 3.0 * i as f64 / 49.0).round() as u64;
        let v = peak(k).m_squared() * (2.0 * std::f64::consts::PI * k as f64).sqrt();
        raw_range = (raw_range.0.min(v), raw_range.1.max(v));
    }
    let raw_ok = raw_range.0 >= 0.999 && raw_range.1 <= 1.001;

    let e = combo8();
    let mut combo_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cache_gap = 0f64;
    let mut samples = 0;
    for n in 3..=8 {
        let spec = block_spec(n).unwrap();
        let c = spec.c as usize;
        for h in [0, spec.r / 4, spec.r / 2, 3 * spec.r / 4, spec.r - 1] {
            for slot in [0, c / 4, c / 2, c - 1] {
                let d = ComboDescriptor::new(n, h, slot).unwrap();
                let value = combo_sup_norm(&d).value;
                let law = value * value * spec.c as f64 * (2.0 * std::f64::consts::PI * (spec.y + h) as f64).sqrt();
                combo_range = (combo_range.0.min(law), combo_range.1.max(law));
                let cached = e.terms().iter().find(|t| t.index == d.index() && t.basis == gaussbound::expansion::BasisDescriptor::Combo(d.clone()));
                if let Some(t) = cached {
                    cache_gap = cache_gap.max((t.ln_sup.exp() / value - 1.0).abs());
                }
                samples += 1;
            }
        }
    }
    let combo_ok = combo_range.0 >= 0.95 && combo_range.1 <= 1.05;
    let elapsed = start.elapsed();
    outcome(
        raw_ok && combo_ok && elapsed < Duration::from_secs(300),
        format!(
            "raw law in [{}, {}], combo law in [{}, {}] over {samples} samples, stored norms within {cache_gap:e}, {}",
            raw_range.0,
            raw_range.1,
            combo_range.0,
            combo_range.1,
            secs(elapsed)
        ),
    )
}

fn weight_statistics() -> Outcome {
    let e = combo8();
    let mut failures = Vec::new();
    let unit = weight_stats(e, 1.0).unwrap();
    for &(n, g) in unit.per_block.iter().filter(|(n, _)| *n >= 4) {
        if !(7.2..=8.8).contains(&g) {
            failures.push(format!("G({n},1)={g}"));
        }
    }
    let slope = unit.fitted_slope.unwrap();
    let d = divergence_constant();
    if (slope / d - 1.0).abs() > 0.15 {
        failures.push(format!("slope {slope}"));
    }
    let mut worst = 0f64;
    for p in [1.5, 2.0, 3.0] {
        let target = 4f64.powf(1.0 - p);
        for (n, r) in weight_stats(e, p).unwrap().successive_ratios() {
            if (4..=7).contains(&n) {
                let dev = (r / target - 1.0).abs();
                worst = worst.max(dev);
                if dev > 0.10 {
                    failures.push(format!("G({},{p})/G({n},{p}) = {} x 4^(1-p)", n + 1, r / target));
                }
            }
        }
    }
    let detail = format!("slope {slope} vs D {d}, worst ratio deviation {worst}");
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join(", ")))
    }
}

fn bounded_domain() -> Outcome {
    let env = DecayEnvelope::minimal(3.0).unwrap();
    let mut sup = 0f64;
    let mut finite = true;
    let mut dominated = true;
    for k in 0..=5000u64 {
        let h = h_sup_norm(k, 3.0).unwrap();
        let v = h.to_real();
        finite &= v.is_finite();
        sup = sup.max(v);
        if (49..=5000).contains(&k) {
            dominated &= h.log_mag() <= env.ln_bound(k);
        }
    }
    let e = build_bounded(3.0, 300).unwrap();
    let range = Interval::new(0.0, 3.0).unwrap();
    let report = grid_report(&e, range, range, 0.25).unwrap();
    let ok = finite && dominated && env.b > 0.0 && report.max_abs_error <= 1e-8;
    outcome(
        ok,
        format!(
            "sup_k |h_k| = {sup}, envelope A = {:e}, B = {}, k0 = {}, dominated {dominated}, reconstruction error {:e}",
            env.a, env.b, env.k0, report.max_abs_error
        ),
    )
}

fn peak_separation() -> Outcome {
    let limit = separation_limit();
    let seps: Vec<f64> = (2..=8).map(|n| min_peak_separation(&block_spec(n).unwrap()).unwrap()).collect();
    let all_wide = seps.iter().all(|&s| s >= 3.5);
    let approaching = seps.windows(2).all(|w| (w[1] - limit).abs() <= (w[0] - limit).abs());
    let last = *seps.last().unwrap();
    let close = (last / limit - 1.0).abs() < 0.01;
    outcome(
        all_wide && approaching && close,
        format!("min gaps {:?}, limit {limit}, block 8 off by {:e}", seps, last / limit - 1.0),
    )
}

fn probe_certificates() -> Outcome {
    let psi = Oscillator::Cosine;
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for f in RadialProfile::ALL {
        for eps in [0.05, 0.1, 0.2] {
            for n in [10, 100, 1000] {
                let start = Instant::now();
                let ok = match build_certificate(f, &psi, eps, DEFAULT_DELTA, n) {
                    Ok(c) => {
                        let v = verify_certificate(&c, f, &psi);
                        let q = v.quad_form.unwrap_or(f64::NAN);
                        let l = v.lin_form_sq.unwrap_or(f64::NAN);
                        v.passed
                            && q > 1.0 - eps
                            && q < 1.0 + eps
                            && l > n as f64 * DEFAULT_DELTA * DEFAULT_DELTA
                            && row_masses(&c, f).iter().all(|r| r.holds())
                    }
                    Err(_) => false,
                };
                let elapsed = start.elapsed();
                if n == 1000 {
                    slowest = slowest.max(elapsed);
                }
                if !ok || elapsed >= Duration::from_secs(30) {
                    failures.push(format!("{} eps={eps} n={n}", f.name()));
                }
            }
        }
    }
    let detail = format!("27 certificates, slowest at n = 1000 {}", secs(slowest));
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; failed {}", failures.join(", ")))
    }
}

fn bump_trend() -> Outcome {
    let errs: Vec<f64> = [100u64, 1000, 10_000, 100_000].iter().map(|&k| bump_error(k, 2.0).unwrap()).collect();
    let last = bump_error(1_000_000, 2.0).unwrap();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    outcome(decreasing && last < 0.01, format!("errors {errs:?}, at 1e6 {last:e}"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["reconstruct", "--scheme", "raw"],
        &["reconstruct", "--scheme", "bounded", "--domain-edge", "3", "--horizon", "300"],
        &["reconstruct", "--scheme", "combo", "--max-block", "3", "--format", "json"],
        &["norms", "--scheme", "raw", "--horizon", "2000"],
        &["norms", "--scheme", "bounded", "--domain-edge", "3"],
        &["norms", "--scheme", "combo", "--max-block", "5"],
        &["weights", "--p", "1", "--max-block", "5"],
        &["weights", "--p", "2", "--max-block", "5", "--format", "json"],
        &["signs", "--n", "4"],
        &["signs", "--n", "6", "--format", "json"],
        &["probe", "--kernel", "laplace", "--psi", "cos", "--epsilon", "0.1", "--n", "1000"],
        &["verify", "CERT"],
        &["bumpcheck"],
        &["bumpcheck", "--format", "json"],
        &["expand", "--scheme", "raw", "--horizon", "50"],
        &["expand", "--scheme", "combo", "--max-block", "3", "--format", "json"],
    ];
    let cert_dir = tempfile::tempdir().unwrap();
    gaussbound(cert_dir.path(), runs[10]);
    let cert = cert_dir.path().join("probe_laplace_cos_n1000.json");
    let mut mismatched = Vec::new();
    for args in runs {
        let args: Vec<&str> = args.iter().map(|a| if *a == "CERT" { cert.to_str().unwrap() } else { a }).collect();
        let mut seen = Vec::new();
        for threads in ["1", "1", "4"] {
            let dir = tempfile::tempdir().unwrap();
            let full = [&args[..], &["--threads", threads]].concat();
            let o = gaussbound(dir.path(), &full);
            seen.push((o.status.code(), o.stdout, snapshot(dir.path())));
        }
        if seen[0].2.is_empty() || seen.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(args[..2.min(args.len())].join(" "));
        }
    }
    let detail = format!("{} command configurations, 3 runs each (threads 1, 1, 4)", runs.len());
    if mismatched.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; differing: {}", mismatched.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("raw reconstruction", raw_reconstruction),
        ("energy invariance", energy_invariance),
        ("golden sign table", sign_table),
        ("worked indices", worked_indices),
        ("sup-norm laws", sup_norm_laws),
        ("weight statistics", weight_statistics),
        ("bounded-domain boundedness", bounded_domain),
        ("peak separation", peak_separation),
        ("probe certificates", probe_certificates),
        ("bump approximation trend", bump_trend),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!("{tag} criterion {}: {name}: {}", i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
