//! One-dimensional maximization: a uniform grid scan to bracket the best
//! sample, followed by golden-section refinement inside the bracket.

/// Grid resolution and final tolerance for empirical maxima.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupSearch {
    pub grid_step: f64,
    pub tol: f64,
}

impl Default for SupSearch {
    fn default() -> Self {
        Self { grid_step: 1e-3, tol: 1e-10 }
    }
}

impl SupSearch {
    /// Coarser scan for functions known to be unimodal on the interval up to
    /// perturbations far below the sampling resolution.
    pub fn coarse() -> Self {
        Self { grid_step: 0.05, tol: 1e-10 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes `f` on `[lo, hi]` by golden-section search, assuming a single
/// local maximum in the bracket. Returns `(argmax, max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan of `[lo, hi]` followed by golden-section refinement around the
/// best grid point. Never returns less than the best grid sample; ties go to
/// the leftmost point.
pub fn maximize_on_interval<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    search: &SupSearch,
) -> (f64, f64) {
    debug_assert!(hi >= lo && search.grid_step > 0.0);
    let steps = ((hi - lo) / search.grid_step).ceil().max(1.0) as usize;
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let x = (lo + i as f64 * search.grid_step).min(hi);
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - search.grid_step).max(lo);
    let b = (best.0 + search.grid_step).min(hi);
    let refined = golden_section_max(&f, a, b, search.tol);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}
