use std::f64::consts::PI;

/// Largest `k` whose factorial is held exactly in a `u64`.
const EXACT_FACTORIAL_MAX: u64 = 20;

fn exact_factorial(k: u64) -> u64 {
    debug_assert!(k <= EXACT_FACTORIAL_MAX);
    (1..=k).product()
}

/// Leading Stirling terms `k ln k - k + ½ ln(2πk)`, for `k ≥ 1`.
pub fn stirling_main(k: u64) -> f64 {
    debug_assert!(k >= 1);
    let kf = k as f64;
    kf * (kf.ln() - 1.0) + 0.5 * (2.0 * PI * kf).ln()
}

/// Remainder `ln k! - stirling_main(k)` for `k ≥ 1`.
///
/// Positive and below `1/(12k)`. Exact arithmetic for small `k`, the
/// asymptotic series otherwise (truncation error below `1e-17` from `k = 21`).
pub fn stirling_correction(k: u64) -> f64 {
    debug_assert!(k >= 1);
    if k <= EXACT_FACTORIAL_MAX {
        return (exact_factorial(k) as f64).ln() - stirling_main(k);
    }
    let inv = 1.0 / k as f64;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2j} / (2j (2j-1))
    inv * (1.0 / 12.0
        - inv2
            * (1.0 / 360.0
                - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))))
}

/// `ln k!`.
pub fn log_factorial(k: u64) -> f64 {
    if k <= EXACT_FACTORIAL_MAX {
        return (exact_factorial(k) as f64).ln();
    }
    stirling_main(k) + stirling_correction(k)
}

/// `ln(1 + u) - u`, accurate near `u = 0`.
pub fn log1pmx(u: f64) -> f64 {
    if u.abs() < 0.25 {
        // ln(1+u) = 2 atanh(t) with t = u / (2 + u), and 2t - u = -2t²/(1 - t)
        let t = u / (2.0 + u);
        let t2 = t * t;
        let mut odd = 0.0;
        let mut power = t * t2;
        let mut j = 3.0;
        while j < 40.0 {
            odd += power / j;
            power *= t2;
            j += 2.0;
        }
        -2.0 * t2 / (1.0 - t) + 2.0 * odd
    } else {
        u.ln_1p() - u
    }
}
