use gaussbound::blocks::block_spec;
use gaussbound::expansion::{build_bounded, build_combo, build_raw};
use gaussbound::reconstruct::{compare_schemes, exact_kernel, rounding_allowance, series_kernel_detailed, tail_bound};

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn combo_and_raw_agree_on_the_same_index_set() {
    let combo = build_combo(3).unwrap();
    let raw = build_raw(block_spec(4).unwrap().y).unwrap();
    assert_eq!(combo.horizon(), raw.horizon());
    let xs = grid(-3.0, 3.0, 15);
    let gap = compare_schemes(&combo, &raw, &xs, &xs).unwrap();
    assert!(gap < 1e-11, "{gap}");
}

#[test]
fn normalized_and_plain_raw_agree() {
    let raw = build_raw(200).unwrap();
    let xs = grid(-3.0, 3.0, 15);
    let gap = compare_schemes(&raw, &raw.normalize(), &xs, &xs).unwrap();
    assert!(gap < 1e-14, "{gap}");
}

#[test]
fn diagonal_is_one_within_the_tail_bound() {
    let schemes = [
        (build_raw(200).unwrap(), -3.0),
        (build_bounded(3.0, 300).unwrap(), 0.0),
        (build_combo(3).unwrap(), -3.0),
    ];
    for (e, lo) in &schemes {
        for x in grid(*lo, 3.0, 25) {
            let s = series_kernel_detailed(e, x, x).unwrap();
            let bound = tail_bound(e.horizon(), x, x).unwrap() + rounding_allowance(s.abs_sum);
            let exact = exact_kernel(x, x, 1.0).unwrap();
            assert_eq!(exact, 1.0);
            assert!((s.value - 1.0).abs() <= bound, "{:?} x={x}: {}", e.scheme(), s.value);
        }
    }
}
