//! Property checks shared by the property suites and the acceptance run.

use gssa::evaluation::{direction_of_change, ecdf_export, modified_dm_test, ForecastRecord};
use gssa::ssa;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 128;

pub fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Series of length 4..=120 with a window length valid for it.
pub fn series_and_window() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (4usize..=120)
        .prop_flat_map(|n| (prop::collection::vec(-100.0f64..100.0, n), 2usize..=n / 2))
}

pub fn hankel_antidiagonals((y, l): (Vec<f64>, usize)) -> Result<(), TestCaseError> {
    let x = ssa::embed(&y, l).unwrap();
    let k = y.len() - l + 1;
    prop_assert_eq!(x.shape(), (l, k));
    for i in 0..l {
        for j in 0..k {
            prop_assert_eq!(x[(i, j)], y[i + j]);
            if i + 1 < l && j > 0 {
                prop_assert_eq!(x[(i, j)], x[(i + 1, j - 1)]);
            }
        }
    }
    Ok(())
}

pub fn eigen_energy((y, l): (Vec<f64>, usize)) -> Result<(), TestCaseError> {
    let x = ssa::embed(&y, l).unwrap();
    let frob: f64 = x.iter().map(|v| v * v).sum();
    prop_assume!(frob > 0.0);
    let dec = ssa::decompose(&x).unwrap();
    let total: f64 = dec.eigenvalues.iter().sum();
    prop_assert!((total - frob).abs() <= 1e-9 * frob, "sum λ = {total}, ‖X‖² = {frob}");
    prop_assert!(dec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    Ok(())
}

pub fn ecdf_monotone(samples: Vec<f64>) -> Result<(), TestCaseError> {
    let pts = ecdf_export(&samples).unwrap();
    prop_assert_eq!(pts.len(), samples.len());
    for w in pts.windows(2) {
        prop_assert!(w[0].0 <= w[1].0);
        prop_assert!(w[0].1 <= w[1].1);
    }
    prop_assert!(pts.iter().all(|&(_, f)| f > 0.0 && f <= 1.0));
    prop_assert_eq!(pts.last().unwrap().1, 1.0);
    Ok(())
}

pub fn error_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (10usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
            1usize..=(n / 2).min(12),
        )
    })
}

pub fn dm_antisymmetric((a, b, h): (Vec<f64>, Vec<f64>, usize)) -> Result<(), TestCaseError> {
    let ab = modified_dm_test(&a, &b, h).unwrap();
    let ba = modified_dm_test(&b, &a, h).unwrap();
    prop_assert_eq!(ab.degenerate, ba.degenerate);
    prop_assert!((ab.statistic + ba.statistic).abs() <= 1e-9 * (1.0 + ab.statistic.abs()));
    prop_assert!((ab.p_value - ba.p_value).abs() <= 1e-12);
    Ok(())
}

/// Values on a 1/8 grid so that shifting by an integer is exact.
pub fn dc_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, i32)> {
    (6usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec((-400i32..400).prop_map(|k| k as f64 / 8.0), n),
            prop::collection::vec((-400i32..400).prop_map(|k| k as f64 / 8.0), n),
            -1000i32..1000,
        )
    })
}

pub fn dc_shift_invariant((actual, fc, c): (Vec<f64>, Vec<f64>, i32)) -> Result<(), TestCaseError> {
    let c = c as f64;
    let records = |actual: &[f64], fc: &[f64]| -> Vec<ForecastRecord> {
        (1..actual.len())
            .map(|o| ForecastRecord::new(o, 1, fc[o], actual[o], "m"))
            .collect()
    };
    let base = direction_of_change(&records(&actual, &fc), &actual).unwrap();
    let a2: Vec<f64> = actual.iter().map(|v| v + c).collect();
    let f2: Vec<f64> = fc.iter().map(|v| v + c).collect();
    let shifted = direction_of_change(&records(&a2, &f2), &a2).unwrap();
    prop_assert_eq!(base, shifted);
    Ok(())
}
