//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::props;
use gssa::evaluation::{modified_dm_test, rmse, rrmse, ForecastRecord};
use gssa::experiment::{run_inputs, ExperimentConfig, Method, SeriesConfig, SeriesInput};
use gssa::kalman::{frozen_coefficient_forecast, gssa_forecast, GssaConfig, InitCovariance};
use gssa::series::SampleSplit;
use gssa::{ssa, EmbeddingConfig, TimeSeries};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lrf_exactness() -> Outcome {
    let y: Vec<f64> = (1..=120).map(|t| (2.0 * PI * t as f64 / 12.0).cos()).collect();
    let model = ssa::fit(&y, &EmbeddingConfig::new(24, 2)).map_err(|e| e.to_string())?;
    let f = ssa::forecast_recurrent(&model, 24).map_err(|e| e.to_string())?;
    let worst = f
        .iter()
        .enumerate()
        .map(|(i, v)| (v - (2.0 * PI * (121 + i) as f64 / 12.0).cos()).abs())
        .fold(0.0, f64::max);
    check(worst < 1e-6, format!("max error {worst:.2e} over h = 1..24 (tol 1e-6)"))
}

fn round_trip() -> Outcome {
    let mut rng = common::rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(4..=200);
        let l = rng.random_range(2..=n / 2);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let dec = ssa::decompose(&ssa::embed(&y, l).unwrap()).map_err(|e| e.to_string())?;
        let rec = ssa::reconstruct(&dec, dec.rank).map_err(|e| e.to_string())?;
        for (a, b) in rec.iter().zip(&y) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-9, format!("max abs error {worst:.2e} over 100 series (tol 1e-9)"))
}

fn degeneracy() -> Outcome {
    let horizons = [1, 3, 6, 12];
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let y = common::sine_plus_noise(150, 12.0, 0.1, 100 + seed);
        let series = TimeSeries::new(y).unwrap();
        let split = SampleSplit::new(150, 100).unwrap();
        let cfg = EmbeddingConfig::new(24, 2);
        let g = GssaConfig {
            init_cov: InitCovariance::Zero,
            ..GssaConfig::zero_process_noise()
        };
        let run = gssa_forecast(&series, &split, &cfg, &g, &horizons).map_err(|e| e.to_string())?;
        let frozen = frozen_coefficient_forecast(&series, &split, &cfg, &horizons).map_err(|e| e.to_string())?;
        if run.records.len() != frozen.len() {
            return Err("record counts differ".into());
        }
        for (a, b) in run.records.iter().zip(&frozen) {
            if (a.origin, a.horizon) != (b.origin, b.horizon) {
                return Err("record alignment differs".into());
            }
            worst = worst.max((a.forecast - b.forecast).abs());
        }
    }
    check(worst < 1e-8, format!("max difference {worst:.2e} on 10 series (tol 1e-8)"))
}

fn kalman_oracle() -> Outcome {
    let mut rng = common::rng(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let l = 2 + i % 3;
        let d = rng.random_range(1..=2);
        let mut state = common::random_state(&mut rng, l - 1, d);
        let y = rng.random_range(-5.0..5.0);
        let (theta, cov) = common::kalman_oracle(
            state.theta.as_slice(),
            &common::to_rows(&state.cov),
            &state.history,
            d,
            state.obs_noise,
            state.process_noise,
            y,
        );
        state.step(y).map_err(|e| e.to_string())?;
        for (a, b) in state.theta.iter().zip(&theta) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in common::to_rows(&state.cov).iter().flatten().zip(cov.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-10, format!("max deviation {worst:.2e} over 50 steps (tol 1e-10)"))
}

fn bootstrap_near_unity() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.methods = vec![Method::Ssa, Method::Boot];
    cfg.bootstrap_replications = 1000;
    cfg.seed = 2024;
    let spec = SeriesConfig {
        window_length: Some(24),
        rank: Some(2),
        break_index: Some(150),
        ..SeriesConfig::named("sine")
    };
    let input = SeriesInput {
        spec,
        data: TimeSeries::new(common::sine_plus_noise(200, 12.0, 0.05, 5)),
    };
    let (report, _) = run_inputs(&cfg, vec![input]).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = report.failures.is_empty();
    for h in [1, 3, 6, 12] {
        let r = report.overall_rrmse("BootSSA", h).unwrap_or(f64::NAN);
        ok &= (0.98..=1.02).contains(&r);
        parts.push(format!("h{h}={r:.4}"));
    }
    check(ok, format!("{} (band [0.98, 1.02])", parts.join(" ")))
}

const SHIFT_N: usize = 180;
const SHIFT_BREAK: usize = 132;

fn break_response() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.methods = vec![Method::Ssa, Method::Gssa];
    let inputs = (0..24)
        .map(|i| SeriesInput {
            spec: SeriesConfig {
                break_index: Some(SHIFT_BREAK),
                ..SeriesConfig::named(&format!("shift{i:02}"))
            },
            data: TimeSeries::new(common::level_shift_series(SHIFT_N, SHIFT_BREAK, 3.0, 600 + i)),
        })
        .collect();
    let (report, _) = run_inputs(&cfg, inputs).map_err(|e| e.to_string())?;
    if !report.failures.is_empty() {
        return Err(format!("{} series failed", report.failures.len()));
    }
    let r: Vec<f64> = [1, 3, 6, 12]
        .iter()
        .map(|&h| report.overall_rrmse("GSSA", h).unwrap_or(f64::NAN))
        .collect();
    check(
        r[0] < 0.95 && r[1] < 0.95 && r[3] >= r[0],
        format!("mean GSSA/SSA h1={:.3} h3={:.3} h6={:.3} h12={:.3}", r[0], r[1], r[2], r[3]),
    )
}

fn metric_fixtures() -> Outcome {
    let recs = [
        ForecastRecord::new(1, 1, 0.0, 3.0, "a"),
        ForecastRecord::new(2, 1, 0.0, 4.0, "a"),
    ];
    let r = rmse(&recs).map_err(|e| e.to_string())?;
    let constant = |e: f64, m: &str| -> Vec<ForecastRecord> {
        (0..12).map(|o| ForecastRecord::new(o + 1, 1, e, 0.0, m)).collect()
    };
    let ratio = rrmse(&constant(2.725, "a"), &constant(3.763, "b")).map_err(|e| e.to_string())?;
    let errs = [0.3, -1.2, 0.8, 2.0, -0.4];
    let dm = modified_dm_test(&errs, &errs, 1).map_err(|e| e.to_string())?;
    check(
        (r - 3.535534).abs() <= 1e-6 && (ratio - 0.724).abs() <= 5e-4 && dm.degenerate && dm.p_value == 1.0,
        format!("rmse={r:.6} rrmse={ratio:.4} dm_degenerate={}", dm.degenerate),
    )
}

fn write_fixture(dir: &Path) {
    for (name, seed) in [("alpha", 11u64), ("beta", 12)] {
        let y = common::sine_plus_noise(96, 12.0, 0.1, seed);
        let mut text = String::from("period,value\n");
        for (t, v) in y.iter().enumerate() {
            text.push_str(&format!("{},{}\n", t + 1, v + 10.0));
        }
        fs::write(dir.join(format!("{name}.csv")), text).unwrap();
    }
    fs::write(
        dir.join("experiment.toml"),
        "seed = 9\nbootstrap_replications = 50\ndetect_breaks = false\n\n\
         [[series]]\nname = \"alpha\"\npath = \"alpha.csv\"\ngroup = \"g\"\n\n\
         [[series]]\nname = \"beta\"\npath = \"beta.csv\"\ngroup = \"g\"\n",
    )
    .unwrap();
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(dir.path());
    let run = |out: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_gssa"))
            .arg("--config")
            .arg(dir.path().join("experiment.toml"))
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .map_err(|e| e.to_string())?;
        if status.success() {
            Ok(())
        } else {
            Err(format!("cli exited with {status}"))
        }
    };
    run("a")?;
    run("b")?;
    let mut compared = 0;
    for name in ["tables.csv", "ecdf_h1.csv", "ecdf_h3.csv", "ecdf_h6.csv", "ecdf_h12.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.path().join("b").join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between runs"));
        }
        compared += 1;
    }
    Ok(format!("{compared} files byte-identical across two runs"))
}

fn property_suites() -> Outcome {
    let mut runner = props::runner();
    let mut summary = Vec::new();
    let mut run = |name: &str, result: Result<(), String>| {
        summary.push(format!("{name}:{}", if result.is_ok() { "ok" } else { "FAILED" }));
        result
    };
    let results = [
        run("hankel", runner.run(&props::series_and_window(), props::hankel_antidiagonals).map_err(|e| e.to_string())),
        run("energy", runner.run(&props::series_and_window(), props::eigen_energy).map_err(|e| e.to_string())),
        run(
            "ecdf",
            runner
                .run(&proptest::collection::vec(-50.0f64..50.0, 1..200), props::ecdf_monotone)
                .map_err(|e| e.to_string()),
        ),
        run("dm", runner.run(&props::error_pairs(), props::dm_antisymmetric).map_err(|e| e.to_string())),
        run("dc", runner.run(&props::dc_case(), props::dc_shift_invariant).map_err(|e| e.to_string())),
    ];
    let detail = format!("{} ({} cases each)", summary.join(" "), props::CASES);
    match results.into_iter().find_map(|r| r.err()) {
        None => Ok(detail),
        Some(e) => Err(format!("{detail}: {e}")),
    }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("LRF exactness", Duration::from_secs(1), lrf_exactness),
        ("round trip", Duration::from_secs(5), round_trip),
        ("degeneracy reduction", Duration::from_secs(10), degeneracy),
        ("Kalman oracle", Duration::from_secs(1), kalman_oracle),
        ("bootstrap near unity", Duration::from_secs(60), bootstrap_near_unity),
        ("break response", Duration::from_secs(300), break_response),
        ("metric fixtures", Duration::from_secs(1), metric_fixtures),
        ("determinism", Duration::from_secs(120), determinism),
        ("property suites", Duration::from_secs(120), property_suites),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} [{name}] {detail} ({elapsed:.2?})",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
