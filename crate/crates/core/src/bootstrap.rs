//! Residual-resampling bootstrap around the SSA-reconstructed signal.
//!
//! Each replicate draws `N` residuals with replacement, adds them to the
//! reconstructed series and refits SSA with the same window and rank.
//! Replicate `i` uses ChaCha8 seeded with `seed` on stream `i`, so results do
//! not depend on how replicates are scheduled across threads.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::series::TimeSeries;
use crate::ssa::{self, EmbeddingConfig};

/// More than this share of failed replicates aborts the bootstrap.
pub const MAX_DROPPED_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub seed: u64,
    pub interval_level: f64,
    /// Keep the `B × h` matrix of replicate forecasts in the result.
    pub retain_replicates: bool,
    pub execution: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 1000,
            seed: 0,
            interval_level: 0.95,
            retain_replicates: false,
            execution: Execution::default(),
        }
    }
}

impl BootstrapConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self {
            replications,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::arg("bootstrap needs at least one replicate"));
        }
        if !(self.interval_level > 0.0 && self.interval_level < 1.0) {
            return Err(Error::arg(format!(
                "interval level {} outside (0, 1)",
                self.interval_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapForecast {
    pub mean_forecasts: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Forecasts of the basic SSA fit on the original series.
    pub basic_forecasts: Vec<f64>,
    /// Per-horizon standard deviation across replicates.
    pub replicate_sd: Vec<f64>,
    pub used: usize,
    pub dropped: usize,
    pub per_replicate_forecasts: Option<Vec<Vec<f64>>>,
}

impl BootstrapForecast {
    /// Largest `|mean - basic|` over the horizon.
    pub fn discrepancy(&self) -> f64 {
        self.mean_forecasts
            .iter()
            .zip(&self.basic_forecasts)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

struct Replicate {
    forecasts: Vec<f64>,
    coefficients: Vec<f64>,
}

struct Replicates {
    basic: ssa::LrfModel,
    kept: Vec<Replicate>,
    dropped: usize,
}

fn run_replicates(values: &[f64], cfg: &EmbeddingConfig, bcfg: &BootstrapConfig, horizon: usize) -> Result<Replicates> {
    bcfg.validate()?;
    let basic = ssa::fit(values, cfg)?;
    let signal = &basic.reconstructed;
    let residuals: Vec<f64> = values.iter().zip(signal).map(|(y, s)| y - s).collect();
    let n = values.len();

    let outcomes = map_indexed(bcfg.replications, bcfg.execution, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(bcfg.seed);
        rng.set_stream(i as u64);
        let resampled: Vec<f64> = signal
            .iter()
            .map(|s| s + residuals[rng.random_range(0..n)])
            .collect();
        let model = ssa::fit(&resampled, cfg).ok()?;
        let forecasts = if horizon > 0 {
            ssa::forecast_recurrent(&model, horizon).ok()?
        } else {
            Vec::new()
        };
        if forecasts.iter().any(|f| !f.is_finite()) {
            return None;
        }
        Some(Replicate {
            forecasts,
            coefficients: model.coefficients,
        })
    });

    let total = outcomes.len();
    let kept: Vec<Replicate> = outcomes.into_iter().flatten().collect();
    let dropped = total - kept.len();
    if kept.is_empty() || dropped as f64 > MAX_DROPPED_SHARE * total as f64 {
        return Err(Error::BootstrapUnstable { dropped, total });
    }
    if dropped > 0 {
        log::debug!("bootstrap dropped {dropped} of {total} replicates");
    }
    Ok(Replicates {
        basic,
        kept,
        dropped,
    })
}

/// Linear-interpolated empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Average bootstrap forecasts with empirical percentile intervals.
pub fn bootstrap_forecast(
    series: &TimeSeries,
    cfg: &EmbeddingConfig,
    bcfg: &BootstrapConfig,
    horizon: usize,
) -> Result<BootstrapForecast> {
    if horizon < 1 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    let reps = run_replicates(series.values(), cfg, bcfg, horizon)?;
    let basic_forecasts = ssa::forecast_recurrent(&reps.basic, horizon)?;
    let b = reps.kept.len();
    let alpha = (1.0 - bcfg.interval_level) / 2.0;

    let mut mean_forecasts = Vec::with_capacity(horizon);
    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    let mut replicate_sd = Vec::with_capacity(horizon);
    let mut column = Vec::with_capacity(b);
    for h in 0..horizon {
        column.clear();
        column.extend(reps.kept.iter().map(|r| r.forecasts[h]));
        let mean = column.iter().sum::<f64>() / b as f64;
        let sd = if b > 1 {
            (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
        } else {
            0.0
        };
        column.sort_by(f64::total_cmp);
        mean_forecasts.push(mean);
        lower.push(quantile_sorted(&column, alpha));
        upper.push(quantile_sorted(&column, 1.0 - alpha));
        replicate_sd.push(sd);
    }

    let per_replicate_forecasts = bcfg
        .retain_replicates
        .then(|| reps.kept.iter().map(|r| r.forecasts.clone()).collect());

    Ok(BootstrapForecast {
        mean_forecasts,
        lower,
        upper,
        basic_forecasts,
        replicate_sd,
        used: b,
        dropped: reps.dropped,
        per_replicate_forecasts,
    })
}

/// Sample covariance of the recurrent coefficients across replicates,
/// symmetrised and projected onto the PSD cone.
pub fn lrf_coefficient_covariance(
    series: &TimeSeries,
    cfg: &EmbeddingConfig,
    bcfg: &BootstrapConfig,
) -> Result<DMatrix<f64>> {
    let reps = run_replicates(series.values(), cfg, bcfg, 0)?;
    let m = reps.basic.order();
    let b = reps.kept.len();
    if b < 2 {
        return Ok(DMatrix::zeros(m, m));
    }
    let mut mean = vec![0.0; m];
    for r in &reps.kept {
        for (acc, c) in mean.iter_mut().zip(&r.coefficients) {
            *acc += c;
        }
    }
    mean.iter_mut().for_each(|v| *v /= b as f64);

    let mut cov = DMatrix::zeros(m, m);
    for r in &reps.kept {
        for i in 0..m {
            let di = r.coefficients[i] - mean[i];
            for j in 0..m {
                cov[(i, j)] += di * (r.coefficients[j] - mean[j]);
            }
        }
    }
    cov /= (b - 1) as f64;
    Ok(nearest_psd(cov))
}

/// `(A + Aᵀ)/2` with negative eigenvalues set to zero.
pub(crate) fn nearest_psd(a: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|v| *v >= 0.0) {
        return sym;
    }
    let floored = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&floored) * q.transpose();
    (&out + out.transpose()) * 0.5
}
