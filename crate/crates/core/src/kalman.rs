//! General SSA: recurrent coefficients updated through the forecast period.
//!
//! The state is `θ = (φ₁..φ_m, γ₁..γ_m)` with `m = L - 1`. Each coefficient
//! moves by its gradient times a lagged difference,
//! `φ_u ← φ_u + Δy_{t-u} γ_u`, and the gradients follow random walks with
//! covariance `Σ_V = smoothing_factor · σ²_ε · I`. In state-space form
//!
//! ```text
//! θ_t = F*_{t-1} θ_{t-1} + W_t,     F* = [ I  D ]   D = diag(Δy_{t-1} .. Δy_{t-m})
//!                                        [ 0  I ]
//! y_t = H*_t θ_t + ε_t,             H* = (y_{t-1} .. y_{t-m}, 0 .. 0)
//! ```
//!
//! and the standard Kalman recursion gives
//!
//! ```text
//! Φ_t = F* C_{t-1} F*ᵀ + Σ_W           Σ_W = diag(0, Σ_V)
//! s_t = H* Φ_t H*ᵀ + σ²_ε
//! K_t = Φ_t H*ᵀ / s_t
//! θ̂_t = F* θ̂_{t-1} + K_t (y_t - H* F* θ̂_{t-1})
//! C_t = Φ_t - K_t s_t K_tᵀ
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, BootstrapConfig};
use crate::error::{Error, Result};
use crate::evaluation::ForecastRecord;
use crate::series::{SampleSplit, TimeSeries};
use crate::ssa::{self, EmbeddingConfig, LrfModel};

pub const DEFAULT_SMOOTHING_FACTOR: f64 = 1e-4;
pub const SMOOTHING_FACTOR_RANGE: (f64, f64) = (1e-8, 1e-1);

pub const METHOD_NAME: &str = "GSSA";

/// Where the initial coefficient covariance `R̂` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCovariance {
    /// `LrfModel::init_cov`, i.e. `(σ̂²_ε / Σ y²) · I` unless replaced.
    #[default]
    Model,
    /// Bootstrap covariance of the coefficient estimates.
    Bootstrap(BootstrapConfig),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GssaConfig {
    pub smoothing_factor: f64,
    /// Lag `d` of the differences `Δy_t = y_t - y_{t-d}`.
    pub diff_lag: usize,
    /// Overrides the in-sample residual variance as `σ²_ε`.
    pub observation_noise: Option<f64>,
    pub init_cov: InitCovariance,
}

impl Default for GssaConfig {
    fn default() -> Self {
        Self {
            smoothing_factor: DEFAULT_SMOOTHING_FACTOR,
            diff_lag: 1,
            observation_noise: None,
            init_cov: InitCovariance::Model,
        }
    }
}

impl GssaConfig {
    /// Validated constructor; the smoothing factor must lie in
    /// [`SMOOTHING_FACTOR_RANGE`].
    pub fn new(smoothing_factor: f64, diff_lag: usize) -> Result<Self> {
        let cfg = Self {
            smoothing_factor,
            diff_lag,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Zero process noise: the gradients never move. Bypasses the range
    /// check; used to reduce GSSA to fixed-coefficient forecasting.
    pub fn zero_process_noise() -> Self {
        Self {
            smoothing_factor: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = SMOOTHING_FACTOR_RANGE;
        if !(lo..=hi).contains(&self.smoothing_factor) {
            return Err(Error::arg(format!(
                "smoothing factor {} outside [{lo:e}, {hi:e}]",
                self.smoothing_factor
            )));
        }
        self.validate_structure()
    }

    fn validate_structure(&self) -> Result<()> {
        if !(self.smoothing_factor >= 0.0 && self.smoothing_factor.is_finite()) {
            return Err(Error::arg("smoothing factor must be finite and nonnegative"));
        }
        if self.diff_lag < 1 {
            return Err(Error::arg("difference lag must be at least 1"));
        }
        if let Some(v) = self.observation_noise {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("observation noise {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GssaState {
    /// `(φ₁..φ_m, γ₁..γ_m)`.
    pub theta: DVector<f64>,
    /// Covariance of the estimation error of `theta`.
    pub cov: DMatrix<f64>,
    /// Observations consumed so far; the next step consumes `t + 1`.
    pub t: usize,
    /// Trailing observations, oldest first, at least `m + d` of them.
    pub history: Vec<f64>,
    pub diff_lag: usize,
    /// `σ²_ε`.
    pub obs_noise: f64,
    /// Diagonal of `Σ_V`.
    pub process_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub prediction: f64,
    pub innovation: f64,
    pub gain: DVector<f64>,
}

/// Starts the recursion from the SSA coefficients with zero gradients and
/// `C = diag(R̂, 0)`.
///
/// `history` is the observed series up to the start of the forecast
/// period; its length is taken as `t`.
pub fn init_state(model: &LrfModel, gcfg: &GssaConfig, history: &[f64]) -> Result<GssaState> {
    gcfg.validate_structure()?;
    let m = model.order();
    if m == 0 {
        return Err(Error::arg("model has no coefficients"));
    }
    if model.init_cov.shape() != (m, m) {
        return Err(Error::arg("model coefficient covariance has the wrong shape"));
    }
    let need = m + gcfg.diff_lag;
    if history.len() < need {
        return Err(Error::arg(format!(
            "need {need} past observations, got {}",
            history.len()
        )));
    }
    let mut theta = DVector::zeros(2 * m);
    theta.rows_mut(0, m).copy_from_slice(&model.coefficients);
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    cov.view_mut((0, 0), (m, m)).copy_from(&model.init_cov);
    let obs_noise = gcfg.observation_noise.unwrap_or(model.residual_variance);
    Ok(GssaState {
        theta,
        cov,
        t: history.len(),
        history: history[history.len() - need..].to_vec(),
        diff_lag: gcfg.diff_lag,
        obs_noise,
        process_noise: gcfg.smoothing_factor * obs_noise,
    })
}

impl GssaState {
    pub fn order(&self) -> usize {
        self.theta.len() / 2
    }

    /// `y_{t-lag}` relative to the next observation.
    fn lagged(&self, lag: usize) -> f64 {
        self.history[self.history.len() - lag]
    }

    /// `Δy_{t-u}` for `u = 1..=m`.
    fn differences(&self) -> Vec<f64> {
        (1..=self.order())
            .map(|u| self.lagged(u) - self.lagged(u + self.diff_lag))
            .collect()
    }

    /// `F*_{t-1}` for the next observation.
    pub fn transition(&self) -> DMatrix<f64> {
        let m = self.order();
        let mut f = DMatrix::identity(2 * m, 2 * m);
        for (u, dy) in self.differences().into_iter().enumerate() {
            f[(u, m + u)] = dy;
        }
        f
    }

    /// `H*_t` for the next observation.
    pub fn observation_row(&self) -> DVector<f64> {
        let m = self.order();
        let mut h = DVector::zeros(2 * m);
        for u in 0..m {
            h[u] = self.lagged(u + 1);
        }
        h
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.theta.as_slice()[..self.order()]
    }

    pub fn gradients(&self) -> &[f64] {
        &self.theta.as_slice()[self.order()..]
    }

    /// Coefficient block of `F* θ̂`: the coefficients that produce the
    /// one-step prediction of the next observation.
    pub fn one_step_coefficients(&self) -> Vec<f64> {
        self.coefficients()
            .iter()
            .zip(self.gradients())
            .zip(self.differences())
            .map(|((phi, gamma), dy)| phi + dy * gamma)
            .collect()
    }

    /// Trace of the gradient block of `C`. Stays near zero when the
    /// smoothing factor is too small for the coefficients to move.
    pub fn gradient_spread(&self) -> f64 {
        let m = self.order();
        (m..2 * m).map(|i| self.cov[(i, i)]).sum()
    }

    /// Last `m` observations, oldest first.
    pub fn recent(&self) -> &[f64] {
        &self.history[self.history.len() - self.order()..]
    }

    /// Frozen-coefficient forecast `1..=horizon` steps ahead of the current
    /// origin, seeded on observed values.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        ssa::recurrent_forecast(&self.one_step_coefficients(), self.recent(), horizon)
    }

    /// Consumes one observation in place.
    pub fn step(&mut self, y_new: f64) -> Result<StepOutput> {
        let t = self.t + 1;
        let m = self.order();
        let f = self.transition();
        let h = self.observation_row();

        let predicted_state = &f * &self.theta;
        let prediction = h.dot(&predicted_state);
        let innovation = y_new - prediction;

        let mut phi = &f * &self.cov * f.transpose();
        for i in m..2 * m {
            phi[(i, i)] += self.process_noise;
        }
        let phi_h = &phi * &h;
        let s = h.dot(&phi_h) + self.obs_noise;
        let gain = if s > 0.0 {
            phi_h / s
        } else {
            DVector::zeros(2 * m)
        };

        let theta = predicted_state + &gain * innovation;
        let mut cov = phi - &gain * gain.transpose() * s;
        cov = (&cov + cov.transpose()) * 0.5;

        if !prediction.is_finite()
            || theta.iter().any(|v| !v.is_finite())
            || cov.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Numerical {
                t,
                what: "non-finite Kalman update".into(),
            });
        }

        self.theta = theta;
        self.cov = cov;
        self.t = t;
        self.history.remove(0);
        self.history.push(y_new);
        Ok(StepOutput {
            prediction,
            innovation,
            gain,
        })
    }
}

/// Functional form of [`GssaState::step`].
pub fn kalman_step(state: &GssaState, y_new: f64) -> Result<(GssaState, StepOutput)> {
    let mut next = state.clone();
    let out = next.step(y_new)?;
    Ok((next, out))
}

/// Records and diagnostics from a rolling GSSA run.
#[derive(Debug, Clone)]
pub struct GssaRun {
    pub model: LrfModel,
    pub records: Vec<ForecastRecord>,
    /// One-step coefficients at each origin, starting with the in-sample
    /// fit at the break.
    pub coefficient_path: Vec<Vec<f64>>,
    pub gradient_spread: Vec<f64>,
}

fn check_horizons(split: &SampleSplit, horizons: &[usize]) -> Result<usize> {
    let max_h = *horizons
        .iter()
        .max()
        .ok_or_else(|| Error::arg("no horizons"))?;
    if horizons.contains(&0) {
        return Err(Error::arg("horizons must be at least 1"));
    }
    if split.out_sample_len < max_h {
        return Err(Error::arg(format!(
            "out-of-sample length {} shorter than horizon {max_h}",
            split.out_sample_len
        )));
    }
    Ok(max_h)
}

fn resolve_model(in_sample: &[f64], cfg: &EmbeddingConfig, gcfg: &GssaConfig) -> Result<LrfModel> {
    let model = ssa::fit(in_sample, cfg)?;
    let m = model.order();
    match gcfg.init_cov {
        InitCovariance::Model => Ok(model),
        InitCovariance::Zero => model.with_init_cov(DMatrix::zeros(m, m)),
        InitCovariance::Bootstrap(bcfg) => {
            let series = TimeSeries::new(in_sample.to_vec())?;
            let cov = bootstrap::lrf_coefficient_covariance(&series, cfg, &bcfg)?;
            model.with_init_cov(cov)
        }
    }
}

/// Rolling-origin GSSA forecasts over the out-of-sample period.
///
/// SSA is fitted once on the in-sample data. At every origin `T` (from the
/// break to `N - 1`) each horizon `h` with `T + h ≤ N` is forecast by
/// freezing the current one-step coefficients and iterating the recurrence
/// on the last `L - 1` observations; then `y_{T+1}` is fed to the filter.
pub fn gssa_forecast(
    series: &TimeSeries,
    split: &SampleSplit,
    cfg: &EmbeddingConfig,
    gcfg: &GssaConfig,
    horizons: &[usize],
) -> Result<GssaRun> {
    gcfg.validate_structure()?;
    let values = series.values();
    if split.len() != values.len() {
        return Err(Error::arg("split does not match series length"));
    }
    let max_h = check_horizons(split, horizons)?;
    let b = split.break_index;
    if b < 2 * cfg.window_length {
        return Err(Error::arg(format!(
            "in-sample length {b} below twice the window length {}",
            cfg.window_length
        )));
    }
    let in_sample = &values[..b];
    let model = resolve_model(in_sample, cfg, gcfg)?;
    let mut state = init_state(&model, gcfg, in_sample)?;

    let n = values.len();
    let mut records = Vec::new();
    let mut coefficient_path = Vec::with_capacity(n - b);
    let mut gradient_spread = Vec::with_capacity(n - b);
    for origin in b..n {
        let path = state.forecast(max_h);
        for &h in horizons {
            if origin + h <= n {
                records.push(ForecastRecord::new(
                    origin,
                    h,
                    path[h - 1],
                    values[origin + h - 1],
                    METHOD_NAME,
                ));
            }
        }
        coefficient_path.push(state.one_step_coefficients());
        gradient_spread.push(state.gradient_spread());
        state.step(values[origin])?;
    }
    Ok(GssaRun {
        model,
        records,
        coefficient_path,
        gradient_spread,
    })
}

/// Reference forecaster: in-sample SSA coefficients held fixed, seeded on
/// observed values at every origin.
pub fn frozen_coefficient_forecast(
    series: &TimeSeries,
    split: &SampleSplit,
    cfg: &EmbeddingConfig,
    horizons: &[usize],
) -> Result<Vec<ForecastRecord>> {
    let values = series.values();
    let max_h = check_horizons(split, horizons)?;
    let b = split.break_index;
    let model = ssa::fit(&values[..b], cfg)?;
    let m = model.order();
    let n = values.len();
    let mut records = Vec::new();
    for origin in b..n {
        let path = ssa::recurrent_forecast(&model.coefficients, &values[origin - m..origin], max_h);
        for &h in horizons {
            if origin + h <= n {
                records.push(ForecastRecord::new(
                    origin,
                    h,
                    path[h - 1],
                    values[origin + h - 1],
                    "FrozenSSA",
                ));
            }
        }
    }
    Ok(records)
}
