//! Basic singular spectrum analysis.
//!
//! The pipeline is `embed` → `decompose` → `reconstruct` / `lrf_coefficients`
//! → `forecast_recurrent`. Eigenpairs come from the `L × L` lag-covariance
//! matrix `S = X Xᵀ` of the trajectory matrix `X`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues at or below `λ₁ · RANK_TOLERANCE` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Verticality must stay below `1 - VERTICALITY_MARGIN`.
pub const VERTICALITY_MARGIN: f64 = 1e-10;

/// Default window for monthly data.
pub const MONTHLY_WINDOW: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub window_length: usize,
    /// Number of leading eigentriples kept as signal.
    pub rank: usize,
    /// Reject `window_length > N / 2`. On by default.
    pub enforce_half_bound: bool,
}

impl EmbeddingConfig {
    pub fn new(window_length: usize, rank: usize) -> Self {
        Self {
            window_length,
            rank,
            enforce_half_bound: true,
        }
    }

    pub fn without_half_bound(mut self) -> Self {
        self.enforce_half_bound = false;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let l = self.window_length;
        if l < 2 || l > n {
            return Err(Error::arg(format!("window length {l} outside [2, {n}]")));
        }
        if self.enforce_half_bound && l > n / 2 {
            return Err(Error::arg(format!(
                "window length {l} exceeds N/2 = {}",
                n / 2
            )));
        }
        if self.rank < 1 || self.rank > l {
            return Err(Error::arg(format!("rank {} outside [1, {l}]", self.rank)));
        }
        Ok(())
    }
}

/// `min(⌊N/2⌋, 24)`.
pub fn default_window_length(n: usize) -> usize {
    (n / 2).clamp(2, MONTHLY_WINDOW)
}

/// Eigentriples of a trajectory matrix.
#[derive(Debug, Clone)]
pub struct SsaDecomposition {
    pub window_length: usize,
    pub k: usize,
    pub n: usize,
    /// All `L` eigenvalues of `S`, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors `U₁..U_d` (length `L`).
    pub eigenvectors: Vec<DVector<f64>>,
    /// Principal components `V_i = Xᵀ U_i / √λ_i` (length `K`).
    pub principal_components: Vec<DVector<f64>>,
    /// Numerical rank `d`.
    pub rank: usize,
    /// The series the trajectory matrix was built from.
    pub series: Vec<f64>,
}

/// Builds the `L × K` Hankel trajectory matrix, `X[i][j] = y[i + j]`.
pub fn embed(values: &[f64], window_length: usize) -> Result<DMatrix<f64>> {
    let n = values.len();
    let l = window_length;
    if l < 2 || l > n {
        return Err(Error::arg(format!("window length {l} outside [2, {n}]")));
    }
    let k = n - l + 1;
    Ok(DMatrix::from_fn(l, k, |i, j| values[i + j]))
}

/// Eigendecomposition of `X Xᵀ`, eigenvalues descending.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// nonnegative (first such component on ties).
pub fn decompose(x: &DMatrix<f64>) -> Result<SsaDecomposition> {
    let (l, k) = x.shape();
    if l == 0 || k == 0 || x.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("trajectory matrix is all zeros".into()));
    }
    let s = x * x.transpose();
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let lambda1 = eigenvalues[0];
    if lambda1 <= 0.0 || !lambda1.is_finite() {
        return Err(Error::Degenerate(format!("leading eigenvalue {lambda1}")));
    }
    let d = eigenvalues
        .iter()
        .take_while(|&&v| v > lambda1 * RANK_TOLERANCE)
        .count();

    let mut eigenvectors = Vec::with_capacity(d);
    let mut principal_components = Vec::with_capacity(d);
    for (&src, &lambda) in order.iter().zip(&eigenvalues).take(d) {
        let mut u: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        u /= u.norm();
        let mut pivot = 0;
        for (i, v) in u.iter().enumerate() {
            if v.abs() > u[pivot].abs() {
                pivot = i;
            }
        }
        if u[pivot] < 0.0 {
            u.neg_mut();
        }
        let v = x.tr_mul(&u) / lambda.sqrt();
        eigenvectors.push(u);
        principal_components.push(v);
    }

    let mut series: Vec<f64> = x.column(0).iter().copied().collect();
    series.extend(x.row(l - 1).iter().skip(1));

    Ok(SsaDecomposition {
        window_length: l,
        k,
        n: l + k - 1,
        eigenvalues,
        eigenvectors,
        principal_components,
        rank: d,
        series,
    })
}

/// Diagonal averaging: maps an `L × K` matrix to a series of length
/// `L + K - 1` by averaging each anti-diagonal.
pub fn hankelize(m: &DMatrix<f64>) -> Vec<f64> {
    let (l, k) = m.shape();
    let n = l + k - 1;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for j in 0..k {
        for i in 0..l {
            sums[i + j] += m[(i, j)];
            counts[i + j] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, c)| s / *c as f64)
        .collect()
}

impl SsaDecomposition {
    /// Sum of the elementary matrices `√λ_i U_i V_iᵀ` over `group`.
    pub fn elementary_sum(&self, group: &[usize]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.window_length, self.k);
        for &i in group {
            if i >= self.rank {
                return Err(Error::arg(format!(
                    "eigentriple {} beyond numerical rank {}",
                    i + 1,
                    self.rank
                )));
            }
            let scale = self.eigenvalues[i].sqrt();
            m.ger(scale, &self.eigenvectors[i], &self.principal_components[i], 1.0);
        }
        Ok(m)
    }
}

/// Reconstructs the series from the leading `r` eigentriples.
pub fn reconstruct(dec: &SsaDecomposition, r: usize) -> Result<Vec<f64>> {
    if r < 1 || r > dec.rank {
        return Err(Error::arg(format!(
            "rank {r} outside [1, {}]",
            dec.rank
        )));
    }
    let group: Vec<usize> = (0..r).collect();
    Ok(hankelize(&dec.elementary_sum(&group)?))
}

/// Picks `r` at the largest drop in `ln λ` among the first `⌈L/2⌉`
/// eigenvalues (and below the numerical rank).
pub fn select_rank(dec: &SsaDecomposition) -> usize {
    let upper = (dec.rank.saturating_sub(1)).min(dec.window_length.div_ceil(2));
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for r in 1..=upper {
        let gap = dec.eigenvalues[r - 1].ln() - dec.eigenvalues[r].ln();
        if gap > best_gap {
            best_gap = gap;
            best = r;
        }
    }
    best
}

/// Linear recurrent formula fitted by SSA.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrfModel {
    /// `φ₁..φ_{L-1}`; `φ₁` multiplies the most recent value.
    pub coefficients: Vec<f64>,
    pub verticality: f64,
    pub reconstructed: Vec<f64>,
    /// Mean squared in-sample residual `y - ỹ`.
    pub residual_variance: f64,
    /// Covariance of the coefficient estimates, used to initialise the
    /// Kalman recursion. Row-major `(L-1) × (L-1)`.
    #[serde(with = "matrix_serde")]
    pub init_cov: DMatrix<f64>,
    pub window_length: usize,
    pub rank: usize,
}

mod matrix_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

impl LrfModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn with_init_cov(mut self, cov: DMatrix<f64>) -> Result<Self> {
        let m = self.order();
        if cov.shape() != (m, m) {
            return Err(Error::arg(format!(
                "coefficient covariance must be {m}x{m}, got {:?}",
                cov.shape()
            )));
        }
        self.init_cov = cov;
        Ok(self)
    }
}

/// Recurrent coefficients from the leading `r` eigenvectors:
/// `A = (1 - Π)⁻¹ Σ π_i U_i^∇`, with `π_i` the last component of `U_i`,
/// `U_i^∇` the first `L - 1` components and `Π = Σ π_i²`.
pub fn lrf_coefficients(dec: &SsaDecomposition, r: usize) -> Result<LrfModel> {
    let reconstructed = reconstruct(dec, r)?;
    let l = dec.window_length;
    let m = l - 1;
    let verticality: f64 = dec.eigenvectors[..r].iter().map(|u| u[m] * u[m]).sum();
    if verticality >= 1.0 - VERTICALITY_MARGIN {
        return Err(Error::NonForecastable { verticality });
    }
    // a[0] pairs with the oldest lag, a[m-1] with the most recent.
    let mut a = vec![0.0; m];
    for u in &dec.eigenvectors[..r] {
        let pi = u[m];
        for (slot, ui) in a.iter_mut().zip(u.iter()) {
            *slot += pi * ui;
        }
    }
    let coefficients: Vec<f64> = a.iter().rev().map(|v| v / (1.0 - verticality)).collect();

    let residual_variance = dec
        .series
        .iter()
        .zip(&reconstructed)
        .map(|(y, s)| (y - s).powi(2))
        .sum::<f64>()
        / dec.n as f64;
    let energy: f64 = dec.series.iter().map(|y| y * y).sum();
    let init_cov = DMatrix::identity(m, m) * (residual_variance / energy);

    Ok(LrfModel {
        coefficients,
        verticality,
        reconstructed,
        residual_variance,
        init_cov,
        window_length: l,
        rank: r,
    })
}

/// Embeds, decomposes and extracts the recurrent formula in one call.
pub fn fit(values: &[f64], cfg: &EmbeddingConfig) -> Result<LrfModel> {
    cfg.validate(values.len())?;
    let dec = decompose(&embed(values, cfg.window_length)?)?;
    if cfg.rank > dec.rank {
        return Err(Error::Degenerate(format!(
            "requested rank {} exceeds numerical rank {}",
            cfg.rank, dec.rank
        )));
    }
    lrf_coefficients(&dec, cfg.rank)
}

/// Iterates `ŷ_{t} = Σ φ_j ŷ_{t-j}` for `horizon` steps.
///
/// `seed` is in chronological order and must hold at least
/// `coefficients.len()` values; forecasts feed back into later steps.
pub fn recurrent_forecast(coefficients: &[f64], seed: &[f64], horizon: usize) -> Vec<f64> {
    let m = coefficients.len();
    assert!(seed.len() >= m, "seed shorter than recurrence order");
    let mut buf: Vec<f64> = seed[seed.len() - m..].to_vec();
    buf.reserve(horizon);
    for _ in 0..horizon {
        let len = buf.len();
        let next = coefficients
            .iter()
            .enumerate()
            .map(|(j, phi)| phi * buf[len - 1 - j])
            .sum();
        buf.push(next);
    }
    buf.split_off(m)
}

/// Dynamic forecasts seeded on the last `L - 1` reconstructed values.
pub fn forecast_recurrent(model: &LrfModel, horizon: usize) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    if model.reconstructed.len() < model.order() {
        return Err(Error::arg("fewer reconstructed values than recurrence order"));
    }
    Ok(recurrent_forecast(&model.coefficients, &model.reconstructed, horizon))
}
