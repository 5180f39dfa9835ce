#![allow(dead_code)]

pub mod props;

use std::f64::consts::PI;

use gssa::kalman::GssaState;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

pub fn sine_plus_noise(n: usize, period: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let noise = gaussian(&mut r, n, sd);
    (0..n)
        .map(|t| (2.0 * PI * (t + 1) as f64 / period).sin() + noise[t])
        .collect()
}

/// Trend + seasonal harmonic + noise with a level shift of `shift_sds`
/// in-sample standard deviations starting at index `break_index`.
pub fn level_shift_series(n: usize, break_index: usize, shift_sds: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let level = r.random_range(20.0..60.0);
    let slope = r.random_range(0.01..0.05);
    let amp = r.random_range(0.5..2.0);
    let phase = r.random_range(0.0..2.0 * PI);
    let sd = r.random_range(0.05..0.2) * amp;
    let noise = gaussian(&mut r, n, sd);
    let mut y: Vec<f64> = (0..n)
        .map(|t| {
            let t = t as f64;
            level + slope * t + amp * (2.0 * PI * t / 12.0 + phase).sin()
        })
        .zip(noise)
        .map(|(s, e)| s + e)
        .collect();
    let ins = &y[..break_index];
    let mean = ins.iter().sum::<f64>() / ins.len() as f64;
    let var = ins.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ins.len() - 1) as f64;
    let shift = shift_sds * var.sqrt();
    for v in &mut y[break_index..] {
        *v += shift;
    }
    y
}

pub fn random_psd(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0) * scale);
    &a * a.transpose()
}

/// Random filter state of order `m` with difference lag `d`.
pub fn random_state(rng: &mut ChaCha8Rng, m: usize, d: usize) -> GssaState {
    let theta = DVector::from_fn(2 * m, |_, _| rng.random_range(-1.0..1.0));
    let cov = random_psd(rng, 2 * m, 0.3);
    let history: Vec<f64> = (0..m + d + rng.random_range(0..3)).map(|_| rng.random_range(-5.0..5.0)).collect();
    GssaState {
        theta,
        cov,
        t: 100,
        history,
        diff_lag: d,
        obs_noise: rng.random_range(0.01..2.0),
        process_noise: rng.random_range(0.0..0.1),
    }
}

/// One filter step evaluated directly from the update equations with
/// plain nested vectors. Returns `(theta, cov)`.
pub fn kalman_oracle(
    theta: &[f64],
    cov: &[Vec<f64>],
    history: &[f64],
    diff_lag: usize,
    obs_noise: f64,
    process_noise: f64,
    y: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = theta.len() / 2;
    let p = 2 * m;
    let n = history.len();
    let lag = |k: usize| history[n - k];
    let mut f = vec![vec![0.0; p]; p];
    for i in 0..p {
        f[i][i] = 1.0;
    }
    for u in 1..=m {
        f[u - 1][m + u - 1] = lag(u) - lag(u + diff_lag);
    }
    let mut h = vec![0.0; p];
    for u in 1..=m {
        h[u - 1] = lag(u);
    }
    let matmul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let mut c = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                for k in 0..p {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    };
    let ft: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| f[j][i]).collect()).collect();
    let mut phi = matmul(&matmul(&f, &cov.to_vec()), &ft);
    for i in m..p {
        phi[i][i] += process_noise;
    }
    let phi_h: Vec<f64> = (0..p).map(|i| (0..p).map(|j| phi[i][j] * h[j]).sum()).collect();
    let s: f64 = (0..p).map(|i| h[i] * phi_h[i]).sum::<f64>() + obs_noise;
    let k: Vec<f64> = phi_h.iter().map(|v| v / s).collect();
    let pred_state: Vec<f64> = (0..p).map(|i| (0..p).map(|j| f[i][j] * theta[j]).sum()).collect();
    let e = y - (0..p).map(|i| h[i] * pred_state[i]).sum::<f64>();
    let new_theta: Vec<f64> = (0..p).map(|i| pred_state[i] + k[i] * e).collect();
    let new_cov: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| phi[i][j] - k[i] * s * k[j]).collect())
        .collect();
    (new_theta, new_cov)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Two-sided p-value of the small-sample corrected Diebold–Mariano test,
/// computed independently of the library.
pub fn dm_oracle(a: &[f64], b: &[f64], h: usize) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * x - y * y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let gamma = |k: usize| -> f64 {
        (k..d.len()).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n
    };
    let mut lrv = gamma(0);
    for k in 1..h {
        lrv += 2.0 * gamma(k);
    }
    if lrv <= 0.0 {
        lrv = gamma(0);
    }
    let dm = mean / (lrv / n).sqrt();
    let hf = h as f64;
    let stat = dm * ((n + 1.0 - 2.0 * hf + hf * (hf - 1.0) / n) / n).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    (stat, 2.0 * (1.0 - t.cdf(stat.abs())))
}
