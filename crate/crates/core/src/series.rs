//! Series container, descriptive statistics and structural-break splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, finite observations with optional period labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let mut series = Self::new(values)?;
        if labels.len() != series.values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} labels for {} values",
                labels.len(),
                series.values.len()
            )));
        }
        for (i, pair) in labels.windows(2).enumerate() {
            if compare_labels(&pair[0], &pair[1]) != std::cmp::Ordering::Less {
                return Err(Error::InvalidSeries(format!(
                    "labels not strictly increasing at index {}: {:?} then {:?}",
                    i + 1,
                    pair[0],
                    pair[1]
                )));
            }
        }
        series.labels = Some(labels);
        Ok(series)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `len` observations.
    pub fn head(&self, len: usize) -> Result<TimeSeries> {
        if len > self.len() {
            return Err(Error::arg(format!(
                "head({len}) of a series of length {}",
                self.len()
            )));
        }
        match &self.labels {
            Some(l) => Self::with_labels(self.values[..len].to_vec(), l[..len].to_vec()),
            None => Self::new(self.values[..len].to_vec()),
        }
    }
}

// Numeric labels compare numerically so that "9" < "10".
fn compare_labels(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
        _ => a.cmp(b),
    }
}

/// In-sample / out-of-sample boundary.
///
/// `break_index` is 1-based and inclusive: observations `1..=break_index`
/// form the in-sample period, the rest are out-of-sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSplit {
    pub break_index: usize,
    pub in_sample_len: usize,
    pub out_sample_len: usize,
}

impl SampleSplit {
    pub fn new(n: usize, break_index: usize) -> Result<Self> {
        if break_index < 2 || break_index >= n {
            return Err(Error::arg(format!(
                "break index {break_index} outside [2, {})",
                n
            )));
        }
        Ok(Self {
            break_index,
            in_sample_len: break_index,
            out_sample_len: n - break_index,
        })
    }

    pub fn len(&self) -> usize {
        self.in_sample_len + self.out_sample_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Monthly-percentage-change summary of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    /// `None` when no split was given or the period holds no change.
    pub mean_pct_change_in: Option<f64>,
    pub mean_pct_change_out: Option<f64>,
    pub mean_pct_change_all: f64,
    pub sd_pct_change: f64,
}

/// Percentage changes `100 (y_t - y_{t-1}) / y_{t-1}`, `t = 2..=N`.
pub fn pct_changes(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = values.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroValue { index });
    }
    Ok(values
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0]) / w[0])
        .collect())
}

pub fn pct_change_stats(series: &TimeSeries, split: Option<&SampleSplit>) -> Result<DescriptiveStats> {
    let changes = pct_changes(series.values())?;
    if let Some(s) = split {
        if s.len() != series.len() {
            return Err(Error::arg(format!(
                "split covers {} observations, series has {}",
                s.len(),
                series.len()
            )));
        }
    }
    let mean = |xs: &[f64]| -> Option<f64> {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };
    // changes[k] is the change into observation k + 2 (1-based), so the
    // in-sample changes are those landing on indices 2..=break_index.
    let (in_part, out_part) = match split {
        Some(s) => {
            let cut = s.break_index - 1;
            (mean(&changes[..cut]), mean(&changes[cut..]))
        }
        None => (None, None),
    };
    let all = mean(&changes).unwrap_or(0.0);
    let sd = if changes.len() < 2 {
        0.0
    } else {
        let ss: f64 = changes.iter().map(|c| (c - all).powi(2)).sum();
        (ss / (changes.len() - 1) as f64).sqrt()
    };
    Ok(DescriptiveStats {
        mean_pct_change_in: in_part,
        mean_pct_change_out: out_part,
        mean_pct_change_all: all,
        sd_pct_change: sd,
    })
}

struct SegmentCost {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl SegmentCost {
    fn new(values: &[f64]) -> Self {
        let mut s1 = Vec::with_capacity(values.len() + 1);
        let mut s2 = Vec::with_capacity(values.len() + 1);
        s1.push(0.0);
        s2.push(0.0);
        for v in values {
            s1.push(s1.last().unwrap() + v);
            s2.push(s2.last().unwrap() + v * v);
        }
        Self { s1, s2 }
    }

    /// SSR of a constant-mean fit on the half-open 0-based range `[a, b)`.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let n = (b - a) as f64;
        let sum = self.s1[b] - self.s1[a];
        let sq = self.s2[b] - self.s2[a];
        (sq - sum * sum / n).max(0.0)
    }
}

/// Least-squares structural break detection for shifts in mean.
///
/// For every break count `m <= max_breaks` the segmentation with minimal
/// total SSR (each segment at least `min_segment` long) is found by dynamic
/// programming; `m` is then chosen by BIC with `2m + 1` parameters
/// (segment means plus break dates). Returned indices are 1-based: a break
/// at `b` separates `[1..b]` from `[b+1..N]`.
pub fn detect_breaks(series: &TimeSeries, max_breaks: usize, min_segment: usize) -> Result<Vec<usize>> {
    let values = series.values();
    let n = values.len();
    if min_segment < 2 {
        return Err(Error::arg("min_segment must be at least 2"));
    }
    if max_breaks.saturating_mul(min_segment) > n {
        return Err(Error::arg(format!(
            "{max_breaks} breaks of min segment {min_segment} do not fit in {n} observations"
        )));
    }
    let cost = SegmentCost::new(values);
    let ssr0 = cost.cost(0, n);
    if ssr0 == 0.0 || n < 2 * min_segment {
        return Ok(Vec::new());
    }
    // (m + 1) segments of min_segment must fit.
    let max_m = max_breaks.min(n / min_segment - 1);

    // best[k][j]: minimal SSR of the first j points split into k + 1 segments.
    // arg[k][j]: position of the last break for that optimum.
    let mut best = vec![vec![f64::INFINITY; n + 1]; max_m + 1];
    let mut arg = vec![vec![0usize; n + 1]; max_m + 1];
    for j in min_segment..=n {
        best[0][j] = cost.cost(0, j);
    }
    for k in 1..=max_m {
        for j in (k + 1) * min_segment..=n {
            let mut b = f64::INFINITY;
            let mut at = 0;
            for i in k * min_segment..=j - min_segment {
                let c = best[k - 1][i] + cost.cost(i, j);
                if c < b {
                    b = c;
                    at = i;
                }
            }
            best[k][j] = b;
            arg[k][j] = at;
        }
    }

    let floor = (ssr0 * 1e-12).max(f64::MIN_POSITIVE);
    let nf = n as f64;
    let mut chosen = 0;
    let mut chosen_bic = f64::INFINITY;
    for (m, row) in best.iter().enumerate() {
        let ssr = row[n].max(floor);
        let bic = nf * (ssr / nf).ln() + (2 * m + 1) as f64 * nf.ln();
        if bic < chosen_bic {
            chosen_bic = bic;
            chosen = m;
        }
    }

    let mut breaks = Vec::with_capacity(chosen);
    let mut j = n;
    for k in (1..=chosen).rev() {
        let i = arg[k][j];
        breaks.push(i);
        j = i;
    }
    breaks.reverse();
    Ok(breaks)
}

/// Uses the last detected break as the in-sample / out-of-sample boundary.
///
/// `min_in_sample` is the smallest acceptable in-sample length (typically
/// the window length, or twice it).
pub fn split_at_final_break(series: &TimeSeries, breaks: &[usize], min_in_sample: usize) -> Result<SampleSplit> {
    let n = series.len();
    let Some(&last) = breaks.last() else {
        return Err(Error::arg(
            "no break points: supply an explicit split instead",
        ));
    };
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("break points must be strictly increasing"));
    }
    if last < min_in_sample.max(2) {
        return Err(Error::arg(format!(
            "final break {last} leaves fewer than {min_in_sample} in-sample observations"
        )));
    }
    if last + 1 > n {
        return Err(Error::arg(format!(
            "final break {last} leaves no out-of-sample observations (N = {n})"
        )));
    }
    SampleSplit::new(n, last)
}
