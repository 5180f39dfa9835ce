//! Out-of-sample accuracy measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance level flagged in reports.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

/// One forecast of observation `origin + horizon` (1-based) made with data
/// up to `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub origin: usize,
    pub horizon: usize,
    pub forecast: f64,
    pub actual: f64,
    pub method: String,
}

impl ForecastRecord {
    pub fn new(origin: usize, horizon: usize, forecast: f64, actual: f64, method: &str) -> Self {
        Self {
            origin,
            horizon,
            forecast,
            actual,
            method: method.to_string(),
        }
    }

    pub fn error(&self) -> f64 {
        self.forecast - self.actual
    }

    /// 1-based index of the forecast observation.
    pub fn target(&self) -> usize {
        self.origin + self.horizon
    }
}

pub fn rmse(records: &[ForecastRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::arg("RMSE of an empty record set"));
    }
    let mse = records.iter().map(|r| r.error().powi(2)).sum::<f64>() / records.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(records: &[ForecastRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::arg("MAE of an empty record set"));
    }
    Ok(records.iter().map(|r| r.error().abs()).sum::<f64>() / records.len() as f64)
}

fn keys(records: &[ForecastRecord]) -> Vec<(usize, usize)> {
    let mut k: Vec<_> = records.iter().map(|r| (r.origin, r.horizon)).collect();
    k.sort_unstable();
    k
}

/// `RMSE(challenger) / RMSE(baseline)` over records aligned on
/// `(origin, horizon)`. Values below 1 favour the challenger.
pub fn rrmse(challenger: &[ForecastRecord], baseline: &[ForecastRecord]) -> Result<f64> {
    if keys(challenger) != keys(baseline) {
        return Err(Error::arg(
            "record sets are not aligned on (origin, horizon)",
        ));
    }
    let num = rmse(challenger)?;
    let den = rmse(baseline)?;
    if den == 0.0 {
        return if num == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::InfiniteRatio { numerator: num })
        };
    }
    Ok(num / den)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Share of records whose forecast moves away from the previous actual
/// `y_{T+h-1}` in the same direction as the actual `y_{T+h}`.
///
/// `actual` is the full observed series (index 0 holds observation 1). A
/// zero change counts as correct only when both changes are zero.
pub fn direction_of_change(records: &[ForecastRecord], actual: &[f64]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::arg("direction of change of an empty record set"));
    }
    let mut hits = 0usize;
    for r in records {
        let target = r.target();
        if target < 2 || target > actual.len() {
            return Err(Error::arg(format!(
                "no previous actual for target index {target}"
            )));
        }
        let prev = actual[target - 2];
        if sign(r.forecast - prev) == sign(r.actual - prev) {
            hits += 1;
        }
    }
    Ok(hits as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmTest {
    pub statistic: f64,
    pub p_value: f64,
    /// Loss differential has no variance; treated as equal accuracy.
    pub degenerate: bool,
}

/// Modified Diebold–Mariano test (Harvey, Leybourne & Newbold small-sample
/// correction) on squared-error loss.
///
/// `d_t = a_t² - b_t²`; the long-run variance of `d̄` uses autocovariances
/// up to lag `h - 1`, the statistic is scaled by
/// `√((n + 1 - 2h + h(h-1)/n) / n)` and referred to Student-t with `n - 1`
/// degrees of freedom. Positive statistics mean `a` is less accurate.
pub fn modified_dm_test(errors_a: &[f64], errors_b: &[f64], h: usize) -> Result<DmTest> {
    let n = errors_a.len();
    if n != errors_b.len() {
        return Err(Error::arg("error vectors differ in length"));
    }
    if n < 4 {
        return Err(Error::arg(format!("DM test needs n >= 4, got {n}")));
    }
    if h < 1 {
        return Err(Error::arg("horizon must be at least 1"));
    }
    let nf = n as f64;
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let mean = d.iter().sum::<f64>() / nf;
    let autocov = |k: usize| -> f64 {
        (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / nf
    };
    let gamma0 = autocov(0);
    let scale = d.iter().map(|v| v * v).sum::<f64>() / nf;
    if gamma0 <= scale * 1e-24 {
        return Ok(DmTest {
            statistic: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let mut lrv = gamma0 + 2.0 * (1..h.min(n)).map(autocov).sum::<f64>();
    if lrv <= 0.0 {
        lrv = gamma0;
    }
    let dm = mean / (lrv / nf).sqrt();
    let hf = h as f64;
    let corr = (nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf;
    if corr <= 0.0 {
        return Err(Error::arg(format!(
            "horizon {h} too long for {n} observations"
        )));
    }
    let statistic = dm * corr.sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::arg(e.to_string()))?;
    let p_value = (2.0 * t.sf(statistic.abs())).min(1.0);
    Ok(DmTest {
        statistic,
        p_value,
        degenerate: false,
    })
}

/// Empirical CDF as plot-ready `(x, k/n)` pairs, `x` ascending.
pub fn ecdf_export(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::arg("ECDF of an empty sample"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("ECDF sample contains non-finite values"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(k, x)| (x, (k + 1) as f64 / n))
        .collect())
}

/// Evaluates an ECDF given as [`ecdf_export`] output at `x`.
pub fn ecdf_at(points: &[(f64, f64)], x: f64) -> f64 {
    let idx = points.partition_point(|(v, _)| *v <= x);
    if idx == 0 {
        0.0
    } else {
        points[idx - 1].1
    }
}

/// RMSE and direction-of-change for one series, method and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub series: String,
    pub group: Option<String>,
    pub method: String,
    pub horizon: usize,
    pub n: usize,
    pub rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    pub dc: f64,
}

/// Challenger-vs-baseline comparison for one series and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub series: String,
    pub group: Option<String>,
    pub challenger: String,
    pub baseline: String,
    pub horizon: usize,
    pub rrmse: f64,
    pub dm_statistic: f64,
    pub dm_p_value: f64,
    pub dm_degenerate: bool,
    pub significant_at_1pct: bool,
}

/// Average over series of a group (or of all series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Group name, or `None` for the overall row.
    pub group: Option<String>,
    pub challenger: String,
    pub baseline: String,
    pub horizon: usize,
    pub series_count: usize,
    pub mean_rrmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcSummaryRow {
    pub group: Option<String>,
    pub method: String,
    pub horizon: usize,
    pub series_count: usize,
    pub mean_dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfSamples {
    pub method: String,
    pub horizon: usize,
    /// Sorted absolute errors pooled over all series.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFailure {
    pub series: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methods: Vec<MethodMetrics>,
    pub pairs: Vec<PairMetrics>,
    pub summary: Vec<SummaryRow>,
    pub dc_summary: Vec<DcSummaryRow>,
    pub ecdf: Vec<EcdfSamples>,
    pub failures: Vec<SeriesFailure>,
}

/// Forecast records of every method for a single series.
#[derive(Debug, Clone)]
pub struct SeriesForecasts {
    pub series: String,
    pub group: Option<String>,
    pub actual: Vec<f64>,
    /// `(method, records)` in report order.
    pub methods: Vec<(String, Vec<ForecastRecord>)>,
}

fn at_horizon(records: &[ForecastRecord], h: usize) -> Vec<ForecastRecord> {
    let mut out: Vec<ForecastRecord> = records.iter().filter(|r| r.horizon == h).cloned().collect();
    out.sort_by_key(|r| r.origin);
    out
}

/// Per-series metrics. `baseline` names the method every other method is
/// compared against; pairs are skipped when it is absent.
pub fn evaluate_series(
    input: &SeriesForecasts,
    horizons: &[usize],
    baseline: &str,
    include_mae: bool,
) -> Result<(Vec<MethodMetrics>, Vec<PairMetrics>)> {
    let mut methods = Vec::new();
    let mut pairs = Vec::new();
    let base = input.methods.iter().find(|(m, _)| m == baseline);
    for &h in horizons {
        for (name, records) in &input.methods {
            let recs = at_horizon(records, h);
            if recs.is_empty() {
                continue;
            }
            methods.push(MethodMetrics {
                series: input.series.clone(),
                group: input.group.clone(),
                method: name.clone(),
                horizon: h,
                n: recs.len(),
                rmse: rmse(&recs)?,
                mae: if include_mae { Some(mae(&recs)?) } else { None },
                dc: direction_of_change(&recs, &input.actual)?,
            });
        }
        let Some((_, base_records)) = base else {
            continue;
        };
        let base_recs = at_horizon(base_records, h);
        for (name, records) in &input.methods {
            if name == baseline {
                continue;
            }
            let recs = at_horizon(records, h);
            if recs.is_empty() {
                continue;
            }
            let ratio = rrmse(&recs, &base_recs)?;
            let ea: Vec<f64> = recs.iter().map(ForecastRecord::error).collect();
            let eb: Vec<f64> = base_recs.iter().map(ForecastRecord::error).collect();
            let dm = modified_dm_test(&ea, &eb, h)?;
            pairs.push(PairMetrics {
                series: input.series.clone(),
                group: input.group.clone(),
                challenger: name.clone(),
                baseline: baseline.to_string(),
                horizon: h,
                rrmse: ratio,
                dm_statistic: dm.statistic,
                dm_p_value: dm.p_value,
                dm_degenerate: dm.degenerate,
                significant_at_1pct: !dm.degenerate && dm.p_value < SIGNIFICANCE_LEVEL,
            });
        }
    }
    Ok((methods, pairs))
}

impl EvalReport {
    /// Builds the report for a batch of series, including group and overall
    /// averages and pooled ECDF samples. A series whose evaluation fails is
    /// listed under `failures` and left out of the aggregates.
    pub fn build(
        inputs: &[SeriesForecasts],
        horizons: &[usize],
        baseline: &str,
        include_mae: bool,
    ) -> Self {
        let mut report = EvalReport::default();
        let mut pooled: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut method_order: Vec<String> = Vec::new();
        for input in inputs {
            match evaluate_series(input, horizons, baseline, include_mae) {
                Ok((m, p)) => {
                    report.methods.extend(m);
                    report.pairs.extend(p);
                    for (name, records) in &input.methods {
                        let idx = match method_order.iter().position(|x| x == name) {
                            Some(i) => i,
                            None => {
                                method_order.push(name.clone());
                                method_order.len() - 1
                            }
                        };
                        for r in records {
                            pooled.entry((r.horizon, idx)).or_default().push(r.error().abs());
                        }
                    }
                }
                Err(e) => report.failures.push(SeriesFailure {
                    series: input.series.clone(),
                    error: e.to_string(),
                }),
            }
        }
        for ((horizon, idx), mut samples) in pooled {
            if !horizons.contains(&horizon) {
                continue;
            }
            samples.sort_by(f64::total_cmp);
            report.ecdf.push(EcdfSamples {
                method: method_order[idx].clone(),
                horizon,
                samples,
            });
        }
        report.summarize();
        report
    }

    pub fn add_failure(&mut self, series: &str, error: &str) {
        self.failures.push(SeriesFailure {
            series: series.to_string(),
            error: error.to_string(),
        });
    }

    /// Recomputes group and overall averages from the per-series rows.
    pub fn summarize(&mut self) {
        let mut groups: Vec<Option<String>> = Vec::new();
        for p in &self.pairs {
            if p.group.is_some() && !groups.contains(&p.group) {
                groups.push(p.group.clone());
            }
        }
        for m in &self.methods {
            if m.group.is_some() && !groups.contains(&m.group) {
                groups.push(m.group.clone());
            }
        }
        groups.push(None);

        self.summary.clear();
        self.dc_summary.clear();
        for scope in &groups {
            let in_scope = |g: &Option<String>| scope.is_none() || g == scope;

            let mut keys: Vec<(String, String, usize)> = Vec::new();
            for p in self.pairs.iter().filter(|p| in_scope(&p.group)) {
                let k = (p.challenger.clone(), p.baseline.clone(), p.horizon);
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
            keys.sort_by(|a, b| (a.2, &a.0).cmp(&(b.2, &b.0)));
            for (challenger, baseline, horizon) in keys {
                let vals: Vec<f64> = self
                    .pairs
                    .iter()
                    .filter(|p| {
                        in_scope(&p.group)
                            && p.challenger == challenger
                            && p.baseline == baseline
                            && p.horizon == horizon
                    })
                    .map(|p| p.rrmse)
                    .collect();
                self.summary.push(SummaryRow {
                    group: scope.clone(),
                    challenger,
                    baseline,
                    horizon,
                    series_count: vals.len(),
                    mean_rrmse: vals.iter().sum::<f64>() / vals.len() as f64,
                });
            }

            let mut mkeys: Vec<(usize, String)> = Vec::new();
            for m in self.methods.iter().filter(|m| in_scope(&m.group)) {
                let k = (m.horizon, m.method.clone());
                if !mkeys.contains(&k) {
                    mkeys.push(k);
                }
            }
            mkeys.sort_by_key(|k| k.0);
            for (horizon, method) in mkeys {
                let vals: Vec<f64> = self
                    .methods
                    .iter()
                    .filter(|m| in_scope(&m.group) && m.method == method && m.horizon == horizon)
                    .map(|m| m.dc)
                    .collect();
                self.dc_summary.push(DcSummaryRow {
                    group: scope.clone(),
                    method,
                    horizon,
                    series_count: vals.len(),
                    mean_dc: vals.iter().sum::<f64>() / vals.len() as f64,
                });
            }
        }
    }

    /// Mean RRMSE over all series for a challenger at a horizon.
    pub fn overall_rrmse(&self, challenger: &str, horizon: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.group.is_none() && s.challenger == challenger && s.horizon == horizon)
            .map(|s| s.mean_rrmse)
    }
}
