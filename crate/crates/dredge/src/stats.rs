//! Scalar statistics and regressions: means and t-stats, in/post-sample
//! decay, rolling bin sorts, theme aggregation, cluster-robust OLS, decay
//! regressions on indicator variables, and factor-model predicted returns.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::matcher::{PublishedPredictor, Theory};
use crate::portfolio::{bucket_of_rank, ReturnSeries};
use crate::{Error, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub start: Month,
    pub end: Month,
}

impl SampleWindow {
    pub fn new(start: Month, end: Month) -> Self {
        assert!(start <= end, "window start must be <= end");
        SampleWindow { start, end }
    }

    pub fn contains(&self, m: Month) -> bool {
        m >= self.start && m <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean_bps: f64,
    pub t_stat: f64,
    pub n_months: usize,
    pub window: SampleWindow,
}

/// Mean and t-stat over months present in both the series and the window.
/// Absent when fewer than 2 observations or zero variance.
pub fn summary_stats(series: &ReturnSeries, window: SampleWindow) -> Option<SummaryStats> {
    let vals = series.window_values(window);
    mean_t(&vals).map(|(mean_bps, t_stat)| SummaryStats {
        mean_bps,
        t_stat,
        n_months: vals.len(),
        window,
    })
}

fn mean(vals: &[f64]) -> Option<f64> {
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// (mean, t) with sample sd (n-1 divisor); None when n < 2 or sd == 0.
fn mean_t(vals: &[f64]) -> Option<(f64, f64)> {
    let n = vals.len();
    if n < 2 {
        return None;
    }
    let m = vals.iter().sum::<f64>() / n as f64;
    let ss = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        return None;
    }
    Some((m, m / (sd / (n as f64).sqrt())))
}

/// In/post-sample means and percentage decay, sign-aligned so a positive
/// decay means predictability weakened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// Sign-aligned in-sample mean (non-negative).
    pub in_mean_bps: f64,
    /// Post-sample mean after the same alignment.
    pub post_mean_bps: f64,
    pub decay_pct: f64,
}

pub fn decay(
    series: &ReturnSeries,
    in_window: SampleWindow,
    post_window: SampleWindow,
) -> Result<DecayReport> {
    let in_mean = mean(&series.window_values(in_window))
        .ok_or_else(|| Error::InsufficientData("no in-sample months".into()))?;
    let post_mean = mean(&series.window_values(post_window))
        .ok_or_else(|| Error::InsufficientData("no post-sample months".into()))?;
    if in_mean == 0.0 {
        return Err(Error::InsufficientData(
            "zero in-sample mean, decay undefined".into(),
        ));
    }
    let s = in_mean.signum();
    Ok(DecayReport {
        in_mean_bps: s * in_mean,
        post_mean_bps: s * post_mean,
        decay_pct: 100.0 * (1.0 - post_mean / in_mean),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinSortConfig {
    pub lookback_months: usize,
    pub n_bins: usize,
    /// Minimum in-sample months for a strategy to enter a sort year.
    pub min_is_months: usize,
}

impl Default for BinSortConfig {
    fn default() -> Self {
        BinSortConfig {
            lookback_months: 360,
            n_bins: 5,
            min_is_months: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub bin: usize,
    pub is_mean_bps: f64,
    pub is_t: f64,
    pub oos_mean_bps: f64,
    pub decay_pct: Option<f64>,
    pub n_strategy_years: usize,
}

/// Each June, bin strategies by lookback mean return, compute next-12-month
/// means, average within bins, then across sort years.
pub fn bin_sort_oos(store: &[ReturnSeries], config: &BinSortConfig) -> Result<Vec<BinRow>> {
    if config.n_bins == 0 || config.lookback_months == 0 {
        return Err(Error::Config("n_bins and lookback must be positive".into()));
    }
    let first = store.iter().filter_map(|s| s.first_month()).min();
    let last = store.iter().filter_map(|s| s.last_month()).max();
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::InsufficientData("empty strategy store".into()));
    };
    // accumulate (sum, count) per bin across sort years
    let mut acc: Vec<(f64, f64, f64, usize)> = vec![(0.0, 0.0, 0.0, 0); config.n_bins];
    let mut year_count = 0usize;
    for year in first.year()..=last.year() {
        let june = Month::june_of(year);
        let is_window = SampleWindow {
            start: june - (config.lookback_months as i32 - 1),
            end: june,
        };
        let oos_window = SampleWindow {
            start: june + 1,
            end: june + 12,
        };
        if oos_window.start > last {
            continue;
        }
        // qualifying strategies with their IS stats and OOS mean
        let mut entries: Vec<(usize, f64, f64, f64)> = Vec::new();
        for (idx, series) in store.iter().enumerate() {
            let is_vals = series.window_values(is_window);
            if is_vals.len() < config.min_is_months.max(2) {
                continue;
            }
            let Some((is_mean, is_t)) = mean_t(&is_vals) else {
                continue;
            };
            let Some(oos_mean) = mean(&series.window_values(oos_window)) else {
                continue;
            };
            entries.push((idx, is_mean, is_t, oos_mean));
        }
        if entries.is_empty() {
            continue;
        }
        year_count += 1;
        entries.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let n = entries.len();
        // per-year within-bin means
        let mut year_acc: Vec<(f64, f64, f64, usize)> = vec![(0.0, 0.0, 0.0, 0); config.n_bins];
        for (pos, &(_, is_mean, is_t, oos_mean)) in entries.iter().enumerate() {
            let b = bucket_of_rank(pos, n, config.n_bins);
            year_acc[b].0 += is_mean;
            year_acc[b].1 += is_t;
            year_acc[b].2 += oos_mean;
            year_acc[b].3 += 1;
        }
        for b in 0..config.n_bins {
            if year_acc[b].3 > 0 {
                let c = year_acc[b].3 as f64;
                acc[b].0 += year_acc[b].0 / c;
                acc[b].1 += year_acc[b].1 / c;
                acc[b].2 += year_acc[b].2 / c;
                acc[b].3 += 1;
            }
        }
    }
    if year_count == 0 {
        return Err(Error::InsufficientData(
            "no sort year with qualifying strategies".into(),
        ));
    }
    Ok((0..config.n_bins)
        .map(|b| {
            let c = acc[b].3.max(1) as f64;
            let is_mean = acc[b].0 / c;
            let oos_mean = acc[b].2 / c;
            BinRow {
                bin: b + 1,
                is_mean_bps: is_mean,
                is_t: acc[b].1 / c,
                oos_mean_bps: oos_mean,
                decay_pct: if is_mean != 0.0 {
                    Some(100.0 * (1.0 - oos_mean / is_mean))
                } else {
                    None
                },
                n_strategy_years: acc[b].3,
            }
        })
        .collect())
}

/// One strategy's contribution to the theme table.
#[derive(Debug, Clone)]
pub struct ThemeInput {
    /// Group key: numerator rendered with its form (e.g. `d[at]`).
    pub numerator: String,
    pub weighting: crate::portfolio::Weighting,
    pub is_mean_bps: f64,
    pub is_t: f64,
    /// Raw (unsigned) OOS mean per configured OOS window.
    pub oos_means_bps: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct ThemeRow {
    pub numerator: String,
    pub weighting: crate::portfolio::Weighting,
    /// Share of strategies signed to short high signal values, in percent.
    pub pct_short: f64,
    pub mean_t: f64,
    pub mean_return_bps: f64,
    /// Per OOS window: group mean signed OOS return / group mean IS return.
    pub oos_over_is: Vec<Option<f64>>,
    pub n_strategies: usize,
}

/// Group strategies by (numerator, weighting), sign each to a positive
/// in-sample mean, and report the top-k groups by mean t-stat.
pub fn theme_table(inputs: &[ThemeInput], top_k: usize) -> Vec<ThemeRow> {
    let mut groups: BTreeMap<(String, String), Vec<&ThemeInput>> = BTreeMap::new();
    for inp in inputs {
        groups
            .entry((inp.numerator.clone(), inp.weighting.to_string()))
            .or_default()
            .push(inp);
    }
    let mut rows: Vec<ThemeRow> = groups
        .into_values()
        .map(|members| {
            let n = members.len() as f64;
            let n_oos = members.iter().map(|m| m.oos_means_bps.len()).max().unwrap_or(0);
            let pct_short =
                100.0 * members.iter().filter(|m| m.is_mean_bps < 0.0).count() as f64 / n;
            let mean_t = members.iter().map(|m| m.is_t.abs()).sum::<f64>() / n;
            let mean_return = members.iter().map(|m| m.is_mean_bps.abs()).sum::<f64>() / n;
            let oos_over_is: Vec<Option<f64>> = (0..n_oos)
                .map(|w| {
                    let signed: Vec<f64> = members
                        .iter()
                        .filter_map(|m| {
                            m.oos_means_bps
                                .get(w)
                                .copied()
                                .flatten()
                                .map(|o| m.is_mean_bps.signum() * o)
                        })
                        .collect();
                    if signed.is_empty() || mean_return == 0.0 {
                        None
                    } else {
                        Some(signed.iter().sum::<f64>() / signed.len() as f64 / mean_return)
                    }
                })
                .collect();
            ThemeRow {
                numerator: members[0].numerator.clone(),
                weighting: members[0].weighting,
                pct_short,
                mean_t,
                mean_return_bps: mean_return,
                oos_over_is,
                n_strategies: members.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.mean_t
            .partial_cmp(&a.mean_t)
            .unwrap()
            .then_with(|| a.numerator.cmp(&b.numerator))
    });
    rows.truncate(top_k);
    rows
}

/// Pearson correlation over months present in both series (and inside the
/// window when given); absent below `min_overlap` months or zero variance.
pub fn pearson_overlap(
    a: &ReturnSeries,
    b: &ReturnSeries,
    window: Option<SampleWindow>,
    min_overlap: usize,
) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .filter(|(m, _)| window.map_or(true, |w| w.contains(*m)))
        .filter_map(|(m, va)| b.get(m).map(|vb| (va, vb)))
        .collect();
    if pairs.len() < min_overlap.max(2) {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (va, vb) in &pairs {
        sab += (va - ma) * (vb - mb);
        saa += (va - ma) * (va - ma);
        sbb += (vb - mb) * (vb - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Cluster-robust covariance of the estimates.
    pub covariance: DMatrix<f64>,
    pub n_obs: usize,
    pub n_clusters: usize,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.std_errors[i])
    }

    /// One-sided p-value for H0: c'beta >= 0 against c'beta < 0, using a
    /// normal approximation on the clustered t-statistic.
    pub fn one_sided_p_nonnegative(&self, combo: &[(String, f64)]) -> Result<f64> {
        let mut c = DVector::zeros(self.names.len());
        for (name, w) in combo {
            let i = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Validation(format!("no coefficient '{name}'")))?;
            c[i] += *w;
        }
        let est = c.dot(&self.estimates_vec());
        let var = (c.transpose() * &self.covariance * &c)[(0, 0)];
        if var <= 0.0 {
            return Ok(if est >= 0.0 { 1.0 } else { 0.0 });
        }
        Ok(normal_cdf(est / var.sqrt()))
    }

    fn estimates_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.estimates)
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Rational Chebyshev approximation, fractional error below 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// OLS with cluster-robust (sandwich) standard errors, clusters defined by
/// distinct cluster keys, scaled by G/(G-1).
pub fn clustered_ols(
    names: &[String],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    clusters: &[u64],
) -> Result<RegressionResult> {
    let n = x.nrows();
    let k = x.ncols();
    if n != y.len() || n != clusters.len() {
        return Err(Error::Validation("row count mismatch".into()));
    }
    if names.len() != k {
        return Err(Error::Validation("name count mismatch".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} coefficients"
        )));
    }
    check_full_rank(names, x)?;
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = nalgebra::linalg::Cholesky::new(xtx.clone())
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let beta = chol.solve(&xty);
    let resid = y - x * &beta;
    let xtx_inv = chol.inverse();

    // meat: sum over clusters of (X_g' u_g)(X_g' u_g)'
    let mut cluster_ids: Vec<u64> = clusters.to_vec();
    cluster_ids.sort_unstable();
    cluster_ids.dedup();
    let g = cluster_ids.len();
    if g < 2 {
        return Err(Error::InsufficientData("need at least 2 clusters".into()));
    }
    let mut scores: BTreeMap<u64, DVector<f64>> = BTreeMap::new();
    for i in 0..n {
        let s = scores
            .entry(clusters[i])
            .or_insert_with(|| DVector::zeros(k));
        for j in 0..k {
            s[j] += x[(i, j)] * resid[i];
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in scores.values() {
        meat += s * s.transpose();
    }
    let scale = g as f64 / (g - 1) as f64;
    let cov = (&xtx_inv * meat * &xtx_inv) * scale;
    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok(RegressionResult {
        names: names.to_vec(),
        estimates: beta.iter().copied().collect(),
        std_errors,
        covariance: cov,
        n_obs: n,
        n_clusters: g,
    })
}

fn check_full_rank(names: &[String], x: &DMatrix<f64>) -> Result<()> {
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let p = qr.p();
    let kmin = x.nrows().min(x.ncols());
    let max_diag = (0..kmin).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = max_diag * 1e-10 * (x.nrows() as f64).sqrt();
    let rank = (0..kmin).take_while(|&i| r[(i, i)].abs() > tol).count();
    if rank < x.ncols() {
        let perm: Vec<usize> = permutation_order(p, x.ncols());
        let collinear: Vec<String> = perm[rank..].iter().map(|&j| names[j].clone()).collect();
        return Err(Error::RankDeficient(collinear));
    }
    Ok(())
}

fn permutation_order(p: &nalgebra::linalg::PermutationSequence<nalgebra::Dyn>, k: usize) -> Vec<usize> {
    // apply the recorded swaps to the identity to recover column order
    let mut cols: Vec<usize> = (0..k).collect();
    let mut m = DMatrix::<f64>::zeros(1, k);
    for j in 0..k {
        m[(0, j)] = j as f64;
    }
    p.permute_columns(&mut m);
    for j in 0..k {
        cols[j] = m[(0, j)] as usize;
    }
    cols
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecaySpec {
    /// Post-Sample + Post-Sample x Risk.
    S1,
    /// S1 + Post-Pub + Post-Pub x Risk.
    S2,
    /// S1 + Post-Sample x Mispricing.
    S3,
    /// S2 + Post-Sample x Mispricing + Post-Pub x Mispricing.
    S4,
    /// S1 + Post-2004.
    S5,
}

/// Regress monthly long-short returns on post-sample/publication indicator
/// variables, clustered by month. When `normalize` is set every predictor
/// is scaled to a 100 bps in-sample mean first (sign absorbed).
pub fn decay_regression(
    predictors: &[PublishedPredictor],
    spec: DecaySpec,
    normalize: bool,
) -> Result<RegressionResult> {
    let mut names = vec!["intercept".to_string(), "post_sample".to_string()];
    names.push("post_sample_x_risk".to_string());
    if matches!(spec, DecaySpec::S2 | DecaySpec::S4) {
        names.push("post_pub".to_string());
        names.push("post_pub_x_risk".to_string());
    }
    if matches!(spec, DecaySpec::S3 | DecaySpec::S4) {
        names.push("post_sample_x_mispricing".to_string());
    }
    if matches!(spec, DecaySpec::S4) {
        names.push("post_pub_x_mispricing".to_string());
    }
    if matches!(spec, DecaySpec::S5) {
        names.push("post_2004".to_string());
    }
    let k = names.len();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut cl: Vec<u64> = Vec::new();
    let jan_2005 = Month::from_ym(2005, 1);
    for p in predictors {
        let series = if normalize {
            crate::matcher::normalize_to_insample(&p.returns, p.sample_window, 100.0)?
        } else {
            p.returns.clone()
        };
        let risk = (p.theory == Theory::Risk) as i32 as f64;
        let mispricing = (p.theory == Theory::Mispricing) as i32 as f64;
        for (m, v) in series.iter() {
            let post_sample = (m > p.sample_window.end) as i32 as f64;
            let post_pub = (m > p.publication_month) as i32 as f64;
            let post_2004 = (m >= jan_2005) as i32 as f64;
            ys.push(v);
            cl.push(m.0 as u64);
            xs.push(1.0);
            xs.push(post_sample);
            xs.push(post_sample * risk);
            if matches!(spec, DecaySpec::S2 | DecaySpec::S4) {
                xs.push(post_pub);
                xs.push(post_pub * risk);
            }
            if matches!(spec, DecaySpec::S3 | DecaySpec::S4) {
                xs.push(post_sample * mispricing);
            }
            if matches!(spec, DecaySpec::S4) {
                xs.push(post_pub * mispricing);
            }
            if matches!(spec, DecaySpec::S5) {
                xs.push(post_2004);
            }
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(Error::InsufficientData("no predictor months".into()));
    }
    let x = DMatrix::from_row_slice(n, k, &xs);
    let y = DVector::from_vec(ys);
    clustered_ols(&names, &x, &y, &cl)
}

/// The "Risk No Decay" test: H0 that post_sample + post_sample x risk >= 0.
pub fn risk_no_decay_p(result: &RegressionResult) -> Result<f64> {
    result.one_sided_p_nonnegative(&[
        ("post_sample".to_string(), 1.0),
        ("post_sample_x_risk".to_string(), 1.0),
    ])
}

#[derive(Debug, Clone)]
pub struct FactorModelPrediction {
    pub betas: Vec<f64>,
    pub alpha_bps: f64,
    /// Sum of beta_k times the in-sample factor mean.
    pub predicted_mean_bps: f64,
    /// Prediction divided by the strategy's in-sample mean.
    pub ratio_to_is_mean: f64,
}

/// In-sample time-series betas and the factor-model expected return.
pub fn factor_model_prediction(
    strategy: &ReturnSeries,
    factors: &[ReturnSeries],
    in_window: SampleWindow,
) -> Result<FactorModelPrediction> {
    if factors.is_empty() {
        return Err(Error::Validation("no factors".into()));
    }
    // months where strategy and all factors are present, inside the window
    let months: Vec<Month> = strategy
        .iter()
        .filter(|(m, _)| in_window.contains(*m))
        .map(|(m, _)| m)
        .filter(|m| factors.iter().all(|f| f.get(*m).is_some()))
        .collect();
    let n = months.len();
    let k = factors.len() + 1;
    if n < k + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} overlapping months for {k} coefficients"
        )));
    }
    let mut xs = Vec::with_capacity(n * k);
    let mut ys = Vec::with_capacity(n);
    for &m in &months {
        xs.push(1.0);
        for f in factors {
            xs.push(f.get(m).unwrap());
        }
        ys.push(strategy.get(m).unwrap());
    }
    let x = DMatrix::from_row_slice(n, k, &xs);
    let y = DVector::from_vec(ys.clone());
    let names: Vec<String> = std::iter::once("alpha".to_string())
        .chain((0..factors.len()).map(|i| format!("f{i}")))
        .collect();
    check_full_rank(&names, &x)?;
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let chol = nalgebra::linalg::Cholesky::new(xtx)
        .ok_or_else(|| Error::RankDeficient(names.clone()))?;
    let beta = chol.solve(&xty);
    let factor_means: Vec<f64> = factors
        .iter()
        .map(|f| months.iter().map(|&m| f.get(m).unwrap()).sum::<f64>() / n as f64)
        .collect();
    let predicted: f64 = factor_means
        .iter()
        .enumerate()
        .map(|(i, fm)| beta[i + 1] * fm)
        .sum();
    let is_mean = ys.iter().sum::<f64>() / n as f64;
    Ok(FactorModelPrediction {
        betas: beta.iter().skip(1).copied().collect(),
        alpha_bps: beta[0],
        predicted_mean_bps: predicted,
        ratio_to_is_mean: if is_mean != 0.0 {
            predicted / is_mean
        } else {
            f64::NAN
        },
    })
}

pub fn write_bin_table(rows: &[BinRow], w: &mut impl Write) -> Result<()> {
    writeln!(w, "bin,is_mean_bps,is_t,oos_mean_bps,decay_pct,n_sort_years")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.4},{:.4},{:.4},{},{}",
            r.bin,
            r.is_mean_bps,
            r.is_t,
            r.oos_mean_bps,
            r.decay_pct.map(|d| format!("{d:.4}")).unwrap_or_default(),
            r.n_strategy_years
        )?;
    }
    Ok(())
}

pub fn write_theme_table(rows: &[ThemeRow], w: &mut impl Write) -> Result<()> {
    writeln!(
        w,
        "numerator,weighting,pct_short,mean_t,mean_return_bps,oos_over_is,n_strategies"
    )?;
    for r in rows {
        let ratios: Vec<String> = r
            .oos_over_is
            .iter()
            .map(|o| o.map(|v| format!("{v:.4}")).unwrap_or_default())
            .collect();
        writeln!(
            w,
            "{},{},{:.1},{:.4},{:.4},{},{}",
            r.numerator,
            r.weighting,
            r.pct_short,
            r.mean_t,
            r.mean_return_bps,
            ratios.join(";"),
            r.n_strategies
        )?;
    }
    Ok(())
}

pub fn write_regression(result: &RegressionResult, p_risk_no_decay: Option<f64>, w: &mut impl Write) -> Result<()> {
    writeln!(w, "coefficient,estimate,cluster_se,n_obs,n_clusters")?;
    for (i, name) in result.names.iter().enumerate() {
        writeln!(
            w,
            "{},{:.4},{:.4},{},{}",
            name, result.estimates[i], result.std_errors[i], result.n_obs, result.n_clusters
        )?;
    }
    if let Some(p) = p_risk_no_decay {
        writeln!(w, "p_risk_no_decay,{:.6},,,", p)?;
    }
    Ok(())
}
