//! Covariance-structure diagnostics: pairwise correlation percentiles,
//! classical PCA explained variance on complete panels, probabilistic PCA
//! (EM with missing entries), and spanning regressions against factors.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::portfolio::ReturnSeries;
use crate::stats::pearson_overlap;
use crate::{Error, Month, Result};

pub const PERCENTILE_GRID: [f64; 9] = [1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 99.0];

#[derive(Debug, Clone)]
pub struct CorrelationSummary {
    /// (percentile, correlation) on the standard grid.
    pub percentiles: Vec<(f64, f64)>,
    pub n_pairs: usize,
    pub min_overlap: usize,
}

/// Percentile by linear interpolation between order statistics of a
/// sorted slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Distribution of Pearson correlations over all unordered pairs with at
/// least `min_overlap` common months.
pub fn pairwise_correlations(series: &[ReturnSeries], min_overlap: usize) -> Result<CorrelationSummary> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 series".into()));
    }
    let n = series.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut corrs: Vec<f64> = pairs
        .par_iter()
        .filter_map(|&(i, j)| pearson_overlap(&series[i], &series[j], None, min_overlap))
        .collect();
    if corrs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no pair with {min_overlap}+ overlapping months"
        )));
    }
    corrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CorrelationSummary {
        percentiles: PERCENTILE_GRID
            .iter()
            .map(|&p| (p, percentile_sorted(&corrs, p)))
            .collect(),
        n_pairs: corrs.len(),
        min_overlap,
    })
}

/// Eigenvalues of the column covariance of a complete (T x d) matrix,
/// descending. Columns are demeaned; variances are not standardized.
fn covariance_eigenvalues(data: &DMatrix<f64>) -> Result<Vec<f64>> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "matrix has missing entries; use the probabilistic fit instead".into(),
        ));
    }
    let t = data.nrows();
    let d = data.ncols();
    if t < 2 || d < 1 {
        return Err(Error::InsufficientData(format!("matrix is {t} x {d}")));
    }
    let mut centered = data.clone();
    for j in 0..d {
        let mean = centered.column(j).sum() / t as f64;
        for i in 0..t {
            centered[(i, j)] -= mean;
        }
    }
    let cov = centered.transpose() * &centered / (t as f64 - 1.0);
    let mut eigs: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

/// Cumulative explained-variance fraction at each k in the grid.
pub fn pca_explained_variance(data: &DMatrix<f64>, k_grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    let eigs = covariance_eigenvalues(data)?;
    let total: f64 = eigs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InsufficientData("zero total variance".into()));
    }
    k_grid
        .iter()
        .map(|&k| {
            if k == 0 || k > eigs.len() {
                return Err(Error::Config(format!("k = {k} outside 1..={}", eigs.len())));
            }
            Ok((k, eigs[..k].iter().sum::<f64>() / total))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PpcaOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PpcaOptions {
    fn default() -> Self {
        PpcaOptions { tol: 1e-8, max_iter: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct FactorSet {
    pub k: usize,
    /// d x k loading matrix.
    pub loadings: DMatrix<f64>,
    /// Per-variable means used as the model's fixed location.
    pub means: DVector<f64>,
    pub noise_variance: f64,
    /// Posterior-mean factor scores, one series per factor.
    pub factor_series: Vec<ReturnSeries>,
    /// Observed-data log-likelihood per EM iteration.
    pub ll_trace: Vec<f64>,
    pub converged: bool,
}

impl FactorSet {
    /// Model-implied fraction of total variance carried by the factors:
    /// tr(WW') / (tr(WW') + d sigma^2) plus the k sigma^2 the factors
    /// absorb, matching classical PCA's cumulative fraction at the
    /// maximum-likelihood solution.
    pub fn explained_variance(&self) -> f64 {
        let d = self.loadings.nrows() as f64;
        let k = self.k as f64;
        let tr_wwt: f64 = self.loadings.iter().map(|v| v * v).sum();
        (tr_wwt + k * self.noise_variance) / (tr_wwt + d * self.noise_variance)
    }
}

/// Probabilistic PCA by expectation-maximization on a (T x d) matrix with
/// NaN marking missing entries. Location is fixed at per-column observed
/// means, which keeps the observed-data log-likelihood nondecreasing.
pub fn ppca_factors(
    data: &DMatrix<f64>,
    months: &[Month],
    k: usize,
    opts: &PpcaOptions,
) -> Result<FactorSet> {
    let t = data.nrows();
    let d = data.ncols();
    if months.len() != t {
        return Err(Error::Validation(format!(
            "{} month labels for {t} rows",
            months.len()
        )));
    }
    if k == 0 || k >= d {
        return Err(Error::Config(format!("k = {k} must be in 1..{d}")));
    }
    // fixed per-column means over observed entries
    let mut means = DVector::zeros(d);
    for j in 0..d {
        let obs: Vec<f64> = (0..t).map(|i| data[(i, j)]).filter(|v| v.is_finite()).collect();
        if obs.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "column {j} has {} observed entries",
                obs.len()
            )));
        }
        means[j] = obs.iter().sum::<f64>() / obs.len() as f64;
    }
    let observed: Vec<Vec<usize>> = (0..t)
        .map(|i| (0..d).filter(|&j| data[(i, j)].is_finite()).collect())
        .collect();
    let n_obs_total: usize = observed.iter().map(|o| o.len()).sum();

    // initialization: mean-imputed classical PCA
    let mut imputed = data.clone();
    for i in 0..t {
        for j in 0..d {
            if !imputed[(i, j)].is_finite() {
                imputed[(i, j)] = means[j];
            }
        }
    }
    let eigs_and_vecs = {
        let mut centered = imputed.clone();
        for j in 0..d {
            for i in 0..t {
                centered[(i, j)] -= means[j];
            }
        }
        // maximum-likelihood (1/T) covariance so that on complete data the
        // initialization is already the EM fixed point
        let cov = centered.transpose() * &centered / t as f64;
        cov.symmetric_eigen()
    };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigs_and_vecs.eigenvalues[b]
            .partial_cmp(&eigs_and_vecs.eigenvalues[a])
            .unwrap()
    });
    let mut sigma2 = if d > k {
        (order[k..].iter().map(|&i| eigs_and_vecs.eigenvalues[i]).sum::<f64>() / (d - k) as f64)
            .max(1e-12)
    } else {
        1e-12
    };
    let mut w = DMatrix::zeros(d, k);
    for (c, &i) in order[..k].iter().enumerate() {
        let scale = (eigs_and_vecs.eigenvalues[i] - sigma2).max(1e-12).sqrt();
        for r in 0..d {
            w[(r, c)] = eigs_and_vecs.eigenvectors[(r, i)] * scale;
        }
    }

    let mut ll_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut ex = DMatrix::zeros(t, k); // posterior means, filled each E-step
    for _iter in 0..opts.max_iter {
        // E-step: per-row posterior over the latent factor
        let mut exx: Vec<DMatrix<f64>> = Vec::with_capacity(t);
        let mut ll = 0.0;
        for i in 0..t {
            let obs = &observed[i];
            let no = obs.len();
            if no == 0 {
                exx.push(DMatrix::identity(k, k) * sigma2);
                for c in 0..k {
                    ex[(i, c)] = 0.0;
                }
                continue;
            }
            let mut w_o = DMatrix::zeros(no, k);
            let mut e = DVector::zeros(no);
            for (r, &j) in obs.iter().enumerate() {
                for c in 0..k {
                    w_o[(r, c)] = w[(j, c)];
                }
                e[r] = data[(i, j)] - means[j];
            }
            let m = &w_o.transpose() * &w_o + DMatrix::identity(k, k) * sigma2;
            let m_chol = nalgebra::linalg::Cholesky::new(m.clone())
                .ok_or_else(|| Error::Validation("posterior covariance not positive definite".into()))?;
            let wte = w_o.transpose() * &e;
            let mean_x = m_chol.solve(&wte);
            for c in 0..k {
                ex[(i, c)] = mean_x[c];
            }
            exx.push(m_chol.inverse() * sigma2 + &mean_x * mean_x.transpose());
            // observed-data log-likelihood via the determinant lemma and
            // Woodbury identity: C = W W' + sigma^2 I restricted to obs
            let log_det = (no - k) as f64 * sigma2.ln() + m_chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum::<f64>();
            let quad = (e.dot(&e) - wte.dot(&mean_x)) / sigma2;
            ll += -0.5 * (no as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad);
        }
        if let Some(&prev) = ll_trace.last() {
            let denom = prev.abs().max(1.0);
            if (ll - prev).abs() / denom < opts.tol {
                ll_trace.push(ll);
                converged = true;
                break;
            }
        }
        ll_trace.push(ll);

        // M-step: per-variable loading rows, then the noise variance
        let mut w_new = DMatrix::zeros(d, k);
        for j in 0..d {
            let mut a = DMatrix::zeros(k, k);
            let mut b = DVector::zeros(k);
            for i in 0..t {
                if data[(i, j)].is_finite() {
                    a += &exx[i];
                    let e = data[(i, j)] - means[j];
                    for c in 0..k {
                        b[c] += e * ex[(i, c)];
                    }
                }
            }
            let sol = nalgebra::linalg::Cholesky::new(a)
                .ok_or_else(|| Error::Validation(format!("degenerate update for variable {j}")))?
                .solve(&b);
            for c in 0..k {
                w_new[(j, c)] = sol[c];
            }
        }
        let mut rss = 0.0;
        for i in 0..t {
            for &j in &observed[i] {
                let e = data[(i, j)] - means[j];
                let wj = w_new.row(j).transpose();
                let pred = (0..k).map(|c| w_new[(j, c)] * ex[(i, c)]).sum::<f64>();
                rss += e * e - 2.0 * pred * e + (wj.transpose() * &exx[i] * &wj)[(0, 0)];
            }
        }
        w = w_new;
        sigma2 = (rss / n_obs_total as f64).max(1e-12);
    }

    // final E-step so scores match the returned loadings
    for i in 0..t {
        let obs = &observed[i];
        if obs.is_empty() {
            continue;
        }
        let no = obs.len();
        let mut w_o = DMatrix::zeros(no, k);
        let mut e = DVector::zeros(no);
        for (r, &j) in obs.iter().enumerate() {
            for c in 0..k {
                w_o[(r, c)] = w[(j, c)];
            }
            e[r] = data[(i, j)] - means[j];
        }
        let m = &w_o.transpose() * &w_o + DMatrix::identity(k, k) * sigma2;
        let mean_x = nalgebra::linalg::Cholesky::new(m)
            .ok_or_else(|| Error::Validation("posterior covariance not positive definite".into()))?
            .solve(&(w_o.transpose() * &e));
        for c in 0..k {
            ex[(i, c)] = mean_x[c];
        }
    }
    let factor_series = (0..k)
        .map(|c| {
            ReturnSeries::from_values(
                (0..t)
                    .filter(|&i| !observed[i].is_empty())
                    .map(|i| (months[i], ex[(i, c)])),
            )
        })
        .collect();
    Ok(FactorSet {
        k,
        loadings: w,
        means,
        noise_variance: sigma2,
        factor_series,
        ll_trace,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanningResult {
    pub adj_r2: f64,
    pub n_obs: usize,
    pub spanned: bool,
}

pub const SPANNING_R2_THRESHOLD: f64 = 0.25;

/// Adjusted R-squared of the candidate on the factor series plus an
/// intercept; None below `min_obs` overlapping months.
pub fn spanning_r2(
    candidate: &ReturnSeries,
    factors: &FactorSet,
    min_obs: usize,
) -> Option<SpanningResult> {
    let months: Vec<Month> = candidate
        .iter()
        .map(|(m, _)| m)
        .filter(|m| factors.factor_series.iter().all(|f| f.get(*m).is_some()))
        .collect();
    let n = months.len();
    let k = factors.k;
    if n < min_obs.max(k + 2) {
        return None;
    }
    let mut x = DMatrix::zeros(n, k + 1);
    let mut y = DVector::zeros(n);
    for (i, &m) in months.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for c in 0..k {
            x[(i, c + 1)] = factors.factor_series[c].get(m).unwrap();
        }
        y[i] = candidate.get(m).unwrap();
    }
    let xtx = x.transpose() * &x;
    let beta = nalgebra::linalg::Cholesky::new(xtx)?.solve(&(x.transpose() * &y));
    let resid = &y - &x * &beta;
    let mean_y = y.sum() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    if tss == 0.0 {
        return None;
    }
    let r2 = 1.0 - resid.dot(&resid) / tss;
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - k as f64 - 1.0);
    Some(SpanningResult {
        adj_r2,
        n_obs: n,
        spanned: adj_r2 > SPANNING_R2_THRESHOLD,
    })
}

pub const HIGH_CORR_THRESHOLD: f64 = 0.50;

/// Maximum absolute correlation between the candidate and published
/// predictors whose sample ends no later than the candidate target's;
/// None when no predictor qualifies or overlaps enough.
pub fn max_pairwise_with_existing(
    candidate: &ReturnSeries,
    existing: &[(ReturnSeries, Month)],
    target_end: Month,
    min_overlap: usize,
) -> Option<f64> {
    existing
        .iter()
        .filter(|(_, end)| *end <= target_end)
        .filter_map(|(s, _)| pearson_overlap(candidate, s, None, min_overlap))
        .map(f64::abs)
        .max_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Median lag-1 autocorrelation across series (series needing at least
/// `min_pairs` consecutive-month pairs).
pub fn median_lag1_autocorr(series: &[ReturnSeries], min_pairs: usize) -> Option<f64> {
    let mut acs: Vec<f64> = series
        .iter()
        .filter_map(|s| {
            let pairs: Vec<(f64, f64)> = s
                .iter()
                .filter_map(|(m, v)| s.get(m + 1).map(|nv| (v, nv)))
                .collect();
            if pairs.len() < min_pairs.max(3) {
                return None;
            }
            let n = pairs.len() as f64;
            let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let mut sab = 0.0;
            let mut saa = 0.0;
            let mut sbb = 0.0;
            for (a, b) in &pairs {
                sab += (a - ma) * (b - mb);
                saa += (a - ma) * (a - ma);
                sbb += (b - mb) * (b - mb);
            }
            if saa == 0.0 || sbb == 0.0 {
                None
            } else {
                Some(sab / (saa * sbb).sqrt())
            }
        })
        .collect();
    if acs.is_empty() {
        return None;
    }
    acs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(percentile_sorted(&acs, 50.0))
}

/// Principal angles (radians) between the column spaces of two matrices.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    let svd = (qa.transpose() * qb).svd(false, false);
    svd.singular_values
        .iter()
        .map(|&s| s.clamp(-1.0, 1.0).acos())
        .collect()
}

fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    qr.q()
}

pub fn write_correlation_summary(summary: &CorrelationSummary, w: &mut impl Write) -> Result<()> {
    writeln!(w, "percentile,correlation,n_pairs,min_overlap")?;
    for (p, c) in &summary.percentiles {
        writeln!(w, "{},{:.4},{},{}", p, c, summary.n_pairs, summary.min_overlap)?;
    }
    Ok(())
}

pub fn write_explained_variance(rows: &[(usize, f64)], w: &mut impl Write) -> Result<()> {
    writeln!(w, "k,explained_frac")?;
    for (k, f) in rows {
        writeln!(w, "{},{:.6}", k, f)?;
    }
    Ok(())
}
