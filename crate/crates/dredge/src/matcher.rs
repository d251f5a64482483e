//! Benchmark selection for published predictors: t-stat and top-percent
//! screens, restrictive mean/t/correlation matching, and normalization of
//! return series to a fixed in-sample mean.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::portfolio::{ReturnSeries, Weighting};
use crate::stats::{pearson_overlap, summary_stats, SampleWindow, SummaryStats};
use crate::{Error, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theory {
    Risk,
    Mispricing,
    Agnostic,
}

impl Theory {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "risk" => Ok(Theory::Risk),
            "mispricing" => Ok(Theory::Mispricing),
            "agnostic" => Ok(Theory::Agnostic),
            other => Err(Error::Validation(format!("unknown theory '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rigor {
    None,
    Stylized,
    Dynamic,
    Quantitative,
}

impl Rigor {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Rigor::None),
            "stylized" => Ok(Rigor::Stylized),
            "dynamic" => Ok(Rigor::Dynamic),
            "quantitative" => Ok(Rigor::Quantitative),
            other => Err(Error::Validation(format!("unknown rigor '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PublishedPredictor {
    pub id: String,
    pub returns: ReturnSeries,
    pub sample_window: SampleWindow,
    pub publication_month: Month,
    pub weighting: Weighting,
    pub theory: Theory,
    pub rigor: Rigor,
}

/// Inclusion filters applied when loading published predictors.
pub const MIN_POST_SAMPLE_MONTHS: usize = 9 * 12;
pub const MIN_ABS_IS_MEAN_BPS: f64 = 15.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ScreenConfig {
    /// Keep strategies with |t| strictly above the threshold.
    AbsTstatAbove(f64),
    /// Keep the top X percent of strategies ranked by |t|.
    TopPercentByAbsT(f64),
}

impl ScreenConfig {
    fn validate(&self) -> Result<()> {
        if let ScreenConfig::TopPercentByAbsT(p) = self {
            if !(*p > 0.0 && *p <= 100.0) {
                return Err(Error::Config(format!("percentile {p} outside (0, 100]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchConfig {
    pub t_tol_frac: f64,
    pub mean_tol_frac: f64,
    /// Cap on |correlation| with the target; None disables the cap.
    pub max_abs_corr: Option<f64>,
    pub weighting_must_match: bool,
    pub min_overlap_months: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            t_tol_frac: 0.10,
            mean_tol_frac: 0.30,
            max_abs_corr: Some(0.10),
            weighting_must_match: true,
            min_overlap_months: 24,
        }
    }
}

/// Indices of strategies passing the screen, ascending. Ties in the
/// top-percent rank break toward the lower index.
pub fn screen(stats: &[Option<SummaryStats>], config: &ScreenConfig) -> Result<Vec<usize>> {
    config.validate()?;
    match config {
        ScreenConfig::AbsTstatAbove(h) => Ok(stats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (i, s.t_stat.abs())))
            .filter(|(_, t)| *t > *h)
            .map(|(i, _)| i)
            .collect()),
        ScreenConfig::TopPercentByAbsT(pct) => {
            let mut ranked: Vec<(usize, f64)> = stats
                .iter()
                .enumerate()
                .filter_map(|(i, s)| s.as_ref().map(|s| (i, s.t_stat.abs())))
                .collect();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let keep = (pct / 100.0 * ranked.len() as f64).floor() as usize;
            let mut out: Vec<usize> = ranked.into_iter().take(keep).map(|(i, _)| i).collect();
            out.sort_unstable();
            Ok(out)
        }
    }
}

/// One candidate strategy offered to the matcher.
pub struct MatchCandidate<'a> {
    pub stats: Option<SummaryStats>,
    pub series: &'a ReturnSeries,
    pub weighting: Weighting,
}

#[derive(Debug, Clone)]
pub struct MatchRow {
    pub index: usize,
    pub t_dm: f64,
    pub mean_dm_bps: f64,
    pub corr: Option<f64>,
}

/// Benchmarks with |t| and |mean| inside fractional tolerances of the
/// target's, optional same-weighting requirement, and an optional cap on
/// absolute in-sample correlation with the target.
pub fn match_restrictive(
    target: &PublishedPredictor,
    candidates: &[MatchCandidate],
    config: &MatchConfig,
) -> Result<Vec<MatchRow>> {
    if config.t_tol_frac < 0.0 || config.mean_tol_frac < 0.0 {
        return Err(Error::Config("tolerance fractions must be >= 0".into()));
    }
    let target_stats = summary_stats(&target.returns, target.sample_window).ok_or_else(|| {
        Error::InsufficientData(format!("target '{}' has no in-sample stats", target.id))
    })?;
    let t_pub = target_stats.t_stat.abs();
    let mean_pub = target_stats.mean_bps.abs();
    let mut out = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if config.weighting_must_match && c.weighting != target.weighting {
            continue;
        }
        let Some(s) = c.stats.as_ref() else { continue };
        if (s.t_stat.abs() - t_pub).abs() > config.t_tol_frac * t_pub {
            continue;
        }
        if (s.mean_bps.abs() - mean_pub).abs() > config.mean_tol_frac * mean_pub {
            continue;
        }
        let corr = pearson_overlap(
            c.series,
            &target.returns,
            Some(target.sample_window),
            config.min_overlap_months,
        );
        if let Some(cap) = config.max_abs_corr {
            match corr {
                Some(r) if r.abs() <= cap => {}
                _ => continue, // over the cap, or no qualifying overlap
            }
        }
        out.push(MatchRow {
            index: i,
            t_dm: s.t_stat,
            mean_dm_bps: s.mean_bps,
            corr,
        });
    }
    Ok(out)
}

/// Rescale so the in-sample mean equals `target_bps` exactly; a negative
/// in-sample mean flips the series sign.
pub fn normalize_to_insample(
    series: &ReturnSeries,
    window: SampleWindow,
    target_bps: f64,
) -> Result<ReturnSeries> {
    let vals = series.window_values(window);
    if vals.is_empty() {
        return Err(Error::InsufficientData("no in-sample months".into()));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    if mean == 0.0 {
        return Err(Error::InsufficientData(
            "zero in-sample mean, cannot normalize".into(),
        ));
    }
    let scale = target_bps / mean;
    Ok(series.map_values(|v| v * scale))
}

/// Load predictors from a metadata CSV and a long-format returns CSV,
/// dropping those with under 9 years of post-sample coverage or an
/// in-sample mean below 15 bps in magnitude. Returns (kept, dropped ids).
pub fn load_published(
    metadata_path: &Path,
    returns_path: &Path,
) -> Result<(Vec<PublishedPredictor>, Vec<String>)> {
    let mut returns: HashMap<String, Vec<(Month, f64)>> = HashMap::new();
    let mut rdr = csv::Reader::from_path(returns_path)?;
    expect_headers(&mut rdr, &["id", "month", "ret_bps"], returns_path)?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse = |msg: String| Error::Parse { line, msg };
        let id = rec.get(0).unwrap_or_default().to_string();
        let month = Month::parse(rec.get(1).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let ret: f64 = rec
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|_| parse("bad ret_bps".into()))?;
        returns.entry(id).or_default().push((month, ret));
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut rdr = csv::Reader::from_path(metadata_path)?;
    expect_headers(
        &mut rdr,
        &["id", "sample_start", "sample_end", "pub_date", "weighting", "theory", "rigor"],
        metadata_path,
    )?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse = |msg: String| Error::Parse { line, msg };
        let id = rec.get(0).unwrap_or_default().to_string();
        let sample_start = Month::parse(rec.get(1).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let sample_end = Month::parse(rec.get(2).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let publication_month = Month::parse(rec.get(3).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let weighting = Weighting::parse(rec.get(4).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let theory = Theory::parse(rec.get(5).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        let rigor = Rigor::parse(rec.get(6).unwrap_or_default())
            .map_err(|e| parse(e.to_string()))?;
        if sample_start > sample_end {
            return Err(parse(format!("predictor '{id}': sample_start after sample_end")));
        }
        let rows = returns.remove(&id).ok_or_else(|| {
            Error::Validation(format!("predictor '{id}' has no return rows"))
        })?;
        let series = ReturnSeries::from_values(rows);
        let window = SampleWindow::new(sample_start, sample_end);
        // coverage checks drive inclusion, not hard errors
        let post_months = series
            .iter()
            .filter(|(m, _)| *m > sample_end)
            .count();
        let is_mean = {
            let v = series.window_values(window);
            if v.is_empty() {
                return Err(Error::Validation(format!(
                    "predictor '{id}': no returns inside sample window"
                )));
            }
            v.iter().sum::<f64>() / v.len() as f64
        };
        if post_months < MIN_POST_SAMPLE_MONTHS || is_mean.abs() < MIN_ABS_IS_MEAN_BPS {
            dropped.push(id);
            continue;
        }
        kept.push(PublishedPredictor {
            id,
            returns: series,
            sample_window: window,
            publication_month,
            weighting,
            theory,
            rigor,
        });
    }
    Ok((kept, dropped))
}

fn expect_headers(rdr: &mut csv::Reader<std::fs::File>, want: &[&str], path: &Path) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if got != want {
        return Err(Error::Validation(format!(
            "{}: expected header {want:?}, found {got:?}",
            path.display()
        )));
    }
    Ok(())
}

pub fn write_match_report(
    target_id: &str,
    spec_ids: &[String],
    rows: &[MatchRow],
    w: &mut impl Write,
) -> Result<()> {
    writeln!(w, "target_id,spec_id,t_dm,mean_dm,corr")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.4},{:.4},{}",
            target_id,
            spec_ids[r.index],
            r.t_dm,
            r.mean_dm_bps,
            r.corr.map(|c| format!("{c:.4}")).unwrap_or_default()
        )?;
    }
    Ok(())
}
