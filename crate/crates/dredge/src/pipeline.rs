//! Command orchestration: a declarative TOML run configuration drives the
//! synth -> mine -> match -> report -> simulate flow, with deterministic
//! CSV artifacts and a JSON manifest per command.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cochrane::{DiscreteParams, SelectionRule};
use crate::event::{align_to_sample_end, trailing_mean, AlignMode, EventInput};
use crate::matcher::{
    load_published, match_restrictive, normalize_to_insample, screen, MatchCandidate, MatchConfig,
    PublishedPredictor, Rigor, ScreenConfig, Theory,
};
use crate::panel::{
    generate_synthetic_panel, load_accounting_panel, load_catalog, load_monthly_panel,
    write_accounting_panel, write_catalog, write_monthly_panel, SyntheticConfig,
};
use crate::portfolio::{MiningContext, ReturnSeries, Weighting};
use crate::signal::{
    enumerate_signal_universe, screen_denominators, write_universe, DenominatorScreen, SignalSpec,
};
use crate::spanning::{
    median_lag1_autocorr, pairwise_correlations, pca_explained_variance, ppca_factors,
    spanning_r2, write_correlation_summary, write_explained_variance, PpcaOptions,
};
use crate::stats::{
    bin_sort_oos, decay_regression, risk_no_decay_p, summary_stats, theme_table, write_bin_table,
    write_theme_table, BinSortConfig, DecaySpec, SampleWindow, SummaryStats, ThemeInput,
};
use crate::ticker::{build_ticker_buckets, mine_ticker_universe};
use crate::{Error, Month, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Option<usize>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub inputs: Option<InputsConfig>,
    #[serde(default)]
    pub synth: Option<SyntheticConfig>,
    #[serde(default)]
    pub universe: Option<DenominatorScreen>,
    pub windows: WindowsConfig,
    #[serde(default)]
    pub screen: ScreenSection,
    #[serde(default)]
    pub matching: MatchSection,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InputsConfig {
    pub monthly: PathBuf,
    pub accounting: PathBuf,
    pub catalog: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WindowsConfig {
    /// In-sample window as YYYY-MM strings.
    pub in_start: String,
    pub in_end: String,
    /// End of the post-sample window; defaults to panel coverage.
    #[serde(default)]
    pub post_end: Option<String>,
}

impl WindowsConfig {
    pub fn in_window(&self) -> Result<SampleWindow> {
        let start = Month::parse(&self.in_start)?;
        let end = Month::parse(&self.in_end)?;
        if start > end {
            return Err(Error::Config("in_start after in_end".into()));
        }
        Ok(SampleWindow::new(start, end))
    }

    pub fn post_window(&self, coverage_end: Month) -> Result<SampleWindow> {
        let start = Month::parse(&self.in_end)? + 1;
        let end = match &self.post_end {
            Some(s) => Month::parse(s)?,
            None => coverage_end,
        };
        if start > end {
            return Err(Error::Config("post-sample window is empty".into()));
        }
        Ok(SampleWindow::new(start, end))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScreenSection {
    pub kind: String,
    pub threshold: f64,
}

impl Default for ScreenSection {
    fn default() -> Self {
        ScreenSection { kind: "abs_t_above".into(), threshold: 2.0 }
    }
}

impl ScreenSection {
    pub fn to_config(&self) -> Result<ScreenConfig> {
        match self.kind.as_str() {
            "abs_t_above" => Ok(ScreenConfig::AbsTstatAbove(self.threshold)),
            "top_percent" => Ok(ScreenConfig::TopPercentByAbsT(self.threshold)),
            other => Err(Error::Config(format!("unknown screen kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct MatchSection {
    /// "derive" synthesizes targets from the top screened strategies;
    /// "files" loads published-predictor CSVs.
    #[serde(default = "default_match_mode")]
    pub mode: String,
    #[serde(default = "default_n_targets")]
    pub n_targets: usize,
    #[serde(default)]
    pub published_meta: Option<PathBuf>,
    #[serde(default)]
    pub published_returns: Option<PathBuf>,
    #[serde(default = "default_t_tol")]
    pub t_tol_frac: f64,
    #[serde(default = "default_mean_tol")]
    pub mean_tol_frac: f64,
    #[serde(default = "default_max_corr")]
    pub max_abs_corr: f64,
}

fn default_match_mode() -> String {
    "derive".into()
}
fn default_n_targets() -> usize {
    5
}
fn default_t_tol() -> f64 {
    0.10
}
fn default_mean_tol() -> f64 {
    0.30
}
fn default_max_corr() -> f64 {
    0.10
}

impl Default for MatchSection {
    fn default() -> Self {
        MatchSection {
            mode: default_match_mode(),
            n_targets: default_n_targets(),
            published_meta: None,
            published_returns: None,
            t_tol_frac: default_t_tol(),
            mean_tol_frac: default_mean_tol(),
            max_abs_corr: default_max_corr(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReportSection {
    #[serde(default = "default_bin_lookback")]
    pub bin_lookback_months: usize,
    #[serde(default = "default_bin_min_is")]
    pub bin_min_is_months: usize,
    #[serde(default = "default_theme_top_k")]
    pub theme_top_k: usize,
    #[serde(default = "default_ppca_k")]
    pub ppca_k: usize,
    #[serde(default = "default_max_series")]
    pub max_spanning_series: usize,
}

fn default_bin_lookback() -> usize {
    120
}
fn default_bin_min_is() -> usize {
    60
}
fn default_theme_top_k() -> usize {
    10
}
fn default_ppca_k() -> usize {
    5
}
fn default_max_series() -> usize {
    100
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            bin_lookback_months: default_bin_lookback(),
            bin_min_is_months: default_bin_min_is(),
            theme_top_k: default_theme_top_k(),
            ppca_k: default_ppca_k(),
            max_spanning_series: default_max_series(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateSection {
    pub thresholds: Vec<f64>,
    #[serde(default = "default_n_sims")]
    pub n_sims: usize,
    pub theory: DiscreteParams,
    pub mining: DiscreteParams,
}

fn default_n_sims() -> usize {
    100_000
}

/// Parsed configuration plus the hash of the file that produced it.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub config_hash: String,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = fs::read(path)?;
    let mut config: RunConfig = toml::from_str(
        std::str::from_utf8(&bytes)
            .map_err(|_| Error::Config("config file is not UTF-8".into()))?,
    )
    .map_err(|e| Error::Config(format!("bad config: {e}")))?;
    // environment overrides, restricted to output dir and parallelism
    if let Ok(dir) = std::env::var("DREDGE_OUTPUT_DIR") {
        config.output_dir = PathBuf::from(dir);
    }
    if let Ok(par) = std::env::var("DREDGE_PARALLELISM") {
        let n: usize = par
            .parse()
            .map_err(|_| Error::Config(format!("bad DREDGE_PARALLELISM '{par}'")))?;
        config.parallelism = Some(n);
    }
    let config_hash = format!("{:x}", Sha256::digest(&bytes));
    Ok(LoadedConfig { config, config_hash })
}

/// Run `f` inside a rayon pool sized by the config's parallelism degree.
pub fn with_pool<T: Send>(config: &RunConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match config.parallelism {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    config_hash: String,
    outputs: Vec<String>,
    counts: BTreeMap<String, i64>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config_hash: &str,
    outputs: &[&str],
    counts: BTreeMap<String, i64>,
) -> Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        config_hash: config_hash.to_string(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        counts,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    fs::write(dir.join(format!("manifest_{command}.json")), json + "\n")?;
    Ok(())
}

fn create_out(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

pub fn run_synth(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let synth = config
        .synth
        .as_ref()
        .ok_or_else(|| Error::Config("synth command needs a [synth] section".into()))?;
    let (monthly, accounting, catalog, truth) = generate_synthetic_panel(synth)?;
    let dir = &config.output_dir;
    let mut w = create_out(dir, "monthly.csv")?;
    write_monthly_panel(&monthly, &mut w)?;
    w.flush()?;
    let mut w = create_out(dir, "accounting.csv")?;
    write_accounting_panel(&accounting, &mut w)?;
    w.flush()?;
    let mut w = create_out(dir, "catalog.csv")?;
    write_catalog(&catalog, &mut w)?;
    w.flush()?;
    let json = serde_json::to_string_pretty(&truth)
        .map_err(|e| Error::Config(format!("ground truth: {e}")))?;
    fs::write(dir.join("ground_truth.json"), json + "\n")?;
    let mut counts = BTreeMap::new();
    counts.insert("firms".to_string(), synth.n_firms as i64);
    counts.insert("monthly_rows".to_string(), monthly.rows().len() as i64);
    counts.insert("accounting_rows".to_string(), accounting.rows().len() as i64);
    counts.insert("planted_signals".to_string(), truth.planted.len() as i64);
    write_manifest(
        dir,
        "synth",
        &loaded.config_hash,
        &["monthly.csv", "accounting.csv", "catalog.csv", "ground_truth.json"],
        counts,
    )
}

fn inputs_of(config: &RunConfig) -> Result<&InputsConfig> {
    config
        .inputs
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs an [inputs] section".into()))
}

/// Stable strategy id for a (universe index, weighting) pair.
pub fn strategy_id(spec_index: usize, weighting: Weighting) -> String {
    format!("s{spec_index:05}_{weighting}")
}

pub fn run_mine(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let inputs = inputs_of(config)?;
    let monthly = load_monthly_panel(&inputs.monthly)?;
    let catalog = load_catalog(&inputs.catalog)?;
    let accounting = load_accounting_panel(&inputs.accounting, &catalog)?;
    let universe_screen = config.universe.clone().unwrap_or_default();
    let denominators = screen_denominators(&accounting, &monthly, &catalog, &universe_screen)?;
    let specs = enumerate_signal_universe(&catalog, &denominators)?;
    let in_window = config.windows.in_window()?;

    let dir = &config.output_dir;
    let mut w = create_out(dir, "universe.csv")?;
    write_universe(&specs, &mut w)?;
    w.flush()?;

    // evaluate every spec under both weightings over the in-sample window;
    // the decile assignments are shared between the two weightings
    let ctx = MiningContext::new(&monthly, &accounting, &catalog);
    let jobs: Vec<(SignalSpec, Weighting)> = specs
        .iter()
        .flat_map(|s| {
            [
                (s.clone(), Weighting::EqualWeighted),
                (s.clone(), Weighting::ValueWeighted),
            ]
        })
        .collect();
    let per_spec: Vec<[Option<SummaryStats>; 2]> = specs
        .par_iter()
        .map(|spec| {
            let assignments = ctx.assignments(spec)?;
            let mut out = [None, None];
            for (slot, weighting) in
                [Weighting::EqualWeighted, Weighting::ValueWeighted].into_iter().enumerate()
            {
                let series =
                    crate::portfolio::long_short_returns(weighting, 1, &assignments, &monthly);
                out[slot] = summary_stats(&series, in_window);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let stats: Vec<Option<SummaryStats>> = per_spec.into_iter().flatten().collect();

    let mut w = create_out(dir, "stats.csv")?;
    writeln!(
        w,
        "strategy_id,spec_id,form,numerator,denominator,weighting,n_months,mean_bps,t_stat"
    )?;
    for (j, (spec, weighting)) in jobs.iter().enumerate() {
        let spec_index = j / 2;
        let (n, mean, t) = match &stats[j] {
            Some(s) => (
                s.n_months.to_string(),
                format!("{:.4}", s.mean_bps),
                format!("{:.4}", s.t_stat),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            strategy_id(spec_index, *weighting),
            spec_index,
            spec.form,
            spec.numerator_id,
            spec.denominator_id,
            weighting,
            n,
            mean,
            t
        )?;
    }
    w.flush()?;

    let screen_config = config.screen.to_config()?;
    let kept = screen(&stats, &screen_config)?;
    let mut w = create_out(dir, "screened.csv")?;
    writeln!(w, "strategy_id")?;
    for &j in &kept {
        writeln!(w, "{}", strategy_id(j / 2, jobs[j].1))?;
    }
    w.flush()?;

    // full return series for the screened strategies only
    let mut w = create_out(dir, "strategy_returns.csv")?;
    writeln!(w, "strategy_id,month,ret_bps")?;
    for &j in &kept {
        let (spec, weighting) = &jobs[j];
        let series = ctx.evaluate(spec, *weighting, 1)?;
        crate::portfolio::write_returns(&strategy_id(j / 2, *weighting), &series, &mut w)?;
    }
    w.flush()?;

    let mut counts = BTreeMap::new();
    counts.insert("ingredients".to_string(), catalog.len() as i64);
    counts.insert("denominators".to_string(), denominators.len() as i64);
    counts.insert("universe_specs".to_string(), specs.len() as i64);
    counts.insert("strategies_evaluated".to_string(), jobs.len() as i64);
    counts.insert(
        "strategies_with_stats".to_string(),
        stats.iter().flatten().count() as i64,
    );
    counts.insert("strategies_screened".to_string(), kept.len() as i64);
    write_manifest(
        dir,
        "mine",
        &loaded.config_hash,
        &["universe.csv", "stats.csv", "screened.csv", "strategy_returns.csv"],
        counts,
    )
}

pub fn run_tickers(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let inputs = inputs_of(config)?;
    let monthly = load_monthly_panel(&inputs.monthly)?;
    let in_window = config.windows.in_window()?;
    let buckets = build_ticker_buckets(&monthly);
    let mined = mine_ticker_universe(&monthly, &buckets);
    let dir = &config.output_dir;
    let mut w = create_out(dir, "ticker_stats.csv")?;
    writeln!(w, "strategy_id,weighting,n_months,mean_bps,t_stat")?;
    let stats: Vec<Option<SummaryStats>> = mined
        .iter()
        .map(|(_, series)| summary_stats(series, in_window))
        .collect();
    for ((pair, _), s) in mined.iter().zip(&stats) {
        let (n, mean, t) = match s {
            Some(s) => (
                s.n_months.to_string(),
                format!("{:.4}", s.mean_bps),
                format!("{:.4}", s.t_stat),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(w, "{},ew,{},{},{}", pair, n, mean, t)?;
    }
    w.flush()?;

    let kept = screen(&stats, &config.screen.to_config()?)?;
    let mut w = create_out(dir, "ticker_returns.csv")?;
    writeln!(w, "strategy_id,month,ret_bps")?;
    for &j in &kept {
        crate::portfolio::write_returns(&mined[j].0.to_string(), &mined[j].1, &mut w)?;
    }
    w.flush()?;

    let mut counts = BTreeMap::new();
    counts.insert("buckets".to_string(), crate::ticker::N_BUCKETS as i64);
    counts.insert("pair_strategies".to_string(), mined.len() as i64);
    counts.insert("screened".to_string(), kept.len() as i64);
    counts.insert(
        "excluded_firm_months".to_string(),
        buckets.n_excluded_firm_months as i64,
    );
    write_manifest(
        dir,
        "tickers",
        &loaded.config_hash,
        &["ticker_stats.csv", "ticker_returns.csv"],
        counts,
    )
}

/// Screened strategy returns written by the mine command, keyed by id in
/// file order.
fn load_strategy_returns(dir: &Path) -> Result<Vec<(String, ReturnSeries)>> {
    let path = dir.join("strategy_returns.csv");
    if !path.exists() {
        return Err(Error::Config(
            "strategy_returns.csv not found; run the mine command first".into(),
        ));
    }
    let mut rdr = csv::Reader::from_path(&path)?;
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Vec<(Month, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or_default().to_string();
        let month = Month::parse(rec.get(1).unwrap_or_default())
            .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let ret: f64 = rec
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Parse { line, msg: "bad ret_bps".into() })?;
        if !map.contains_key(&id) {
            order.push(id.clone());
        }
        map.entry(id).or_default().push((month, ret));
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let rows = map.remove(&id).unwrap();
            (id, ReturnSeries::from_values(rows))
        })
        .collect())
}

fn weighting_of_id(id: &str) -> Weighting {
    if id.ends_with("_vw") {
        Weighting::ValueWeighted
    } else {
        Weighting::EqualWeighted
    }
}

/// Targets for matching: either loaded published predictors, or derived
/// from the strongest screened strategies. Derived targets use the
/// in-sample window as their sample and are labeled with theories
/// cyclically so every category is populated.
fn build_targets(
    config: &RunConfig,
    store: &[(String, ReturnSeries)],
    in_window: SampleWindow,
) -> Result<Vec<PublishedPredictor>> {
    match config.matching.mode.as_str() {
        "files" => {
            let (meta, rets) = match (&config.matching.published_meta, &config.matching.published_returns) {
                (Some(m), Some(r)) => (m, r),
                _ => {
                    return Err(Error::Config(
                        "matching mode 'files' needs published_meta and published_returns".into(),
                    ))
                }
            };
            let (kept, _) = load_published(meta, rets)?;
            if kept.is_empty() {
                return Err(Error::InsufficientData("no published predictor passed the filters".into()));
            }
            Ok(kept)
        }
        "derive" => {
            let mut ranked: Vec<(usize, f64)> = store
                .iter()
                .enumerate()
                .filter_map(|(i, (_, s))| {
                    summary_stats(s, in_window).map(|st| (i, st.t_stat.abs()))
                })
                .collect();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            ranked.truncate(config.matching.n_targets);
            ranked.sort_by_key(|(i, _)| *i);
            if ranked.is_empty() {
                return Err(Error::InsufficientData("no screened strategy to derive targets from".into()));
            }
            let theories = [Theory::Risk, Theory::Mispricing, Theory::Agnostic];
            Ok(ranked
                .iter()
                .enumerate()
                .map(|(k, &(i, _))| {
                    let (id, series) = &store[i];
                    PublishedPredictor {
                        id: id.clone(),
                        returns: series.clone(),
                        sample_window: in_window,
                        publication_month: in_window.end + 12,
                        weighting: weighting_of_id(id),
                        theory: theories[k % 3],
                        rigor: Rigor::Stylized,
                    }
                })
                .collect())
        }
        other => Err(Error::Config(format!("unknown matching mode '{other}'"))),
    }
}

pub fn run_match(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let dir = &config.output_dir;
    let in_window = config.windows.in_window()?;
    let store = load_strategy_returns(dir)?;
    let targets = build_targets(config, &store, in_window)?;
    let screen_config = config.screen.to_config()?;
    let match_config = MatchConfig {
        t_tol_frac: config.matching.t_tol_frac,
        mean_tol_frac: config.matching.mean_tol_frac,
        max_abs_corr: Some(config.matching.max_abs_corr),
        weighting_must_match: true,
        min_overlap_months: 24,
    };

    let mut bench_w = create_out(dir, "benchmarks.csv")?;
    writeln!(bench_w, "target_id,strategy_id")?;
    let mut match_w = create_out(dir, "match_report.csv")?;
    writeln!(match_w, "target_id,spec_id,t_dm,mean_dm,corr")?;

    // event inputs: every (target, screened benchmark) pair, normalized
    // to 100 bps over the target's sample window
    let mut normalized: Vec<(ReturnSeries, Month, usize)> = Vec::new();
    let mut n_benchmarks = 0i64;
    let mut n_matched = 0i64;
    for (t_idx, target) in targets.iter().enumerate() {
        // per-target stats of every candidate over the target's window
        let stats: Vec<Option<SummaryStats>> = store
            .iter()
            .map(|(id, s)| {
                if *id == target.id {
                    None // a target never benchmarks itself
                } else {
                    summary_stats(s, target.sample_window)
                }
            })
            .collect();
        let kept = screen(&stats, &screen_config)?;
        for &i in &kept {
            if weighting_of_id(&store[i].0) != target.weighting {
                continue;
            }
            writeln!(bench_w, "{},{}", target.id, store[i].0)?;
            let series =
                normalize_to_insample(&store[i].1, target.sample_window, 100.0)?;
            normalized.push((series, target.sample_window.end, t_idx));
            n_benchmarks += 1;
        }
        let candidates: Vec<MatchCandidate> = store
            .iter()
            .enumerate()
            .map(|(i, (id, s))| MatchCandidate {
                stats: if *id == target.id { None } else { stats[i] },
                series: s,
                weighting: weighting_of_id(id),
            })
            .collect();
        let rows = match_restrictive(target, &candidates, &match_config)?;
        n_matched += rows.len() as i64;
        let ids: Vec<String> = store.iter().map(|(id, _)| id.clone()).collect();
        crate::matcher::write_match_report(&target.id, &ids, &rows, &mut match_w)?;
    }
    bench_w.flush()?;
    match_w.flush()?;

    if normalized.is_empty() {
        return Err(Error::InsufficientData("no benchmark passed the screen for any target".into()));
    }
    let inputs: Vec<EventInput> = normalized
        .iter()
        .map(|(s, end, group)| EventInput { series: s, sample_end: *end, group: *group })
        .collect();
    let events = align_to_sample_end(&inputs, AlignMode::Pooled)?;
    let trailing = trailing_mean(&events, 60, 36);
    let mut w = create_out(dir, "event_series.csv")?;
    crate::event::write_event_series(&events, &trailing, &mut w)?;
    w.flush()?;

    let mut counts = BTreeMap::new();
    counts.insert("targets".to_string(), targets.len() as i64);
    counts.insert("benchmark_pairs".to_string(), n_benchmarks);
    counts.insert("restrictive_matches".to_string(), n_matched);
    write_manifest(
        dir,
        "match",
        &loaded.config_hash,
        &["benchmarks.csv", "match_report.csv", "event_series.csv"],
        counts,
    )
}

pub fn run_report(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let dir = &config.output_dir;
    let in_window = config.windows.in_window()?;
    let store = load_strategy_returns(dir)?;
    if store.is_empty() {
        return Err(Error::InsufficientData("no screened strategy returns to report on".into()));
    }
    let coverage_end = store
        .iter()
        .filter_map(|(_, s)| s.last_month())
        .max()
        .ok_or_else(|| Error::InsufficientData("empty strategy series".into()))?;
    let post_window = config.windows.post_window(coverage_end)?;
    let series_only: Vec<ReturnSeries> = store.iter().map(|(_, s)| s.clone()).collect();

    // rolling bin sorts over the screened strategies
    let bin_config = BinSortConfig {
        lookback_months: config.report.bin_lookback_months,
        n_bins: 5,
        min_is_months: config.report.bin_min_is_months,
    };
    let bins = bin_sort_oos(&series_only, &bin_config)?;
    let mut w = create_out(dir, "bin_table.csv")?;
    write_bin_table(&bins, &mut w)?;
    w.flush()?;

    // theme table: strategies grouped by numerator and weighting, with
    // the post-sample window as the single OOS column
    let universe = load_universe_labels(dir)?;
    let theme_inputs: Vec<ThemeInput> = store
        .iter()
        .filter_map(|(id, s)| {
            let st = summary_stats(s, in_window)?;
            let oos = {
                let v = s.window_values(post_window);
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            let numerator = universe.get(&spec_index_of(id)?).cloned()?;
            Some(ThemeInput {
                numerator,
                weighting: weighting_of_id(id),
                is_mean_bps: st.mean_bps,
                is_t: st.t_stat,
                oos_means_bps: vec![oos],
            })
        })
        .collect();
    let themes = theme_table(&theme_inputs, config.report.theme_top_k);
    let mut w = create_out(dir, "theme_table.csv")?;
    write_theme_table(&themes, &mut w)?;
    w.flush()?;

    // decay regressions over the derived (or loaded) predictor set
    let targets = build_targets(config, &store, in_window)?;
    let mut w = create_out(dir, "decay_regression.csv")?;
    writeln!(w, "specification,coefficient,estimate,cluster_se,p_risk_no_decay")?;
    for (name, spec) in [
        ("1", DecaySpec::S1),
        ("2", DecaySpec::S2),
        ("3", DecaySpec::S3),
        ("4", DecaySpec::S4),
        ("5", DecaySpec::S5),
    ] {
        let result = match decay_regression(&targets, spec, true) {
            Ok(r) => r,
            // small derived target sets can be collinear in the richer
            // specifications; report the row as absent rather than failing
            Err(Error::RankDeficient(_)) => continue,
            Err(e) => return Err(e),
        };
        let p = risk_no_decay_p(&result)?;
        for (i, coef) in result.names.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.4},{:.4},{:.6}",
                name, coef, result.estimates[i], result.std_errors[i], p
            )?;
        }
    }
    w.flush()?;

    // spanning diagnostics on a capped set of screened strategies
    let cap = config.report.max_spanning_series.max(2).min(store.len());
    let span_store = &series_only[..cap];
    let corr = pairwise_correlations(span_store, 24)?;
    let mut w = create_out(dir, "correlation_summary.csv")?;
    write_correlation_summary(&corr, &mut w)?;
    w.flush()?;

    // matrix over the in-sample window months; NaN where missing
    let months: Vec<Month> = (in_window.start.0..=in_window.end.0).map(Month).collect();
    let mut data = nalgebra::DMatrix::from_element(months.len(), cap, f64::NAN);
    for (j, s) in span_store.iter().enumerate() {
        for (i, &m) in months.iter().enumerate() {
            if let Some(v) = s.get(m) {
                data[(i, j)] = v;
            }
        }
    }
    let complete_cols: Vec<usize> = (0..cap)
        .filter(|&j| (0..months.len()).all(|i| data[(i, j)].is_finite()))
        .collect();
    if complete_cols.len() >= 2 {
        let complete = nalgebra::DMatrix::from_fn(months.len(), complete_cols.len(), |i, j| {
            data[(i, complete_cols[j])]
        });
        let k_max = complete_cols.len().min(10);
        let k_grid: Vec<usize> = (1..=k_max).collect();
        let ev = pca_explained_variance(&complete, &k_grid)?;
        let mut w = create_out(dir, "explained_variance.csv")?;
        write_explained_variance(&ev, &mut w)?;
        w.flush()?;
    }

    let k = config.report.ppca_k.min(cap - 1).max(1);
    let fit = ppca_factors(&data, &months, k, &PpcaOptions::default())?;
    let mut w = create_out(dir, "factors.csv")?;
    writeln!(w, "factor,month,value")?;
    for (fi, f) in fit.factor_series.iter().enumerate() {
        for (m, v) in f.iter() {
            writeln!(w, "{},{},{:.6}", fi + 1, m, v)?;
        }
    }
    w.flush()?;
    let mut w = create_out(dir, "spanning.csv")?;
    writeln!(w, "strategy_id,adj_r2,spanned")?;
    for (id, s) in &store {
        if let Some(r) = spanning_r2(s, &fit, 30) {
            writeln!(w, "{},{:.4},{}", id, r.adj_r2, r.spanned)?;
        }
    }
    w.flush()?;

    let mut counts = BTreeMap::new();
    counts.insert("strategies".to_string(), store.len() as i64);
    counts.insert("spanning_series".to_string(), cap as i64);
    counts.insert("ppca_k".to_string(), fit.k as i64);
    counts.insert("ppca_converged".to_string(), fit.converged as i64);
    if let Some(ac) = median_lag1_autocorr(&series_only, 24) {
        counts.insert("median_lag1_autocorr_millis".to_string(), (ac * 1000.0).round() as i64);
    }
    write_manifest(
        dir,
        "report",
        &loaded.config_hash,
        &[
            "bin_table.csv",
            "theme_table.csv",
            "decay_regression.csv",
            "correlation_summary.csv",
            "explained_variance.csv",
            "factors.csv",
            "spanning.csv",
        ],
        counts,
    )
}

fn spec_index_of(strategy_id: &str) -> Option<usize> {
    strategy_id
        .strip_prefix('s')?
        .split('_')
        .next()?
        .parse()
        .ok()
}

/// spec index -> numerator label (form-qualified) from universe.csv.
fn load_universe_labels(dir: &Path) -> Result<BTreeMap<usize, String>> {
    let path = dir.join("universe.csv");
    if !path.exists() {
        return Err(Error::Config("universe.csv not found; run the mine command first".into()));
    }
    let mut rdr = csv::Reader::from_path(&path)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let idx: usize = rec
            .get(0)
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Parse { line, msg: "bad spec_id".into() })?;
        let form = rec.get(1).unwrap_or_default();
        let numerator = rec.get(2).unwrap_or_default();
        let label = if form == "scaled_diff" {
            format!("d[{numerator}]")
        } else {
            numerator.to_string()
        };
        out.insert(idx, label);
    }
    Ok(out)
}

pub fn run_simulate(loaded: &LoadedConfig) -> Result<()> {
    let config = &loaded.config;
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("simulate command needs a [simulate] section".into()))?;
    if sim.thresholds.is_empty() {
        return Err(Error::Config("simulate needs at least one threshold".into()));
    }
    let dir = &config.output_dir;
    let mut decay_rows = Vec::new();
    let mut w = create_out(dir, "proposition.csv")?;
    writeln!(
        w,
        "h,theory_decay_exact,mining_decay_exact,ordering_holds,mu_condition,dmu_condition,mc_within_3se"
    )?;
    for (hi, &h) in sim.thresholds.iter().enumerate() {
        let rule = SelectionRule::new(h)?;
        let report = crate::cochrane::verify_proposition(
            &sim.theory,
            &sim.mining,
            rule,
            sim.n_sims,
            config.seed.wrapping_add(hi as u64),
            false,
        )?;
        writeln!(
            w,
            "{:.4},{:.4},{:.4},{},{},{},{}",
            h,
            report.theory_enum.value(),
            report.mining_enum.value(),
            report.ordering_holds,
            report.conditions.mu_condition,
            report.conditions.dmu_condition,
            report.mc_within_3se
        )?;
        decay_rows.push((sim.theory.label.clone(), h, report.theory_mc));
        decay_rows.push((sim.mining.label.clone(), h, report.mining_mc));
    }
    w.flush()?;
    let mut w = create_out(dir, "decay_report.csv")?;
    crate::cochrane::write_decay_report(&decay_rows, &mut w)?;
    w.flush()?;
    let mut counts = BTreeMap::new();
    counts.insert("thresholds".to_string(), sim.thresholds.len() as i64);
    counts.insert("n_sims".to_string(), sim.n_sims as i64);
    write_manifest(
        dir,
        "simulate",
        &loaded.config_hash,
        &["proposition.csv", "decay_report.csv"],
        counts,
    )
}

/// Dispatch by command name; returns the process exit code.
pub fn run_command(command: &str, loaded: &LoadedConfig) -> Result<()> {
    with_pool(&loaded.config, || match command {
        "synth" => run_synth(loaded),
        "mine" => run_mine(loaded),
        "tickers" => run_tickers(loaded),
        "match" => run_match(loaded),
        "report" => run_report(loaded),
        "simulate" => run_simulate(loaded),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    })
}

/// 1 for configuration/validation problems, 2 for runtime failures.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::Config(_)
        | Error::RankDeficient(_)
        | Error::InsufficientData(_) => 1,
        Error::Io(_) | Error::Csv(_) => 2,
    }
}
