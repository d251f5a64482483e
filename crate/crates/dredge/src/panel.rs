//! Firm-month and firm-year input panels: CSV loading with validation,
//! dense indexing for the mining loop, and a seeded synthetic generator
//! that plants signals with known long-short premia.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::signal::{SignalForm, SignalSpec};
use crate::{Error, FirmId, Month, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyObservation {
    pub firm_id: FirmId,
    pub month: Month,
    /// Total return as a decimal fraction per month.
    pub total_return: f64,
    pub market_equity: Option<f64>,
    pub delisting_return: Option<f64>,
    pub ticker: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccountingObservation {
    pub firm_id: FirmId,
    pub fiscal_year_end: Month,
    pub variable_id: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub variable_id: String,
    pub name: String,
    pub unit: String,
}

/// The ingredient catalog. Order of entries is the canonical variable order
/// used for universe enumeration.
#[derive(Debug, Clone, Default)]
pub struct IngredientCatalog {
    entries: Vec<CatalogEntry>,
    index: HashMap<String, usize>,
}

impl IngredientCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.variable_id.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate catalog variable '{}'",
                    e.variable_id
                )));
            }
        }
        Ok(IngredientCatalog { entries, index })
    }

    pub fn from_ids<S: Into<String>>(ids: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(
            ids.into_iter()
                .map(|id| {
                    let id = id.into();
                    CatalogEntry {
                        name: id.clone(),
                        unit: "raw".to_string(),
                        variable_id: id,
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, variable_id: &str) -> bool {
        self.index.contains_key(variable_id)
    }

    pub fn position(&self, variable_id: &str) -> Option<usize> {
        self.index.get(variable_id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.variable_id.as_str())
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }
}

/// Loaded firm-month panel, immutable after construction. Rows are sorted
/// by (firm_id, month) and a dense (month, firm) index is prebuilt for the
/// mining loop.
#[derive(Debug, Clone)]
pub struct MonthlyPanel {
    rows: Vec<MonthlyObservation>,
    firms: Vec<FirmId>,
    firm_slot: HashMap<FirmId, usize>,
    first_month: Month,
    n_months: usize,
    /// ret[(month_slot * n_firms) + firm_slot], NaN = absent.
    ret: Vec<f64>,
    /// market equity, NaN = absent.
    me: Vec<f64>,
    /// delisting returns are sparse.
    dlret: HashMap<(usize, usize), f64>,
    /// ticker per (month_slot, firm_slot); shared across rows.
    tickers: HashMap<(usize, usize), String>,
}

impl MonthlyPanel {
    pub fn new(mut rows: Vec<MonthlyObservation>) -> Result<Self> {
        rows.sort_by_key(|r| (r.firm_id, r.month));
        for w in rows.windows(2) {
            if w[0].firm_id == w[1].firm_id && w[0].month == w[1].month {
                return Err(Error::Validation(format!(
                    "duplicate (firm_id, month) key ({}, {})",
                    w[0].firm_id, w[0].month
                )));
            }
        }
        for r in &rows {
            if r.total_return <= -1.0 {
                return Err(Error::Validation(format!(
                    "total_return {} <= -1 for firm {} month {}",
                    r.total_return, r.firm_id, r.month
                )));
            }
            if let Some(me) = r.market_equity {
                if me <= 0.0 || !me.is_finite() {
                    return Err(Error::Validation(format!(
                        "market_equity {} must be positive for firm {} month {}",
                        me, r.firm_id, r.month
                    )));
                }
            }
        }
        let mut firms: Vec<FirmId> = rows.iter().map(|r| r.firm_id).collect();
        firms.dedup();
        let firm_slot: HashMap<FirmId, usize> =
            firms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let (first_month, n_months) = if rows.is_empty() {
            (Month(0), 0)
        } else {
            let lo = rows.iter().map(|r| r.month).min().unwrap();
            let hi = rows.iter().map(|r| r.month).max().unwrap();
            (lo, (hi - lo) as usize + 1)
        };
        let n = firms.len() * n_months;
        let mut ret = vec![f64::NAN; n];
        let mut me = vec![f64::NAN; n];
        let mut dlret = HashMap::new();
        let mut tickers = HashMap::new();
        for r in &rows {
            let ms = (r.month - first_month) as usize;
            let fs = firm_slot[&r.firm_id];
            let idx = ms * firms.len() + fs;
            ret[idx] = r.total_return;
            if let Some(v) = r.market_equity {
                me[idx] = v;
            }
            if let Some(v) = r.delisting_return {
                dlret.insert((ms, fs), v);
            }
            if let Some(t) = &r.ticker {
                tickers.insert((ms, fs), t.clone());
            }
        }
        Ok(MonthlyPanel {
            rows,
            firms,
            firm_slot,
            first_month,
            n_months,
            ret,
            me,
            dlret,
            tickers,
        })
    }

    pub fn rows(&self) -> &[MonthlyObservation] {
        &self.rows
    }

    pub fn firms(&self) -> &[FirmId] {
        &self.firms
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn firm_slot(&self, firm: FirmId) -> Option<usize> {
        self.firm_slot.get(&firm).copied()
    }

    pub fn first_month(&self) -> Month {
        self.first_month
    }

    pub fn last_month(&self) -> Month {
        self.first_month + self.n_months.saturating_sub(1) as i32
    }

    fn slot(&self, month: Month) -> Option<usize> {
        let d = month - self.first_month;
        if d < 0 || d as usize >= self.n_months {
            None
        } else {
            Some(d as usize)
        }
    }

    /// Return of `firm_slot` in `month`, NaN when absent.
    pub fn ret_at(&self, month: Month, firm_slot: usize) -> f64 {
        match self.slot(month) {
            Some(ms) => self.ret[ms * self.firms.len() + firm_slot],
            None => f64::NAN,
        }
    }

    pub fn me_at(&self, month: Month, firm_slot: usize) -> f64 {
        match self.slot(month) {
            Some(ms) => self.me[ms * self.firms.len() + firm_slot],
            None => f64::NAN,
        }
    }

    pub fn dlret_at(&self, month: Month, firm_slot: usize) -> Option<f64> {
        let ms = self.slot(month)?;
        self.dlret.get(&(ms, firm_slot)).copied()
    }

    pub fn ticker_at(&self, month: Month, firm_slot: usize) -> Option<&str> {
        let ms = self.slot(month)?;
        self.tickers.get(&(ms, firm_slot)).map(|s| s.as_str())
    }

    pub fn has_row(&self, month: Month, firm_slot: usize) -> bool {
        !self.ret_at(month, firm_slot).is_nan() || self.dlret_at(month, firm_slot).is_some()
    }
}

/// Loaded firm-year accounting panel. At most one fiscal year end per firm
/// per calendar year; values indexed by (firm, calendar year, variable).
#[derive(Debug, Clone)]
pub struct AccountingPanel {
    rows: Vec<AccountingObservation>,
    firms: Vec<FirmId>,
    firm_slot: HashMap<FirmId, usize>,
    first_year: i32,
    n_years: usize,
    n_vars: usize,
    /// fye_month[(firm_slot * n_years) + year_slot]: month-of-year 1..12, 0 = absent.
    fye_month: Vec<u8>,
    /// values[((firm_slot * n_years) + year_slot) * n_vars + var], NaN = absent.
    values: Vec<f64>,
}

impl AccountingPanel {
    pub fn new(mut rows: Vec<AccountingObservation>, catalog: &IngredientCatalog) -> Result<Self> {
        rows.sort_by(|a, b| {
            (a.firm_id, a.fiscal_year_end, a.variable_id.as_str())
                .cmp(&(b.firm_id, b.fiscal_year_end, b.variable_id.as_str()))
        });
        for w in rows.windows(2) {
            if w[0].firm_id == w[1].firm_id
                && w[0].fiscal_year_end == w[1].fiscal_year_end
                && w[0].variable_id == w[1].variable_id
            {
                return Err(Error::Validation(format!(
                    "duplicate (firm_id, fye, variable) key ({}, {}, {})",
                    w[0].firm_id, w[0].fiscal_year_end, w[0].variable_id
                )));
            }
            if w[0].firm_id == w[1].firm_id
                && w[0].fiscal_year_end != w[1].fiscal_year_end
                && w[0].fiscal_year_end.year() == w[1].fiscal_year_end.year()
            {
                return Err(Error::Validation(format!(
                    "firm {} has two fiscal year ends in {}",
                    w[0].firm_id,
                    w[0].fiscal_year_end.year()
                )));
            }
        }
        for r in &rows {
            if !catalog.contains(&r.variable_id) {
                return Err(Error::Validation(format!(
                    "unknown variable '{}' not in catalog",
                    r.variable_id
                )));
            }
        }
        let mut firms: Vec<FirmId> = rows.iter().map(|r| r.firm_id).collect();
        firms.sort();
        firms.dedup();
        let firm_slot: HashMap<FirmId, usize> =
            firms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let (first_year, n_years) = if rows.is_empty() {
            (0, 0)
        } else {
            let lo = rows.iter().map(|r| r.fiscal_year_end.year()).min().unwrap();
            let hi = rows.iter().map(|r| r.fiscal_year_end.year()).max().unwrap();
            (lo, (hi - lo) as usize + 1)
        };
        let n_vars = catalog.len();
        let mut fye_month = vec![0u8; firms.len() * n_years];
        let mut values = vec![f64::NAN; firms.len() * n_years * n_vars];
        for r in &rows {
            let fs = firm_slot[&r.firm_id];
            let ys = (r.fiscal_year_end.year() - first_year) as usize;
            let cell = fs * n_years + ys;
            fye_month[cell] = r.fiscal_year_end.month_of_year() as u8;
            let var = catalog.position(&r.variable_id).unwrap();
            values[cell * n_vars + var] = r.value;
        }
        Ok(AccountingPanel {
            rows,
            firms,
            firm_slot,
            first_year,
            n_years,
            n_vars,
            fye_month,
            values,
        })
    }

    pub fn rows(&self) -> &[AccountingObservation] {
        &self.rows
    }

    pub fn firms(&self) -> &[FirmId] {
        &self.firms
    }

    pub fn firm_slot(&self, firm: FirmId) -> Option<usize> {
        self.firm_slot.get(&firm).copied()
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    /// Fiscal year end of `firm_slot` in calendar `year`, if any.
    pub fn fye_of(&self, firm_slot: usize, year: i32) -> Option<Month> {
        let ys = year - self.first_year;
        if ys < 0 || ys as usize >= self.n_years {
            return None;
        }
        let m = self.fye_month[firm_slot * self.n_years + ys as usize];
        if m == 0 {
            None
        } else {
            Some(Month::from_ym(year, m as u32))
        }
    }

    /// Value of catalog variable `var` at the FYE in calendar `year`,
    /// NaN when absent.
    pub fn value_at(&self, firm_slot: usize, year: i32, var: usize) -> f64 {
        let ys = year - self.first_year;
        if ys < 0 || ys as usize >= self.n_years {
            return f64::NAN;
        }
        self.values[(firm_slot * self.n_years + ys as usize) * self.n_vars + var]
    }
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} '{field}'"),
    })
}

fn expect_header(actual: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = actual.iter().map(|s| s.trim()).collect();
    if got != expected {
        return Err(Error::Validation(format!(
            "bad header {:?}, expected {:?}",
            got, expected
        )));
    }
    Ok(())
}

/// Load a monthly CSV: `firm_id,month,ret,me,dlret,ticker`, month as
/// `YYYY-MM`, empty field = absent.
pub fn load_monthly_panel(path: impl AsRef<Path>) -> Result<MonthlyPanel> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    expect_header(
        rdr.headers()?,
        &["firm_id", "month", "ret", "me", "dlret", "ticker"],
    )?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        if rec.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 fields, got {}", rec.len()),
            });
        }
        let firm_id = FirmId(rec[0].trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad firm_id '{}'", &rec[0]),
        })?);
        let month = Month::parse(rec[1].trim()).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let total_return = parse_f64(&rec[2], line, "ret")?;
        let market_equity = if rec[3].trim().is_empty() {
            None
        } else {
            Some(parse_f64(&rec[3], line, "me")?)
        };
        let delisting_return = if rec[4].trim().is_empty() {
            None
        } else {
            Some(parse_f64(&rec[4], line, "dlret")?)
        };
        let ticker = if rec[5].trim().is_empty() {
            None
        } else {
            Some(rec[5].trim().to_string())
        };
        rows.push(MonthlyObservation {
            firm_id,
            month,
            total_return,
            market_equity,
            delisting_return,
            ticker,
        });
    }
    MonthlyPanel::new(rows)
}

/// Load an accounting CSV: `firm_id,fye,variable,value`.
pub fn load_accounting_panel(
    path: impl AsRef<Path>,
    catalog: &IngredientCatalog,
) -> Result<AccountingPanel> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    expect_header(rdr.headers()?, &["firm_id", "fye", "variable", "value"])?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields, got {}", rec.len()),
            });
        }
        let firm_id = FirmId(rec[0].trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad firm_id '{}'", &rec[0]),
        })?);
        let fiscal_year_end = Month::parse(rec[1].trim()).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let variable_id = rec[2].trim().to_string();
        let value = parse_f64(&rec[3], line, "value")?;
        rows.push(AccountingObservation {
            firm_id,
            fiscal_year_end,
            variable_id,
            value,
        });
    }
    AccountingPanel::new(rows, catalog)
}

/// Load a catalog CSV: `variable,name,unit`.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<IngredientCatalog> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    expect_header(rdr.headers()?, &["variable", "name", "unit"])?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        entries.push(CatalogEntry {
            variable_id: rec[0].trim().to_string(),
            name: rec[1].trim().to_string(),
            unit: rec[2].trim().to_string(),
        });
    }
    IngredientCatalog::new(entries)
}

pub fn write_monthly_panel(panel: &MonthlyPanel, w: &mut impl Write) -> Result<()> {
    writeln!(w, "firm_id,month,ret,me,dlret,ticker")?;
    for r in panel.rows() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.firm_id,
            r.month,
            r.total_return,
            r.market_equity.map(|v| v.to_string()).unwrap_or_default(),
            r.delisting_return
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.ticker.as_deref().unwrap_or(""),
        )?;
    }
    Ok(())
}

pub fn write_accounting_panel(panel: &AccountingPanel, w: &mut impl Write) -> Result<()> {
    writeln!(w, "firm_id,fye,variable,value")?;
    for r in panel.rows() {
        writeln!(
            w,
            "{},{},{},{}",
            r.firm_id, r.fiscal_year_end, r.variable_id, r.value
        )?;
    }
    Ok(())
}

pub fn write_catalog(catalog: &IngredientCatalog, w: &mut impl Write) -> Result<()> {
    writeln!(w, "variable,name,unit")?;
    for e in catalog.entries() {
        writeln!(w, "{},{},{}", e.variable_id, e.name, e.unit)?;
    }
    Ok(())
}

/// Configuration of the synthetic panel generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_firms: u32,
    pub n_years: u32,
    pub n_planted_signals: u32,
    /// True decile-10-minus-decile-1 long-short spread of each planted
    /// signal, in bps per month.
    pub planted_premium_bps: f64,
    /// Firm-level idiosyncratic volatility, bps per month.
    pub noise_vol_bps: f64,
    pub seed: u64,
    /// Catalog size; the first `n_denominators` variables are generated
    /// strictly positive so the denominator screen recovers them exactly.
    #[serde(default = "default_n_ingredients")]
    pub n_ingredients: u32,
    #[serde(default = "default_n_denominators")]
    pub n_denominators: u32,
    #[serde(default = "default_start_year")]
    pub start_year: i32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_firms: 200,
            n_years: 10,
            n_planted_signals: 0,
            planted_premium_bps: 100.0,
            noise_vol_bps: 500.0,
            seed: 0,
            n_ingredients: default_n_ingredients(),
            n_denominators: default_n_denominators(),
            start_year: default_start_year(),
        }
    }
}

fn default_n_ingredients() -> u32 {
    60
}
fn default_n_denominators() -> u32 {
    20
}
fn default_start_year() -> i32 {
    1960
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.n_firms == 0 || self.n_years == 0 || self.n_ingredients == 0 {
            return Err(Error::Config("counts must be positive".into()));
        }
        if self.n_denominators == 0 || self.n_denominators > self.n_ingredients {
            return Err(Error::Config(
                "n_denominators must be in 1..=n_ingredients".into(),
            ));
        }
        if self.n_planted_signals > self.n_ingredients - self.n_denominators {
            return Err(Error::Config(
                "not enough non-denominator ingredients to host planted signals".into(),
            ));
        }
        if self.noise_vol_bps < 0.0 {
            return Err(Error::Config("noise_vol_bps must be >= 0".into()));
        }
        Ok(())
    }
}

/// Ground truth of a synthetic panel: which specs were planted and their
/// true long-short premia.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GroundTruth {
    pub planted: Vec<(SignalSpec, f64)>,
}

pub fn synthetic_variable_id(i: u32) -> String {
    format!("v{:03}", i)
}

/// Generate a synthetic (monthly, accounting) panel pair with planted
/// signals of known premium.
///
/// Returns are `a * (decile rank - 5.5)` summed over planted signals plus
/// Gaussian noise, with `a = premium / 9` so the expected decile-10 minus
/// decile-1 spread equals the configured premium exactly. Decile ranks use
/// the same rank-then-bucket rule as the portfolio engine, on the signal
/// value that the engine will see at each June.
pub fn generate_synthetic_panel(
    config: &SyntheticConfig,
) -> Result<(MonthlyPanel, AccountingPanel, IngredientCatalog, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_firms = config.n_firms as usize;
    let n_years = config.n_years as usize;
    let n_vars = config.n_ingredients as usize;
    let n_den = config.n_denominators as usize;

    let catalog =
        IngredientCatalog::from_ids((0..config.n_ingredients).map(synthetic_variable_id))?;

    // Planted numerators live right after the denominator block. Their
    // ratio against the first denominator is the planted sorting variable.
    let planted_specs: Vec<SignalSpec> = (0..config.n_planted_signals as usize)
        .map(|k| SignalSpec {
            form: SignalForm::Ratio,
            numerator_id: synthetic_variable_id((n_den + k) as u32),
            denominator_id: synthetic_variable_id(0),
        })
        .collect();

    let std_norm = Normal::new(0.0, 1.0).unwrap();

    // Accounting values, all firms with December fiscal year ends.
    // Denominator variables are strictly positive; everything else is
    // negative for well over 75% of firms so the positivity screen
    // recovers exactly the denominator block.
    let mut acct_rows = Vec::with_capacity(n_firms * n_years * n_vars);
    // planted_score[k][year][firm]
    let mut planted_score =
        vec![vec![vec![0.0f64; n_firms]; n_years]; config.n_planted_signals as usize];
    for f in 0..n_firms {
        let firm_id = FirmId(f as u32 + 1);
        for y in 0..n_years {
            let year = config.start_year + y as i32;
            let fye = Month::from_ym(year, 12);
            let mut den0 = 0.0;
            for v in 0..n_vars {
                let value = if v < n_den {
                    // positive, lognormal-ish scale
                    let x: f64 = std_norm.sample(&mut rng);
                    let val = (0.5 * x).exp() * 100.0;
                    if v == 0 {
                        den0 = val;
                    }
                    val
                } else if v < n_den + config.n_planted_signals as usize {
                    // planted numerator: score shifted negative so the
                    // variable itself fails the positivity screen, but the
                    // cross-sectional ranking is driven by the score.
                    let k = v - n_den;
                    let z: f64 = std_norm.sample(&mut rng) - 3.0;
                    planted_score[k][y][f] = z;
                    z * den0
                } else {
                    std_norm.sample(&mut rng) - 1.0
                };
                acct_rows.push(AccountingObservation {
                    firm_id,
                    fiscal_year_end: fye,
                    variable_id: synthetic_variable_id(v as u32),
                    value,
                });
            }
        }
    }

    // Decile rank per planted signal and sort year, replicating the
    // engine's rank-then-bucket rule with firm-id tie-break.
    // Sort formed at June of year y+1 uses the FYE of year y.
    let mut decile = vec![vec![vec![0u8; n_firms]; n_years]; config.n_planted_signals as usize];
    for k in 0..config.n_planted_signals as usize {
        for y in 0..n_years {
            let mut order: Vec<usize> = (0..n_firms).collect();
            order.sort_by(|&a, &b| {
                planted_score[k][y][a]
                    .partial_cmp(&planted_score[k][y][b])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            for (pos, &f) in order.iter().enumerate() {
                decile[k][y][f] = crate::portfolio::bucket_of_rank(pos, n_firms, 10) as u8 + 1;
            }
        }
    }

    // Monthly returns. Month coverage: Jan start_year .. Dec of last year.
    let premium_frac = config.planted_premium_bps / 9.0 / 1e4;
    let noise_frac = config.noise_vol_bps / 1e4;
    let letters: Vec<char> = ('A'..='Z').collect();
    let mut monthly_rows = Vec::with_capacity(n_firms * n_years * 12);
    // per-firm persistent market equity and ticker
    let mut firm_me = Vec::with_capacity(n_firms);
    let mut firm_ticker = Vec::with_capacity(n_firms);
    for _ in 0..n_firms {
        firm_me.push((std_norm.sample(&mut rng)).exp() * 500.0);
        let len = rng.gen_range(1..=4usize);
        let t: String = (0..len).map(|_| letters[rng.gen_range(0..26)]).collect();
        firm_ticker.push(t);
    }
    for f in 0..n_firms {
        let firm_id = FirmId(f as u32 + 1);
        for y in 0..n_years {
            let year = config.start_year + y as i32;
            for m in 1..=12u32 {
                let month = Month::from_ym(year, m);
                // sort in effect: June of sort year s covers Jul s .. Jun s+1,
                // using scores from FYE of year s-1.
                let sort_year = if m >= 7 { year } else { year - 1 };
                let score_year = sort_year - 1 - config.start_year;
                let mut mu = 0.0;
                if score_year >= 0 {
                    let sy = score_year as usize;
                    for k in 0..config.n_planted_signals as usize {
                        mu += premium_frac * (decile[k][sy][f] as f64 - 5.5);
                    }
                }
                let ret = mu + noise_frac * std_norm.sample(&mut rng);
                monthly_rows.push(MonthlyObservation {
                    firm_id,
                    month,
                    total_return: ret.max(-0.99),
                    market_equity: Some(firm_me[f]),
                    delisting_return: None,
                    ticker: Some(firm_ticker[f].clone()),
                });
            }
        }
    }

    let monthly = MonthlyPanel::new(monthly_rows)?;
    let accounting = AccountingPanel::new(acct_rows, &catalog)?;
    let truth = GroundTruth {
        planted: planted_specs
            .into_iter()
            .map(|s| (s, config.planted_premium_bps))
            .collect(),
    };
    Ok((monthly, accounting, catalog, truth))
}
