//! Long-short decile strategy construction: June sorts, equal- and
//! value-weighted legs, delisting handling, and the mass-evaluation loop.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::panel::{AccountingPanel, IngredientCatalog, MonthlyPanel};
use crate::signal::{compute_signal_panel, SignalPanel, SignalSpec};
use crate::stats::{summary_stats, SampleWindow, SummaryStats};
use crate::ticker::TickerPair;
use crate::{FirmId, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weighting {
    EqualWeighted,
    ValueWeighted,
}

impl Weighting {
    pub fn parse(s: &str) -> crate::Result<Self> {
        match s {
            "ew" => Ok(Weighting::EqualWeighted),
            "vw" => Ok(Weighting::ValueWeighted),
            other => Err(crate::Error::Validation(format!("unknown weighting '{other}'"))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weighting::EqualWeighted => write!(f, "ew"),
            Weighting::ValueWeighted => write!(f, "vw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrategySource {
    Signal(SignalSpec),
    Ticker(TickerPair),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub source: StrategySource,
    pub weighting: Weighting,
    /// +1 or -1; -1 flips the long and short legs.
    pub sign: i8,
}

impl StrategySpec {
    pub fn signal(spec: SignalSpec, weighting: Weighting) -> Self {
        StrategySpec {
            source: StrategySource::Signal(spec),
            weighting,
            sign: 1,
        }
    }
}

/// Monthly long-short returns in bps. Missing months inside the coverage
/// are NaN; coverage is trimmed to the first and last present month.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    first: Month,
    vals: Vec<f64>,
}

impl ReturnSeries {
    pub fn from_values(values: impl IntoIterator<Item = (Month, f64)>) -> Self {
        let mut pairs: Vec<(Month, f64)> = values.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        match (pairs.first(), pairs.last()) {
            (Some(&(lo, _)), Some(&(hi, _))) => {
                let mut vals = vec![f64::NAN; (hi - lo) as usize + 1];
                for (m, v) in pairs {
                    vals[(m - lo) as usize] = v;
                }
                ReturnSeries { first: lo, vals }
            }
            _ => ReturnSeries {
                first: Month(0),
                vals: Vec::new(),
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vals.iter().all(|v| v.is_nan())
    }

    pub fn first_month(&self) -> Option<Month> {
        if self.vals.is_empty() {
            None
        } else {
            Some(self.first)
        }
    }

    pub fn last_month(&self) -> Option<Month> {
        if self.vals.is_empty() {
            None
        } else {
            Some(self.first + self.vals.len() as i32 - 1)
        }
    }

    pub fn get(&self, month: Month) -> Option<f64> {
        let d = month - self.first;
        if d < 0 || d as usize >= self.vals.len() {
            return None;
        }
        let v = self.vals[d as usize];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, f64)> + '_ {
        self.vals
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(move |(i, v)| (self.first + i as i32, *v))
    }

    /// Values in `window` (inclusive), present months only.
    pub fn window_values(&self, window: SampleWindow) -> Vec<f64> {
        self.iter()
            .filter(|(m, _)| *m >= window.start && *m <= window.end)
            .map(|(_, v)| v)
            .collect()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ReturnSeries {
        ReturnSeries {
            first: self.first,
            vals: self
                .vals
                .iter()
                .map(|v| if v.is_nan() { *v } else { f(*v) })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.iter().filter(|v| !v.is_nan()).count()
    }
}

/// Decile bucket (0-based) of sorted position `pos` among `n` items split
/// into `n_bins` groups whose sizes differ by at most one.
pub fn bucket_of_rank(pos: usize, n: usize, n_bins: usize) -> usize {
    debug_assert!(pos < n);
    pos * n_bins / n
}

#[derive(Debug, Clone)]
pub struct DecileAssignment {
    pub june_year: i32,
    /// (firm, decile 1..=10), sorted by firm id.
    pub deciles: Vec<(FirmId, u8)>,
}

/// Deciles by signal value; ties broken by firm id ascending. Returns None
/// when fewer than `min_firms` firms have values that June.
pub fn sort_deciles(
    panel: &SignalPanel,
    june_year: i32,
    min_firms: usize,
) -> Option<DecileAssignment> {
    let mut covered: Vec<usize> = (0..panel.firms().len())
        .filter(|&f| !panel.value(f, june_year).is_nan())
        .collect();
    if covered.len() < min_firms.max(10) {
        return None;
    }
    covered.sort_by(|&a, &b| {
        panel
            .value(a, june_year)
            .partial_cmp(&panel.value(b, june_year))
            .unwrap()
            .then(panel.firms()[a].cmp(&panel.firms()[b]))
    });
    let n = covered.len();
    let mut deciles: Vec<(FirmId, u8)> = covered
        .iter()
        .enumerate()
        .map(|(pos, &f)| (panel.firms()[f], bucket_of_rank(pos, n, 10) as u8 + 1))
        .collect();
    deciles.sort_by_key(|d| d.0);
    Some(DecileAssignment { june_year, deciles })
}

struct LegMember {
    firm_slot: usize,
    exited: bool,
}

fn leg_return(
    monthly: &MonthlyPanel,
    members: &mut [LegMember],
    month: Month,
    weighting: Weighting,
) -> Option<f64> {
    let mut wsum = 0.0;
    let mut rsum = 0.0;
    for mem in members.iter_mut() {
        if mem.exited {
            continue;
        }
        let ret = monthly.ret_at(month, mem.firm_slot);
        let dl = monthly.dlret_at(month, mem.firm_slot);
        let r = match (ret.is_nan(), dl) {
            (false, None) => ret,
            (false, Some(d)) => {
                mem.exited = true;
                (1.0 + ret) * (1.0 + d) - 1.0
            }
            (true, Some(d)) => {
                mem.exited = true;
                d
            }
            // missing mid-holding: dropped with renormalization
            (true, None) => continue,
        };
        let w = match weighting {
            Weighting::EqualWeighted => 1.0,
            Weighting::ValueWeighted => {
                let me = monthly.me_at(month - 1, mem.firm_slot);
                if me.is_nan() || me <= 0.0 {
                    continue;
                }
                me
            }
        };
        wsum += w;
        rsum += w * r;
    }
    if wsum > 0.0 {
        Some(rsum / wsum)
    } else {
        None
    }
}

/// Long decile 10, short decile 1, held July..June after each sort.
/// Returns are in bps per month.
pub fn long_short_returns(
    weighting: Weighting,
    sign: i8,
    assignments: &[DecileAssignment],
    monthly: &MonthlyPanel,
) -> ReturnSeries {
    let mut values = Vec::new();
    for a in assignments {
        let build = |target: u8| -> Vec<LegMember> {
            a.deciles
                .iter()
                .filter(|(_, d)| *d == target)
                .filter_map(|(firm, _)| monthly.firm_slot(*firm))
                .map(|firm_slot| LegMember {
                    firm_slot,
                    exited: false,
                })
                .collect()
        };
        let mut long = build(10);
        let mut short = build(1);
        let start = Month::from_ym(a.june_year, 7);
        for k in 0..12 {
            let month = start + k;
            let l = leg_return(monthly, &mut long, month, weighting);
            let s = leg_return(monthly, &mut short, month, weighting);
            if let (Some(l), Some(s)) = (l, s) {
                values.push((month, (l - s) * sign as f64 * 1e4));
            }
        }
    }
    ReturnSeries::from_values(values)
}

/// Everything needed to evaluate accounting-signal strategies.
pub struct MiningContext<'a> {
    pub monthly: &'a MonthlyPanel,
    pub accounting: &'a AccountingPanel,
    pub catalog: &'a IngredientCatalog,
    pub min_firms: usize,
}

impl<'a> MiningContext<'a> {
    pub fn new(
        monthly: &'a MonthlyPanel,
        accounting: &'a AccountingPanel,
        catalog: &'a IngredientCatalog,
    ) -> Self {
        MiningContext {
            monthly,
            accounting,
            catalog,
            min_firms: 50,
        }
    }

    pub fn assignments(&self, spec: &SignalSpec) -> Result<Vec<DecileAssignment>> {
        let panel = compute_signal_panel(spec, self.accounting, self.catalog)?;
        Ok(panel
            .june_years()
            .filter_map(|y| sort_deciles(&panel, y, self.min_firms))
            .collect())
    }

    pub fn evaluate(&self, spec: &SignalSpec, weighting: Weighting, sign: i8) -> Result<ReturnSeries> {
        let assignments = self.assignments(spec)?;
        Ok(long_short_returns(
            weighting,
            sign,
            &assignments,
            self.monthly,
        ))
    }
}

/// Evaluate the whole universe over a window. Output order equals input
/// order regardless of parallel scheduling; a spec with no computable
/// months gets `None` stats.
pub fn batch_mine(
    ctx: &MiningContext<'_>,
    universe: &[(SignalSpec, Weighting)],
    window: SampleWindow,
) -> Result<Vec<Option<SummaryStats>>> {
    universe
        .par_iter()
        .map(|(spec, weighting)| {
            let series = ctx.evaluate(spec, *weighting, 1)?;
            Ok(summary_stats(&series, window))
        })
        .collect()
}

/// Strategy-returns export: `spec_id,month,ret_bps`.
pub fn write_returns(spec_id: &str, series: &ReturnSeries, w: &mut impl Write) -> Result<()> {
    for (m, v) in series.iter() {
        writeln!(w, "{},{},{:.4}", spec_id, m, v)?;
    }
    Ok(())
}
