//! Event-time aggregation: re-index strategy returns so offset 0 is the
//! last in-sample month, average across strategies per offset, and smooth
//! with a trailing mean.

use std::collections::BTreeMap;
use std::io::Write;

use crate::portfolio::ReturnSeries;
use crate::{Error, Month, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EventSeries {
    /// Offset (months relative to sample end; <= 0 is in-sample) -> mean
    /// return in bps across contributing strategies.
    pub values: BTreeMap<i32, f64>,
    pub counts: BTreeMap<i32, usize>,
}

impl EventSeries {
    pub fn value(&self, offset: i32) -> Option<f64> {
        self.values.get(&offset).copied()
    }

    pub fn count(&self, offset: i32) -> usize {
        self.counts.get(&offset).copied().unwrap_or(0)
    }

    pub fn offsets(&self) -> impl Iterator<Item = i32> + '_ {
        self.values.keys().copied()
    }

    /// Mean of the per-offset means over strictly positive offsets.
    pub fn post_sample_mean(&self) -> Option<f64> {
        let vals: Vec<f64> = self
            .values
            .iter()
            .filter(|(o, _)| **o > 0)
            .map(|(_, v)| *v)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    /// Every strategy-month contributes equally.
    Pooled,
    /// Average within each target group first, then across groups.
    PerTargetThenAcross,
}

/// One strategy entering the event-time average: its returns, its
/// sample-end month (offset 0), and a group key for the per-target mode.
pub struct EventInput<'a> {
    pub series: &'a ReturnSeries,
    pub sample_end: Month,
    pub group: usize,
}

/// Cross-strategy mean return at each offset from the sample end.
pub fn align_to_sample_end(inputs: &[EventInput], mode: AlignMode) -> Result<EventSeries> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("no strategies to align".into()));
    }
    match mode {
        AlignMode::Pooled => {
            let mut sums: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
            for inp in inputs {
                for (m, v) in inp.series.iter() {
                    let e = sums.entry(m - inp.sample_end).or_insert((0.0, 0));
                    e.0 += v;
                    e.1 += 1;
                }
            }
            Ok(finish(sums))
        }
        AlignMode::PerTargetThenAcross => {
            // group -> offset -> (sum, count)
            let mut groups: BTreeMap<usize, BTreeMap<i32, (f64, usize)>> = BTreeMap::new();
            for inp in inputs {
                let g = groups.entry(inp.group).or_default();
                for (m, v) in inp.series.iter() {
                    let e = g.entry(m - inp.sample_end).or_insert((0.0, 0));
                    e.0 += v;
                    e.1 += 1;
                }
            }
            let mut sums: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
            for g in groups.values() {
                for (&off, &(s, c)) in g {
                    let e = sums.entry(off).or_insert((0.0, 0));
                    e.0 += s / c as f64;
                    e.1 += 1;
                }
            }
            Ok(finish(sums))
        }
    }
}

fn finish(sums: BTreeMap<i32, (f64, usize)>) -> EventSeries {
    let mut values = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (off, (s, c)) in sums {
        values.insert(off, s / c as f64);
        counts.insert(off, c);
    }
    EventSeries { values, counts }
}

/// Trailing mean of the per-offset means over the preceding
/// `window_months` offsets, requiring at least `min_coverage` of them
/// present. The count recorded is the number of covered offsets.
pub fn trailing_mean(events: &EventSeries, window_months: usize, min_coverage: usize) -> EventSeries {
    assert!(window_months >= 1, "window must be at least one month");
    let mut values = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for &off in events.values.keys() {
        let lo = off - (window_months as i32 - 1);
        let window: Vec<f64> = (lo..=off)
            .filter_map(|o| events.values.get(&o).copied())
            .collect();
        if window.len() >= min_coverage.max(1) {
            values.insert(off, window.iter().sum::<f64>() / window.len() as f64);
            counts.insert(off, window.len());
        }
    }
    EventSeries { values, counts }
}

/// CSV rows `offset_months,mean_ret_bps,n_strategies,trailing60_bps`; the
/// trailing column is blank where coverage is insufficient.
pub fn write_event_series(
    events: &EventSeries,
    trailing: &EventSeries,
    w: &mut impl Write,
) -> Result<()> {
    writeln!(w, "offset_months,mean_ret_bps,n_strategies,trailing60_bps")?;
    for (&off, &v) in &events.values {
        writeln!(
            w,
            "{},{:.4},{},{}",
            off,
            v,
            events.count(off),
            trailing.value(off).map(|t| format!("{t:.4}")).unwrap_or_default()
        )?;
    }
    Ok(())
}
