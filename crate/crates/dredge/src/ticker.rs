//! The uninformative-mining control universe: 80 ticker-letter portfolios
//! (first, second, and third letter, plus "no letter at that position"
//! buckets) and all 3,160 long-short bucket pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::panel::MonthlyPanel;
use crate::portfolio::ReturnSeries;
use crate::{Error, Month, Result};

pub const N_BUCKETS: usize = 80;

/// Canonical long-short pair of bucket ids with `long < short`; direction
/// beyond the canonical ordering is the strategy sign's job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickerPair {
    pub long: u8,
    pub short: u8,
}

impl TickerPair {
    pub fn new(a: u8, b: u8) -> Result<Self> {
        if a == b {
            return Err(Error::Validation(format!("degenerate ticker pair ({a}, {a})")));
        }
        if a as usize >= N_BUCKETS || b as usize >= N_BUCKETS {
            return Err(Error::Validation(format!("bucket id out of range: ({a}, {b})")));
        }
        Ok(TickerPair { long: a.min(b), short: a.max(b) })
    }
}

impl std::fmt::Display for TickerPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tk{:02}-{:02}", self.long, self.short)
    }
}

/// Human-readable bucket label, e.g. `first_A`, `second_none`.
pub fn bucket_label(id: usize) -> String {
    match id {
        0..=25 => format!("first_{}", (b'A' + id as u8) as char),
        26..=51 => format!("second_{}", (b'A' + (id - 26) as u8) as char),
        52 => "second_none".into(),
        53..=78 => format!("third_{}", (b'A' + (id - 53) as u8) as char),
        79 => "third_none".into(),
        _ => panic!("bucket id {id} out of range"),
    }
}

/// The three buckets a ticker belongs to (one per letter position), or
/// None when the ticker contains a non-alphabetic character.
pub fn buckets_of_ticker(ticker: &str) -> Option<[usize; 3]> {
    let bytes = ticker.as_bytes();
    if bytes.is_empty() || !bytes.iter().all(|b| b.is_ascii_alphabetic()) {
        return None;
    }
    let letter = |b: u8| (b.to_ascii_uppercase() - b'A') as usize;
    let first = letter(bytes[0]);
    let second = bytes.get(1).map_or(52, |&b| 26 + letter(b));
    let third = bytes.get(2).map_or(79, |&b| 53 + letter(b));
    Some([first, second, third])
}

/// Per-month bucket membership (firm slots), plus a count of firm-months
/// excluded for non-alphabetic tickers.
pub struct TickerBuckets {
    pub first: Month,
    pub n_months: usize,
    /// `members[month_slot][bucket]` -> firm slots, ascending.
    pub members: Vec<Vec<Vec<u32>>>,
    pub n_excluded_firm_months: usize,
}

pub fn build_ticker_buckets(panel: &MonthlyPanel) -> TickerBuckets {
    let first = panel.first_month();
    let n_months = (panel.last_month() - first + 1) as usize;
    let mut members = vec![vec![Vec::new(); N_BUCKETS]; n_months];
    let mut excluded = 0usize;
    for ms in 0..n_months {
        let month = first + ms as i32;
        for fs in 0..panel.n_firms() {
            let Some(ticker) = panel.ticker_at(month, fs) else { continue };
            match buckets_of_ticker(ticker) {
                Some(buckets) => {
                    for b in buckets {
                        members[ms][b].push(fs as u32);
                    }
                }
                None => excluded += 1,
            }
        }
    }
    TickerBuckets {
        first,
        n_months,
        members,
        n_excluded_firm_months: excluded,
    }
}

/// All C(80,2) = 3,160 canonical pairs in lexicographic order.
pub fn ticker_universe() -> Vec<TickerPair> {
    let mut out = Vec::with_capacity(N_BUCKETS * (N_BUCKETS - 1) / 2);
    for a in 0..N_BUCKETS as u8 {
        for b in (a + 1)..N_BUCKETS as u8 {
            out.push(TickerPair { long: a, short: b });
        }
    }
    out
}

/// Equal-weighted mean return of one bucket in one month, in bps, with
/// delisting returns compounded in. None when the bucket is empty.
fn bucket_return_bps(panel: &MonthlyPanel, buckets: &TickerBuckets, ms: usize, bucket: usize) -> Option<f64> {
    let month = buckets.first + ms as i32;
    let mut sum = 0.0;
    let mut n = 0usize;
    for &fs in &buckets.members[ms][bucket] {
        let fs = fs as usize;
        let ret = panel.ret_at(month, fs);
        if ret.is_nan() {
            continue;
        }
        let ret = match panel.dlret_at(month, fs) {
            Some(dl) => (1.0 + ret) * (1.0 + dl) - 1.0,
            None => ret,
        };
        sum += ret;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64 * 1e4)
    }
}

/// Long-short return series for one pair; months where either bucket is
/// empty are missing.
pub fn ticker_pair_returns(panel: &MonthlyPanel, buckets: &TickerBuckets, pair: TickerPair) -> ReturnSeries {
    ReturnSeries::from_values((0..buckets.n_months).filter_map(|ms| {
        let long = bucket_return_bps(panel, buckets, ms, pair.long as usize)?;
        let short = bucket_return_bps(panel, buckets, ms, pair.short as usize)?;
        Some((buckets.first + ms as i32, long - short))
    }))
}

/// Evaluate every pair in order, parallel across pairs.
pub fn mine_ticker_universe(panel: &MonthlyPanel, buckets: &TickerBuckets) -> Vec<(TickerPair, ReturnSeries)> {
    ticker_universe()
        .into_par_iter()
        .map(|pair| (pair, ticker_pair_returns(panel, buckets, pair)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{generate_synthetic_panel, SyntheticConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn universe_count_and_distinctness() {
        let u = ticker_universe();
        assert_eq!(u.len(), 3160);
        for p in &u {
            assert!(p.long < p.short);
        }
        let mut seen = std::collections::HashSet::new();
        assert!(u.iter().all(|p| seen.insert((p.long, p.short))));
    }

    #[test]
    fn single_letter_ticker_buckets() {
        assert_eq!(buckets_of_ticker("A"), Some([0, 52, 79]));
        assert_eq!(buckets_of_ticker("IBM"), Some([8, 26 + 1, 53 + 12]));
        assert_eq!(buckets_of_ticker("MSFT"), Some([12, 26 + 18, 53 + 5]));
        assert_eq!(buckets_of_ticker("BRK.B"), None);
        assert_eq!(buckets_of_ticker(""), None);
        assert_eq!(buckets_of_ticker("A1"), None);
    }

    #[test]
    fn bucket_labels_cover_80() {
        let labels: Vec<String> = (0..N_BUCKETS).map(bucket_label).collect();
        assert_eq!(labels.len(), 80);
        assert_eq!(labels[0], "first_A");
        assert_eq!(labels[52], "second_none");
        assert_eq!(labels[79], "third_none");
    }

    proptest! {
        #[test]
        fn membership_is_a_partition_per_position(ticker in "[A-Za-z]{1,4}") {
            let b = buckets_of_ticker(&ticker).unwrap();
            prop_assert!(b[0] < 26);
            prop_assert!((26..=52).contains(&b[1]));
            prop_assert!((53..=79).contains(&b[2]));
        }
    }

    fn test_panel() -> crate::panel::MonthlyPanel {
        let config = SyntheticConfig {
            n_firms: 120,
            n_years: 6,
            n_planted_signals: 0,
            seed: 11,
            ..SyntheticConfig::default()
        };
        generate_synthetic_panel(&config).unwrap().0
    }

    #[test]
    fn partition_within_each_position_group_on_panel() {
        let panel = test_panel();
        let buckets = build_ticker_buckets(&panel);
        for ms in 0..buckets.n_months {
            let month = buckets.first + ms as i32;
            let with_ticker = (0..panel.n_firms())
                .filter(|&fs| {
                    panel
                        .ticker_at(month, fs)
                        .map(|t| buckets_of_ticker(t).is_some())
                        .unwrap_or(false)
                })
                .count();
            let firsts: usize = (0..26).map(|b| buckets.members[ms][b].len()).sum();
            let seconds: usize = (26..=52).map(|b| buckets.members[ms][b].len()).sum();
            let thirds: usize = (53..=79).map(|b| buckets.members[ms][b].len()).sum();
            assert_eq!(firsts, with_ticker);
            assert_eq!(seconds, with_ticker);
            assert_eq!(thirds, with_ticker);
        }
    }

    #[test]
    fn swapped_pair_negates() {
        let panel = test_panel();
        let buckets = build_ticker_buckets(&panel);
        let ab = ticker_pair_returns(&panel, &buckets, TickerPair { long: 0, short: 30 });
        let ba_vals: Vec<(Month, f64)> = (0..buckets.n_months)
            .filter_map(|ms| {
                let long = bucket_return_bps(&panel, &buckets, ms, 30)?;
                let short = bucket_return_bps(&panel, &buckets, ms, 0)?;
                Some((buckets.first + ms as i32, long - short))
            })
            .collect();
        let ba = ReturnSeries::from_values(ba_vals);
        for (m, v) in ab.iter() {
            assert_relative_eq!(ba.get(m).unwrap(), -v, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_pair_rejected() {
        assert!(TickerPair::new(5, 5).is_err());
        assert!(TickerPair::new(0, 80).is_err());
        let p = TickerPair::new(30, 2).unwrap();
        assert_eq!((p.long, p.short), (2, 30));
    }
}
