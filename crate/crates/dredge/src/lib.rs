//! Desk-scale engine for mining cross-sectional accounting signals, forming
//! long-short decile strategies, screening on in-sample t-statistics, and
//! quantifying out-of-sample decay with event-time averages, clustered
//! regressions, spanning diagnostics, and a selection-bias model.

pub mod cochrane;
pub mod event;
pub mod matcher;
pub mod panel;
pub mod pipeline;
pub mod portfolio;
pub mod signal;
pub mod spanning;
pub mod stats;
pub mod ticker;

use thiserror::Error;

/// Crate-wide error type. Validation failures carry enough context to name
/// the offending key, variable, or column.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("rank-deficient design: collinear columns {0:?}")]
    RankDeficient(Vec<String>),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Calendar month encoded as `year * 12 + (month - 1)` so that lags are
/// exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Month(pub i32);

impl Month {
    pub fn from_ym(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based month of year.
    pub fn month_of_year(self) -> u32 {
        (self.0.rem_euclid(12) + 1) as u32
    }

    pub fn is_june(self) -> bool {
        self.month_of_year() == 6
    }

    pub fn june_of(year: i32) -> Self {
        Month::from_ym(year, 6)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::Validation(format!("bad month '{s}', expected YYYY-MM")))?;
        let year: i32 = y
            .parse()
            .map_err(|_| Error::Validation(format!("bad year in month '{s}'")))?;
        let month: u32 = m
            .parse()
            .map_err(|_| Error::Validation(format!("bad month in '{s}'")))?;
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!("month out of range in '{s}'")));
        }
        Ok(Month::from_ym(year, month))
    }
}

impl std::fmt::Display for Month {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month_of_year())
    }
}

impl std::ops::Add<i32> for Month {
    type Output = Month;
    fn add(self, rhs: i32) -> Month {
        Month(self.0 + rhs)
    }
}

impl std::ops::Sub<i32> for Month {
    type Output = Month;
    fn sub(self, rhs: i32) -> Month {
        Month(self.0 - rhs)
    }
}

impl std::ops::Sub<Month> for Month {
    type Output = i32;
    fn sub(self, rhs: Month) -> i32 {
        self.0 - rhs.0
    }
}

/// Opaque firm key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct FirmId(pub u32);

impl std::fmt::Display for FirmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
