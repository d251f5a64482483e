//! Signal universe enumeration and firm-level signal evaluation with the
//! 6-month lag and June alignment.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::panel::{AccountingPanel, IngredientCatalog, MonthlyPanel};
use crate::{Error, FirmId, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalForm {
    /// X / Y at the fiscal year end.
    Ratio,
    /// (X - lag X) / lag Y, with the lag exactly one fiscal year.
    ScaledDiff,
}

impl std::fmt::Display for SignalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignalForm::Ratio => write!(f, "ratio"),
            SignalForm::ScaledDiff => write!(f, "scaled_diff"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalSpec {
    pub form: SignalForm,
    pub numerator_id: String,
    pub denominator_id: String,
}

impl std::fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.form {
            SignalForm::Ratio => write!(f, "{}/{}", self.numerator_id, self.denominator_id),
            SignalForm::ScaledDiff => {
                write!(f, "d[{}]/lag[{}]", self.numerator_id, self.denominator_id)
            }
        }
    }
}

/// Denominator eligibility screen: strictly positive for at least
/// `min_positive_frac` of base-year firms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenominatorScreen {
    pub base_year: i32,
    pub min_positive_frac: f64,
    /// Require a monthly record in the base year as well.
    pub requires_crsp_match: bool,
}

impl Default for DenominatorScreen {
    fn default() -> Self {
        DenominatorScreen {
            base_year: 1963,
            min_positive_frac: 0.25,
            requires_crsp_match: true,
        }
    }
}

/// Ids whose base-year value is strictly positive for at least
/// `min_positive_frac` of qualifying firms, in catalog order.
pub fn screen_denominators(
    accounting: &AccountingPanel,
    monthly: &MonthlyPanel,
    catalog: &IngredientCatalog,
    screen: &DenominatorScreen,
) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&screen.min_positive_frac) || screen.min_positive_frac == 0.0 {
        return Err(Error::Config("min_positive_frac must be in (0, 1]".into()));
    }
    // qualifying firms: accounting record in base_year, and when flagged,
    // any monthly record in the base year
    let jan = Month::from_ym(screen.base_year, 1);
    let mut firms: Vec<usize> = Vec::new();
    for (slot, firm) in accounting.firms().iter().enumerate() {
        if accounting.fye_of(slot, screen.base_year).is_none() {
            continue;
        }
        if screen.requires_crsp_match {
            let Some(ms) = monthly.firm_slot(*firm) else {
                continue;
            };
            let any = (0..12).any(|k| monthly.has_row(jan + k, ms));
            if !any {
                continue;
            }
        }
        firms.push(slot);
    }
    if firms.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no firms with base-year {} data",
            screen.base_year
        )));
    }
    let n = firms.len() as f64;
    let mut out = Vec::new();
    for (var, id) in catalog.ids().enumerate() {
        let pos = firms
            .iter()
            .filter(|&&fs| accounting.value_at(fs, screen.base_year, var) > 0.0)
            .count() as f64;
        if pos / n >= screen.min_positive_frac {
            out.push(id.to_string());
        }
    }
    Ok(out)
}

/// Enumerate all Ratio and ScaledDiff specs, dropping self-ratios and one
/// member of each unordered ratio pair among valid denominators. The
/// canonical survivor of a pair is the one whose numerator comes first in
/// the catalog.
pub fn enumerate_signal_universe(
    catalog: &IngredientCatalog,
    denominators: &[String],
) -> Result<Vec<SignalSpec>> {
    let mut den_pos = Vec::with_capacity(denominators.len());
    for d in denominators {
        match catalog.position(d) {
            Some(p) => den_pos.push(p),
            None => {
                return Err(Error::Validation(format!(
                    "denominator '{d}' not in catalog"
                )))
            }
        }
    }
    let is_denominator = |p: usize| den_pos.contains(&p);
    let mut specs = Vec::with_capacity(catalog.len() * denominators.len() * 2);
    for (num_pos, num) in catalog.ids().enumerate() {
        for (di, den) in denominators.iter().enumerate() {
            let den_p = den_pos[di];
            for form in [SignalForm::Ratio, SignalForm::ScaledDiff] {
                if form == SignalForm::Ratio && is_denominator(num_pos) {
                    // self-ratio X/X, and the later member of {X/Y, Y/X}
                    if num_pos >= den_p {
                        continue;
                    }
                }
                specs.push(SignalSpec {
                    form,
                    numerator_id: num.to_string(),
                    denominator_id: den.clone(),
                });
            }
        }
    }
    Ok(specs)
}

/// Firm-June signal values for one spec. Values are aligned on the firms
/// of the accounting panel; NaN = no value.
#[derive(Debug, Clone)]
pub struct SignalPanel {
    pub spec: SignalSpec,
    firms: Vec<FirmId>,
    first_june_year: i32,
    n_june_years: usize,
    values: Vec<f64>,
}

impl SignalPanel {
    pub fn firms(&self) -> &[FirmId] {
        &self.firms
    }

    pub fn june_years(&self) -> impl Iterator<Item = i32> {
        let f = self.first_june_year;
        (0..self.n_june_years as i32).map(move |k| f + k)
    }

    /// Signal value for `firm_slot` (accounting panel slot) at June of
    /// `year`, NaN when absent.
    pub fn value(&self, firm_slot: usize, year: i32) -> f64 {
        let ys = year - self.first_june_year;
        if ys < 0 || ys as usize >= self.n_june_years {
            return f64::NAN;
        }
        self.values[ys as usize * self.firms.len() + firm_slot]
    }

    pub fn n_covered(&self, year: i32) -> usize {
        (0..self.firms.len())
            .filter(|&f| !self.value(f, year).is_nan())
            .count()
    }
}

// A fiscal value is usable from FYE + 6 months and stale 18 months after
// the June it is matched to, so June of year J can use the FYE in J-1
// (any month) or, failing that, a December FYE in J-2.
fn spec_value_at(
    accounting: &AccountingPanel,
    firm_slot: usize,
    fye_year: i32,
    form: SignalForm,
    num_var: usize,
    den_var: usize,
) -> f64 {
    let Some(fye) = accounting.fye_of(firm_slot, fye_year) else {
        return f64::NAN;
    };
    match form {
        SignalForm::Ratio => {
            let x = accounting.value_at(firm_slot, fye_year, num_var);
            let y = accounting.value_at(firm_slot, fye_year, den_var);
            if x.is_nan() || y.is_nan() || y == 0.0 {
                return f64::NAN;
            }
            let v = x / y;
            if v.is_finite() {
                v
            } else {
                f64::NAN
            }
        }
        SignalForm::ScaledDiff => {
            // prior FYE must be exactly 12 months earlier
            let Some(prev) = accounting.fye_of(firm_slot, fye_year - 1) else {
                return f64::NAN;
            };
            if fye - prev != 12 {
                return f64::NAN;
            }
            let x = accounting.value_at(firm_slot, fye_year, num_var);
            let x_lag = accounting.value_at(firm_slot, fye_year - 1, num_var);
            let y_lag = accounting.value_at(firm_slot, fye_year - 1, den_var);
            if x.is_nan() || x_lag.is_nan() || y_lag.is_nan() || y_lag == 0.0 {
                return f64::NAN;
            }
            let v = (x - x_lag) / y_lag;
            if v.is_finite() {
                v
            } else {
                f64::NAN
            }
        }
    }
}

/// Evaluate one spec on the accounting panel: the June-of-year value is
/// the most recent usable fiscal value, at most 18 months old.
pub fn compute_signal_panel(
    spec: &SignalSpec,
    accounting: &AccountingPanel,
    catalog: &IngredientCatalog,
) -> Result<SignalPanel> {
    let num_var = catalog
        .position(&spec.numerator_id)
        .ok_or_else(|| Error::Validation(format!("numerator '{}' not in catalog", spec.numerator_id)))?;
    let den_var = catalog.position(&spec.denominator_id).ok_or_else(|| {
        Error::Validation(format!(
            "denominator '{}' not in catalog",
            spec.denominator_id
        ))
    })?;
    let firms = accounting.firms().to_vec();
    let n_firms = firms.len();
    let (first_june_year, n_june_years) = if accounting.n_years() == 0 {
        (0, 0)
    } else {
        let first = accounting.first_year() + 1;
        let last = accounting.first_year() + accounting.n_years() as i32 + 1;
        (first, (last - first + 1) as usize)
    };
    let mut values = vec![f64::NAN; n_firms * n_june_years];
    for fs in 0..n_firms {
        for ys in 0..n_june_years {
            let june_year = first_june_year + ys as i32;
            let mut v = spec_value_at(accounting, fs, june_year - 1, spec.form, num_var, den_var);
            if v.is_nan() {
                // December FYE two years back is still within 18 months
                if accounting.fye_of(fs, june_year - 2).map(|m| m.month_of_year()) == Some(12) {
                    v = spec_value_at(accounting, fs, june_year - 2, spec.form, num_var, den_var);
                }
            }
            values[ys * n_firms + fs] = v;
        }
    }
    Ok(SignalPanel {
        spec: spec.clone(),
        firms,
        first_june_year,
        n_june_years,
        values,
    })
}

/// Audit export: `spec_id,form,numerator,denominator`.
pub fn write_universe(specs: &[SignalSpec], w: &mut impl Write) -> Result<()> {
    writeln!(w, "spec_id,form,numerator,denominator")?;
    for (i, s) in specs.iter().enumerate() {
        writeln!(w, "{},{},{},{}", i, s.form, s.numerator_id, s.denominator_id)?;
    }
    Ok(())
}

/// Universe size identity: `2*I*D - D - C(D,2)`.
pub fn expected_universe_size(n_ingredients: usize, n_denominators: usize) -> usize {
    2 * n_ingredients * n_denominators
        - n_denominators
        - n_denominators * n_denominators.saturating_sub(1) / 2
}
