//! Population model of in-sample and post-sample strategy returns:
//! simulate selection on |mean return| thresholds, decompose expected
//! decay into expected-return shifts and selection luck, and verify the
//! theory-vs-mining decay ordering by Monte Carlo and exact enumeration.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(value: f64, weight: f64) -> Self {
        Atom { value, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    Point(f64),
    Gaussian { mean: f64, sd: f64 },
    Discrete(Vec<Atom>),
}

impl Dist {
    fn validate(&self) -> Result<()> {
        match self {
            Dist::Point(_) => Ok(()),
            Dist::Gaussian { sd, .. } if *sd < 0.0 => {
                Err(Error::Config("negative standard deviation".into()))
            }
            Dist::Gaussian { .. } => Ok(()),
            Dist::Discrete(atoms) => {
                if atoms.is_empty() || atoms.iter().any(|a| a.weight <= 0.0) {
                    Err(Error::Config("discrete distribution needs positive-weight atoms".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Dist::Point(v) => *v,
            Dist::Gaussian { mean, sd } => {
                if *sd == 0.0 {
                    *mean
                } else {
                    Normal::new(*mean, *sd).unwrap().sample(rng)
                }
            }
            Dist::Discrete(atoms) => {
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                let mut u = rand::Rng::gen_range(rng, 0.0..total);
                for a in atoms {
                    if u < a.weight {
                        return a.value;
                    }
                    u -= a.weight;
                }
                atoms.last().unwrap().value
            }
        }
    }
}

/// Population of strategies: expected return mu in-sample, shift dmu =
/// dmu_slope * mu + (draw from dmu_dist) post-sample, i.i.d. residuals
/// with monthly volatility eps_vol over t_is in-sample and t_oos
/// post-sample months.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub label: String,
    pub mu_dist: Dist,
    pub dmu_dist: Dist,
    pub dmu_slope: f64,
    pub eps_vol: f64,
    pub t_is: u32,
    pub t_oos: u32,
}

impl ModelParams {
    fn validate(&self) -> Result<()> {
        self.mu_dist.validate()?;
        self.dmu_dist.validate()?;
        if self.eps_vol < 0.0 {
            return Err(Error::Config("eps_vol must be >= 0".into()));
        }
        if self.t_is == 0 || self.t_oos == 0 {
            return Err(Error::Config("t_is and t_oos must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRule {
    /// Threshold on |mean in-sample return|, bps/month.
    pub h: f64,
}

impl SelectionRule {
    pub fn new(h: f64) -> Result<Self> {
        if h < 0.0 {
            return Err(Error::Config("selection threshold must be >= 0".into()));
        }
        Ok(SelectionRule { h })
    }

    pub fn selects(&self, r_is: f64) -> bool {
        r_is.abs() > self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorRecord {
    pub mu: f64,
    pub dmu: f64,
    pub eps_bar: f64,
    pub eps_bar_oos: f64,
    pub r_is: f64,
    pub r_oos: f64,
    pub decay: f64,
}

/// Draw a population; deterministic given the seed and independent of
/// parallel scheduling (each predictor gets its own RNG stream).
pub fn simulate_population(params: &ModelParams, n: usize, seed: u64) -> Result<Vec<PredictorRecord>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("population size must be >= 1".into()));
    }
    let records: Vec<PredictorRecord> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mu = params.mu_dist.sample(&mut rng);
            let dmu = params.dmu_slope * mu + params.dmu_dist.sample(&mut rng);
            let se_is = params.eps_vol / (params.t_is as f64).sqrt();
            let se_oos = params.eps_vol / (params.t_oos as f64).sqrt();
            let eps_bar = Dist::Gaussian { mean: 0.0, sd: se_is }.sample(&mut rng);
            let eps_bar_oos = Dist::Gaussian { mean: 0.0, sd: se_oos }.sample(&mut rng);
            let r_is = mu + eps_bar;
            let r_oos = mu + dmu + eps_bar_oos;
            PredictorRecord {
                mu,
                dmu,
                eps_bar,
                eps_bar_oos,
                r_is,
                r_oos,
                decay: sign(r_is) * (r_is - r_oos),
            }
        })
        .collect();
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    pub value: f64,
    pub se: f64,
    pub n_selected: usize,
    pub n_drawn: usize,
    /// Mean of -sign * dmu among selected (expected-return shift term).
    pub dmu_term: f64,
    /// Mean of sign * eps_bar among selected (selection-luck term).
    pub selection_term: f64,
}

fn summarize_selected(records: &[PredictorRecord], rule: SelectionRule) -> Result<DecayEstimate> {
    let selected: Vec<&PredictorRecord> = records.iter().filter(|r| rule.selects(r.r_is)).collect();
    let n = selected.len();
    if n == 0 {
        return Err(Error::InsufficientData(format!(
            "no predictor selected at h = {}; lower the threshold",
            rule.h
        )));
    }
    let nf = n as f64;
    let mean = selected.iter().map(|r| r.decay).sum::<f64>() / nf;
    let var = selected.iter().map(|r| (r.decay - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
    Ok(DecayEstimate {
        value: mean,
        se: (var / nf).sqrt(),
        n_selected: n,
        n_drawn: records.len(),
        dmu_term: selected.iter().map(|r| -sign(r.r_is) * r.dmu).sum::<f64>() / nf,
        selection_term: selected.iter().map(|r| sign(r.r_is) * r.eps_bar).sum::<f64>() / nf,
    })
}

/// Monte Carlo estimate of expected decay conditional on selection.
pub fn expected_decay(
    params: &ModelParams,
    rule: SelectionRule,
    n_sims: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    summarize_selected(&simulate_population(params, n_sims, seed)?, rule)
}

/// Fully discrete population for exact enumeration: mu, the dmu base
/// draw, and the in-sample mean residual all take finitely many values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteParams {
    pub label: String,
    pub mu: Vec<Atom>,
    pub dmu: Vec<Atom>,
    pub dmu_slope: f64,
    pub eps_bar: Vec<Atom>,
}

impl DiscreteParams {
    fn validate(&self) -> Result<()> {
        for atoms in [&self.mu, &self.dmu, &self.eps_bar] {
            Dist::Discrete(atoms.clone()).validate()?;
        }
        Ok(())
    }

    /// The same population with every weight scaled, representing
    /// `factor` i.i.d. copies of each predictor.
    pub fn scaled_weights(&self, factor: f64) -> DiscreteParams {
        let scale = |atoms: &[Atom]| {
            atoms
                .iter()
                .map(|a| Atom::new(a.value, a.weight * factor))
                .collect()
        };
        DiscreteParams {
            label: self.label.clone(),
            mu: scale(&self.mu),
            dmu: scale(&self.dmu),
            dmu_slope: self.dmu_slope,
            eps_bar: scale(&self.eps_bar),
        }
    }

    fn to_model(&self) -> ModelParams {
        ModelParams {
            label: self.label.clone(),
            mu_dist: Dist::Discrete(self.mu.clone()),
            dmu_dist: Dist::Discrete(self.dmu.clone()),
            dmu_slope: self.dmu_slope,
            eps_vol: 0.0, // unused in the discrete sampler below
            t_is: 1,
            t_oos: 1,
        }
    }
}

/// Exact conditional expectation, kept as unnormalized sums so that
/// weight rescaling by powers of two leaves the quotient bit-identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumeratedDecay {
    pub sum_weighted_decay: f64,
    pub sum_weighted_dmu_term: f64,
    pub sum_weighted_selection_term: f64,
    pub sum_weight: f64,
}

impl EnumeratedDecay {
    pub fn value(&self) -> f64 {
        self.sum_weighted_decay / self.sum_weight
    }

    pub fn dmu_term(&self) -> f64 {
        self.sum_weighted_dmu_term / self.sum_weight
    }

    pub fn selection_term(&self) -> f64 {
        self.sum_weighted_selection_term / self.sum_weight
    }
}

/// Exact expected decay conditional on |mean| > h by enumeration over
/// the product space of atoms. Post-sample residual means integrate to
/// zero and are omitted.
pub fn enumerate_expected_decay(params: &DiscreteParams, rule: SelectionRule) -> Result<EnumeratedDecay> {
    params.validate()?;
    let mut out = EnumeratedDecay {
        sum_weighted_decay: 0.0,
        sum_weighted_dmu_term: 0.0,
        sum_weighted_selection_term: 0.0,
        sum_weight: 0.0,
    };
    for mu in &params.mu {
        for dmu_base in &params.dmu {
            for eps in &params.eps_bar {
                let r_is = mu.value + eps.value;
                if !rule.selects(r_is) {
                    continue;
                }
                let w = mu.weight * dmu_base.weight * eps.weight;
                let s = sign(r_is);
                let dmu = params.dmu_slope * mu.value + dmu_base.value;
                out.sum_weighted_decay += w * s * (-dmu + eps.value);
                out.sum_weighted_dmu_term += w * (-s * dmu);
                out.sum_weighted_selection_term += w * s * eps.value;
                out.sum_weight += w;
            }
        }
    }
    if out.sum_weight == 0.0 {
        return Err(Error::InsufficientData(format!(
            "selection event empty at h = {}",
            rule.h
        )));
    }
    Ok(out)
}

/// Monte Carlo on a discrete population (the month-free analogue of
/// `expected_decay`), drawing the post-sample residual mean from the
/// same atom set re-centered to zero mean.
pub fn expected_decay_discrete(
    params: &DiscreteParams,
    rule: SelectionRule,
    n_sims: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    params.validate()?;
    let model = params.to_model();
    let eps_dist = Dist::Discrete(params.eps_bar.clone());
    let records: Vec<PredictorRecord> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mu = model.mu_dist.sample(&mut rng);
            let dmu = model.dmu_slope * mu + model.dmu_dist.sample(&mut rng);
            let eps_bar = eps_dist.sample(&mut rng);
            let eps_bar_oos = eps_dist.sample(&mut rng);
            let r_is = mu + eps_bar;
            let r_oos = mu + dmu + eps_bar_oos;
            PredictorRecord {
                mu,
                dmu,
                eps_bar,
                eps_bar_oos,
                r_is,
                r_oos,
                decay: sign(r_is) * (r_is - r_oos),
            }
        })
        .collect();
    summarize_selected(&records, rule)
}

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    /// Every theory-set conditional E[sign * mu | |mean|] exceeds every
    /// mining-set one (conservative pointwise check).
    pub mu_condition: bool,
    /// Same for the expected-return shift dmu.
    pub dmu_condition: bool,
    /// |mean| values (quantized) with probability mass in both sets.
    pub n_shared_points: usize,
}

/// Conditional expectations of sign*mu and sign*dmu given |mean in-sample
/// return|, keyed by the quantized |mean| value.
fn conditionals(params: &DiscreteParams) -> BTreeMap<i64, (f64, f64, f64)> {
    // key -> (sum w*s*mu, sum w*s*dmu, sum w)
    let mut map: BTreeMap<i64, (f64, f64, f64)> = BTreeMap::new();
    for mu in &params.mu {
        for dmu_base in &params.dmu {
            for eps in &params.eps_bar {
                let r_is = mu.value + eps.value;
                let s = sign(r_is);
                if s == 0.0 {
                    continue;
                }
                let key = (r_is.abs() * 1e6).round() as i64;
                let w = mu.weight * dmu_base.weight * eps.weight;
                let dmu = params.dmu_slope * mu.value + dmu_base.value;
                let e = map.entry(key).or_insert((0.0, 0.0, 0.0));
                e.0 += w * s * mu.value;
                e.1 += w * s * dmu;
                e.2 += w;
            }
        }
    }
    map
}

pub fn check_conditions(theory: &DiscreteParams, mining: &DiscreteParams) -> ConditionCheck {
    let ct = conditionals(theory);
    let cd = conditionals(mining);
    let t_mu: Vec<f64> = ct.values().map(|(smu, _, w)| smu / w).collect();
    let d_mu: Vec<f64> = cd.values().map(|(smu, _, w)| smu / w).collect();
    let t_dmu: Vec<f64> = ct.values().map(|(_, sdmu, w)| sdmu / w).collect();
    let d_dmu: Vec<f64> = cd.values().map(|(_, sdmu, w)| sdmu / w).collect();
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ConditionCheck {
        mu_condition: min(&t_mu) > max(&d_mu),
        dmu_condition: min(&t_dmu) > max(&d_dmu),
        n_shared_points: ct.keys().filter(|k| cd.contains_key(k)).count(),
    }
}

#[derive(Debug, Clone)]
pub struct PropositionReport {
    pub conditions: ConditionCheck,
    pub theory_enum: EnumeratedDecay,
    pub mining_enum: EnumeratedDecay,
    pub theory_mc: DecayEstimate,
    pub mining_mc: DecayEstimate,
    /// Enumerated decay strictly smaller for the theory set.
    pub ordering_holds: bool,
    /// Each MC estimate within 3 SE of its enumeration oracle.
    pub mc_within_3se: bool,
}

/// Compare expected decay for a theory set against a mining set: check
/// the sufficient conditions, enumerate both decays exactly, and confirm
/// by Monte Carlo. `assert_conditions` makes an unmet condition an error
/// (invalid test setup) rather than a reported flag.
pub fn verify_proposition(
    theory: &DiscreteParams,
    mining: &DiscreteParams,
    rule: SelectionRule,
    n_sims: usize,
    seed: u64,
    assert_conditions: bool,
) -> Result<PropositionReport> {
    let conditions = check_conditions(theory, mining);
    if assert_conditions && !(conditions.mu_condition && conditions.dmu_condition) {
        return Err(Error::Validation(
            "sufficient conditions do not hold on the parameter pair".into(),
        ));
    }
    let theory_enum = enumerate_expected_decay(theory, rule)?;
    let mining_enum = enumerate_expected_decay(mining, rule)?;
    let theory_mc = expected_decay_discrete(theory, rule, n_sims, seed)?;
    let mining_mc = expected_decay_discrete(mining, rule, n_sims, seed ^ 0x9e3779b97f4a7c15)?;
    let within = |mc: &DecayEstimate, exact: &EnumeratedDecay| {
        (mc.value - exact.value()).abs() <= 3.0 * mc.se
    };
    Ok(PropositionReport {
        conditions,
        theory_enum,
        mining_enum,
        theory_mc,
        mining_mc,
        ordering_holds: theory_enum.value() < mining_enum.value(),
        mc_within_3se: within(&theory_mc, &theory_enum) && within(&mining_mc, &mining_enum),
    })
}

/// CSV rows `set,h,decay,se,dmu_term,selection_term`.
pub fn write_decay_report(
    rows: &[(String, f64, DecayEstimate)],
    w: &mut impl Write,
) -> Result<()> {
    writeln!(w, "set,h,decay,se,dmu_term,selection_term")?;
    for (label, h, est) in rows {
        writeln!(
            w,
            "{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            label, h, est.value, est.se, est.dmu_term, est.selection_term
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_params() -> ModelParams {
        ModelParams {
            label: "test".into(),
            mu_dist: Dist::Gaussian { mean: 0.0, sd: 50.0 },
            dmu_dist: Dist::Point(0.0),
            dmu_slope: 0.0,
            eps_vol: 500.0,
            t_is: 240,
            t_oos: 120,
        }
    }

    #[test]
    fn no_noise_no_shift_means_no_decay() {
        let params = ModelParams {
            eps_vol: 0.0,
            ..base_params()
        };
        let records = simulate_population(&params, 500, 1).unwrap();
        for r in records {
            assert_eq!(r.decay, 0.0);
        }
    }

    #[test]
    fn vanishing_returns_decay_abs_mu() {
        // dmu = -mu exactly: post-sample expected return is zero
        let params = ModelParams {
            eps_vol: 0.0,
            dmu_slope: -1.0,
            ..base_params()
        };
        let records = simulate_population(&params, 500, 2).unwrap();
        for r in records {
            assert_relative_eq!(r.decay, r.mu.abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn selection_on_luck_gives_positive_decay() {
        let params = ModelParams {
            mu_dist: Dist::Gaussian { mean: 0.0, sd: 30.0 },
            ..base_params()
        };
        let est = expected_decay(&params, SelectionRule::new(0.0).unwrap(), 100_000, 3).unwrap();
        assert!(est.value > 3.0 * est.se, "decay {} se {}", est.value, est.se);
        assert!(est.selection_term > 0.0);
    }

    #[test]
    fn folded_normal_identity_at_zero_threshold() {
        // mu = 0 and dmu = 0: decay reduces to |eps_bar| in expectation
        let params = ModelParams {
            mu_dist: Dist::Point(0.0),
            ..base_params()
        };
        let est = expected_decay(&params, SelectionRule::new(0.0).unwrap(), 200_000, 4).unwrap();
        let expected = params.eps_vol * (2.0 / (std::f64::consts::PI * params.t_is as f64)).sqrt();
        assert!(
            (est.value - expected).abs() < 3.0 * est.se,
            "got {} want {} se {}",
            est.value,
            expected,
            est.se
        );
    }

    #[test]
    fn decay_decomposition_identity() {
        let params = ModelParams {
            mu_dist: Dist::Gaussian { mean: 20.0, sd: 40.0 },
            dmu_dist: Dist::Gaussian { mean: -5.0, sd: 10.0 },
            dmu_slope: -0.2,
            ..base_params()
        };
        for r in simulate_population(&params, 2_000, 5).unwrap() {
            let rhs = sign(r.r_is) * (-r.dmu + r.eps_bar - r.eps_bar_oos);
            assert_relative_eq!(r.decay, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn post_sample_residuals_unpredictable_from_in_sample_mean() {
        // slope of eps_bar_oos on r_is among selected is zero within MC error
        let params = base_params();
        let records = simulate_population(&params, 200_000, 6).unwrap();
        let sel: Vec<&PredictorRecord> = records
            .iter()
            .filter(|r| SelectionRule::new(40.0).unwrap().selects(r.r_is))
            .collect();
        let n = sel.len() as f64;
        let mx = sel.iter().map(|r| r.r_is).sum::<f64>() / n;
        let my = sel.iter().map(|r| r.eps_bar_oos).sum::<f64>() / n;
        let sxy: f64 = sel.iter().map(|r| (r.r_is - mx) * (r.eps_bar_oos - my)).sum();
        let sxx: f64 = sel.iter().map(|r| (r.r_is - mx).powi(2)).sum();
        let slope = sxy / sxx;
        // SE of the slope under homoskedastic residuals
        let resid_var = sel
            .iter()
            .map(|r| (r.eps_bar_oos - my - slope * (r.r_is - mx)).powi(2))
            .sum::<f64>()
            / (n - 2.0);
        let se = (resid_var / sxx).sqrt();
        assert!(slope.abs() < 4.0 * se, "slope {slope} se {se}");
    }

    #[test]
    fn mc_se_shrinks_with_sample_size() {
        let params = base_params();
        let rule = SelectionRule::new(0.0).unwrap();
        let small = expected_decay(&params, rule, 20_000, 7).unwrap();
        let big = expected_decay(&params, rule, 80_000, 7).unwrap();
        let ratio = small.se / big.se;
        assert!((ratio - 2.0).abs() < 0.3, "SE ratio {ratio}, expected about 2");
    }

    #[test]
    fn determinism_across_parallelism() {
        let params = base_params();
        let a = simulate_population(&params, 5_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_population(&params, 5_000, 9).unwrap());
        assert_eq!(a, b);
    }

    fn symmetric(vals: &[f64]) -> Vec<Atom> {
        vals.iter().map(|&v| Atom::new(v, 1.0)).collect()
    }

    #[test]
    fn hand_enumeration_two_atoms() {
        // mu = 100, dmu = 0, eps in {-10, +10}: at h = 0 both atoms pass
        // and decay is E[eps | selected] = 0
        let params = DiscreteParams {
            label: "hand".into(),
            mu: vec![Atom::new(100.0, 1.0)],
            dmu: vec![Atom::new(0.0, 1.0)],
            dmu_slope: 0.0,
            eps_bar: symmetric(&[-10.0, 10.0]),
        };
        let at0 = enumerate_expected_decay(&params, SelectionRule::new(0.0).unwrap()).unwrap();
        assert_relative_eq!(at0.value(), 0.0, epsilon = 1e-12);
        // at h = 95 only the lucky atom passes
        let at95 = enumerate_expected_decay(&params, SelectionRule::new(95.0).unwrap()).unwrap();
        assert_relative_eq!(at95.value(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_shift_dominates() {
        let params = DiscreteParams {
            label: "shift".into(),
            mu: vec![Atom::new(100.0, 1.0)],
            dmu: vec![Atom::new(-50.0, 1.0)],
            dmu_slope: 0.0,
            eps_bar: vec![Atom::new(0.0, 1.0)],
        };
        for h in [0.0, 50.0, 99.0] {
            let e = enumerate_expected_decay(&params, SelectionRule::new(h).unwrap()).unwrap();
            assert_relative_eq!(e.value(), 50.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_selection_errors() {
        let params = DiscreteParams {
            label: "empty".into(),
            mu: vec![Atom::new(10.0, 1.0)],
            dmu: vec![Atom::new(0.0, 1.0)],
            dmu_slope: 0.0,
            eps_bar: vec![Atom::new(0.0, 1.0)],
        };
        assert!(enumerate_expected_decay(&params, SelectionRule::new(50.0).unwrap()).is_err());
    }

    fn mining_set() -> DiscreteParams {
        DiscreteParams {
            label: "mining".into(),
            mu: symmetric(&[-60.0, 60.0]),
            dmu: vec![Atom::new(0.0, 1.0)],
            dmu_slope: -0.5,
            eps_bar: symmetric(&[-20.0, 20.0]),
        }
    }

    fn theory_set(m: f64) -> DiscreteParams {
        DiscreteParams {
            label: "theory".into(),
            mu: symmetric(&[-m, m]),
            dmu: vec![Atom::new(0.0, 1.0)],
            dmu_slope: -0.1,
            eps_bar: symmetric(&[-20.0, 20.0]),
        }
    }

    #[test]
    fn enumeration_matches_discrete_monte_carlo() {
        let params = mining_set();
        let rule = SelectionRule::new(30.0).unwrap();
        let exact = enumerate_expected_decay(&params, rule).unwrap();
        let mc = expected_decay_discrete(&params, rule, 200_000, 10).unwrap();
        assert!(
            (mc.value - exact.value()).abs() < 3.0 * mc.se,
            "mc {} exact {} se {}",
            mc.value,
            exact.value(),
            mc.se
        );
    }

    #[test]
    fn proposition_ordering_on_constructed_pair() {
        let report = verify_proposition(
            &theory_set(100.0),
            &mining_set(),
            SelectionRule::new(30.0).unwrap(),
            100_000,
            11,
            true,
        )
        .unwrap();
        assert!(report.conditions.mu_condition);
        assert!(report.conditions.dmu_condition);
        assert!(report.ordering_holds);
        assert!(report.mc_within_3se);
    }

    #[test]
    fn identical_sets_equal_decay() {
        let p = mining_set();
        let report =
            verify_proposition(&p, &p, SelectionRule::new(30.0).unwrap(), 100_000, 12, false)
                .unwrap();
        assert_eq!(report.theory_enum.value(), report.mining_enum.value());
        let diff = (report.theory_mc.value - report.mining_mc.value).abs();
        let se = report.theory_mc.se.hypot(report.mining_mc.se);
        assert!(diff < 3.0 * se, "diff {diff} se {se}");
        assert!(!report.ordering_holds, "no strict ordering for identical sets");
    }

    #[test]
    fn violated_condition_flagged() {
        // theory with a more negative shift than mining: condition on dmu fails
        let bad_theory = DiscreteParams {
            dmu_slope: -0.9,
            ..theory_set(100.0)
        };
        let check = check_conditions(&bad_theory, &mining_set());
        assert!(check.mu_condition);
        assert!(!check.dmu_condition);
        assert!(verify_proposition(
            &bad_theory,
            &mining_set(),
            SelectionRule::new(30.0).unwrap(),
            1_000,
            13,
            true,
        )
        .is_err());
    }

    #[test]
    fn weight_doubling_is_bit_identical() {
        let params = mining_set();
        let rule = SelectionRule::new(30.0).unwrap();
        let base = enumerate_expected_decay(&params, rule).unwrap();
        let doubled = enumerate_expected_decay(&params.scaled_weights(2.0), rule).unwrap();
        assert_eq!(base.value().to_bits(), doubled.value().to_bits());
        assert_eq!(base.dmu_term().to_bits(), doubled.dmu_term().to_bits());
    }
}
