//! Monte Carlo harness for the error, iteration and flip guarantees.
//!
//! Trial `n` draws its flips from `derive_trial_source(master_seed, n, p)`,
//! and per-trial results are aggregated with exact integer sums, so the
//! statistics do not depend on worker count or scheduling order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::baseline::KnownGapTester;
use crate::coinflipper::CoinFlipper;
use crate::domain::{Confidence, Decision, Probability};
use crate::error::{Error, Result};
use crate::predict::{difficulty_of, flips_upper_bound, iteration_bound, DEFAULT_TAIL_TERMS};
use crate::sources::derive_trial_source;

/// Reporting level for error-rate upper bounds.
pub const REPORT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    CoinFlipper,
    /// Fixed-sample tester with known gap `epsilon`.
    Baseline { epsilon: BigRational },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CoinFlipper => "coinflipper",
            Algorithm::Baseline { .. } => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub p: Probability,
    pub q: Probability,
    pub delta: Confidence,
    pub trials: u64,
    pub master_seed: u64,
    pub budget: Option<u64>,
    pub algorithm: Algorithm,
}

impl TrialConfig {
    pub fn coinflipper(p: Probability, q: Probability, delta: Confidence, trials: u64, seed: u64) -> Self {
        Self {
            p,
            q,
            delta,
            trials,
            master_seed: seed,
            budget: None,
            algorithm: Algorithm::CoinFlipper,
        }
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.budget == Some(0) {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        let equal = self.p.exact() == self.q.exact();
        match self.algorithm {
            Algorithm::CoinFlipper if equal && self.budget.is_none() => Err(Error::Domain(
                "p = q never terminates without a budget".into(),
            )),
            Algorithm::Baseline { .. } if equal => {
                Err(Error::Domain("the known-gap tester needs p != q".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub decision: Decision,
    pub iterations: u64,
    pub flips: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: u64,
    pub decisions: u64,
    pub wrong: u64,
    pub undecided: u64,
    /// `wrong / decisions`; 0 when no trial decided.
    pub error_rate: f64,
    pub error_rate_defined: bool,
    pub error_rate_wilson_hi99: f64,
    pub mean_iterations: f64,
    pub sem_iterations: f64,
    pub mean_flips: f64,
    pub sem_flips: f64,
    pub min_flips: u64,
    pub max_flips: u64,
    pub d: Option<u32>,
    pub iteration_bound: Option<f64>,
    pub flips_upper_bound: Option<f64>,
}

/// Exact running sums; merging is associative and commutative.
#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    wrong: u64,
    undecided: u64,
    iter_sum: u128,
    iter_sq: u128,
    flip_sum: u128,
    flip_sq: u128,
    min_flips: u64,
    max_flips: u64,
}

impl Tally {
    fn single(record: TrialRecord, wrong: bool) -> Self {
        let it = u128::from(record.iterations);
        let fl = u128::from(record.flips);
        Self {
            trials: 1,
            wrong: u64::from(wrong),
            undecided: u64::from(record.decision == Decision::Undecided),
            iter_sum: it,
            iter_sq: it * it,
            flip_sum: fl,
            flip_sq: fl * fl,
            min_flips: record.flips,
            max_flips: record.flips,
        }
    }

    fn merge(self, other: Self) -> Result<Self> {
        if self.trials == 0 {
            return Ok(other);
        }
        if other.trials == 0 {
            return Ok(self);
        }
        let overflow = || Error::InvalidParameter("flip totals overflow 128-bit accumulators".into());
        Ok(Self {
            trials: self.trials + other.trials,
            wrong: self.wrong + other.wrong,
            undecided: self.undecided + other.undecided,
            iter_sum: self.iter_sum.checked_add(other.iter_sum).ok_or_else(overflow)?,
            iter_sq: self.iter_sq.checked_add(other.iter_sq).ok_or_else(overflow)?,
            flip_sum: self.flip_sum.checked_add(other.flip_sum).ok_or_else(overflow)?,
            flip_sq: self.flip_sq.checked_add(other.flip_sq).ok_or_else(overflow)?,
            min_flips: self.min_flips.min(other.min_flips),
            max_flips: self.max_flips.max(other.max_flips),
        })
    }
}

/// Mean and standard error of the mean from exact sums.
fn mean_and_sem(n: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
    let mean = ratio_to_f64(BigInt::from(sum), BigInt::from(n));
    if n < 2 {
        return (mean, 0.0);
    }
    // sample variance = (n·Σx² − (Σx)²) / (n(n−1)); SEM² = variance / n
    let n_big = BigInt::from(n);
    let spread = &n_big * BigInt::from(sum_sq) - BigInt::from(sum) * BigInt::from(sum);
    let sem_sq = ratio_to_f64(spread, &n_big * &n_big * (&n_big - 1));
    (mean, sem_sq.max(0.0).sqrt())
}

fn ratio_to_f64(numer: BigInt, denom: BigInt) -> f64 {
    BigRational::new(numer, denom).to_f64().unwrap_or(f64::NAN)
}

/// Wilson score upper limit for `successes` out of `n` at one-sided
/// confidence `confidence` (z = Φ⁻¹(confidence)).
pub fn wilson_upper(successes: u64, n: u64, confidence: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("wilson bound needs n >= 1".into()));
    }
    if successes > n {
        return Err(Error::ContractViolation(format!(
            "{successes} successes out of {n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange {
            what: "confidence",
            value: confidence.to_string(),
        });
    }
    if successes == n {
        return Ok(1.0);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(confidence);
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let center = phat + z2 / (2.0 * n);
    let margin = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center + margin) / (1.0 + z2 / n)).clamp(phat, 1.0))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run a single trial of `config`.
pub fn run_trial(config: &TrialConfig, index: u64) -> Result<TrialRecord> {
    let mut source = derive_trial_source(config.master_seed, index, config.p.to_f64())?;
    match &config.algorithm {
        Algorithm::CoinFlipper => {
            let tester = CoinFlipper::new(config.q.clone(), config.delta).with_budget(config.budget)?;
            let t = tester.run(&mut source)?;
            Ok(TrialRecord {
                decision: t.decision,
                iterations: t.iterations() as u64,
                flips: t.total_flips,
            })
        }
        Algorithm::Baseline { epsilon } => {
            let tester = KnownGapTester::new(config.q.clone(), epsilon.clone(), config.delta)?;
            let out = tester.run(&mut source)?;
            Ok(TrialRecord {
                decision: out.decision,
                iterations: 1,
                flips: out.k,
            })
        }
    }
}

fn is_wrong(config: &TrialConfig, decision: Decision) -> bool {
    let p = config.p.exact();
    let q = config.q.exact();
    (p < q && decision == Decision::No) || (p > q && decision == Decision::Yes)
}

/// Run `config.trials` independent trials on `workers` threads (0 = all cores).
pub fn run_trials(config: &TrialConfig, workers: usize) -> Result<TrialStats> {
    config.validate()?;
    let workers = if workers == 0 { default_workers() } else { workers };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    // Errors are keyed by trial index; the lowest failing index wins so the
    // reported fault is independent of scheduling.
    type Acc = std::result::Result<Tally, (u64, Error)>;
    let combine = |a: Acc, b: Acc| -> Acc {
        match (a, b) {
            (Ok(x), Ok(y)) => x.merge(y).map_err(|e| (u64::MAX, e)),
            (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
            (Err(e1), Err(e2)) => Err(if e1.0 <= e2.0 { e1 } else { e2 }),
        }
    };
    let tally = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|index| -> Acc {
                let record = run_trial(config, index).map_err(|e| (index, e))?;
                Ok(Tally::single(record, is_wrong(config, record.decision)))
            })
            .reduce(|| Ok(Tally::default()), combine)
    });
    let tally = tally.map_err(|(index, source)| Error::Trial {
        index,
        source: Box::new(source),
    })?;
    summarize(config, &tally)
}

fn summarize(config: &TrialConfig, tally: &Tally) -> Result<TrialStats> {
    let decisions = tally.trials - tally.undecided;
    let (error_rate, wilson) = if decisions == 0 {
        (0.0, 1.0)
    } else {
        (
            tally.wrong as f64 / decisions as f64,
            wilson_upper(tally.wrong, decisions, REPORT_CONFIDENCE)?,
        )
    };
    let (mean_iterations, sem_iterations) = mean_and_sem(tally.trials, tally.iter_sum, tally.iter_sq);
    let (mean_flips, sem_flips) = mean_and_sem(tally.trials, tally.flip_sum, tally.flip_sq);
    let d = difficulty_of(&config.p, &config.q).ok();
    Ok(TrialStats {
        trials: tally.trials,
        decisions,
        wrong: tally.wrong,
        undecided: tally.undecided,
        error_rate,
        error_rate_defined: decisions > 0,
        error_rate_wilson_hi99: wilson,
        mean_iterations,
        sem_iterations,
        mean_flips,
        sem_flips,
        min_flips: tally.min_flips,
        max_flips: tally.max_flips,
        d,
        iteration_bound: d.map(iteration_bound),
        flips_upper_bound: d.and_then(|d| flips_upper_bound(d, config.delta, DEFAULT_TAIL_TERMS).ok()),
    })
}

/// `run_trials` over every grid entry, in order.
pub fn sweep(grid: &[TrialConfig], workers: usize) -> Result<Vec<TrialStats>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    grid.iter().map(|c| run_trials(c, workers)).collect()
}
