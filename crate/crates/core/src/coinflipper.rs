//! The sequential tester: rounds `i = 1, 2, …` with `ε = 1/2^i`, sample size
//! `coinflipper_k(i, δ)`, and the exact round rule, until a round answers.
//!
//! A budget, when set, is checked before a round starts; rounds are never
//! truncated, so `total_flips ≤ budget` and every recorded round is complete.

use num_rational::BigRational;

use crate::domain::{
    decide_round, Confidence, Decision, ExactThreshold, Probability, RoundOutcome, RunParams,
    Transcript, Verdict,
};
use crate::error::{Error, Result};
use crate::schedule::coinflipper_k;
use crate::sources::{BernoulliSource, Origin, SourceDescriptor};

/// Flip budget the CLI applies when none is given.
pub const DEFAULT_CLI_BUDGET: u64 = 1 << 26;

/// Parameters of a CoinFlipper run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinFlipper {
    q: Probability,
    delta: Confidence,
    budget: Option<u64>,
}

impl CoinFlipper {
    /// Unbounded tester, as in the original loop.
    pub fn new(q: Probability, delta: Confidence) -> Self {
        Self {
            q,
            delta,
            budget: None,
        }
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Result<Self> {
        if budget == Some(0) {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn q(&self) -> &Probability {
        &self.q
    }

    pub fn delta(&self) -> Confidence {
        self.delta
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    fn params(&self, source: SourceDescriptor) -> RunParams {
        RunParams {
            q: self.q.text().to_string(),
            delta: self.delta,
            budget: self.budget,
            source,
        }
    }

    /// Run to a decision on `source`.
    ///
    /// Errors from the source or from the schedule overflowing carry the
    /// rounds completed so far (see [`Error::partial_transcript`]).
    pub fn run<S: BernoulliSource + ?Sized>(&self, source: &mut S) -> Result<Transcript> {
        let mut transcript = Transcript {
            rounds: Vec::new(),
            decision: Decision::Undecided,
            total_flips: 0,
            params: self.params(source.descriptor()),
        };
        let mut round = 1u32;
        loop {
            let k = match coinflipper_k(round, self.delta) {
                Ok(k) => k,
                Err(e) => return Err(e.with_partial(transcript)),
            };
            let Some(next_total) = transcript.total_flips.checked_add(k) else {
                return Err(Error::BudgetOverflow {
                    round,
                    partial: Some(Box::new(transcript)),
                });
            };
            if self.budget.is_some_and(|b| next_total > b) {
                return Ok(transcript);
            }
            let threshold = ExactThreshold::new(self.q.exact(), k, round)?;
            let batch = match source.flip_batch(k) {
                Ok(b) => b,
                Err(e) => return Err(e.with_partial(transcript)),
            };
            let verdict = decide_round(batch.heads, &threshold)?;
            transcript.rounds.push(RoundOutcome {
                round,
                k,
                heads: batch.heads,
                verdict,
            });
            transcript.total_flips = next_total;
            match verdict {
                Verdict::Yes => {
                    transcript.decision = Decision::Yes;
                    return Ok(transcript);
                }
                Verdict::No => {
                    transcript.decision = Decision::No;
                    return Ok(transcript);
                }
                Verdict::Continue => round += 1,
            }
        }
    }

    pub fn streaming(&self) -> Result<StreamingDecider> {
        StreamingDecider::new(self.clone())
    }
}

/// Incremental form of [`CoinFlipper::run`]: flips are fed one at a time.
///
/// After the last flip of round `i` the verdict equals what a batch run on
/// the same sequence would produce.
#[derive(Debug, Clone)]
pub struct StreamingDecider {
    config: CoinFlipper,
    threshold: Option<ExactThreshold>,
    heads_in_round: u64,
    flips_in_round: u64,
    rounds: Vec<RoundOutcome>,
    total_flips: u64,
    decision: Option<Decision>,
}

impl StreamingDecider {
    pub fn new(config: CoinFlipper) -> Result<Self> {
        let mut state = Self {
            config,
            threshold: None,
            heads_in_round: 0,
            flips_in_round: 0,
            rounds: Vec::new(),
            total_flips: 0,
            decision: None,
        };
        state.open_round(1)?;
        Ok(state)
    }

    fn open_round(&mut self, round: u32) -> Result<()> {
        let k = coinflipper_k(round, self.config.delta)?;
        let next_total = self
            .total_flips
            .checked_add(k)
            .ok_or(Error::BudgetOverflow {
                round,
                partial: None,
            })?;
        if self.config.budget.is_some_and(|b| next_total > b) {
            self.decision = Some(Decision::Undecided);
            self.threshold = None;
            return Ok(());
        }
        self.threshold = Some(ExactThreshold::new(self.config.q.exact(), k, round)?);
        self.heads_in_round = 0;
        self.flips_in_round = 0;
        Ok(())
    }

    /// Feed one flip (`true` = heads). Returns the decision once reached.
    pub fn feed(&mut self, heads: bool) -> Result<Option<Decision>> {
        if self.decision.is_some() {
            return Err(Error::UseAfterDecision);
        }
        let threshold = self
            .threshold
            .as_ref()
            .expect("an undecided stream always has an open round");
        self.flips_in_round += 1;
        self.heads_in_round += u64::from(heads);
        if self.flips_in_round < threshold.k() {
            return Ok(None);
        }
        let verdict = decide_round(self.heads_in_round, threshold)?;
        let round = threshold.round();
        let k = threshold.k();
        self.rounds.push(RoundOutcome {
            round,
            k,
            heads: self.heads_in_round,
            verdict,
        });
        self.total_flips += k;
        match verdict {
            Verdict::Yes => self.decision = Some(Decision::Yes),
            Verdict::No => self.decision = Some(Decision::No),
            Verdict::Continue => {
                if let Err(e) = self.open_round(round + 1) {
                    let partial = self.transcript();
                    return Err(e.with_partial(partial));
                }
            }
        }
        Ok(self.decision)
    }

    pub fn decision(&self) -> Option<Decision> {
        self.decision
    }

    /// The round currently collecting flips, if any.
    pub fn current_round(&self) -> Option<(u32, u64)> {
        self.threshold.as_ref().map(|t| (t.round(), t.k()))
    }

    /// Flips fed in the round that is still open.
    pub fn pending_flips(&self) -> u64 {
        if self.threshold.is_some() {
            self.flips_in_round
        } else {
            0
        }
    }

    /// Completed rounds so far. An undecided stream reports `Undecided`.
    pub fn transcript(&self) -> Transcript {
        Transcript {
            rounds: self.rounds.clone(),
            decision: self.decision.unwrap_or(Decision::Undecided),
            total_flips: self.total_flips,
            params: self.config.params(SourceDescriptor::Recorded {
                origin: Origin::Memory,
            }),
        }
    }

    pub fn q(&self) -> &BigRational {
        self.config.q.exact()
    }
}
