//! Sequential testing of whether a coin's heads probability `p` lies below
//! or above a known threshold `q`, without knowing the gap `|p − q|`.
//!
//! [`coinflipper::CoinFlipper`] halves its precision `ε = 1/2^i` every round
//! and inflates the sample size so that the error probability summed over
//! all rounds stays below `δ`. [`baseline::KnownGapTester`] is the
//! fixed-sample tester for a known gap. [`predict`] evaluates the bounds on
//! rounds and flips, and [`montecarlo`] checks them empirically.

pub mod baseline;
pub mod cli;
pub mod coinflipper;
pub mod domain;
pub mod error;
pub mod montecarlo;
pub mod predict;
pub mod schedule;
pub mod sources;

pub use coinflipper::{CoinFlipper, StreamingDecider};
pub use domain::{
    decide_round, parse_decimal, parse_probability, Confidence, Decision, ExactThreshold,
    Probability, RoundOutcome, Transcript, Verdict,
};
pub use error::{Error, Result};
pub use sources::{derive_trial_source, BernoulliSource, RecordedStream, SyntheticCoin};
