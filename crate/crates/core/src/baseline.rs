//! Fixed-sample tester for the known-gap promise `p ∈ {q − ε, q + ε}`.
//!
//! Flips exactly `k = ⌈ln(1/δ)/(2ε²)⌉` coins and answers YES iff `X ≤ qk`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::domain::{format_fraction, rational_to_f64, Confidence, Decision, Probability};
use crate::error::{Error, Result};
use crate::schedule::fixed_sample_k;
use crate::sources::BernoulliSource;

#[derive(Debug, Clone, PartialEq)]
pub struct KnownGapTester {
    q: Probability,
    epsilon: BigRational,
    delta: Confidence,
    k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineOutcome {
    pub decision: Decision,
    pub k: u64,
    pub heads: u64,
}

impl KnownGapTester {
    /// Requires `0 < ε < min(q, 1 − q)`.
    pub fn new(q: Probability, epsilon: BigRational, delta: Confidence) -> Result<Self> {
        let limit = std::cmp::min(q.exact().clone(), BigRational::one() - q.exact());
        if !epsilon.is_positive() || epsilon >= limit {
            return Err(Error::Domain(format!(
                "epsilon {} must lie in (0, min(q, 1-q)) = (0, {})",
                format_fraction(&epsilon),
                format_fraction(&limit)
            )));
        }
        let k = fixed_sample_k(rational_to_f64(&epsilon), delta)?;
        Ok(Self {
            q,
            epsilon,
            delta,
            k,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn q(&self) -> &Probability {
        &self.q
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn delta(&self) -> Confidence {
        self.delta
    }

    pub fn run<S: BernoulliSource + ?Sized>(&self, source: &mut S) -> Result<BaselineOutcome> {
        let batch = source.flip_batch(self.k)?;
        let center = self.q.exact() * BigRational::from_integer(BigInt::from(self.k));
        let decision = if BigRational::from_integer(BigInt::from(batch.heads)) <= center {
            Decision::Yes
        } else {
            Decision::No
        };
        Ok(BaselineOutcome {
            decision,
            k: self.k,
            heads: batch.heads,
        })
    }
}

/// One-shot form of [`KnownGapTester`].
pub fn run_known_gap<S: BernoulliSource + ?Sized>(
    source: &mut S,
    q: &str,
    epsilon: &str,
    delta: Confidence,
) -> Result<BaselineOutcome> {
    let q = Probability::new(q)?;
    let epsilon = crate::domain::parse_decimal(epsilon)?;
    KnownGapTester::new(q, epsilon, delta)?.run(source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::RecordedStream;

    fn half() -> Confidence {
        Confidence::new(0.5).unwrap()
    }

    #[test]
    fn epsilon_domain() {
        let mut s: RecordedStream = "HHHHHH".parse().unwrap();
        assert!(matches!(
            run_known_gap(&mut s, "0.5", "0.5", half()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            run_known_gap(&mut s, "0.3", "0.3", half()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            run_known_gap(&mut s, "0.3", "0", half()),
            Err(Error::Domain(_))
        ));
        assert_eq!(s.remaining(), 6);
    }

    #[test]
    fn decisions_at_the_boundary() {
        let mut s: RecordedStream = "HHHHHH".parse().unwrap();
        let out = run_known_gap(&mut s, "0.5", "0.25", half()).unwrap();
        assert_eq!(out, BaselineOutcome { decision: Decision::No, k: 6, heads: 6 });
        assert_eq!(s.remaining(), 0);

        let mut s: RecordedStream = "TTTHHH".parse().unwrap();
        let out = run_known_gap(&mut s, "0.5", "0.25", half()).unwrap();
        assert_eq!(out.decision, Decision::Yes);

        let mut s: RecordedStream = "TTHHHH".parse().unwrap();
        assert_eq!(run_known_gap(&mut s, "0.5", "0.25", half()).unwrap().decision, Decision::No);
    }

    #[test]
    fn leaves_surplus_symbols() {
        let mut s: RecordedStream = "TTTHHHHH".parse().unwrap();
        run_known_gap(&mut s, "0.5", "0.25", half()).unwrap();
        assert_eq!(s.remaining(), 2);
        let mut short: RecordedStream = "TTT".parse().unwrap();
        assert!(matches!(
            run_known_gap(&mut short, "0.5", "0.25", half()),
            Err(Error::SourceExhausted { remaining: 3, .. })
        ));
    }
}
