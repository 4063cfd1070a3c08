//! Sample sizes and the additive Chernoff–Hoeffding tail.
//!
//! Both sample-size formulas are evaluated in double precision and then
//! rounded up. `ε = 2^-i` makes the division by `2ε²` a power-of-two scaling,
//! so the only rounding comes from `ln`. For every (i, δ) the test suites use,
//! the unrounded value sits at least 8.9e-4 away from an integer, far
//! outside any libm disagreement. The logarithm in the CoinFlipper schedule
//! is rounded up by one ulp so `2kε² ≥ ln(π²i²/(6δ))` survives rounding even
//! where `k` exceeds 2^53.

use num_rational::BigRational;

use crate::domain::{round_epsilon, Confidence};
use crate::error::{Error, Result};

/// π², nearest double.
pub const PI_SQUARED: f64 = 9.869_604_401_089_358;

/// Largest round index the CoinFlipper schedule evaluates (ε = 2⁻³⁰).
pub const MAX_ROUND: u32 = 30;

/// Parameters of one CoinFlipper round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlan {
    pub round: u32,
    pub k: u64,
}

impl RoundPlan {
    pub fn coinflipper(round: u32, delta: Confidence) -> Result<Self> {
        Ok(Self {
            round,
            k: coinflipper_k(round, delta)?,
        })
    }

    pub fn epsilon(&self) -> BigRational {
        round_epsilon(self.round)
    }
}

/// `k_i = ⌈ln(π²i²/(6δ)) / (2ε²)⌉` with `ε = 1/2^i`, i.e. `⌈(4^i/2)·ln(π²i²/(6δ))⌉`.
pub fn coinflipper_k(round: u32, delta: Confidence) -> Result<u64> {
    if round == 0 {
        return Err(Error::InvalidParameter("round index starts at 1".into()));
    }
    if round > MAX_ROUND {
        return Err(Error::BudgetOverflow {
            round,
            partial: None,
        });
    }
    let i = f64::from(round);
    // One ulp up: above 2^53 the ceiling adds no slack, and k·2ε² must not
    // fall below the logarithm through rounding.
    let log_term = (PI_SQUARED * i * i / (6.0 * delta.delta())).ln().next_up();
    // 4^i / 2 = 2^(2i-1), exact in f64.
    let raw = (log_term * 2f64.powi(2 * round as i32 - 1)).ceil();
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::BudgetOverflow {
            round,
            partial: None,
        });
    }
    Ok((raw as u64).max(1))
}

/// Fixed sample size for a known gap: `⌈ln(1/δ) / (2ε²)⌉`.
pub fn fixed_sample_k(epsilon: f64, delta: Confidence) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon.to_string(),
        });
    }
    let raw = (-delta.delta().ln() / (2.0 * epsilon * epsilon)).ceil();
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!(
            "sample size for epsilon {epsilon} does not fit in 64 bits"
        )));
    }
    Ok((raw as u64).max(1))
}

/// Upper bound `e^{−2kε²}` on `Pr(X ≥ pk + εk)` (and on the lower tail).
pub fn hoeffding_tail(k: u64, epsilon: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon.to_string(),
        });
    }
    Ok((-2.0 * k as f64 * epsilon * epsilon).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(d: f64) -> Confidence {
        Confidence::new(d).unwrap()
    }

    // Frozen from a 50-digit evaluation of ⌈(4^i/2)·ln(π²i²/(6δ))⌉.
    #[test]
    fn coinflipper_table() {
        assert_eq!(coinflipper_k(1, conf(0.05)).unwrap(), 7);
        assert_eq!(coinflipper_k(2, conf(0.05)).unwrap(), 40);
        assert_eq!(coinflipper_k(1, conf(0.5)).unwrap(), 3);
        assert_eq!(coinflipper_k(2, conf(0.5)).unwrap(), 21);
        assert_eq!(coinflipper_k(3, conf(0.5)).unwrap(), 109);
        assert_eq!(coinflipper_k(4, conf(0.5)).unwrap(), 508);
        assert_eq!(coinflipper_k(5, conf(0.5)).unwrap(), 2258);
        assert_eq!(coinflipper_k(3, conf(0.1)).unwrap(), 160);
    }

    #[test]
    fn fixed_sample_table() {
        assert_eq!(fixed_sample_k(0.1, conf(0.05)).unwrap(), 150);
        assert_eq!(fixed_sample_k(0.5, conf((-2f64).exp())).unwrap(), 4);
        assert_eq!(fixed_sample_k(0.5, conf(0.5)).unwrap(), 2);
        assert_eq!(fixed_sample_k(0.25, conf(0.5)).unwrap(), 6);
        assert_eq!(fixed_sample_k(0.1, conf(0.1)).unwrap(), 116);
        assert!(fixed_sample_k(0.0, conf(0.5)).is_err());
        assert!(fixed_sample_k(1.0, conf(0.5)).is_err());
    }

    #[test]
    fn tail_values() {
        assert!((hoeffding_tail(100, 0.1).unwrap() - 0.135_335_283_236_612_7).abs() < 1e-12);
        assert!((hoeffding_tail(3, 0.5).unwrap() - 0.223_130_160_148_429_8).abs() < 1e-12);
        assert!(hoeffding_tail(1, 0.999).unwrap() < 1.0);
        assert!(hoeffding_tail(0, 0.5).is_err());
    }

    #[test]
    fn round_index_limits() {
        assert!(matches!(
            coinflipper_k(0, conf(0.1)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(coinflipper_k(MAX_ROUND, conf(0.1)).is_ok());
        assert!(matches!(
            coinflipper_k(MAX_ROUND + 1, conf(0.1)),
            Err(Error::BudgetOverflow { round: 31, .. })
        ));
        // 2^59 · ln(π²·900/(6δ)) leaves u64 range for tiny δ.
        assert!(matches!(
            coinflipper_k(MAX_ROUND, conf(1e-300)),
            Err(Error::BudgetOverflow { .. })
        ));
    }

    #[test]
    fn schedule_covers_union_bound() {
        for delta in [0.5, 0.1, 0.01, 1e-6] {
            let d = conf(delta);
            let mut prev = 0;
            for round in 1..=MAX_ROUND {
                let k = coinflipper_k(round, d).unwrap();
                let eps = 0.5f64.powi(round as i32);
                let need = (PI_SQUARED * f64::from(round * round) / (6.0 * delta)).ln();
                assert!(2.0 * k as f64 * eps * eps >= need, "i={round} δ={delta}");
                assert!(k >= prev);
                assert!(k >= fixed_sample_k(eps, d).unwrap());
                prev = k;
            }
        }
    }

    #[test]
    fn k_nonincreasing_in_delta() {
        for round in 1..=MAX_ROUND {
            let ks: Vec<u64> = [0.5, 0.2, 0.1, 0.05, 0.01, 1e-6]
                .iter()
                .map(|&d| coinflipper_k(round, conf(d)).unwrap())
                .collect();
            assert!(ks.windows(2).all(|w| w[0] <= w[1]), "i={round}: {ks:?}");
        }
    }
}
