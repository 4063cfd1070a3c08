//! Validated parameters, outcome types and the exact per-round verdict rule.
//!
//! Threshold comparisons never touch floating point: `q` is kept as the
//! rational the user typed, `ε = 1/2^i` is a dyadic rational and `k` is an
//! integer, so the boundaries `qk − εk` and `qk + εk` are exact. Ties land on
//! integers often enough (`q = 1/2`, `i = 1`) that rounding would flip
//! verdicts.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::SourceDescriptor;

/// Parse a finite decimal (`"0.05"`, `".5"`, `"3"`, `"1e-6"`) into an exact rational.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let malformed = |reason| Error::MalformedDecimal {
        text: text.to_string(),
        reason,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(malformed("empty"));
    }
    let (negative, body) = match trimmed.as_bytes()[0] {
        b'-' => (true, &trimmed[1..]),
        b'+' => (false, &trimmed[1..]),
        _ => (false, trimmed),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = body[pos + 1..]
                .parse()
                .map_err(|_| malformed("bad exponent"))?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(malformed("not a decimal number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = digits.parse().map_err(|_| malformed("no digits"))?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    Ok(value)
}

/// Parse a decimal that must lie in the open interval (0, 1).
pub fn parse_probability(text: &str) -> Result<BigRational> {
    let value = parse_decimal(text)?;
    if !in_open_unit(&value) {
        return Err(Error::OutOfRange {
            what: "probability",
            value: text.trim().to_string(),
        });
    }
    Ok(value)
}

fn in_open_unit(value: &BigRational) -> bool {
    value.is_positive() && *value < BigRational::one()
}

/// Render a rational whose denominator has only factors 2 and 5 as a plain decimal.
pub fn format_decimal(value: &BigRational) -> Option<String> {
    let mut den = value.denom().clone();
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = value * BigRational::from_integer(num_traits::pow(BigInt::from(10u8), places));
    let digits = scaled.to_integer().abs().to_string();
    let sign = if value.is_negative() { "-" } else { "" };
    if places == 0 {
        return Some(format!("{sign}{digits}"));
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// `a/b` in lowest terms, `"1/2"` style; integers print without a denominator.
pub fn format_fraction(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// A probability in (0, 1) that remembers the decimal it was written as.
#[derive(Clone, PartialEq, Eq)]
pub struct Probability {
    text: String,
    exact: BigRational,
}

impl Probability {
    pub fn new(text: &str) -> Result<Self> {
        let exact = parse_probability(text)?;
        Ok(Self {
            text: text.trim().to_string(),
            exact,
        })
    }

    pub fn from_rational(exact: BigRational) -> Result<Self> {
        if !in_open_unit(&exact) {
            return Err(Error::OutOfRange {
                what: "probability",
                value: format_fraction(&exact),
            });
        }
        let text = format_decimal(&exact).unwrap_or_else(|| format_fraction(&exact));
        Ok(Self { text, exact })
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Nearest double; used only to drive sampling.
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.exact)
    }

    /// `1 − self`.
    pub fn complement(&self) -> Self {
        Self::from_rational(BigRational::one() - &self.exact)
            .expect("complement of a value in (0,1) stays in (0,1)")
    }
}

impl fmt::Debug for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Probability({})", self.text)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for Probability {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

pub(crate) fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Failure probability δ in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Confidence(f64);

impl Confidence {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta > 0.0 && delta < 1.0 {
            Ok(Self(delta))
        } else {
            Err(Error::OutOfRange {
                what: "delta",
                value: delta.to_string(),
            })
        }
    }

    pub fn delta(self) -> f64 {
        self.0
    }
}

impl FromStr for Confidence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let exact = parse_decimal(s)?;
        if !in_open_unit(&exact) {
            return Err(Error::OutOfRange {
                what: "delta",
                value: s.trim().to_string(),
            });
        }
        Self::new(rational_to_f64(&exact))
    }
}

impl TryFrom<f64> for Confidence {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Confidence> for f64 {
    fn from(c: Confidence) -> f64 {
        c.0
    }
}

/// Outcome of a single round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Yes,
    Continue,
    No,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "YES",
            Verdict::Continue => "CONTINUE",
            Verdict::No => "NO",
        }
    }
}

/// Final answer of a run. `Yes` means p < q, `No` means p > q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Yes,
    No,
    /// The flip budget ran out before the rule produced an answer.
    Undecided,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Yes => "YES",
            Decision::No => "NO",
            Decision::Undecided => "UNDECIDED",
        }
    }

    pub fn meaning(self) -> Option<&'static str> {
        match self {
            Decision::Yes => Some("p<q"),
            Decision::No => Some("p>q"),
            Decision::Undecided => None,
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Decision::Yes => Decision::No,
            Decision::No => Decision::Yes,
            Decision::Undecided => Decision::Undecided,
        }
    }

    pub fn is_decided(self) -> bool {
        !matches!(self, Decision::Undecided)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `ε = 1/2^round` as an exact rational.
pub fn round_epsilon(round: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << round as usize)
}

/// The exact YES/NO boundaries `qk ∓ εk` of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactThreshold {
    q: BigRational,
    k: u64,
    round: u32,
    lower: BigRational,
    upper: BigRational,
}

impl ExactThreshold {
    pub fn new(q: &BigRational, k: u64, round: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if round == 0 {
            return Err(Error::InvalidParameter("round index starts at 1".into()));
        }
        let kr = BigRational::from_integer(BigInt::from(k));
        let center = q * &kr;
        let half_width = round_epsilon(round) * &kr;
        Ok(Self {
            q: q.clone(),
            k,
            round,
            lower: &center - &half_width,
            upper: center + half_width,
        })
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// `qk − εk`
    pub fn lower(&self) -> &BigRational {
        &self.lower
    }

    /// `qk + εk`
    pub fn upper(&self) -> &BigRational {
        &self.upper
    }
}

/// Apply the round rule: YES iff `heads ≤ qk − εk`, NO iff `heads ≥ qk + εk`.
pub fn decide_round(heads: u64, threshold: &ExactThreshold) -> Result<Verdict> {
    if heads > threshold.k {
        return Err(Error::ContractViolation(format!(
            "{heads} heads exceeds round size {}",
            threshold.k
        )));
    }
    let x = BigRational::from_integer(BigInt::from(heads));
    Ok(if x <= threshold.lower {
        Verdict::Yes
    } else if x >= threshold.upper {
        Verdict::No
    } else {
        Verdict::Continue
    })
}

/// One completed loop pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    #[serde(rename = "i")]
    pub round: u32,
    pub k: u64,
    pub heads: u64,
    pub verdict: Verdict,
}

impl RoundOutcome {
    pub fn epsilon(&self) -> BigRational {
        round_epsilon(self.round)
    }
}

/// Inputs echoed into a transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub q: String,
    pub delta: Confidence,
    pub budget: Option<u64>,
    pub source: SourceDescriptor,
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub rounds: Vec<RoundOutcome>,
    pub decision: Decision,
    pub total_flips: u64,
    pub params: RunParams,
}

impl Transcript {
    pub fn iterations(&self) -> usize {
        self.rounds.len()
    }

    /// Checks the structural invariants: contiguous round indices, flip
    /// accounting, and a verdict chain ending in the decision.
    pub fn is_well_formed(&self) -> bool {
        let indices_ok = self
            .rounds
            .iter()
            .enumerate()
            .all(|(n, r)| r.round as usize == n + 1 && r.heads <= r.k);
        let sum: Option<u64> = self.rounds.iter().try_fold(0u64, |acc, r| acc.checked_add(r.k));
        let flips_ok = sum == Some(self.total_flips);
        let budget_ok = self.params.budget.is_none_or(|b| self.total_flips <= b);
        let chain_ok = match self.rounds.split_last() {
            None => self.decision == Decision::Undecided,
            Some((last, init)) => {
                init.iter().all(|r| r.verdict == Verdict::Continue)
                    && match self.decision {
                        Decision::Yes => last.verdict == Verdict::Yes,
                        Decision::No => last.verdict == Verdict::No,
                        Decision::Undecided => last.verdict == Verdict::Continue,
                    }
            }
        };
        indices_ok && flips_ok && budget_ok && chain_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn half_threshold(k: u64, round: u32) -> ExactThreshold {
        ExactThreshold::new(&rat(1, 2), k, round).unwrap()
    }

    #[test]
    fn round_rule_examples() {
        let t = half_threshold(3, 1);
        assert_eq!(t.lower(), &rat(0, 1));
        assert_eq!(t.upper(), &rat(3, 1));
        assert_eq!(decide_round(3, &t).unwrap(), Verdict::No);
        assert_eq!(decide_round(0, &t).unwrap(), Verdict::Yes);
        assert_eq!(decide_round(1, &t).unwrap(), Verdict::Continue);

        let t = half_threshold(21, 2);
        assert_eq!(t.lower(), &rat(21, 4));
        assert_eq!(t.upper(), &rat(63, 4));
        assert_eq!(decide_round(5, &t).unwrap(), Verdict::Yes);
        assert_eq!(decide_round(6, &t).unwrap(), Verdict::Continue);
        assert_eq!(decide_round(15, &t).unwrap(), Verdict::Continue);
        assert_eq!(decide_round(16, &t).unwrap(), Verdict::No);
    }

    #[test]
    fn heads_above_k_is_a_contract_violation() {
        let t = half_threshold(3, 1);
        assert!(matches!(
            decide_round(4, &t),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_probability("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_probability("0.05").unwrap(), rat(1, 20));
        assert_eq!(parse_probability(".25").unwrap(), rat(1, 4));
        assert_eq!(parse_probability("5e-2").unwrap(), rat(1, 20));
        assert!(matches!(
            parse_probability("1.0"),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            parse_probability("0"),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            parse_probability("-0.2"),
            Err(Error::OutOfRange { .. })
        ));
        for bad in ["", ".", "0.5.1", "abc", "0,5", "1e", "nan", "0x1"] {
            assert!(
                matches!(parse_probability(bad), Err(Error::MalformedDecimal { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(&rat(1, 2)).unwrap(), "0.5");
        assert_eq!(format_decimal(&rat(1, 20)).unwrap(), "0.05");
        assert_eq!(format_decimal(&rat(9, 16)).unwrap(), "0.5625");
        assert_eq!(format_decimal(&rat(3, 1)).unwrap(), "3");
        assert_eq!(format_decimal(&rat(1, 3)), None);
        assert_eq!(format_fraction(&round_epsilon(3)), "1/8");
    }

    #[test]
    fn complement_text() {
        let q = Probability::new("0.3").unwrap();
        assert_eq!(q.complement().text(), "0.7");
        assert_eq!(q.complement().complement(), Probability::new("0.3").unwrap());
    }

    #[test]
    fn confidence_bounds() {
        assert!(Confidence::new(0.0).is_err());
        assert!(Confidence::new(1.0).is_err());
        assert!(Confidence::new(f64::NAN).is_err());
        assert_eq!("0.05".parse::<Confidence>().unwrap().delta(), 0.05);
        assert!("1".parse::<Confidence>().is_err());
    }

    #[test]
    fn decision_labels() {
        assert_eq!(Decision::Yes.meaning(), Some("p<q"));
        assert_eq!(Decision::No.meaning(), Some("p>q"));
        assert_eq!(Decision::Undecided.meaning(), None);
        assert_eq!(Decision::Yes.mirrored(), Decision::No);
    }
}
