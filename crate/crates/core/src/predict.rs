//! Non-asymptotic predictions: difficulty `d`, the iteration bound `d + 1.2`,
//! and an upper bound on the expected number of flips.
//!
//! The flips bound sums the first `d + 1` round sizes in full and weights
//! each later round `d + j + 1` by `(1/6)^{4^{j−1}}`, the bound on the
//! probability that the run is still going by then.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::domain::{format_fraction, rational_to_f64, Confidence, Probability};
use crate::error::{Error, Result};
use crate::schedule::coinflipper_k;

/// `d = ⌈log₂(1/|p − q|)⌉`, computed by exact comparison with powers of two.
pub fn difficulty(p: &BigRational, q: &BigRational) -> Result<u32> {
    let gap = (p - q).abs();
    if !gap.is_positive() {
        return Err(Error::Domain("difficulty is undefined when p = q".into()));
    }
    if gap >= BigRational::one() {
        return Err(Error::Domain("|p - q| must be below 1".into()));
    }
    // smallest d with 2^-d <= gap
    let mut d = 0u32;
    let mut power = BigRational::one();
    while power > gap {
        d += 1;
        power = BigRational::new(BigInt::one(), BigInt::one() << d as usize);
    }
    Ok(d)
}

pub fn difficulty_of(p: &Probability, q: &Probability) -> Result<u32> {
    difficulty(p.exact(), q.exact())
}

/// Bound on the expected number of rounds.
pub fn iteration_bound(d: u32) -> f64 {
    f64::from(d) + 1.2
}

/// Weight `(1/6)^{4^{j−1}}`; underflows to 0 from j = 6 on.
fn survival_weight(j: u32) -> f64 {
    if j > 6 {
        return 0.0;
    }
    (1.0f64 / 6.0).powf(4f64.powi(j as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Truncations of `Σ (1/6)^{4^{j−1}}`, `Σ 4^j (1/6)^{4^{j−1}}` and
/// `Σ_{j≥2} 4^j (1/6)^{4^{j−1}} ln j`, each over `j = 1..=terms`.
pub fn series_constants(terms: u32) -> SeriesConstants {
    let mut out = SeriesConstants {
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
    };
    for j in 1..=terms {
        let w = survival_weight(j);
        if w == 0.0 {
            break;
        }
        let scaled = 4f64.powi(j as i32) * w;
        out.c1 += w;
        out.c2 += scaled;
        out.c3 += scaled * f64::from(j).ln();
    }
    out
}

/// `Σ_{i=1}^{d+1} k_i + Σ_{j=1}^{tail_terms} (1/6)^{4^{j−1}} k_{d+j+1}`.
pub fn flips_upper_bound(d: u32, delta: Confidence, tail_terms: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("difficulty starts at 1".into()));
    }
    let mut total = 0.0;
    for round in 1..=d + 1 {
        total += coinflipper_k(round, delta)? as f64;
    }
    for j in 1..=tail_terms {
        let w = survival_weight(j);
        if w == 0.0 {
            break;
        }
        total += w * coinflipper_k(d + j + 1, delta)? as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifficultyReport {
    pub d: u32,
    pub gap: String,
    pub gap_value: f64,
    pub iteration_bound: f64,
    pub flips_upper_bound: f64,
    pub series: SeriesConstants,
}

pub const DEFAULT_TAIL_TERMS: u32 = 4;

pub fn report(
    p: &Probability,
    q: &Probability,
    delta: Confidence,
    tail_terms: u32,
) -> Result<DifficultyReport> {
    let d = difficulty_of(p, q)?;
    let gap = (p.exact() - q.exact()).abs();
    Ok(DifficultyReport {
        d,
        gap: format_fraction(&gap),
        gap_value: rational_to_f64(&gap),
        iteration_bound: iteration_bound(d),
        flips_upper_bound: flips_upper_bound(d, delta, tail_terms)?,
        series: series_constants(DEFAULT_TAIL_TERMS),
    })
}
