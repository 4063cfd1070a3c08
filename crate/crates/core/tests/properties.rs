use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use seqcoin::baseline::KnownGapTester;
use seqcoin::domain::format_decimal;
use seqcoin::{
    decide_round, parse_probability, BernoulliSource, CoinFlipper, Confidence, Decision,
    ExactThreshold, Probability, RecordedStream, Verdict,
};

fn decimal_q() -> impl Strategy<Value = String> {
    (1u32..=4).prop_flat_map(|digits| {
        let scale = 10u64.pow(digits);
        (1..scale).prop_map(move |n| format!("0.{n:0>width$}", width = digits as usize))
    })
}

fn flips(max_len: usize) -> impl Strategy<Value = Vec<bool>> {
    (0.0f64..1.0).prop_flat_map(move |bias| {
        proptest::collection::vec(proptest::bool::weighted(bias.clamp(0.001, 0.999)), 0..max_len)
    })
}

fn delta() -> impl Strategy<Value = Confidence> {
    (0.001f64..0.999).prop_map(|d| Confidence::new(d).unwrap())
}

fn mirrored_q(q: &str) -> BigRational {
    BigRational::from_integer(1.into()) - parse_probability(q).unwrap()
}

proptest! {
    #[test]
    fn round_rule_mirror(q in decimal_q(), k in 1u64..1_000_000, round in 1u32..=30, frac in 0.0f64..=1.0) {
        let heads = ((k as f64) * frac).floor() as u64;
        let q_exact = parse_probability(&q).unwrap();
        let t = ExactThreshold::new(&q_exact, k, round).unwrap();
        let m = ExactThreshold::new(&mirrored_q(&q), k, round).unwrap();
        let v = decide_round(heads, &t).unwrap();
        let w = decide_round(k - heads, &m).unwrap();
        let expected = match v {
            Verdict::Yes => Verdict::No,
            Verdict::No => Verdict::Yes,
            Verdict::Continue => Verdict::Continue,
        };
        prop_assert_eq!(w, expected);
    }

    #[test]
    fn round_rule_monotone_in_heads(q in decimal_q(), k in 1u64..400, round in 1u32..=12) {
        let t = ExactThreshold::new(&parse_probability(&q).unwrap(), k, round).unwrap();
        let verdicts: Vec<Verdict> = (0..=k).map(|x| decide_round(x, &t).unwrap()).collect();
        prop_assert!(verdicts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn equal_rationals_give_equal_verdicts(n in 1u32..100, k in 1u64..10_000, round in 1u32..=20, x in 0.0f64..=1.0) {
        let heads = ((k as f64) * x).floor() as u64;
        let forms = [format!("0.{n:02}"), format!("0.{n:02}00"), format!("{n}e-2"), format!("00.{n:02}0")];
        let verdicts: Vec<Verdict> = forms
            .iter()
            .map(|f| {
                let t = ExactThreshold::new(&parse_probability(f).unwrap(), k, round).unwrap();
                decide_round(heads, &t).unwrap()
            })
            .collect();
        prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{:?}", verdicts);
    }

    #[test]
    fn decimal_text_round_trips(q in decimal_q()) {
        let exact = parse_probability(&q).unwrap();
        let text = format_decimal(&exact).unwrap();
        prop_assert_eq!(parse_probability(&text).unwrap(), exact);
        prop_assert!(q.trim_end_matches('0').ends_with(text.trim_start_matches('0')));
    }

    #[test]
    fn streaming_matches_batch(seq in flips(3000), q in decimal_q(), d in delta(), budget in proptest::option::of(1u64..5000)) {
        let tester = CoinFlipper::new(Probability::new(&q).unwrap(), d).with_budget(budget).unwrap();
        let batch = tester.run(&mut RecordedStream::from_flips(seq.clone()));
        let mut stream = tester.streaming().unwrap();
        let mut fed = 0;
        for &flip in &seq {
            if stream.decision().is_some() {
                break;
            }
            stream.feed(flip).unwrap();
            fed += 1;
        }
        let streamed = stream.transcript();
        match batch {
            Ok(t) => {
                prop_assert_eq!(&t.rounds, &streamed.rounds);
                prop_assert_eq!(t.decision, streamed.decision);
                prop_assert_eq!(t.total_flips, streamed.total_flips);
                prop_assert!(t.is_well_formed());
                if t.decision.is_decided() {
                    prop_assert_eq!(fed as u64, t.total_flips);
                }
            }
            Err(e) => {
                // the stream ran dry mid-round: same completed rounds, still undecided
                let partial = e.partial_transcript().unwrap();
                prop_assert_eq!(&partial.rounds, &streamed.rounds);
                prop_assert!(stream.decision().is_none());
                prop_assert_eq!(stream.pending_flips() + streamed.total_flips, seq.len() as u64);
            }
        }
    }

    #[test]
    fn coinflipper_mirror(seq in flips(4000), q in decimal_q(), d in delta()) {
        let q = Probability::new(&q).unwrap();
        let original = RecordedStream::from_flips(seq);
        let a = CoinFlipper::new(q.clone(), d).run(&mut original.clone());
        let b = CoinFlipper::new(q.complement(), d).run(&mut original.swapped());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(b.decision, a.decision.mirrored());
                prop_assert_eq!(a.total_flips, b.total_flips);
                let mirrored: Vec<(u64, u64)> = a.rounds.iter().map(|r| (r.k, r.k - r.heads)).collect();
                let other: Vec<(u64, u64)> = b.rounds.iter().map(|r| (r.k, r.heads)).collect();
                prop_assert_eq!(mirrored, other);
            }
            (Err(a), Err(b)) => {
                prop_assert_eq!(
                    a.partial_transcript().unwrap().rounds.len(),
                    b.partial_transcript().unwrap().rounds.len()
                );
            }
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn baseline_mirror_off_ties(seq in flips(2000), q in decimal_q(), d in delta(), frac in 0.01f64..0.99) {
        let q = Probability::new(&q).unwrap();
        let limit = std::cmp::min(q.exact().clone(), q.complement().exact().clone());
        let eps = limit * BigRational::new(((frac * 100.0) as i64).max(1).into(), 100.into());
        let tester = KnownGapTester::new(q.clone(), eps.clone(), d).unwrap();
        let original = RecordedStream::from_flips(seq);
        let a = tester.run(&mut original.clone());
        let b = KnownGapTester::new(q.complement(), eps, d).unwrap().run(&mut original.swapped());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let tie = BigRational::from_integer(BigInt::from(a.heads))
                    == q.exact() * BigRational::from_integer(BigInt::from(a.k));
                prop_assert_eq!(a.k, b.k);
                if tie {
                    prop_assert_eq!((a.decision, b.decision), (Decision::Yes, Decision::Yes));
                } else {
                    prop_assert_eq!(b.decision, a.decision.mirrored());
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn recorded_batches_are_order_insensitive(seq in proptest::collection::vec(any::<bool>(), 1..200), seed in any::<u64>()) {
        let mut shuffled = seq.clone();
        // deterministic permutation from the seed
        let n = shuffled.len();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let k = n as u64;
        let a = RecordedStream::from_flips(seq).flip_batch(k).unwrap();
        let b = RecordedStream::from_flips(shuffled).flip_batch(k).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a.flips_consumed, k);
    }
}
