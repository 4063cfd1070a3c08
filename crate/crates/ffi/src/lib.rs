//! C ABI over `seqcoin`.
//!
//! Every fallible entry point returns a [`SeqcoinStatus`] and writes results
//! through out-pointers. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. The message for
//! the most recent failure on the calling thread is available from
//! [`seqcoin_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use seqcoin::baseline::KnownGapTester;
use seqcoin::montecarlo::{self, Algorithm, TrialConfig};
use seqcoin::predict;
use seqcoin::schedule;
use seqcoin::{
    parse_decimal, BernoulliSource, CoinFlipper, Confidence, Decision, Error, Probability,
    RecordedStream, StreamingDecider, SyntheticCoin, Transcript, Verdict,
};

/// Bumped on any incompatible change to the exported surface.
pub const SEQCOIN_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqcoinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ContractViolation = 3,
    SourceExhausted = 4,
    BudgetOverflow = 5,
    UseAfterDecision = 6,
    Io = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqcoinDecision {
    /// Streaming decider still collecting flips.
    Pending = 0,
    /// p < q
    Yes = 1,
    /// p > q
    No = 2,
    Undecided = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqcoinVerdict {
    Yes = 1,
    No = 2,
    Continue = 3,
}

impl From<Decision> for SeqcoinDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Yes => SeqcoinDecision::Yes,
            Decision::No => SeqcoinDecision::No,
            Decision::Undecided => SeqcoinDecision::Undecided,
        }
    }
}

impl From<Verdict> for SeqcoinVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Yes => SeqcoinVerdict::Yes,
            Verdict::No => SeqcoinVerdict::No,
            Verdict::Continue => SeqcoinVerdict::Continue,
        }
    }
}

fn status_of(err: &Error) -> SeqcoinStatus {
    match err {
        Error::OutOfRange { .. }
        | Error::MalformedDecimal { .. }
        | Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::StreamFormat { .. } => SeqcoinStatus::InvalidArgument,
        Error::ContractViolation(_) => SeqcoinStatus::ContractViolation,
        Error::SourceExhausted { .. } => SeqcoinStatus::SourceExhausted,
        Error::BudgetOverflow { .. } => SeqcoinStatus::BudgetOverflow,
        Error::UseAfterDecision => SeqcoinStatus::UseAfterDecision,
        Error::Io(_) => SeqcoinStatus::Io,
        Error::Trial { source, .. } => status_of(source),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(err: Error) -> SeqcoinStatus {
    let status = status_of(&err);
    set_last_error(err.to_string());
    status
}

fn null_arg(name: &str) -> SeqcoinStatus {
    set_last_error(format!("{name} is NULL"));
    SeqcoinStatus::NullPointer
}

/// Runs `body`, turning a panic into `SeqcoinStatus::Panic`.
fn guard(body: impl FnOnce() -> SeqcoinStatus) -> SeqcoinStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            SeqcoinStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SeqcoinStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(format!("{name} is not valid UTF-8"));
        SeqcoinStatus::InvalidArgument
    })
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(err),
        }
    };
}

macro_rules! out_ptr {
    ($p:ident) => {
        if $p.is_null() {
            return null_arg(stringify!($p));
        }
    };
}

fn budget_arg(budget: u64) -> Option<u64> {
    (budget != 0).then_some(budget)
}

#[no_mangle]
pub extern "C" fn seqcoin_abi_version() -> u32 {
    SEQCOIN_ABI_VERSION
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn seqcoin_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- sources

/// A stream of coin flips (synthetic or recorded).
pub struct SeqcoinSource {
    inner: Box<dyn BernoulliSource + Send>,
}

/// Seeded synthetic coin; `stream` selects an independent sub-stream
/// (trial index), 0 for a standalone coin.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_source_synthetic(
    p: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut SeqcoinSource,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let coin = try_lib!(SyntheticCoin::with_stream(p, seed, stream));
        *out = Box::into_raw(Box::new(SeqcoinSource {
            inner: Box::new(coin),
        }));
        SeqcoinStatus::Ok
    })
}

/// Recorded stream from NUL-terminated `H`/`T`/`1`/`0` text (whitespace ignored).
#[no_mangle]
pub unsafe extern "C" fn seqcoin_source_recorded(
    text: *const c_char,
    out: *mut *mut SeqcoinSource,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        if text.is_null() {
            return null_arg("text");
        }
        let bytes = CStr::from_ptr(text).to_bytes();
        let stream = try_lib!(RecordedStream::parse(bytes, seqcoin::sources::Origin::Memory));
        *out = Box::into_raw(Box::new(SeqcoinSource {
            inner: Box::new(stream),
        }));
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_source_flip_batch(
    source: *mut SeqcoinSource,
    k: u64,
    heads: *mut u64,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(heads);
        let Some(source) = source.as_mut() else {
            return null_arg("source");
        };
        let batch = try_lib!(source.inner.flip_batch(k));
        *heads = batch.heads;
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_source_free(source: *mut SeqcoinSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

// ------------------------------------------------------------ coinflipper

/// Result of a completed CoinFlipper run.
pub struct SeqcoinTranscript {
    inner: Transcript,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqcoinRound {
    pub round: u32,
    pub k: u64,
    pub heads: u64,
    pub verdict: SeqcoinVerdict,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqcoinRunSummary {
    pub decision: SeqcoinDecision,
    pub iterations: u64,
    pub total_flips: u64,
}

fn summary(t: &Transcript) -> SeqcoinRunSummary {
    SeqcoinRunSummary {
        decision: t.decision.into(),
        iterations: t.iterations() as u64,
        total_flips: t.total_flips,
    }
}

/// Run CoinFlipper on `source`. `budget` 0 means unbounded.
///
/// On `SourceExhausted` or `BudgetOverflow` a transcript of the completed
/// rounds (decision UNDECIDED) is still written to `out`.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_coinflipper_run(
    source: *mut SeqcoinSource,
    q: *const c_char,
    delta: f64,
    budget: u64,
    out: *mut *mut SeqcoinTranscript,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        *out = ptr::null_mut();
        let Some(source) = source.as_mut() else {
            return null_arg("source");
        };
        let q = try_lib!(Probability::new(try_status!(read_str(q, "q"))));
        let delta = try_lib!(Confidence::new(delta));
        let tester = try_lib!(CoinFlipper::new(q, delta).with_budget(budget_arg(budget)));
        match tester.run(source.inner.as_mut()) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(SeqcoinTranscript { inner: t }));
                SeqcoinStatus::Ok
            }
            Err(e) => {
                if let Some(partial) = e.partial_transcript() {
                    *out = Box::into_raw(Box::new(SeqcoinTranscript {
                        inner: partial.clone(),
                    }));
                }
                fail(e)
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_transcript_summary(
    transcript: *const SeqcoinTranscript,
    out: *mut SeqcoinRunSummary,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let Some(t) = transcript.as_ref() else {
            return null_arg("transcript");
        };
        *out = summary(&t.inner);
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_transcript_round(
    transcript: *const SeqcoinTranscript,
    index: u64,
    out: *mut SeqcoinRound,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let Some(t) = transcript.as_ref() else {
            return null_arg("transcript");
        };
        let Some(r) = usize::try_from(index).ok().and_then(|i| t.inner.rounds.get(i)) else {
            set_last_error(format!("round index {index} out of range"));
            return SeqcoinStatus::InvalidArgument;
        };
        *out = SeqcoinRound {
            round: r.round,
            k: r.k,
            heads: r.heads,
            verdict: r.verdict.into(),
        };
        SeqcoinStatus::Ok
    })
}

/// The `decide --transcript` JSON document, or NULL on failure. Free with
/// `seqcoin_string_free`.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_transcript_json(transcript: *const SeqcoinTranscript) -> *mut c_char {
    let mut raw = ptr::null_mut();
    guard(|| {
        let Some(t) = transcript.as_ref() else {
            return null_arg("transcript");
        };
        let json = seqcoin::cli::transcript_json(&t.inner, true);
        raw = CString::new(json.trim_end()).map_or(ptr::null_mut(), CString::into_raw);
        SeqcoinStatus::Ok
    });
    raw
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_transcript_free(transcript: *mut SeqcoinTranscript) {
    if !transcript.is_null() {
        drop(Box::from_raw(transcript));
    }
}

// ------------------------------------------------------------- streaming

/// Incremental CoinFlipper fed one flip at a time.
pub struct SeqcoinDecider {
    inner: StreamingDecider,
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_decider_new(
    q: *const c_char,
    delta: f64,
    budget: u64,
    out: *mut *mut SeqcoinDecider,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let q = try_lib!(Probability::new(try_status!(read_str(q, "q"))));
        let delta = try_lib!(Confidence::new(delta));
        let tester = try_lib!(CoinFlipper::new(q, delta).with_budget(budget_arg(budget)));
        let inner = try_lib!(tester.streaming());
        *out = Box::into_raw(Box::new(SeqcoinDecider { inner }));
        SeqcoinStatus::Ok
    })
}

/// Feed one flip (`heads` nonzero for heads). `decision` receives PENDING
/// until a decision is reached; feeding afterwards fails with
/// `UseAfterDecision`.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_decider_feed(
    decider: *mut SeqcoinDecider,
    heads: bool,
    decision: *mut SeqcoinDecision,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(decision);
        let Some(d) = decider.as_mut() else {
            return null_arg("decider");
        };
        let reached = try_lib!(d.inner.feed(heads));
        *decision = reached.map_or(SeqcoinDecision::Pending, Into::into);
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_decider_summary(
    decider: *const SeqcoinDecider,
    out: *mut SeqcoinRunSummary,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let Some(d) = decider.as_ref() else {
            return null_arg("decider");
        };
        let mut s = summary(&d.inner.transcript());
        if d.inner.decision().is_none() {
            s.decision = SeqcoinDecision::Pending;
        }
        *out = s;
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_decider_free(decider: *mut SeqcoinDecider) {
    if !decider.is_null() {
        drop(Box::from_raw(decider));
    }
}

// --------------------------------------------------------------- baseline

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqcoinBaselineOutcome {
    pub decision: SeqcoinDecision,
    pub k: u64,
    pub heads: u64,
}

/// Fixed-sample tester for a known gap `epsilon` (decimal text).
#[no_mangle]
pub unsafe extern "C" fn seqcoin_baseline_run(
    source: *mut SeqcoinSource,
    q: *const c_char,
    epsilon: *const c_char,
    delta: f64,
    out: *mut SeqcoinBaselineOutcome,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let Some(source) = source.as_mut() else {
            return null_arg("source");
        };
        let q = try_lib!(Probability::new(try_status!(read_str(q, "q"))));
        let epsilon = try_lib!(parse_decimal(try_status!(read_str(epsilon, "epsilon"))));
        let delta = try_lib!(Confidence::new(delta));
        let tester = try_lib!(KnownGapTester::new(q, epsilon, delta));
        let o = try_lib!(tester.run(source.inner.as_mut()));
        *out = SeqcoinBaselineOutcome {
            decision: o.decision.into(),
            k: o.k,
            heads: o.heads,
        };
        SeqcoinStatus::Ok
    })
}

// ------------------------------------------------------- schedule/predict

#[no_mangle]
pub unsafe extern "C" fn seqcoin_coinflipper_k(round: u32, delta: f64, out: *mut u64) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let delta = try_lib!(Confidence::new(delta));
        *out = try_lib!(schedule::coinflipper_k(round, delta));
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_fixed_sample_k(epsilon: f64, delta: f64, out: *mut u64) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let delta = try_lib!(Confidence::new(delta));
        *out = try_lib!(schedule::fixed_sample_k(epsilon, delta));
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_hoeffding_tail(k: u64, epsilon: f64, out: *mut f64) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        *out = try_lib!(schedule::hoeffding_tail(k, epsilon));
        SeqcoinStatus::Ok
    })
}

/// `⌈log₂(1/|p − q|)⌉` for decimal `p`, `q`.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_difficulty(
    p: *const c_char,
    q: *const c_char,
    out: *mut u32,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let p = try_lib!(Probability::new(try_status!(read_str(p, "p"))));
        let q = try_lib!(Probability::new(try_status!(read_str(q, "q"))));
        *out = try_lib!(predict::difficulty_of(&p, &q));
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn seqcoin_iteration_bound(d: u32) -> f64 {
    predict::iteration_bound(d)
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqcoinSeries {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_series_constants(terms: u32, out: *mut SeqcoinSeries) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let s = predict::series_constants(terms);
        *out = SeqcoinSeries {
            c1: s.c1,
            c2: s.c2,
            c3: s.c3,
        };
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_flips_upper_bound(
    d: u32,
    delta: f64,
    tail_terms: u32,
    out: *mut f64,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let delta = try_lib!(Confidence::new(delta));
        *out = try_lib!(predict::flips_upper_bound(d, delta, tail_terms));
        SeqcoinStatus::Ok
    })
}

// ------------------------------------------------------------ montecarlo

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqcoinTrialStats {
    pub trials: u64,
    pub decisions: u64,
    pub wrong: u64,
    pub undecided: u64,
    pub error_rate: f64,
    pub error_rate_defined: bool,
    pub error_rate_wilson_hi99: f64,
    pub mean_iterations: f64,
    pub sem_iterations: f64,
    pub mean_flips: f64,
    pub sem_flips: f64,
    pub min_flips: u64,
    pub max_flips: u64,
    /// -1 when p = q.
    pub d: i32,
    /// NaN when undefined.
    pub iteration_bound: f64,
    /// NaN when undefined.
    pub flips_upper_bound: f64,
}

/// Monte Carlo run. `epsilon` NULL selects CoinFlipper, otherwise the
/// known-gap baseline. `budget` 0 means unbounded, `workers` 0 all cores.
#[no_mangle]
pub unsafe extern "C" fn seqcoin_simulate(
    p: *const c_char,
    q: *const c_char,
    delta: f64,
    trials: u64,
    seed: u64,
    budget: u64,
    workers: u32,
    epsilon: *const c_char,
    out: *mut SeqcoinTrialStats,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        let p = try_lib!(Probability::new(try_status!(read_str(p, "p"))));
        let q = try_lib!(Probability::new(try_status!(read_str(q, "q"))));
        let delta = try_lib!(Confidence::new(delta));
        let algorithm = if epsilon.is_null() {
            Algorithm::CoinFlipper
        } else {
            Algorithm::Baseline {
                epsilon: try_lib!(parse_decimal(try_status!(read_str(epsilon, "epsilon")))),
            }
        };
        let config = TrialConfig::coinflipper(p, q, delta, trials, seed)
            .with_budget(budget_arg(budget))
            .with_algorithm(algorithm);
        let s = try_lib!(montecarlo::run_trials(&config, workers as usize));
        *out = SeqcoinTrialStats {
            trials: s.trials,
            decisions: s.decisions,
            wrong: s.wrong,
            undecided: s.undecided,
            error_rate: s.error_rate,
            error_rate_defined: s.error_rate_defined,
            error_rate_wilson_hi99: s.error_rate_wilson_hi99,
            mean_iterations: s.mean_iterations,
            sem_iterations: s.sem_iterations,
            mean_flips: s.mean_flips,
            sem_flips: s.sem_flips,
            min_flips: s.min_flips,
            max_flips: s.max_flips,
            d: s.d.map_or(-1, |d| d as i32),
            iteration_bound: s.iteration_bound.unwrap_or(f64::NAN),
            flips_upper_bound: s.flips_upper_bound.unwrap_or(f64::NAN),
        };
        SeqcoinStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn seqcoin_wilson_upper(
    successes: u64,
    n: u64,
    confidence: f64,
    out: *mut f64,
) -> SeqcoinStatus {
    guard(|| {
        out_ptr!(out);
        *out = try_lib!(montecarlo::wilson_upper(successes, n, confidence));
        SeqcoinStatus::Ok
    })
}
