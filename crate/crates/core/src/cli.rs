//! Command-line front end.
//!
//! Exit status is 0 when a decision was reached (or a report printed), 2 when
//! a run ended UNDECIDED, and 1 for any error.

use std::ffi::OsString;
use std::io::Read;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baseline::KnownGapTester;
use crate::coinflipper::{CoinFlipper, DEFAULT_CLI_BUDGET};
use crate::domain::{format_fraction, parse_decimal, Confidence, Decision, Probability, Transcript};
use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, sweep, Algorithm, TrialConfig, TrialStats};
use crate::predict::{report, DEFAULT_TAIL_TERMS};
use crate::sources::{BernoulliSource, RecordedStream, SyntheticCoin};

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

/// Columns of `simulate --format csv` and `sweep --format csv`.
pub const CSV_HEADER: &str = "p,q,delta,trials,wrong,undecided,error_rate,wilson_hi99,mean_iters,sem_iters,mean_flips,sem_flips,d,iter_bound,flips_bound";

#[derive(Debug, Parser)]
#[command(name = "seqcoin", version, about = "Decide whether a coin's heads probability is below or above a threshold")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sequential tester on one coin.
    Decide(DecideArgs),
    /// Run the fixed-sample tester for a known gap.
    Baseline(BaselineArgs),
    /// Monte Carlo statistics for one parameter set.
    Simulate(SimulateArgs),
    /// Monte Carlo statistics over a grid of parameter sets.
    Sweep(SweepArgs),
    /// Theoretical bounds on rounds and flips.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).multiple(false).args(["p", "stdin", "file"])))]
struct SourceArgs {
    /// Heads probability of a synthetic coin (requires --seed).
    #[arg(long, requires = "seed")]
    p: Option<String>,
    /// Seed for the synthetic coin.
    #[arg(long, requires = "p")]
    seed: Option<u64>,
    /// Read H/T (or 1/0) flips from standard input.
    #[arg(long)]
    stdin: bool,
    /// Read H/T (or 1/0) flips from a file.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecideArgs {
    #[arg(long)]
    q: String,
    #[arg(long)]
    delta: String,
    #[command(flatten)]
    source: SourceArgs,
    /// Maximum total flips.
    #[arg(long, default_value_t = DEFAULT_CLI_BUDGET)]
    budget: u64,
    /// Include every round in the output.
    #[arg(long)]
    transcript: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    q: String,
    /// Known gap |p - q|.
    #[arg(long)]
    epsilon: String,
    #[arg(long)]
    delta: String,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Coinflipper,
    Baseline,
}

#[derive(Debug, Args)]
struct HarnessArgs {
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CLI_BUDGET)]
    budget: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SEQCOIN_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Coinflipper)]
    algorithm: AlgorithmArg,
    /// Known gap for --algorithm baseline.
    #[arg(long, required_if_eq("algorithm", "baseline"))]
    epsilon: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[arg(long)]
    delta: String,
    #[command(flatten)]
    harness: HarnessArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    q: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    delta: Vec<String>,
    #[command(flatten)]
    harness: HarnessArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[arg(long)]
    delta: String,
    #[arg(long, default_value_t = DEFAULT_TAIL_TERMS)]
    tail_terms: u32,
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(status: i32, stdout: String) -> Self {
        Self {
            status,
            stdout,
            stderr: String::new(),
        }
    }

    fn error(err: &Error) -> Self {
        Self {
            status: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
        }
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                CliOutput {
                    status: EXIT_ERROR,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                CliOutput::ok(EXIT_DECIDED, rendered)
            };
        }
    };
    let result = match cli.command {
        Command::Decide(a) => cmd_decide(a, stdin),
        Command::Baseline(a) => cmd_baseline(a, stdin),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Predict(a) => cmd_predict(a),
    };
    result.unwrap_or_else(|e| CliOutput::error(&e))
}

fn open_source(args: &SourceArgs, stdin: &mut dyn Read) -> Result<Box<dyn BernoulliSource>> {
    if let (Some(p), Some(seed)) = (&args.p, args.seed) {
        let p = Probability::new(p)?;
        return Ok(Box::new(SyntheticCoin::new(p.to_f64(), seed)?));
    }
    if args.stdin {
        return Ok(Box::new(RecordedStream::from_reader(stdin)?));
    }
    match &args.file {
        Some(path) => Ok(Box::new(RecordedStream::from_file(path)?)),
        None => Err(Error::InvalidParameter("no flip source given".into())),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("output types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct RoundJson {
    i: u32,
    epsilon: String,
    k: u64,
    heads: u64,
    verdict: &'static str,
}

#[derive(Debug, Serialize)]
struct DecideJson {
    decision: &'static str,
    meaning: Option<&'static str>,
    total_flips: u64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<Vec<RoundJson>>,
}

impl DecideJson {
    fn new(t: &Transcript, with_rounds: bool) -> Self {
        Self {
            decision: t.decision.as_str(),
            meaning: t.decision.meaning(),
            total_flips: t.total_flips,
            iterations: t.iterations(),
            rounds: with_rounds.then(|| {
                t.rounds
                    .iter()
                    .map(|r| RoundJson {
                        i: r.round,
                        epsilon: format_fraction(&r.epsilon()),
                        k: r.k,
                        heads: r.heads,
                        verdict: r.verdict.as_str(),
                    })
                    .collect()
            }),
        }
    }
}

/// The `decide` output document for `t`, newline-terminated.
pub fn transcript_json(t: &Transcript, with_rounds: bool) -> String {
    to_json(&DecideJson::new(t, with_rounds))
}

fn decision_status(d: Decision) -> i32 {
    if d.is_decided() {
        EXIT_DECIDED
    } else {
        EXIT_UNDECIDED
    }
}

fn cmd_decide(args: DecideArgs, stdin: &mut dyn Read) -> Result<CliOutput> {
    let q = Probability::new(&args.q)?;
    let delta: Confidence = args.delta.parse()?;
    let tester = CoinFlipper::new(q, delta).with_budget(Some(args.budget))?;
    let mut source = open_source(&args.source, stdin)?;
    match tester.run(source.as_mut()) {
        Ok(t) => Ok(CliOutput::ok(
            decision_status(t.decision),
            transcript_json(&t, args.transcript),
        )),
        Err(e @ Error::BudgetOverflow { .. }) => {
            let mut t = e
                .partial_transcript()
                .cloned()
                .expect("schedule overflow inside a run carries its rounds");
            t.decision = Decision::Undecided;
            Ok(CliOutput {
                status: EXIT_UNDECIDED,
                stdout: transcript_json(&t, args.transcript),
                stderr: format!("warning: {e}; reporting UNDECIDED\n"),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct BaselineJson {
    decision: &'static str,
    meaning: Option<&'static str>,
    k: u64,
    heads: u64,
    total_flips: u64,
}

fn cmd_baseline(args: BaselineArgs, stdin: &mut dyn Read) -> Result<CliOutput> {
    let q = Probability::new(&args.q)?;
    let epsilon = parse_decimal(&args.epsilon)?;
    let delta: Confidence = args.delta.parse()?;
    let tester = KnownGapTester::new(q, epsilon, delta)?;
    let mut source = open_source(&args.source, stdin)?;
    let out = tester.run(source.as_mut())?;
    Ok(CliOutput::ok(
        EXIT_DECIDED,
        to_json(&BaselineJson {
            decision: out.decision.as_str(),
            meaning: out.decision.meaning(),
            k: out.k,
            heads: out.heads,
            total_flips: out.k,
        }),
    ))
}

#[derive(Debug, Serialize)]
struct StatsRow<'a> {
    algorithm: &'static str,
    p: &'a str,
    q: &'a str,
    delta: f64,
    seed: u64,
    budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<String>,
    #[serde(flatten)]
    stats: &'a TrialStats,
}

impl<'a> StatsRow<'a> {
    fn new(config: &'a TrialConfig, stats: &'a TrialStats) -> Self {
        Self {
            algorithm: config.algorithm.name(),
            p: config.p.text(),
            q: config.q.text(),
            delta: config.delta.delta(),
            seed: config.master_seed,
            budget: config.budget,
            epsilon: match &config.algorithm {
                Algorithm::Baseline { epsilon } => Some(format_fraction(epsilon)),
                Algorithm::CoinFlipper => None,
            },
            stats,
        }
    }

    fn csv(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let s = self.stats;
        [
            self.p.to_string(),
            self.q.to_string(),
            self.delta.to_string(),
            s.trials.to_string(),
            s.wrong.to_string(),
            s.undecided.to_string(),
            s.error_rate.to_string(),
            s.error_rate_wilson_hi99.to_string(),
            s.mean_iterations.to_string(),
            s.sem_iterations.to_string(),
            s.mean_flips.to_string(),
            s.sem_flips.to_string(),
            opt(s.d),
            opt(s.iteration_bound),
            opt(s.flips_upper_bound),
        ]
        .join(",")
    }
}

fn build_config(p: &str, q: &str, delta: &str, h: &HarnessArgs) -> Result<TrialConfig> {
    let algorithm = match h.algorithm {
        AlgorithmArg::Coinflipper => Algorithm::CoinFlipper,
        AlgorithmArg::Baseline => Algorithm::Baseline {
            epsilon: parse_decimal(h.epsilon.as_deref().unwrap_or_default())?,
        },
    };
    if h.trials == 0 {
        return Err(Error::InvalidParameter("--trials must be at least 1".into()));
    }
    Ok(TrialConfig {
        p: Probability::new(p)?,
        q: Probability::new(q)?,
        delta: delta.parse()?,
        trials: h.trials,
        master_seed: h.seed,
        budget: Some(h.budget),
        algorithm,
    })
}

fn render_rows(rows: &[(TrialConfig, TrialStats)], format: Format, single: bool) -> String {
    match format {
        Format::Json => {
            let json: Vec<StatsRow<'_>> = rows.iter().map(|(c, s)| StatsRow::new(c, s)).collect();
            if single {
                to_json(&json[0])
            } else {
                to_json(&json)
            }
        }
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for (c, s) in rows {
                out.push_str(&StatsRow::new(c, s).csv());
                out.push('\n');
            }
            out
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<CliOutput> {
    let config = build_config(&args.p, &args.q, &args.delta, &args.harness)?;
    let stats = run_trials(&config, args.harness.workers)?;
    Ok(CliOutput::ok(
        EXIT_DECIDED,
        render_rows(&[(config, stats)], args.format, true),
    ))
}

fn cmd_sweep(args: SweepArgs) -> Result<CliOutput> {
    let mut grid = Vec::new();
    for p in &args.p {
        for q in &args.q {
            for delta in &args.delta {
                grid.push(build_config(p, q, delta, &args.harness)?);
            }
        }
    }
    let stats = sweep(&grid, args.harness.workers)?;
    let rows: Vec<_> = grid.into_iter().zip(stats).collect();
    Ok(CliOutput::ok(EXIT_DECIDED, render_rows(&rows, args.format, false)))
}

fn cmd_predict(args: PredictArgs) -> Result<CliOutput> {
    let p = Probability::new(&args.p)?;
    let q = Probability::new(&args.q)?;
    let delta: Confidence = args.delta.parse()?;
    let r = report(&p, &q, delta, args.tail_terms)?;
    Ok(CliOutput::ok(EXIT_DECIDED, to_json(&r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_with(args: &[&str], input: &str) -> CliOutput {
        let argv = std::iter::once("seqcoin").chain(args.iter().copied());
        run(argv, &mut input.as_bytes())
    }

    #[test]
    fn decide_from_stdin() {
        let out = run_with(&["decide", "--q", "0.5", "--delta", "0.5", "--stdin"], "HHH\n");
        assert_eq!(out.status, 0);
        assert_eq!(
            out.stdout,
            "{\"decision\":\"NO\",\"meaning\":\"p>q\",\"total_flips\":3,\"iterations\":1}\n"
        );
    }

    #[test]
    fn decide_transcript_lists_rounds() {
        let input = format!("HTT{}{}", "H".repeat(5), "T".repeat(16));
        let out = run_with(
            &["decide", "--q", "0.5", "--delta", "0.5", "--stdin", "--transcript"],
            &input,
        );
        assert_eq!(out.status, 0, "{}", out.stderr);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["decision"], "YES");
        assert_eq!(v["meaning"], "p<q");
        assert_eq!(v["rounds"][0]["epsilon"], "1/2");
        assert_eq!(v["rounds"][1]["epsilon"], "1/4");
        assert_eq!(v["rounds"][1]["k"], 21);
        assert_eq!(v["rounds"][0]["verdict"], "CONTINUE");
    }

    #[test]
    fn exit_codes() {
        let out = run_with(&["decide", "--q", "1.5", "--delta", "0.5", "--stdin"], "HHH");
        assert_eq!(out.status, 1);
        assert!(out.stderr.contains("range"), "{}", out.stderr);
        // source flags are mutually exclusive and required
        assert_eq!(run_with(&["decide", "--q", "0.5", "--delta", "0.5"], "").status, 1);
        assert_eq!(
            run_with(&["decide", "--q", "0.5", "--delta", "0.5", "--stdin", "--p", "0.5", "--seed", "1"], "").status,
            1
        );
        assert_eq!(run_with(&["decide", "--q", "0.5", "--delta", "0.5", "--stdin"], "HT").status, 1);
        assert_eq!(run_with(&["decide", "--q", "0.5", "--delta", "0.5", "--stdin"], "HXT").status, 1);
        assert_eq!(run_with(&["--help"], "").status, 0);
        assert_eq!(run_with(&["bogus"], "").status, 1);
    }

    #[test]
    fn predict_output() {
        let out = run_with(&["predict", "--p", "0.75", "--q", "0.5", "--delta", "0.1"], "");
        assert_eq!(out.status, 0);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["d"], 2);
        assert!((v["iteration_bound"].as_f64().unwrap() - 3.2).abs() < 1e-12);
        assert!((v["series"]["c1"].as_f64().unwrap() - 0.167438).abs() < 1e-6);
        assert_eq!(v["gap"], "1/4");
        assert_eq!(run_with(&["predict", "--p", "0.5", "--q", "0.5", "--delta", "0.1"], "").status, 1);
    }

    #[test]
    fn baseline_command() {
        let out = run_with(
            &["baseline", "--q", "0.5", "--epsilon", "0.25", "--delta", "0.5", "--stdin"],
            "TTTHHH",
        );
        assert_eq!(out.status, 0);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!((v["decision"].as_str(), v["k"].as_u64()), (Some("YES"), Some(6)));
        let out = run_with(
            &["baseline", "--q", "0.5", "--epsilon", "0.5", "--delta", "0.5", "--stdin"],
            "TTTHHH",
        );
        assert_eq!(out.status, 1);
    }

    #[test]
    fn simulate_rejects_zero_trials() {
        let out = run_with(
            &["simulate", "--p", "0.6", "--q", "0.5", "--delta", "0.1", "--trials", "0", "--seed", "1"],
            "",
        );
        assert_eq!(out.status, 1);
    }
}
