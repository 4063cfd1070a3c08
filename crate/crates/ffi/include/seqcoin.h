#ifndef SEQCOIN_H
#define SEQCOIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

/**
 * Bumped on any incompatible change to the exported surface.
 */
#define SEQCOIN_ABI_VERSION 1

typedef enum SeqcoinStatus {
  SEQCOIN_STATUS_OK = 0,
  SEQCOIN_STATUS_NULL_POINTER = 1,
  SEQCOIN_STATUS_INVALID_ARGUMENT = 2,
  SEQCOIN_STATUS_CONTRACT_VIOLATION = 3,
  SEQCOIN_STATUS_SOURCE_EXHAUSTED = 4,
  SEQCOIN_STATUS_BUDGET_OVERFLOW = 5,
  SEQCOIN_STATUS_USE_AFTER_DECISION = 6,
  SEQCOIN_STATUS_IO = 7,
  SEQCOIN_STATUS_PANIC = 99,
} SeqcoinStatus;

typedef enum SeqcoinDecision {
  /**
   * Streaming decider still collecting flips.
   */
  SEQCOIN_DECISION_PENDING = 0,
  /**
   * p < q
   */
  SEQCOIN_DECISION_YES = 1,
  /**
   * p > q
   */
  SEQCOIN_DECISION_NO = 2,
  SEQCOIN_DECISION_UNDECIDED = 3,
} SeqcoinDecision;

typedef enum SeqcoinVerdict {
  SEQCOIN_VERDICT_YES = 1,
  SEQCOIN_VERDICT_NO = 2,
  SEQCOIN_VERDICT_CONTINUE = 3,
} SeqcoinVerdict;

/**
 * Incremental CoinFlipper fed one flip at a time.
 */
typedef struct SeqcoinDecider SeqcoinDecider;

/**
 * A stream of coin flips (synthetic or recorded).
 */
typedef struct SeqcoinSource SeqcoinSource;

/**
 * Result of a completed CoinFlipper run.
 */
typedef struct SeqcoinTranscript SeqcoinTranscript;

typedef struct SeqcoinRunSummary {
  enum SeqcoinDecision decision;
  uint64_t iterations;
  uint64_t total_flips;
} SeqcoinRunSummary;

typedef struct SeqcoinRound {
  uint32_t round;
  uint64_t k;
  uint64_t heads;
  enum SeqcoinVerdict verdict;
} SeqcoinRound;

typedef struct SeqcoinBaselineOutcome {
  enum SeqcoinDecision decision;
  uint64_t k;
  uint64_t heads;
} SeqcoinBaselineOutcome;

typedef struct SeqcoinSeries {
  double c1;
  double c2;
  double c3;
} SeqcoinSeries;

typedef struct SeqcoinTrialStats {
  uint64_t trials;
  uint64_t decisions;
  uint64_t wrong;
  uint64_t undecided;
  double error_rate;
  bool error_rate_defined;
  double error_rate_wilson_hi99;
  double mean_iterations;
  double sem_iterations;
  double mean_flips;
  double sem_flips;
  uint64_t min_flips;
  uint64_t max_flips;
  /**
   * -1 when p = q.
   */
  int32_t d;
  /**
   * NaN when undefined.
   */
  double iteration_bound;
  /**
   * NaN when undefined.
   */
  double flips_upper_bound;
} SeqcoinTrialStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t seqcoin_abi_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *seqcoin_last_error_message(void);

/**
 * Release a string returned by this library.
 */
void seqcoin_string_free(char *s);

/**
 * Seeded synthetic coin; `stream` selects an independent sub-stream
 * (trial index), 0 for a standalone coin.
 */
enum SeqcoinStatus seqcoin_source_synthetic(double p,
                                            uint64_t seed,
                                            uint64_t stream,
                                            struct SeqcoinSource **out);

/**
 * Recorded stream from NUL-terminated `H`/`T`/`1`/`0` text (whitespace ignored).
 */
enum SeqcoinStatus seqcoin_source_recorded(const char *text, struct SeqcoinSource **out);

enum SeqcoinStatus seqcoin_source_flip_batch(struct SeqcoinSource *source,
                                             uint64_t k,
                                             uint64_t *heads);

void seqcoin_source_free(struct SeqcoinSource *source);

/**
 * Run CoinFlipper on `source`. `budget` 0 means unbounded.
 *
 * On `SourceExhausted` or `BudgetOverflow` a transcript of the completed
 * rounds (decision UNDECIDED) is still written to `out`.
 */
enum SeqcoinStatus seqcoin_coinflipper_run(struct SeqcoinSource *source,
                                           const char *q,
                                           double delta,
                                           uint64_t budget,
                                           struct SeqcoinTranscript **out);

enum SeqcoinStatus seqcoin_transcript_summary(const struct SeqcoinTranscript *transcript,
                                              struct SeqcoinRunSummary *out);

enum SeqcoinStatus seqcoin_transcript_round(const struct SeqcoinTranscript *transcript,
                                            uint64_t index,
                                            struct SeqcoinRound *out);

/**
 * The `decide --transcript` JSON document, or NULL on failure. Free with
 * `seqcoin_string_free`.
 */
char *seqcoin_transcript_json(const struct SeqcoinTranscript *transcript);

void seqcoin_transcript_free(struct SeqcoinTranscript *transcript);

enum SeqcoinStatus seqcoin_decider_new(const char *q,
                                       double delta,
                                       uint64_t budget,
                                       struct SeqcoinDecider **out);

/**
 * Feed one flip (`heads` nonzero for heads). `decision` receives PENDING
 * until a decision is reached; feeding afterwards fails with
 * `UseAfterDecision`.
 */
enum SeqcoinStatus seqcoin_decider_feed(struct SeqcoinDecider *decider,
                                        bool heads,
                                        enum SeqcoinDecision *decision);

enum SeqcoinStatus seqcoin_decider_summary(const struct SeqcoinDecider *decider,
                                           struct SeqcoinRunSummary *out);

void seqcoin_decider_free(struct SeqcoinDecider *decider);

/**
 * Fixed-sample tester for a known gap `epsilon` (decimal text).
 */
enum SeqcoinStatus seqcoin_baseline_run(struct SeqcoinSource *source,
                                        const char *q,
                                        const char *epsilon,
                                        double delta,
                                        struct SeqcoinBaselineOutcome *out);

enum SeqcoinStatus seqcoin_coinflipper_k(uint32_t round, double delta, uint64_t *out);

enum SeqcoinStatus seqcoin_fixed_sample_k(double epsilon, double delta, uint64_t *out);

enum SeqcoinStatus seqcoin_hoeffding_tail(uint64_t k, double epsilon, double *out);

/**
 * `⌈log₂(1/|p − q|)⌉` for decimal `p`, `q`.
 */
enum SeqcoinStatus seqcoin_difficulty(const char *p, const char *q, uint32_t *out);

double seqcoin_iteration_bound(uint32_t d);

enum SeqcoinStatus seqcoin_series_constants(uint32_t terms, struct SeqcoinSeries *out);

enum SeqcoinStatus seqcoin_flips_upper_bound(uint32_t d,
                                             double delta,
                                             uint32_t tail_terms,
                                             double *out);

/**
 * Monte Carlo run. `epsilon` NULL selects CoinFlipper, otherwise the
 * known-gap baseline. `budget` 0 means unbounded, `workers` 0 all cores.
 */
enum SeqcoinStatus seqcoin_simulate(const char *p,
                                    const char *q,
                                    double delta,
                                    uint64_t trials,
                                    uint64_t seed,
                                    uint64_t budget,
                                    uint32_t workers,
                                    const char *epsilon,
                                    struct SeqcoinTrialStats *out);

enum SeqcoinStatus seqcoin_wilson_upper(uint64_t successes,
                                        uint64_t n,
                                        double confidence,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQCOIN_H */
