#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fseval/learners.hpp"
#include "fseval/splits.hpp"

namespace fseval {

enum class RunMode { benchmark, practical, audit };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& token);

struct RunRecord {
  HyperPoint h;
  int k = 0;
  double dev_score = 0.0;                // NaN in practical mode
  std::optional<double> test_score;      // h* only in benchmark mode
  std::uint64_t seed = 0;
  int checkpoint_step = 0;
};

struct HyperAggregate {
  std::string h_canonical;
  double dev_mean = 0.0;
  double dev_std = 0.0;  // sample std, denominator K-1; 0 when K = 1
};

struct SearchResult {
  RunMode mode = RunMode::benchmark;
  Strategy strategy = Strategy::ms;
  int num_runs = 0;       // K (or L in practical mode)
  double ratio = 0.0;
  std::uint64_t master_seed = 0;
  MetricKind metric = MetricKind::accuracy;
  LearnerKind learner = LearnerKind::nearest_centroid;

  std::vector<RunRecord> records;        // sorted by (grid index, k)
  std::vector<HyperAggregate> by_hyper;  // grid order
  std::size_t best_index = 0;            // h* flat grid index
  std::string best_canonical;
  double test_mean = 0.0;
  double test_std = 0.0;

  // In-memory only: the trained checkpoint behind each record.
  std::vector<TrainedModel> models;

  const HyperAggregate& best() const { return by_hyper[best_index]; }
};

struct SearchInputs {
  const TaskBundle* bundle = nullptr;
  const SplitPlan* plan = nullptr;
  const HyperSpace* space = nullptr;
  const LearnerSpec* spec = nullptr;
  MetricKind metric = MetricKind::accuracy;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

// Grid search across the plan's K splits. Trains every (h, k) pair, selects
// h* by the highest mean dev score (ties: first in grid order). Benchmark
// mode then scores only the K checkpoints of h* on the test set; audit mode
// scores every (h, k) on test, which exists for strategy evaluation and is
// labeled as such in all outputs. The (h, k) jobs run under parallel_for and
// draw all randomness from derive_seed, so any worker count gives the same
// result bit for bit.
SearchResult run_search(const SearchInputs& in, RunMode mode = RunMode::benchmark);

// Trains l_runs models on the entire labeled set with fixed h* and derived
// seeds, final-step checkpoints, and reports mean/std of the test scores.
SearchResult practical_rerun(const TaskBundle& bundle, const HyperPoint& h_star,
                             const LearnerSpec& spec, MetricKind metric,
                             int l_runs, std::uint64_t master_seed,
                             int workers = 1,
                             Strategy strategy_tag = Strategy::ms);

// --- Run log -------------------------------------------------------------
//
// Append-only, line oriented. One header record per search:
//   log\tschema=1\tmode=...\tstrategy=...\tK=...\tr=...\tseed=...\tmetric=...\tlearner=...
// then one record per (h, k):
//   run\th=<name=value,...>\tk=...\tdev=...\ttest=...\tseed=...\tstep=...
// dev/test print with 17 significant digits so parsing round-trips exactly;
// absent test scores print "-".

std::string serialize_run_log(const SearchResult& result);

struct LogSection {
  RunMode mode = RunMode::benchmark;
  Strategy strategy = Strategy::ms;
  int num_runs = 0;
  double ratio = 0.0;
  std::uint64_t master_seed = 0;
  MetricKind metric = MetricKind::accuracy;
  LearnerKind learner = LearnerKind::nearest_centroid;
  struct Row {
    std::string h_canonical;
    int k = 0;
    double dev_score = 0.0;
    std::optional<double> test_score;
    std::uint64_t seed = 0;
    int checkpoint_step = 0;
  };
  std::vector<Row> rows;
  // Non-run records (generation logs etc.) pass through untouched.
  std::vector<std::string> extra_lines;
};

// Throws ConfigError naming the offending line on any malformed record.
std::vector<LogSection> parse_run_log(const std::string& text);

// Re-renders a parsed section byte-identically to what was read.
std::string serialize_log_section(const LogSection& section);

// Deterministic re-aggregation of a parsed section: recomputes per-h
// mean/std, h*, and the test aggregate exactly as run_search does.
SearchResult reaggregate(const LogSection& section);

// The summary is the persisted face of a SearchResult; replay re-reads the
// log, re-aggregates, and compares serialized summaries byte for byte.
std::string serialize_summary(const SearchResult& result);

// Returns true when log and summary agree; fills `recomputed` with the
// summary produced from the log.
bool replay_matches(const std::string& log_text, const std::string& summary_text,
                    std::string* recomputed);

std::uint64_t training_seed(std::uint64_t master, const HyperPoint& h, int k);

}  // namespace fseval
