#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fseval/orchestrator.hpp"

namespace fseval {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  bool singleton = false;  // flagged: std of one value reported as 0
};

// Sample standard deviation (denominator n-1). Empty input throws.
MeanStd mean_std(const std::vector<double>& values);

// Spearman's rank correlation: Pearson correlation of average ranks, ties
// receiving the mean of the rank positions they span. Lengths must match and
// be >= 2; an all-constant side is an error, not rho = 0.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationReport {
  std::vector<std::pair<double, double>> pairs;  // (mean dev, mean test) per h
  double rho = 0.0;
};

// Requires an audit-mode result (every h scored on test). Pairs follow grid
// order; rho correlates per-h dev means with per-h test means over K.
CorrelationReport correlation_over_space(const SearchResult& audit);

// Same computation driven purely by logged scores; reproduces rho exactly.
CorrelationReport correlation_from_section(const LogSection& section);

struct StabilityEntry {
  int k = 0;
  MeanStd test;  // h* test scores over the K runs
  double rho = 0.0;
};

struct StabilityReport {
  std::vector<StabilityEntry> entries;  // strictly increasing K
  double perf_std = 0.0;  // sample std of test means across K values
  double rho_std = 0.0;
};

// One audit run per K value; cross-K stds use the same sample-std convention
// as mean_std.
StabilityReport stability_scan(const TaskBundle& bundle, Strategy strategy,
                               const std::vector<int>& ks,
                               std::optional<double> ratio,
                               const HyperSpace& space, const LearnerSpec& spec,
                               MetricKind metric, std::uint64_t master_seed,
                               int workers = 1);

struct SensitivityResult {
  std::string factor;
  std::vector<std::string> values;
  std::vector<double> dev_means;   // per value, mean over K splits
  std::vector<double> test_means;
  double dev_std = 0.0;   // std across values
  double test_std = 0.0;
};

// Re-runs the plan's K splits for each value of one factor, all other
// hyper-parameters fixed at `fixed`. The factor is either a space dimension
// (values must belong to it) or "train_order_seed", which shuffles the
// training examples with the value as seed.
SensitivityResult sensitivity(const std::string& factor,
                              const std::vector<std::string>& values,
                              const HyperPoint& fixed, const TaskBundle& bundle,
                              const SplitPlan& plan, const HyperSpace& space,
                              const LearnerSpec& spec, MetricKind metric,
                              std::uint64_t master_seed, int workers = 1);

struct StrategyReport {
  Strategy strategy = Strategy::ms;
  MeanStd performance;  // h* test scores at the base K
  CorrelationReport correlation;
  StabilityReport stability;  // empty entries when no scan was requested
};

// Audit-mode evaluation of several strategies on one bundle, optionally with
// a K-scan per strategy.
std::vector<StrategyReport> compare_strategies(
    const TaskBundle& bundle, const std::vector<Strategy>& strategies, int k,
    std::optional<double> ratio, const std::vector<int>& stability_ks,
    const HyperSpace& space, const LearnerSpec& spec, MetricKind metric,
    std::uint64_t master_seed, int workers = 1);

// Plain-text table (strategy rows, task column, "mean +-std" cells plus a
// correlation column) and a machine-readable TSV twin.
std::string render_strategy_table(const std::vector<StrategyReport>& reports,
                                  const std::string& task_name,
                                  MetricKind metric);
std::string render_strategy_tsv(const std::vector<StrategyReport>& reports,
                                const std::string& task_name);
// Per-K curve data: K, test mean, test std, rho — one line per K.
std::string render_stability_curves(const StrategyReport& report);
std::string render_sensitivity_table(const SensitivityResult& result);

}  // namespace fseval
