#include "fseval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "fseval/error.hpp"
#include "fseval/parallel.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("mean_std: empty input");
  MeanStd out;
  out.singleton = values.size() < 2;
  bool constant = true;
  for (double v : values) constant = constant && v == values[0];
  if (constant) {
    out.mean = values[0];
    out.std = 0.0;
    return out;
  }
  double sum = 0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

namespace {

// Average ranks, 1-based; ties get the mean of the positions they span.
std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 2) throw ConfigError("spearman: need at least two points");
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
  };
  if (constant(x) || constant(y))
    throw ConfigError("spearman: correlation undefined for constant input");

  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

CorrelationReport correlation_over_space(const SearchResult& audit) {
  if (audit.mode != RunMode::audit)
    throw ConfigError("correlation_over_space: requires an audit-mode result");
  const std::size_t grid = audit.by_hyper.size();
  if (grid < 2) throw ConfigError("correlation_over_space: grid size < 2");
  const int runs = audit.num_runs;

  CorrelationReport report;
  std::vector<double> dev_means, test_means;
  for (std::size_t hi = 0; hi < grid; ++hi) {
    std::vector<double> tests;
    for (int k = 0; k < runs; ++k) {
      const RunRecord& rec = audit.records[hi * runs + k];
      if (!rec.test_score)
        throw ConfigError("correlation_over_space: missing test score");
      tests.push_back(*rec.test_score);
    }
    const double test_mean = mean_std(tests).mean;
    report.pairs.emplace_back(audit.by_hyper[hi].dev_mean, test_mean);
    dev_means.push_back(audit.by_hyper[hi].dev_mean);
    test_means.push_back(test_mean);
  }
  report.rho = spearman(dev_means, test_means);
  return report;
}

CorrelationReport correlation_from_section(const LogSection& section) {
  if (section.mode != RunMode::audit)
    throw ConfigError("correlation_from_section: requires an audit-mode section");
  std::vector<std::string> order;
  std::vector<std::vector<double>> dev, test;
  for (const auto& row : section.rows) {
    std::size_t gi = 0;
    for (; gi < order.size(); ++gi)
      if (order[gi] == row.h_canonical) break;
    if (gi == order.size()) {
      order.push_back(row.h_canonical);
      dev.emplace_back();
      test.emplace_back();
    }
    dev[gi].push_back(row.dev_score);
    if (!row.test_score)
      throw ConfigError("correlation_from_section: missing test score for " +
                        row.h_canonical);
    test[gi].push_back(*row.test_score);
  }
  if (order.size() < 2) throw ConfigError("correlation_from_section: grid size < 2");
  CorrelationReport report;
  std::vector<double> dev_means, test_means;
  for (std::size_t gi = 0; gi < order.size(); ++gi) {
    const double dm = mean_std(dev[gi]).mean;
    const double tm = mean_std(test[gi]).mean;
    report.pairs.emplace_back(dm, tm);
    dev_means.push_back(dm);
    test_means.push_back(tm);
  }
  report.rho = spearman(dev_means, test_means);
  return report;
}

StabilityReport stability_scan(const TaskBundle& bundle, Strategy strategy,
                               const std::vector<int>& ks,
                               std::optional<double> ratio,
                               const HyperSpace& space, const LearnerSpec& spec,
                               MetricKind metric, std::uint64_t master_seed,
                               int workers) {
  if (ks.size() < 2) throw ConfigError("stability_scan: need at least two K values");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw ConfigError("stability_scan: K values must be strictly increasing");

  StabilityReport report;
  std::vector<double> perf, rhos;
  for (int k : ks) {
    const SplitPlan plan = make_splits(strategy, bundle.labeled, k, ratio, master_seed);
    SearchInputs in;
    in.bundle = &bundle;
    in.plan = &plan;
    in.space = &space;
    in.spec = &spec;
    in.metric = metric;
    in.master_seed = master_seed;
    in.workers = workers;
    const SearchResult result = run_search(in, RunMode::audit);
    StabilityEntry entry;
    entry.k = k;
    entry.test = MeanStd{result.test_mean, result.test_std, result.num_runs < 2};
    entry.rho = correlation_over_space(result).rho;
    report.entries.push_back(entry);
    perf.push_back(result.test_mean);
    rhos.push_back(entry.rho);
  }
  report.perf_std = mean_std(perf).std;
  report.rho_std = mean_std(rhos).std;
  return report;
}

SensitivityResult sensitivity(const std::string& factor,
                              const std::vector<std::string>& values,
                              const HyperPoint& fixed, const TaskBundle& bundle,
                              const SplitPlan& plan, const HyperSpace& space,
                              const LearnerSpec& spec, MetricKind metric,
                              std::uint64_t master_seed, int workers) {
  if (values.size() < 2) throw ConfigError("sensitivity: need at least two values");
  const bool order_factor = factor == "train_order_seed";
  if (!order_factor && space.dim_index(factor) < 0)
    throw ConfigError("sensitivity: unknown factor '" + factor + "'");

  const Dataset& labeled = bundle.labeled;
  const int num_classes = labeled.num_classes;
  const int runs = plan.num_runs;

  std::vector<std::vector<Example>> train_sets(runs), dev_sets(runs);
  for (int k = 0; k < runs; ++k) {
    train_sets[k] = gather_examples(labeled, plan.splits[k].train);
    dev_sets[k] = gather_examples(labeled, plan.splits[k].dev);
  }

  SensitivityResult result;
  result.factor = factor;
  result.values = values;
  const int n_values = static_cast<int>(values.size());
  std::vector<double> dev_scores(n_values * runs), test_scores(n_values * runs);

  parallel_for(n_values * runs, workers, [&](int job) {
    const int vi = job / runs;
    const int k = job % runs;
    HyperPoint h = fixed;
    std::vector<Example> train_set = train_sets[k];
    if (order_factor) {
      std::vector<int> order(train_set.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      Rng rng(derive_seed(master_seed, {"order", values[vi], "k=" + std::to_string(k)}));
      rng.shuffle(order);
      std::vector<Example> shuffled;
      shuffled.reserve(train_set.size());
      for (int idx : order) shuffled.push_back(train_set[idx]);
      train_set = std::move(shuffled);
    } else {
      h = space.replace_value(fixed, factor, values[vi]);
    }
    const std::uint64_t seed = training_seed(master_seed, h, k);
    TrainContext ctx;
    ctx.master_seed = master_seed;
    ctx.run_index = k;
    TrainedModel model = train(spec, train_set, dev_sets[k], h, metric,
                               num_classes, seed, ctx);
    dev_scores[job] = model.best_dev_score;
    test_scores[job] =
        evaluate_model(model, bundle.test.examples, metric, num_classes, "test");
  });

  for (int vi = 0; vi < n_values; ++vi) {
    std::vector<double> dev(dev_scores.begin() + vi * runs,
                            dev_scores.begin() + (vi + 1) * runs);
    std::vector<double> test(test_scores.begin() + vi * runs,
                             test_scores.begin() + (vi + 1) * runs);
    result.dev_means.push_back(mean_std(dev).mean);
    result.test_means.push_back(mean_std(test).mean);
  }
  result.dev_std = mean_std(result.dev_means).std;
  result.test_std = mean_std(result.test_means).std;
  return result;
}

std::vector<StrategyReport> compare_strategies(
    const TaskBundle& bundle, const std::vector<Strategy>& strategies, int k,
    std::optional<double> ratio, const std::vector<int>& stability_ks,
    const HyperSpace& space, const LearnerSpec& spec, MetricKind metric,
    std::uint64_t master_seed, int workers) {
  if (strategies.empty()) throw ConfigError("compare_strategies: empty strategy list");
  std::vector<StrategyReport> reports;
  for (Strategy s : strategies) {
    const SplitPlan plan = make_splits(s, bundle.labeled, k, ratio, master_seed);
    SearchInputs in;
    in.bundle = &bundle;
    in.plan = &plan;
    in.space = &space;
    in.spec = &spec;
    in.metric = metric;
    in.master_seed = master_seed;
    in.workers = workers;
    const SearchResult result = run_search(in, RunMode::audit);
    StrategyReport report;
    report.strategy = s;
    report.performance = MeanStd{result.test_mean, result.test_std, result.num_runs < 2};
    report.correlation = correlation_over_space(result);
    if (!stability_ks.empty())
      report.stability = stability_scan(bundle, s, stability_ks, ratio, space,
                                        spec, metric, master_seed, workers);
    reports.push_back(std::move(report));
  }
  return reports;
}

namespace {

std::string strategy_label(Strategy s) {
  std::string label = to_string(s);
  for (char& c : label) c = static_cast<char>(std::toupper(c));
  return label;
}

}  // namespace

std::string render_strategy_table(const std::vector<StrategyReport>& reports,
                                  const std::string& task_name,
                                  MetricKind metric) {
  std::string out;
  out += "AUDIT strategy comparison (every grid point scored on test)\n";
  out += "metric: ";
  out += to_string(metric);
  out += "\n\n";
  out += "            | " + task_name + "\n";
  out += "strategy    | perf (mean +-std)   | rho\n";
  out += "------------+---------------------+--------\n";
  for (const StrategyReport& r : reports) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-11s | %7.4f +-%-9.4f | %7.4f\n",
                  strategy_label(r.strategy).c_str(), r.performance.mean,
                  r.performance.std, r.correlation.rho);
    out += line;
  }
  return out;
}

std::string render_strategy_tsv(const std::vector<StrategyReport>& reports,
                                const std::string& task_name) {
  std::string out = "strategy\ttask\tperf_mean\tperf_std\trho\n";
  for (const StrategyReport& r : reports) {
    out += strategy_label(r.strategy);
    out += '\t';
    out += task_name;
    out += '\t';
    out += format_double(r.performance.mean);
    out += '\t';
    out += format_double(r.performance.std);
    out += '\t';
    out += format_double(r.correlation.rho);
    out += '\n';
  }
  return out;
}

std::string render_stability_curves(const StrategyReport& report) {
  std::string out = "# AUDIT K-scan: every grid point scored on test\n";
  out += "K\tperf_mean\tperf_std\trho\n";
  for (const StabilityEntry& e : report.stability.entries) {
    out += std::to_string(e.k);
    out += '\t';
    out += format_double(e.test.mean);
    out += '\t';
    out += format_double(e.test.std);
    out += '\t';
    out += format_double(e.rho);
    out += '\n';
  }
  out += "cross_k\tperf_std=" + format_double(report.stability.perf_std);
  out += "\trho_std=" + format_double(report.stability.rho_std);
  out += '\n';
  return out;
}

std::string render_sensitivity_table(const SensitivityResult& result) {
  std::string out = "# AUDIT factor scan: test scored per value at fixed h\n";
  out += "factor\t" + result.factor + "\n";
  out += "value\tdev_mean\ttest_mean\n";
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    out += result.values[i];
    out += '\t';
    out += format_double(result.dev_means[i]);
    out += '\t';
    out += format_double(result.test_means[i]);
    out += '\n';
  }
  out += "std\tdev=" + format_double(result.dev_std);
  out += "\ttest=" + format_double(result.test_std);
  out += '\n';
  return out;
}

}  // namespace fseval
