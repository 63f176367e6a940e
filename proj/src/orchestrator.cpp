#include "fseval/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fseval/error.hpp"
#include "fseval/metrics.hpp"
#include "fseval/parallel.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::benchmark: return "benchmark";
    case RunMode::practical: return "practical";
    case RunMode::audit: return "audit";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& token) {
  if (token == "benchmark") return RunMode::benchmark;
  if (token == "practical") return RunMode::practical;
  if (token == "audit") return RunMode::audit;
  throw ConfigError("unknown run mode: " + token);
}

std::uint64_t training_seed(std::uint64_t master, const HyperPoint& h, int k) {
  return derive_seed(master, {"train", "h=" + h.canonical(), "k=" + std::to_string(k)});
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_score(double v) {
  return std::isnan(v) ? "-" : format_double(v);
}

double parse_score(const std::string& s, const std::string& ctx) {
  return s == "-" ? kNaN : parse_double(s, ctx);
}

// Two-pass sample standard deviation, the one convention used everywhere.
// An all-equal input short-circuits to (value, 0) so that exact inputs give
// exact aggregates instead of accumulation dust.
void sample_mean_std(const std::vector<double>& v, double* mean, double* stddev) {
  bool constant = true;
  for (double x : v) constant = constant && x == v[0];
  if (constant) {
    *mean = v[0];
    *stddev = 0.0;
    return;
  }
  double sum = 0;
  for (double x : v) sum += x;
  *mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - *mean) * (x - *mean);
  *stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void aggregate(SearchResult* result, std::size_t grid_size) {
  const int runs = result->num_runs;
  result->by_hyper.clear();
  for (std::size_t hi = 0; hi < grid_size; ++hi) {
    std::vector<double> dev;
    dev.reserve(runs);
    for (int k = 0; k < runs; ++k)
      dev.push_back(result->records[hi * runs + k].dev_score);
    HyperAggregate agg;
    agg.h_canonical = result->records[hi * runs].h.canonical();
    sample_mean_std(dev, &agg.dev_mean, &agg.dev_std);
    result->by_hyper.push_back(std::move(agg));
  }
  result->best_index = 0;
  for (std::size_t hi = 1; hi < grid_size; ++hi)
    if (result->by_hyper[hi].dev_mean > result->by_hyper[result->best_index].dev_mean)
      result->best_index = hi;
  result->best_canonical = result->by_hyper[result->best_index].h_canonical;
}

}  // namespace

SearchResult run_search(const SearchInputs& in, RunMode mode) {
  if (mode == RunMode::practical)
    throw ConfigError("run_search: practical mode goes through practical_rerun");
  if (!in.bundle || !in.plan || !in.space || !in.spec)
    throw ConfigError("run_search: incomplete inputs");
  in.space->validate();
  const std::size_t grid = in.space->grid_size();
  if (grid == 0) throw ConfigError("run_search: empty hyper space");

  const SplitPlan& plan = *in.plan;
  const int runs = plan.num_runs;
  const Dataset& labeled = in.bundle->labeled;
  const int num_classes = labeled.num_classes;

  for (const DataSplit& s : plan.splits) {
    if (s.dev.empty() || s.train.empty())
      throw DegenerateSplitError(
          std::string("run_search: strategy ") + to_string(plan.strategy) +
          " split k=" + std::to_string(s.k) + " is degenerate");
  }

  std::vector<std::vector<Example>> train_sets(runs), dev_sets(runs);
  for (int k = 0; k < runs; ++k) {
    train_sets[k] = gather_examples(labeled, plan.splits[k].train);
    dev_sets[k] = gather_examples(labeled, plan.splits[k].dev);
  }

  SearchResult result;
  result.mode = mode;
  result.strategy = plan.strategy;
  result.num_runs = runs;
  result.ratio = plan.ratio;
  result.master_seed = in.master_seed;
  result.metric = in.metric;
  result.learner = in.spec->kind;
  result.records.resize(grid * runs);
  result.models.resize(grid * runs);

  const std::vector<HyperPoint> points = in.space->enumerate();
  const int n_jobs = static_cast<int>(grid * runs);
  parallel_for(n_jobs, in.workers, [&](int job) {
    const std::size_t hi = static_cast<std::size_t>(job) / runs;
    const int k = job % runs;
    const HyperPoint& h = points[hi];
    const std::uint64_t seed = training_seed(in.master_seed, h, k);
    TrainContext ctx;
    ctx.master_seed = in.master_seed;
    ctx.run_index = k;
    TrainedModel model = train(*in.spec, train_sets[k], dev_sets[k], h,
                               in.metric, num_classes, seed, ctx);
    RunRecord rec;
    rec.h = h;
    rec.k = k;
    rec.dev_score = model.best_dev_score;
    rec.seed = seed;
    rec.checkpoint_step = model.meta.step;
    if (mode == RunMode::audit)
      rec.test_score = evaluate_model(model, in.bundle->test.examples, in.metric,
                                      num_classes, "test");
    result.records[job] = std::move(rec);
    result.models[job] = std::move(model);
  });

  aggregate(&result, grid);

  // Benchmark mode touches the test set only here, for the K h* checkpoints.
  std::vector<double> test_scores;
  test_scores.reserve(runs);
  for (int k = 0; k < runs; ++k) {
    const std::size_t job = result.best_index * runs + k;
    if (mode == RunMode::benchmark) {
      result.records[job].test_score =
          evaluate_model(result.models[job], in.bundle->test.examples, in.metric,
                         num_classes, "test");
    }
    test_scores.push_back(*result.records[job].test_score);
  }
  sample_mean_std(test_scores, &result.test_mean, &result.test_std);
  return result;
}

SearchResult practical_rerun(const TaskBundle& bundle, const HyperPoint& h_star,
                             const LearnerSpec& spec, MetricKind metric,
                             int l_runs, std::uint64_t master_seed, int workers,
                             Strategy strategy_tag) {
  if (l_runs < 1) throw ConfigError("practical_rerun: L must be >= 1");
  const Dataset& labeled = bundle.labeled;
  const int num_classes = labeled.num_classes;
  std::vector<int> all(labeled.size());
  for (int i = 0; i < labeled.size(); ++i) all[i] = i;
  const std::vector<Example> train_set = gather_examples(labeled, all);

  SearchResult result;
  result.mode = RunMode::practical;
  result.strategy = strategy_tag;  // bookkeeping only; no split is involved
  result.num_runs = l_runs;
  result.ratio = 0.0;
  result.master_seed = master_seed;
  result.metric = metric;
  result.learner = spec.kind;
  result.records.resize(l_runs);
  result.models.resize(l_runs);

  parallel_for(l_runs, workers, [&](int l) {
    const std::uint64_t seed = derive_seed(
        master_seed, {"rerun", "h=" + h_star.canonical(), "l=" + std::to_string(l)});
    TrainContext ctx;
    ctx.master_seed = master_seed;
    ctx.run_index = l;
    TrainedModel model = train_full(spec, train_set, h_star, num_classes, seed, ctx);
    RunRecord rec;
    rec.h = h_star;
    rec.k = l;
    rec.dev_score = kNaN;
    rec.test_score =
        evaluate_model(model, bundle.test.examples, metric, num_classes, "test");
    rec.seed = seed;
    rec.checkpoint_step = model.meta.step;
    result.records[l] = std::move(rec);
    result.models[l] = std::move(model);
  });

  HyperAggregate agg;
  agg.h_canonical = h_star.canonical();
  agg.dev_mean = kNaN;
  agg.dev_std = kNaN;
  result.by_hyper.push_back(agg);
  result.best_index = 0;
  result.best_canonical = agg.h_canonical;

  std::vector<double> test_scores;
  for (const RunRecord& r : result.records) test_scores.push_back(*r.test_score);
  sample_mean_std(test_scores, &result.test_mean, &result.test_std);
  return result;
}

// --- Log and summary -------------------------------------------------------

std::string serialize_run_log(const SearchResult& result) {
  std::string out;
  Record header;
  header.kind = "log";
  header.fields = {{"schema", "1"},
                   {"mode", to_string(result.mode)},
                   {"strategy", to_string(result.strategy)},
                   {"K", std::to_string(result.num_runs)},
                   {"r", format_double(result.ratio)},
                   {"seed", std::to_string(result.master_seed)},
                   {"metric", to_string(result.metric)},
                   {"learner", to_string(result.learner)}};
  out += format_record(header);
  out += '\n';
  for (const RunRecord& r : result.records) {
    Record rec;
    rec.kind = "run";
    rec.fields = {{"h", r.h.canonical()},
                  {"k", std::to_string(r.k)},
                  {"dev", format_score(r.dev_score)},
                  {"test", r.test_score ? format_double(*r.test_score) : "-"},
                  {"seed", std::to_string(r.seed)},
                  {"step", std::to_string(r.checkpoint_step)}};
    out += format_record(rec);
    out += '\n';
  }
  return out;
}

std::vector<LogSection> parse_run_log(const std::string& text) {
  std::vector<LogSection> sections;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const Record rec = parse_record(line, line_number);
    const std::string ctx = "run log line " + std::to_string(line_number);
    if (rec.kind == "log") {
      LogSection s;
      if (rec.get("schema", ctx) != "1")
        throw ConfigError(ctx + ": unsupported log schema");
      s.mode = run_mode_from_string(rec.get("mode", ctx));
      s.strategy = strategy_from_string(rec.get("strategy", ctx));
      s.num_runs = static_cast<int>(parse_int(rec.get("K", ctx), ctx));
      s.ratio = parse_double(rec.get("r", ctx), ctx);
      s.master_seed = parse_u64(rec.get("seed", ctx), ctx);
      s.metric = metric_from_string(rec.get("metric", ctx));
      s.learner = learner_from_string(rec.get("learner", ctx));
      sections.push_back(std::move(s));
    } else if (rec.kind == "run") {
      if (sections.empty())
        throw ConfigError(ctx + ": run record before any log header");
      LogSection::Row row;
      row.h_canonical = rec.get("h", ctx);
      row.k = static_cast<int>(parse_int(rec.get("k", ctx), ctx));
      row.dev_score = parse_score(rec.get("dev", ctx), ctx);
      const std::string& test = rec.get("test", ctx);
      if (test != "-") row.test_score = parse_double(test, ctx);
      row.seed = parse_u64(rec.get("seed", ctx), ctx);
      row.checkpoint_step = static_cast<int>(parse_int(rec.get("step", ctx), ctx));
      sections.back().rows.push_back(std::move(row));
    } else if (rec.kind == "gen" || rec.kind == "pl" || rec.kind == "note") {
      if (sections.empty())
        throw ConfigError(ctx + ": record before any log header");
      sections.back().extra_lines.push_back(line);
    } else {
      throw ConfigError(ctx + ": unknown record kind '" + rec.kind + "'");
    }
  }
  if (sections.empty()) throw ConfigError("run log: no log header found");
  return sections;
}

std::string serialize_log_section(const LogSection& section) {
  std::string out;
  Record header;
  header.kind = "log";
  header.fields = {{"schema", "1"},
                   {"mode", to_string(section.mode)},
                   {"strategy", to_string(section.strategy)},
                   {"K", std::to_string(section.num_runs)},
                   {"r", format_double(section.ratio)},
                   {"seed", std::to_string(section.master_seed)},
                   {"metric", to_string(section.metric)},
                   {"learner", to_string(section.learner)}};
  out += format_record(header);
  out += '\n';
  for (const LogSection::Row& row : section.rows) {
    Record rec;
    rec.kind = "run";
    rec.fields = {{"h", row.h_canonical},
                  {"k", std::to_string(row.k)},
                  {"dev", format_score(row.dev_score)},
                  {"test", row.test_score ? format_double(*row.test_score) : "-"},
                  {"seed", std::to_string(row.seed)},
                  {"step", std::to_string(row.checkpoint_step)}};
    out += format_record(rec);
    out += '\n';
  }
  for (const std::string& line : section.extra_lines) {
    out += line;
    out += '\n';
  }
  return out;
}

SearchResult reaggregate(const LogSection& section) {
  SearchResult result;
  result.mode = section.mode;
  result.strategy = section.strategy;
  result.num_runs = section.num_runs;
  result.ratio = section.ratio;
  result.master_seed = section.master_seed;
  result.metric = section.metric;
  result.learner = section.learner;

  // Group rows by h in first-appearance order (the log is written in grid
  // order, so this reproduces it).
  std::vector<std::string> order;
  std::vector<std::vector<const LogSection::Row*>> groups;
  for (const auto& row : section.rows) {
    std::size_t gi = 0;
    for (; gi < order.size(); ++gi)
      if (order[gi] == row.h_canonical) break;
    if (gi == order.size()) {
      order.push_back(row.h_canonical);
      groups.emplace_back();
    }
    groups[gi].push_back(&row);
  }
  if (groups.empty()) throw ConfigError("run log section has no run records");
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    if (static_cast<int>(groups[gi].size()) != section.num_runs)
      throw ConfigError("run log: hyper point '" + order[gi] + "' has " +
                        std::to_string(groups[gi].size()) + " records, expected " +
                        std::to_string(section.num_runs));
    HyperAggregate agg;
    agg.h_canonical = order[gi];
    std::vector<double> dev;
    for (const auto* row : groups[gi]) dev.push_back(row->dev_score);
    sample_mean_std(dev, &agg.dev_mean, &agg.dev_std);
    result.by_hyper.push_back(std::move(agg));
  }
  result.best_index = 0;
  for (std::size_t gi = 1; gi < groups.size(); ++gi)
    if (result.by_hyper[gi].dev_mean > result.by_hyper[result.best_index].dev_mean)
      result.best_index = gi;
  result.best_canonical = result.by_hyper[result.best_index].h_canonical;

  std::vector<double> test_scores;
  if (section.mode == RunMode::practical) {
    for (const auto& row : section.rows)
      if (row.test_score) test_scores.push_back(*row.test_score);
  } else {
    for (const auto* row : groups[result.best_index])
      if (row->test_score) test_scores.push_back(*row->test_score);
  }
  if (test_scores.empty())
    throw ConfigError("run log: no test scores for the selected hyper point");
  sample_mean_std(test_scores, &result.test_mean, &result.test_std);
  return result;
}

std::string serialize_summary(const SearchResult& result) {
  std::string out;
  Record header;
  header.kind = "summary";
  header.fields = {{"schema", "1"},
                   {"mode", to_string(result.mode)},
                   {"strategy", to_string(result.strategy)},
                   {"K", std::to_string(result.num_runs)},
                   {"r", format_double(result.ratio)},
                   {"seed", std::to_string(result.master_seed)},
                   {"metric", to_string(result.metric)},
                   {"learner", to_string(result.learner)},
                   {"std", "sample"}};
  out += format_record(header);
  out += '\n';
  for (const HyperAggregate& agg : result.by_hyper) {
    Record rec;
    rec.kind = "hyper";
    rec.fields = {{"h", agg.h_canonical},
                  {"dev_mean", format_score(agg.dev_mean)},
                  {"dev_std", format_score(agg.dev_std)}};
    out += format_record(rec);
    out += '\n';
  }
  Record best;
  best.kind = "best";
  best.fields = {{"h", result.best_canonical},
                 {"index", std::to_string(result.best_index)}};
  out += format_record(best);
  out += '\n';
  Record test;
  test.kind = "test";
  test.fields = {{"mean", format_double(result.test_mean)},
                 {"std", format_double(result.test_std)},
                 {"n", std::to_string(result.num_runs)}};
  out += format_record(test);
  out += '\n';
  return out;
}

bool replay_matches(const std::string& log_text, const std::string& summary_text,
                    std::string* recomputed) {
  const std::vector<LogSection> sections = parse_run_log(log_text);
  std::string rebuilt;
  for (const LogSection& s : sections) {
    // Sections without run records (e.g. sensitivity notes) write no summary.
    if (s.rows.empty()) continue;
    rebuilt += serialize_summary(reaggregate(s));
  }
  if (recomputed) *recomputed = rebuilt;
  return rebuilt == summary_text;
}

}  // namespace fseval
