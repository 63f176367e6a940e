#include <cmath>

#include "doctest.h"
#include "fseval/error.hpp"
#include "fseval/metrics.hpp"
#include "fseval/rng.hpp"

using namespace fseval;

namespace {

// Independent Spearman oracle: count-based average ranks, then a direct
// Pearson computation in long double. Kept free of the library's rank code.
double brute_force_spearman(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const std::size_t n = x.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<long double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        less += v[j] < v[i];
        equal += v[j] == v[i];
      }
      r[i] = less + (equal + 1) / 2.0L;
    }
    return r;
  };
  const std::vector<long double> rx = ranks(x), ry = ranks(y);
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

TaskBundle tiny_task(std::uint64_t seed) {
  SyntheticTaskConfig cfg;
  cfg.n_labeled = 64;
  cfg.n_unlabeled = 16;
  cfg.n_test = 400;
  cfg.seed = seed;
  return generate_synthetic_task(cfg);
}

LearnerSpec oracle_spec(double sigma, std::vector<double> weights,
                        double base = 0.85) {
  LearnerSpec spec;
  spec.kind = LearnerKind::oracle;
  spec.oracle_sigma = sigma;
  spec.oracle_base = base;
  spec.oracle_weights = std::move(weights);
  return spec;
}

SearchResult audit_run(const TaskBundle& bundle, const SplitPlan& plan,
                       const HyperSpace& space, const LearnerSpec& spec,
                       std::uint64_t master) {
  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &space;
  in.spec = &spec;
  in.metric = MetricKind::accuracy;
  in.master_seed = master;
  return run_search(in, RunMode::audit);
}

}  // namespace

TEST_CASE("mean_std basics") {
  const MeanStd constant = mean_std({82, 82, 82});
  CHECK(constant.mean == 82.0);
  CHECK(constant.std == 0.0);

  const MeanStd spread = mean_std({80, 82, 84, 82});
  CHECK(spread.mean == 82.0);
  CHECK(spread.std == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
  CHECK(!spread.singleton);

  const MeanStd single = mean_std({75});
  CHECK(single.mean == 75.0);
  CHECK(single.std == 0.0);
  CHECK(single.singleton);

  CHECK_THROWS_AS(mean_std({}), ConfigError);
}

TEST_CASE("mean_std is permutation invariant") {
  const std::vector<double> v{1.5, 2.5, -3.0, 0.25, 9.0};
  std::vector<double> w{9.0, 0.25, 1.5, -3.0, 2.5};
  CHECK(mean_std(v).mean == doctest::Approx(mean_std(w).mean).epsilon(1e-15));
  CHECK(mean_std(v).std == doctest::Approx(mean_std(w).std).epsilon(1e-15));
}

TEST_CASE("spearman basics") {
  CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3}, {30, 20, 10}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 2, 4}, {1, 3, 2, 4}) ==
        doctest::Approx(brute_force_spearman({1, 2, 2, 4}, {1, 3, 2, 4}))
            .epsilon(1e-12));
  CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(spearman({1}, {1}), ConfigError);
}

TEST_CASE("spearman matches the brute-force oracle on random vectors with ties") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.next_below(7);
    std::vector<double> x(n), y(n);
    bool cx = true, cy = true;
    for (int i = 0; i < n; ++i) {
      x[i] = rng.next_below(4);  // small support forces ties
      y[i] = rng.next_below(4);
      cx = cx && x[i] == x[0];
      cy = cy && y[i] == y[0];
    }
    if (cx || cy) continue;
    CHECK(spearman(x, y) ==
          doctest::Approx(brute_force_spearman(x, y)).epsilon(1e-12));
    CHECK(spearman(x, y) == doctest::Approx(spearman(y, x)).epsilon(1e-15));
  }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  const std::vector<double> x{0.3, 0.9, 0.1, 0.5};
  const std::vector<double> y{2.0, 1.0, 4.0, 3.0};
  std::vector<double> tx;
  for (double v : x) tx.push_back(std::exp(3.0 * v) + 7.0);
  CHECK(spearman(x, y) == spearman(tx, y));
  CHECK(spearman(x, x) == doctest::Approx(1.0));
}

TEST_CASE("noiseless oracle gives perfect dev-test correlation") {
  const TaskBundle bundle = tiny_task(3);
  const SplitPlan plan = make_ms(64, 4, 0.5, 11);
  HyperSpace space;
  space.dims = {{"a", {"0", "1", "2", "3"}}, {"b", {"0", "1"}}};
  const LearnerSpec spec = oracle_spec(0.0, {0.3, 0.1});
  const SearchResult result = audit_run(bundle, plan, space, spec, 5);
  const CorrelationReport report = correlation_over_space(result);
  CHECK(report.pairs.size() == 8);
  CHECK(report.rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure-noise oracle decorrelates dev and test") {
  const TaskBundle bundle = tiny_task(4);
  HyperSpace space;
  HyperSpace::Dim dim{"a", {}};
  for (int i = 0; i < 48; ++i) dim.values.push_back(std::to_string(i));
  space.dims = {dim};
  // A vanishing weight keeps per-h noise streams distinct while making the
  // true surface flat to double precision: dev and test are then pure noise.
  const LearnerSpec spec = oracle_spec(0.5, {1e-12});
  double sum_rho = 0, sum_abs = 0;
  const int n_seeds = 100;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const SplitPlan plan = make_ms(64, 4, 0.5, seed);
    const SearchResult result = audit_run(bundle, plan, space, spec, 1000 + seed);
    const double rho = correlation_over_space(result).rho;
    sum_rho += rho;
    sum_abs += std::abs(rho);
  }
  CHECK(std::abs(sum_rho / n_seeds) < 0.2);
  CHECK(sum_abs / n_seeds < 0.2);
}

TEST_CASE("correlation requires audit mode and a real grid") {
  const TaskBundle bundle = tiny_task(5);
  const SplitPlan plan = make_ms(64, 4, 0.5, 1);
  HyperSpace space;
  space.dims = {{"a", {"0", "1"}}};
  const LearnerSpec spec = oracle_spec(0.0, {0.3});
  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &space;
  in.spec = &spec;
  in.metric = MetricKind::accuracy;
  in.master_seed = 2;
  const SearchResult benchmark = run_search(in, RunMode::benchmark);
  CHECK_THROWS_AS(correlation_over_space(benchmark), ConfigError);

  HyperSpace singleton;
  singleton.dims = {{"a", {"0"}}};
  const SearchResult tiny = audit_run(bundle, plan, singleton, spec, 2);
  CHECK_THROWS_AS(correlation_over_space(tiny), ConfigError);
}

TEST_CASE("stability scan with a noiseless oracle is flat") {
  const TaskBundle bundle = tiny_task(6);
  HyperSpace space;
  space.dims = {{"a", {"0", "1", "2", "3"}}, {"b", {"0", "1"}}};
  const LearnerSpec spec = oracle_spec(0.0, {0.3, 0.1});
  const StabilityReport report = stability_scan(
      bundle, Strategy::ms, {2, 4, 8, 16}, 0.5, space, spec,
      MetricKind::accuracy, 9);
  REQUIRE(report.entries.size() == 4);
  CHECK(report.perf_std == 0.0);
  CHECK(report.rho_std == 0.0);
  for (const StabilityEntry& e : report.entries) {
    CHECK(e.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.test.std == 0.0);
  }
  CHECK_THROWS_AS(stability_scan(bundle, Strategy::ms, {4}, 0.5, space, spec,
                                 MetricKind::accuracy, 9),
                  ConfigError);
  CHECK_THROWS_AS(stability_scan(bundle, Strategy::cv, {2, 128}, std::nullopt,
                                 space, spec, MetricKind::accuracy, 9),
                  ConfigError);
}

TEST_CASE("sensitivity: ignored factor is null, dominant factor dominates") {
  const TaskBundle bundle = tiny_task(7);
  const SplitPlan plan = make_ms(64, 4, 0.5, 3);
  HyperSpace space;
  space.dims = {{"dominant", {"0", "1", "2"}},
                {"minor", {"0", "1", "2"}},
                {"ignored", {"0", "1", "2"}}};
  const LearnerSpec spec = oracle_spec(0.35, {0.4, 0.1, 0.0});
  const HyperPoint fixed = space.point_at(0);

  const SensitivityResult ignored =
      sensitivity("ignored", {"0", "1", "2"}, fixed, bundle, plan, space, spec,
                  MetricKind::accuracy, 21);
  CHECK(ignored.dev_std == 0.0);
  CHECK(ignored.test_std == 0.0);

  const SensitivityResult dominant =
      sensitivity("dominant", {"0", "1", "2"}, fixed, bundle, plan, space, spec,
                  MetricKind::accuracy, 21);
  const SensitivityResult minor =
      sensitivity("minor", {"0", "1", "2"}, fixed, bundle, plan, space, spec,
                  MetricKind::accuracy, 21);
  CHECK(dominant.dev_std > minor.dev_std);
  CHECK(dominant.test_std > minor.test_std);
  CHECK(dominant.dev_std > ignored.dev_std);

  CHECK_THROWS_AS(sensitivity("bogus", {"0", "1"}, fixed, bundle, plan, space,
                              spec, MetricKind::accuracy, 21),
                  ConfigError);
}

TEST_CASE("sensitivity on the pattern analog dominates for logreg") {
  SyntheticTaskConfig cfg;
  cfg.n_labeled = 64;
  cfg.n_unlabeled = 8;
  cfg.n_test = 600;
  cfg.seed = 17;
  const TaskBundle bundle = generate_synthetic_task(cfg);
  const SplitPlan plan = make_ms(64, 4, 0.5, 3);
  HyperSpace space;
  space.dims = {{"learning_rate", {"0.1", "0.12"}},
                {"max_steps", {"120", "140"}},
                {"eval_frequency", {"0.1"}},
                {"pattern", {"0", "1"}}};
  LearnerSpec spec;
  spec.kind = LearnerKind::logreg_gd;
  const HyperPoint fixed = space.point_at(0);

  const SensitivityResult pattern =
      sensitivity("pattern", {"0", "1"}, fixed, bundle, plan, space, spec,
                  MetricKind::accuracy, 5);
  const SensitivityResult lr =
      sensitivity("learning_rate", {"0.1", "0.12"}, fixed, bundle, plan, space,
                  spec, MetricKind::accuracy, 5);
  const SensitivityResult steps =
      sensitivity("max_steps", {"120", "140"}, fixed, bundle, plan, space, spec,
                  MetricKind::accuracy, 5);
  CHECK(pattern.test_std > lr.test_std);
  CHECK(pattern.test_std > steps.test_std);

  // Full-batch training is insensitive to example order by construction.
  const SensitivityResult order =
      sensitivity("train_order_seed", {"10", "20", "30"}, fixed, bundle, plan,
                  space, spec, MetricKind::accuracy, 5);
  CHECK(order.test_std < 1e-9);
}

TEST_CASE("rho recomputed from the run log matches the in-memory value exactly") {
  const TaskBundle bundle = tiny_task(9);
  const SplitPlan plan = make_cv(64, 4, 2);
  HyperSpace space;
  space.dims = {{"a", {"0", "1", "2", "3"}}, {"b", {"0", "1"}}};
  const LearnerSpec spec = oracle_spec(0.3, {0.3, 0.1});
  const SearchResult result = audit_run(bundle, plan, space, spec, 31);
  const CorrelationReport direct = correlation_over_space(result);

  const std::vector<LogSection> sections =
      parse_run_log(serialize_run_log(result));
  const CorrelationReport from_log = correlation_from_section(sections[0]);
  CHECK(from_log.rho == direct.rho);
  REQUIRE(from_log.pairs.size() == direct.pairs.size());
  for (std::size_t i = 0; i < direct.pairs.size(); ++i) {
    CHECK(from_log.pairs[i].first == direct.pairs[i].first);
    CHECK(from_log.pairs[i].second == direct.pairs[i].second);
  }
}

TEST_CASE("compare_strategies produces a report per strategy") {
  const TaskBundle bundle = tiny_task(8);
  HyperSpace space;
  space.dims = {{"a", {"0", "1", "2", "3"}}, {"b", {"0", "1"}}};
  const LearnerSpec spec = oracle_spec(0.2, {0.3, 0.1});
  const std::vector<StrategyReport> reports = compare_strategies(
      bundle, {Strategy::cv, Strategy::ms}, 4, 0.5, {2, 4}, space, spec,
      MetricKind::accuracy, 13);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].strategy == Strategy::cv);
  CHECK(reports[1].strategy == Strategy::ms);
  for (const StrategyReport& r : reports) {
    CHECK(r.correlation.pairs.size() == 8);
    CHECK(r.stability.entries.size() == 2);
    CHECK(r.performance.mean > 0.0);
  }
  const std::string table =
      render_strategy_table(reports, bundle.name, MetricKind::accuracy);
  CHECK(table.find("AUDIT") != std::string::npos);
  CHECK(table.find("CV") != std::string::npos);
  CHECK(table.find("MS") != std::string::npos);
}
