#include <cmath>
#include <set>

#include "doctest.h"
#include "fseval/error.hpp"
#include "fseval/orchestrator.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

using namespace fseval;

namespace {

TaskBundle task(std::uint64_t seed) {
  SyntheticTaskConfig cfg;
  cfg.n_labeled = 64;
  cfg.n_unlabeled = 16;
  cfg.n_test = 500;
  cfg.seed = seed;
  return generate_synthetic_task(cfg);
}

HyperSpace oracle_space() {
  HyperSpace space;
  space.dims = {{"a", {"0", "1", "2", "3"}}, {"b", {"0", "1"}}};
  return space;
}

LearnerSpec oracle_spec(double sigma) {
  LearnerSpec spec;
  spec.kind = LearnerKind::oracle;
  spec.oracle_sigma = sigma;
  spec.oracle_weights = {0.3, 0.1};
  return spec;
}

SearchInputs inputs(const TaskBundle& bundle, const SplitPlan& plan,
                    const HyperSpace& space, const LearnerSpec& spec,
                    std::uint64_t master, int workers = 1) {
  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &space;
  in.spec = &spec;
  in.metric = MetricKind::accuracy;
  in.master_seed = master;
  in.workers = workers;
  return in;
}

}  // namespace

TEST_CASE("derive_seed is stable, tag-sensitive, and master-sensitive") {
  CHECK(derive_seed(7, {"a", "b"}) == derive_seed(7, {"a", "b"}));
  CHECK(derive_seed(7, {"a"}) != derive_seed(7, {"b"}));
  CHECK(derive_seed(7, {"a", "b"}) != derive_seed(7, {"b", "a"}));
  CHECK(derive_seed(7, {"a"}) != derive_seed(8, {"a"}));
}

TEST_CASE("every seed in a run is distinct across the tag set") {
  const TaskBundle bundle = task(1);
  const SplitPlan plan = make_ms(64, 4, 0.5, 3);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.1);
  const SearchResult result =
      run_search(inputs(bundle, plan, space, spec, 99), RunMode::audit);
  std::set<std::uint64_t> seeds;
  for (const RunRecord& r : result.records) seeds.insert(r.seed);
  CHECK(seeds.size() == result.records.size());

  // Changing the master seed changes every derived seed.
  const SearchResult other =
      run_search(inputs(bundle, plan, space, spec, 100), RunMode::audit);
  for (std::size_t i = 0; i < result.records.size(); ++i)
    CHECK(result.records[i].seed != other.records[i].seed);
}

TEST_CASE("noiseless oracle selects the documented argmax") {
  const TaskBundle bundle = task(2);
  const SplitPlan plan = make_ms(64, 4, 0.5, 5);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.0);
  for (std::uint64_t master = 0; master < 10; ++master) {
    const SearchResult result =
        run_search(inputs(bundle, plan, space, spec, master));
    CHECK(result.best_index == oracle_argmax(spec, space));
  }
}

TEST_CASE("h* equals a brute-force argmax over the logged dev scores") {
  const TaskBundle bundle = task(3);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.4);
  for (std::uint64_t master = 0; master < 20; ++master) {
    const SplitPlan plan = make_ms(64, 4, 0.5, master);
    const SearchResult result =
        run_search(inputs(bundle, plan, space, spec, master));
    // independent recomputation from the raw records
    const std::size_t grid = space.grid_size();
    std::size_t best = 0;
    double best_mean = -1e300;
    for (std::size_t hi = 0; hi < grid; ++hi) {
      double sum = 0;
      for (int k = 0; k < 4; ++k) sum += result.records[hi * 4 + k].dev_score;
      if (sum / 4 > best_mean) {
        best_mean = sum / 4;
        best = hi;
      }
    }
    CHECK(result.best_index == best);
  }
}

TEST_CASE("benchmark mode scores only the selected hyper point on test") {
  const TaskBundle bundle = task(4);
  const SplitPlan plan = make_ms(64, 4, 0.5, 7);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.2);
  const SearchResult result = run_search(inputs(bundle, plan, space, spec, 21));
  int with_test = 0;
  for (const RunRecord& r : result.records) {
    if (r.test_score) {
      ++with_test;
      CHECK(r.h.canonical() == result.best_canonical);
    }
  }
  CHECK(with_test == 4);

  const SearchResult audit =
      run_search(inputs(bundle, plan, space, spec, 21), RunMode::audit);
  for (const RunRecord& r : audit.records) CHECK(r.test_score.has_value());
  CHECK(audit.best_index == result.best_index);
  CHECK(audit.test_mean == result.test_mean);
}

TEST_CASE("aggregates are recomputable from the records") {
  const TaskBundle bundle = task(5);
  const SplitPlan plan = make_cv(64, 4, 9);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.3);
  const SearchResult result = run_search(inputs(bundle, plan, space, spec, 77));
  for (std::size_t hi = 0; hi < space.grid_size(); ++hi) {
    double sum = 0;
    for (int k = 0; k < 4; ++k) sum += result.records[hi * 4 + k].dev_score;
    const double mean = sum / 4;
    double ss = 0;
    for (int k = 0; k < 4; ++k) {
      const double d = result.records[hi * 4 + k].dev_score - mean;
      ss += d * d;
    }
    CHECK(std::abs(result.by_hyper[hi].dev_mean - mean) < 1e-12);
    CHECK(std::abs(result.by_hyper[hi].dev_std - std::sqrt(ss / 3)) < 1e-12);
  }
}

TEST_CASE("worker count does not change any output bit") {
  const TaskBundle bundle = task(6);
  const SplitPlan plan = make_ms(64, 4, 0.5, 13);
  const HyperSpace space = oracle_space();
  LearnerSpec spec;
  spec.kind = LearnerKind::logreg_gd;
  HyperSpace lr_space;
  lr_space.dims = {{"learning_rate", {"0.1", "0.3"}},
                   {"max_steps", {"40", "60"}},
                   {"pattern", {"0", "1"}}};
  const SearchResult serial =
      run_search(inputs(bundle, plan, lr_space, spec, 31, 1), RunMode::audit);
  const SearchResult par4 =
      run_search(inputs(bundle, plan, lr_space, spec, 31, 4), RunMode::audit);
  const SearchResult par8 =
      run_search(inputs(bundle, plan, lr_space, spec, 31, 8), RunMode::audit);
  CHECK(serialize_run_log(serial) == serialize_run_log(par4));
  CHECK(serialize_run_log(serial) == serialize_run_log(par8));
  CHECK(serialize_summary(serial) == serialize_summary(par4));
  CHECK(serialize_summary(serial) == serialize_summary(par8));
}

TEST_CASE("practical rerun trains on everything with derived seeds") {
  const TaskBundle bundle = task(7);
  const HyperSpace space = oracle_space();
  const HyperPoint h_star = space.point_at(2);

  LearnerSpec deterministic;
  deterministic.kind = LearnerKind::nearest_centroid;
  const SearchResult single =
      practical_rerun(bundle, h_star, deterministic, MetricKind::accuracy, 1, 5);
  CHECK(single.num_runs == 1);
  CHECK(single.test_std == 0.0);

  const LearnerSpec oracle = oracle_spec(0.0);
  const SearchResult quad =
      practical_rerun(bundle, h_star, oracle, MetricKind::accuracy, 4, 5);
  REQUIRE(quad.records.size() == 4);
  const double truth = oracle_true_score(oracle, h_star);
  for (const RunRecord& r : quad.records) {
    CHECK(*r.test_score == truth);
    CHECK(std::isnan(r.dev_score));
  }
  // mean recomputable from the log
  double sum = 0;
  for (const RunRecord& r : quad.records) sum += *r.test_score;
  CHECK(std::abs(quad.test_mean - sum / 4) < 1e-12);

  CHECK_THROWS_AS(
      practical_rerun(bundle, h_star, oracle, MetricKind::accuracy, 0, 5),
      ConfigError);
}

TEST_CASE("run log round-trips and replays") {
  const TaskBundle bundle = task(8);
  const SplitPlan plan = make_ms(64, 4, 0.5, 3);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.25);
  const SearchResult result = run_search(inputs(bundle, plan, space, spec, 55));
  const std::string log_text = serialize_run_log(result);
  const std::string summary_text = serialize_summary(result);

  const std::vector<LogSection> sections = parse_run_log(log_text);
  REQUIRE(sections.size() == 1);
  CHECK(sections[0].rows.size() == result.records.size());
  // write -> read -> write is the identity on bytes
  CHECK(serialize_log_section(sections[0]) == log_text);

  std::string recomputed;
  CHECK(replay_matches(log_text, summary_text, &recomputed));
  CHECK(recomputed == summary_text);

  // Tampering with a logged h* test score must break the replay.
  std::string tampered = log_text;
  const std::size_t pos = tampered.find("test=0");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 6, "test=1");
  CHECK(!replay_matches(tampered, summary_text, nullptr));
}

TEST_CASE("log parse errors carry line numbers") {
  try {
    parse_run_log("log\tschema=1\tmode=benchmark\tstrategy=ms\tK=4\tr=0.5\t"
                  "seed=1\tmetric=accuracy\tlearner=oracle\nrun\tgarbage\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_log(""), ConfigError);
  CHECK_THROWS_AS(parse_run_log("run\th=a=1\tk=0\tdev=1\ttest=-\tseed=0\tstep=0\n"),
                  ConfigError);

  // a log whose final record was cut off mid-line
  const TaskBundle bundle = task(12);
  const SplitPlan plan = make_ms(64, 2, 0.5, 3);
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.1);
  const std::string log_text =
      serialize_run_log(run_search(inputs(bundle, plan, space, spec, 1)));
  const std::string truncated = log_text.substr(0, log_text.size() - 30);
  try {
    parse_run_log(truncated);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 17") != std::string::npos);
  }
}

TEST_CASE("degenerate splits abort with strategy and run index") {
  const TaskBundle bundle = task(9);
  SplitPlan plan = make_ms(64, 2, 0.5, 3);
  plan.splits[1].dev.clear();
  const HyperSpace space = oracle_space();
  const LearnerSpec spec = oracle_spec(0.0);
  try {
    run_search(inputs(bundle, plan, space, spec, 1));
    FAIL("expected DegenerateSplitError");
  } catch (const DegenerateSplitError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ms") != std::string::npos);
    CHECK(msg.find("k=1") != std::string::npos);
  }
}

TEST_CASE("reaggregation picks the highest mean dev score") {
  const std::string log =
      "log\tschema=1\tmode=benchmark\tstrategy=ms\tK=1\tr=0.5\tseed=0\t"
      "metric=accuracy\tlearner=oracle\n"
      "run\th=a=1\tk=0\tdev=70\ttest=-\tseed=1\tstep=0\n"
      "run\th=a=2\tk=0\tdev=75\ttest=0.9\tseed=2\tstep=0\n"
      "run\th=a=3\tk=0\tdev=72\ttest=-\tseed=3\tstep=0\n";
  const SearchResult result = reaggregate(parse_run_log(log)[0]);
  CHECK(result.best_canonical == "a=2");
  CHECK(result.test_mean == 0.9);
}

TEST_CASE("loocv dev scores are zero or one under accuracy") {
  const TaskBundle bundle = task(11);
  const SplitPlan plan = make_loocv(16);
  HyperSpace space;
  space.dims = {{"pattern", {"0"}}};
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  SearchInputs in = inputs(bundle, plan, space, spec, 1);
  TaskBundle small = bundle;
  small.labeled.examples.resize(16);
  in.bundle = &small;
  const SearchResult result = run_search(in);
  for (const RunRecord& r : result.records)
    CHECK((r.dev_score == 0.0 || r.dev_score == 1.0));
}

TEST_CASE("dev slices feed the configured metric") {
  const TaskBundle bundle = task(10);
  const SplitPlan plan = make_ms(64, 2, 0.5, 3);
  HyperSpace space;
  space.dims = {{"pattern", {"0"}}};
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  SearchInputs in = inputs(bundle, plan, space, spec, 1);
  in.metric = MetricKind::macro_f1;
  const SearchResult result = run_search(in);
  for (const RunRecord& r : result.records) {
    CHECK(r.dev_score >= 0.0);
    CHECK(r.dev_score <= 1.0);
  }
}
