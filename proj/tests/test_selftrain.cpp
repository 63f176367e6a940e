#include <cmath>
#include <set>

#include "doctest.h"
#include "fseval/error.hpp"
#include "fseval/selftrain.hpp"

using namespace fseval;

namespace {

TaskBundle selftrain_task(std::uint64_t seed, double sep = 6.0, int pool = 500) {
  SyntheticTaskConfig cfg;
  cfg.separation = sep;
  cfg.n_labeled = 64;
  cfg.n_unlabeled = pool;
  cfg.n_test = 600;
  cfg.seed = seed;
  return generate_synthetic_task(cfg);
}

HyperSpace centroid_space() {
  HyperSpace space;
  space.dims = {{"pattern", {"0", "1"}}};
  return space;
}

TrainedModel constant_model(std::vector<double> probs) {
  TrainedModel m;
  m.predict_proba = [probs](const std::vector<double>&) { return probs; };
  m.best_dev_score = probs[0];
  return m;
}

// A model whose confidence depends on the example's first feature, so tests
// can rig the pseudo-label ranking.
TrainedModel feature_driven_model() {
  TrainedModel m;
  m.predict_proba = [](const std::vector<double>& x) {
    const double p = 1.0 / (1.0 + std::exp(-x[0]));
    return std::vector<double>{1.0 - p, p};
  };
  return m;
}

SelfTrainConfig config(int generations, SelfTrainConfig::Labeling labeling) {
  SelfTrainConfig cfg;
  cfg.generations = generations;
  cfg.labeling = labeling;
  cfg.sample_ratio = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("generation sizes follow the geometric schedule") {
  const TaskBundle bundle = selftrain_task(3);
  const SplitPlan plan = make_ms(64, 4, 0.5, 7);
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  const HyperPoint h = centroid_space().point_at(0);
  const auto records =
      self_train(bundle, plan, h, spec, MetricKind::accuracy,
                 config(3, SelfTrainConfig::Labeling::single), 5);
  REQUIRE(records.size() == 3);
  for (int k = 0; k < 4; ++k) {
    CHECK(records[0].train_sizes[k] == 32);
    CHECK(records[1].train_sizes[k] == 96);
    CHECK(records[2].train_sizes[k] == 288);
  }
  CHECK(!records[0].truncated);
  CHECK(!records[2].truncated);
  for (const auto& additions : records[0].additions) CHECK(additions.empty());
}

TEST_CASE("pool exhaustion truncates the schedule and flags the record") {
  const TaskBundle bundle = selftrain_task(4, 6.0, 100);
  const SplitPlan plan = make_ms(64, 2, 0.5, 7);
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  const HyperPoint h = centroid_space().point_at(0);
  const auto records =
      self_train(bundle, plan, h, spec, MetricKind::accuracy,
                 config(3, SelfTrainConfig::Labeling::single), 5);
  // targets 32, 96, 288; the 100-example pool caps generation 3 at 132
  CHECK(records[1].train_sizes[0] == 96);
  CHECK(records[2].train_sizes[0] == 132);
  CHECK(records[2].truncated);
}

TEST_CASE("a single generation reproduces the plain search exactly") {
  const TaskBundle bundle = selftrain_task(5);
  const SplitPlan plan = make_ms(64, 4, 0.5, 9);
  const HyperSpace space = centroid_space();
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;

  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &space;
  in.spec = &spec;
  in.metric = MetricKind::accuracy;
  in.master_seed = 41;
  const SearchResult search = run_search(in);
  const HyperPoint h_star = space.point_at(search.best_index);

  const auto records =
      self_train(bundle, plan, h_star, spec, MetricKind::accuracy,
                 config(1, SelfTrainConfig::Labeling::single), 41);
  REQUIRE(records.size() == 1);
  CHECK(records[0].test.mean == search.test_mean);
  CHECK(records[0].test.std == search.test_std);
}

TEST_CASE("cross ensemble of identical models collapses to the single labels") {
  const TaskBundle bundle = selftrain_task(6);
  std::vector<int> candidates;
  for (int i = 0; i < bundle.unlabeled.size(); ++i) candidates.push_back(i);

  const TrainedModel one = feature_driven_model();
  const std::vector<TrainedModel> same{one, one, one, one};
  const auto cross =
      pseudo_label_cross(same, bundle.unlabeled, candidates, 20, 1.0, 2, 99);
  const auto single =
      pseudo_label_single(one, bundle.unlabeled, candidates, 20, 2);
  REQUIRE(cross.size() == single.size());
  for (std::size_t i = 0; i < cross.size(); ++i) {
    CHECK(cross[i].pool_index == single[i].pool_index);
    CHECK(cross[i].label == single[i].label);
    CHECK(cross[i].confidence == doctest::Approx(single[i].confidence).epsilon(1e-12));
  }
}

TEST_CASE("ensemble probabilities average and pick the argmax") {
  Dataset pool;
  pool.role = Role::unlabeled;
  pool.num_classes = 2;
  Example e;
  e.features = {0.0};
  pool.examples.push_back(e);

  const std::vector<TrainedModel> models{constant_model({0.9, 0.1}),
                                         constant_model({0.5, 0.5})};
  const auto picks = pseudo_label_cross(models, pool, {0}, 1, 1.0, 2, 1);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0].label == 0);
  CHECK(picks[0].confidence == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("selection is class-balanced with remainder by confidence") {
  Dataset pool;
  pool.role = Role::unlabeled;
  pool.num_classes = 2;
  // 12 examples labeled 1 with high confidence, 3 labeled 0 with low.
  for (int i = 0; i < 15; ++i) {
    Example e;
    e.features = {i < 12 ? 3.0 + 0.1 * i : -0.5 - 0.1 * i};
    pool.examples.push_back(e);
  }
  std::vector<int> candidates;
  for (int i = 0; i < 15; ++i) candidates.push_back(i);
  const auto picks =
      pseudo_label_single(feature_driven_model(), pool, candidates, 10, 2);
  REQUIRE(picks.size() == 10);
  int ones = 0, zeros = 0;
  for (const PseudoLabel& p : picks) (p.label == 1 ? ones : zeros)++;
  // 5 per class, but class 0 has only 3 candidates; remainder goes to class 1
  CHECK(zeros == 3);
  CHECK(ones == 7);

  CHECK_THROWS_AS(
      pseudo_label_single(feature_driven_model(), pool, candidates, 16, 2),
      ConfigError);
}

TEST_CASE("additions never reuse a pool index within one split") {
  const TaskBundle bundle = selftrain_task(7, 6.0, 300);
  const SplitPlan plan = make_ms(64, 2, 0.5, 11);
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  const HyperPoint h = centroid_space().point_at(0);
  const auto records =
      self_train(bundle, plan, h, spec, MetricKind::accuracy,
                 config(3, SelfTrainConfig::Labeling::cross), 5);
  for (int k = 0; k < 2; ++k) {
    std::set<int> seen;
    for (const auto& rec : records)
      for (const PseudoLabel& p : rec.additions[k]) {
        CHECK(!seen.count(p.pool_index));
        seen.insert(p.pool_index);
      }
  }
}

TEST_CASE("a near-perfect predictor pseudo-labels the pool correctly") {
  const TaskBundle bundle = selftrain_task(8, 12.0);
  const SplitPlan plan = make_ms(64, 4, 0.5, 3);
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  const HyperPoint h = centroid_space().point_at(0);
  const auto records =
      self_train(bundle, plan, h, spec, MetricKind::accuracy,
                 config(2, SelfTrainConfig::Labeling::cross), 5);
  int correct = 0, total = 0;
  for (const PseudoLabel& p : records[1].additions[0]) {
    ++total;
    correct += p.label == bundle.pool_truth[p.pool_index];
  }
  REQUIRE(total > 0);
  CHECK(correct == total);
  CHECK(records[1].test.mean >= records[0].test.mean - 1e-12);
}

TEST_CASE("noise rate zero is bit-identical to noise disabled") {
  const TaskBundle bundle = selftrain_task(9);
  const SplitPlan plan = make_ms(64, 2, 0.5, 3);
  LearnerSpec spec;
  spec.kind = LearnerKind::logreg_gd;
  HyperSpace space;
  space.dims = {{"learning_rate", {"0.2"}}, {"max_steps", {"30"}}};
  const HyperPoint h = space.point_at(0);

  SelfTrainConfig off = config(2, SelfTrainConfig::Labeling::single);
  SelfTrainConfig zero = off;
  zero.noisy = true;
  zero.noise_rate = 0.0;
  const auto a = self_train(bundle, plan, h, spec, MetricKind::accuracy, off, 5);
  const auto b = self_train(bundle, plan, h, spec, MetricKind::accuracy, zero, 5);
  for (std::size_t g = 0; g < a.size(); ++g) {
    CHECK(a[g].test.mean == b[g].test.mean);
    CHECK(a[g].test.std == b[g].test.std);
  }

  SelfTrainConfig noisy = off;
  noisy.noisy = true;
  noisy.noise_rate = 0.05;
  const auto c = self_train(bundle, plan, h, spec, MetricKind::accuracy, noisy, 5);
  CHECK(c.size() == a.size());
  // generation 1 is the clean teacher: identical even under noise
  CHECK(c[0].test.mean == a[0].test.mean);
}

TEST_CASE("cross labeling subsamples round(K * ratio) voters per example") {
  const TaskBundle bundle = selftrain_task(10);
  std::vector<int> candidates;
  for (int i = 0; i < 30; ++i) candidates.push_back(i);
  // Two optimistic and two pessimistic constant models: full ensembles agree,
  // 2-of-4 subsets vary per example.
  const std::vector<TrainedModel> models{
      constant_model({0.95, 0.05}), constant_model({0.9, 0.1}),
      constant_model({0.2, 0.8}), constant_model({0.1, 0.9})};
  const auto a = pseudo_label_cross(models, bundle.unlabeled, candidates, 10,
                                    0.5, 2, 77);
  const auto b = pseudo_label_cross(models, bundle.unlabeled, candidates, 10,
                                    0.5, 2, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pool_index == b[i].pool_index);
    CHECK(a[i].confidence == b[i].confidence);
  }
  std::set<double> confidences;
  for (const PseudoLabel& p : a) confidences.insert(p.confidence);
  CHECK(confidences.size() > 1);  // different voter subsets per example

  CHECK_THROWS_AS(pseudo_label_cross({models[0]}, bundle.unlabeled, candidates,
                                     5, 1.0, 2, 1),
                  ConfigError);
}

TEST_CASE("best-config ensemble uses only the dev-best pattern when asked") {
  std::vector<PatternModel> models;
  for (int k = 0; k < 4; ++k)
    models.push_back(PatternModel{"0", 0.9, constant_model({0.8, 0.2})});
  for (int k = 0; k < 4; ++k)
    models.push_back(PatternModel{"1", 0.6, constant_model({0.2, 0.8})});

  const auto best = best_config_ensemble(models, true);
  const auto all = best_config_ensemble(models, false);
  const std::vector<double> x{0.0};
  CHECK(best(x)[0] == doctest::Approx(0.8).epsilon(1e-12));  // exactly the K=4 pattern-0 models
  CHECK(all(x)[0] == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<PatternModel> one{models[0]};
  CHECK(best_config_ensemble(one, true)(x) == best_config_ensemble(one, false)(x));
  CHECK_THROWS_AS(best_config_ensemble({}, true), ConfigError);
}

TEST_CASE("best-pattern labeling beats all-pattern labeling on a rigged task") {
  // Pattern 0 keeps the signal axis, pattern 1 zeroes it: the dev-best
  // pattern's ensemble labels the pool strictly better.
  const TaskBundle bundle = selftrain_task(11, 5.0);
  const SplitPlan plan = make_ms(64, 4, 0.5, 13);
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_centroid;
  const HyperSpace space = centroid_space();

  std::vector<PatternModel> models;
  for (int pattern = 0; pattern < 2; ++pattern) {
    const HyperPoint h = space.point_at(pattern);
    double dev_sum = 0;
    std::vector<TrainedModel> trained;
    for (int k = 0; k < 4; ++k) {
      TrainedModel m = train(spec, gather_examples(bundle.labeled, plan.splits[k].train),
                             gather_examples(bundle.labeled, plan.splits[k].dev),
                             h, MetricKind::accuracy, 2,
                             training_seed(21, h, k), {});
      dev_sum += m.best_dev_score;
      trained.push_back(std::move(m));
    }
    for (TrainedModel& m : trained)
      models.push_back(PatternModel{std::to_string(pattern), dev_sum / 4, std::move(m)});
  }

  const auto label_accuracy = [&](bool best_only) {
    const auto predict = best_config_ensemble(models, best_only);
    int correct = 0;
    for (int i = 0; i < bundle.unlabeled.size(); ++i) {
      const std::vector<double> p = predict(bundle.unlabeled.examples[i].features);
      const int label = p[1] > p[0] ? 1 : 0;
      correct += label == bundle.pool_truth[i];
    }
    return static_cast<double>(correct) / bundle.unlabeled.size();
  };
  CHECK(label_accuracy(true) >= label_accuracy(false));
}

TEST_CASE("self-train configuration is validated") {
  SelfTrainConfig bad;
  bad.generations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SelfTrainConfig{};
  bad.sample_ratio = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SelfTrainConfig{};
  bad.noise_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
