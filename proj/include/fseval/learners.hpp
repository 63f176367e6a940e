#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fseval/dataset.hpp"

namespace fseval {

// One hyper-parameter grid point. Values are kept as the exact config tokens;
// indices locate each value inside its dimension, which is what the oracle
// learner consumes. dim_sizes carries the owning space's shape so a point is
// self-contained.
struct HyperPoint {
  std::vector<std::string> names;
  std::vector<std::string> values;
  std::vector<int> indices;
  std::vector<int> dim_sizes;

  std::string canonical() const;  // "name=value,name=value" in dim order
  bool has(std::string_view name) const;
  const std::string& value(std::string_view name) const;
  double value_as_double(std::string_view name) const;
  int value_as_int(std::string_view name) const;
};

struct HyperSpace {
  struct Dim {
    std::string name;
    std::vector<std::string> values;
  };
  std::vector<Dim> dims;

  void validate() const;  // unique non-empty names, non-empty value lists
  std::size_t grid_size() const;
  // Row-major flat order: the first declared dimension varies slowest. This
  // order defines argmax tie-breaking everywhere.
  HyperPoint point_at(std::size_t flat_index) const;
  std::vector<HyperPoint> enumerate() const;
  int dim_index(std::string_view name) const;  // -1 when absent
  std::size_t flat_index(const HyperPoint& p) const;
  // Copy of `p` with one dimension set to `value` (which must belong to it).
  HyperPoint replace_value(const HyperPoint& p, std::string_view name,
                           const std::string& value) const;
};

enum class LearnerKind { nearest_centroid, logreg_gd, oracle };

const char* to_string(LearnerKind kind);
LearnerKind learner_from_string(const std::string& token);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::nearest_centroid;

  // nearest_centroid: p(c) proportional to exp(-dist_c^2 / (2 tau^2)).
  double centroid_temperature = 1.0;

  // oracle: true(h) = base - sum_i w_i * ((idx_i - peak_i) / (m_i - 1))^2
  // with peak_i = (m_i - 1) / 2 (integer division). With all weights > 0 the
  // argmax is unique at the all-peaks point. Observed scores add Gaussian
  // noise of variance sigma^2 / n where n is the scored set's size; the noise
  // stream is seeded from (master seed, the values of the dims with nonzero
  // weight, run index), so dims the oracle ignores cannot influence scores.
  double oracle_sigma = 0.0;
  double oracle_base = 0.85;
  std::vector<double> oracle_weights;  // per dim; empty = 0.4 / 2^i default
};

double default_oracle_weight(int dim_position);

struct TrainContext {
  std::uint64_t master_seed = 0;
  int run_index = 0;  // k (or l in practical mode)
  bool noisy = false;     // per-step input zeroing, self-training "noisy" mode
  double noise_rate = 0.0;
};

struct CheckpointMeta {
  int step = 0;
  std::string hyper;  // canonical h
  int run_index = 0;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  std::function<std::vector<double>(const std::vector<double>&)> predict_proba;
  double best_dev_score = 0.0;
  CheckpointMeta meta;

  // Oracle models score datasets directly instead of predicting per example.
  bool oracle = false;
  double oracle_true = 0.0;
  double oracle_sigma = 0.0;
  std::uint64_t oracle_noise_base = 0;
};

// Trains one model, tracking the dev score at every evaluation step and
// returning the checkpoint with the best dev score (ties go to the earliest
// step). Iterative learners evaluate every round(eval_frequency * max_steps)
// steps and always at the final step.
TrainedModel train(const LearnerSpec& spec,
                   const std::vector<Example>& train_set,
                   const std::vector<Example>& dev, const HyperPoint& h,
                   MetricKind metric, int num_classes, std::uint64_t seed,
                   const TrainContext& ctx = {});

// Practical-mode training: no dev set, checkpoint = final step,
// best_dev_score = NaN.
TrainedModel train_full(const LearnerSpec& spec,
                        const std::vector<Example>& train_set,
                        const HyperPoint& h, int num_classes,
                        std::uint64_t seed, const TrainContext& ctx = {});

// The oracle's noiseless score surface and its first grid-order argmax.
double oracle_true_score(const LearnerSpec& spec, const HyperPoint& h);
std::size_t oracle_argmax(const LearnerSpec& spec, const HyperSpace& space);

// Scores a model on a dataset with the given metric. Non-oracle models
// predict argmax class per example; oracle models return
// true(h) + sigma / sqrt(|data|) * z(eval_tag). The tag keeps dev/test noise
// streams apart.
double evaluate_model(const TrainedModel& model,
                      const std::vector<Example>& data, MetricKind metric,
                      int num_classes, std::string_view eval_tag);

// Pattern analog of a prompt pattern: a categorical feature-map id. Pattern 0
// is the identity; pattern p > 0 zeroes feature coordinate (p-1) mod d.
std::vector<double> apply_pattern(const std::vector<double>& features,
                                  int pattern);

// Multinomial logistic regression internals, exposed so tests can check the
// analytic gradient against finite differences. Weights are row-major
// [class][feature..., bias]; loss is mean cross-entropy over the rows.
void logreg_loss_grad(const std::vector<double>& weights,
                      const std::vector<std::vector<double>>& features,
                      const std::vector<int>& labels, int num_classes,
                      double* loss, std::vector<double>* grad);

std::vector<Example> gather_examples(const Dataset& dataset,
                                     const std::vector<int>& indices);

}  // namespace fseval
