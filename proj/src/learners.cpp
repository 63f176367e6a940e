#include "fseval/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "fseval/error.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

// --- Hyper space -----------------------------------------------------------

std::string HyperPoint::canonical() const {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
    out += '=';
    out += values[i];
  }
  return out;
}

bool HyperPoint::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::string& HyperPoint::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw ConfigError("hyper point has no dimension '" + std::string(name) + "'");
}

double HyperPoint::value_as_double(std::string_view name) const {
  return parse_double(value(name), "hyper dimension " + std::string(name));
}

int HyperPoint::value_as_int(std::string_view name) const {
  return static_cast<int>(
      parse_int(value(name), "hyper dimension " + std::string(name)));
}

void HyperSpace::validate() const {
  if (dims.empty()) throw ConfigError("hyper space has no dimensions");
  std::set<std::string> names;
  for (const Dim& d : dims) {
    if (d.name.empty()) throw ConfigError("hyper dimension with empty name");
    if (!names.insert(d.name).second)
      throw ConfigError("duplicate hyper dimension: " + d.name);
    if (d.values.empty())
      throw ConfigError("hyper dimension '" + d.name + "' has no values");
  }
}

std::size_t HyperSpace::grid_size() const {
  std::size_t n = 1;
  for (const Dim& d : dims) n *= d.values.size();
  return n;
}

HyperPoint HyperSpace::point_at(std::size_t flat_index) const {
  HyperPoint p;
  const std::size_t n_dims = dims.size();
  p.names.resize(n_dims);
  p.values.resize(n_dims);
  p.indices.resize(n_dims);
  p.dim_sizes.resize(n_dims);
  std::size_t rem = flat_index;
  for (std::size_t i = n_dims; i-- > 0;) {
    const std::size_t m = dims[i].values.size();
    const std::size_t idx = rem % m;
    rem /= m;
    p.names[i] = dims[i].name;
    p.values[i] = dims[i].values[idx];
    p.indices[i] = static_cast<int>(idx);
    p.dim_sizes[i] = static_cast<int>(m);
  }
  return p;
}

std::vector<HyperPoint> HyperSpace::enumerate() const {
  std::vector<HyperPoint> out;
  const std::size_t n = grid_size();
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(point_at(i));
  return out;
}

int HyperSpace::dim_index(std::string_view name) const {
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t HyperSpace::flat_index(const HyperPoint& p) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims.size(); ++i)
    flat = flat * dims[i].values.size() + static_cast<std::size_t>(p.indices[i]);
  return flat;
}

HyperPoint HyperSpace::replace_value(const HyperPoint& p, std::string_view name,
                                     const std::string& value) const {
  const int di = dim_index(name);
  if (di < 0) throw ConfigError("unknown hyper dimension '" + std::string(name) + "'");
  const auto& vals = dims[di].values;
  const auto it = std::find(vals.begin(), vals.end(), value);
  if (it == vals.end())
    throw ConfigError("value '" + value + "' not in dimension '" +
                      std::string(name) + "'");
  HyperPoint out = p;
  out.values[di] = value;
  out.indices[di] = static_cast<int>(it - vals.begin());
  return out;
}

// --- Learner specs ---------------------------------------------------------

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::nearest_centroid: return "nearest_centroid";
    case LearnerKind::logreg_gd: return "logreg_gd";
    case LearnerKind::oracle: return "oracle";
  }
  return "?";
}

LearnerKind learner_from_string(const std::string& token) {
  if (token == "nearest_centroid") return LearnerKind::nearest_centroid;
  if (token == "logreg_gd") return LearnerKind::logreg_gd;
  if (token == "oracle") return LearnerKind::oracle;
  throw ConfigError("unknown learner: " + token);
}

double default_oracle_weight(int dim_position) {
  return 0.4 * std::pow(0.5, dim_position);
}

std::vector<double> apply_pattern(const std::vector<double>& features,
                                  int pattern) {
  std::vector<double> out = features;
  if (pattern > 0 && !out.empty())
    out[(pattern - 1) % out.size()] = 0.0;
  return out;
}

std::vector<Example> gather_examples(const Dataset& dataset,
                                     const std::vector<int>& indices) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    if (idx < 0 || idx >= dataset.size())
      throw ConfigError("split index " + std::to_string(idx) +
                        " out of range for dataset of size " +
                        std::to_string(dataset.size()));
    out.push_back(dataset.examples[idx]);
  }
  return out;
}

// --- Logistic regression ---------------------------------------------------

namespace {

struct LogregHypers {
  double learning_rate = 0.1;
  int max_steps = 100;
  double eval_frequency = 0.04;
  int pattern = 0;
};

LogregHypers read_logreg_hypers(const HyperPoint& h) {
  LogregHypers out;
  if (h.has("learning_rate")) out.learning_rate = h.value_as_double("learning_rate");
  if (h.has("max_steps")) out.max_steps = h.value_as_int("max_steps");
  if (h.has("eval_frequency")) out.eval_frequency = h.value_as_double("eval_frequency");
  if (h.has("pattern")) out.pattern = h.value_as_int("pattern");
  if (out.max_steps < 1) throw ConfigError("logreg_gd: max_steps must be >= 1");
  if (out.learning_rate <= 0) throw ConfigError("logreg_gd: learning_rate <= 0");
  if (out.eval_frequency <= 0 || out.eval_frequency > 1)
    throw ConfigError("logreg_gd: eval_frequency must be in (0, 1]");
  return out;
}

std::vector<double> softmax_from_logits(std::vector<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

int argmax_class(const std::vector<double>& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c)
    if (probs[c] > probs[best]) best = c;
  return best;
}

std::vector<int> labels_of(const std::vector<Example>& data, int num_classes) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const Example& e : data) {
    if (!e.has_label()) throw ConfigError("example without label in scored set");
    if (e.label >= num_classes)
      throw ConfigError("label " + std::to_string(e.label) +
                        " out of range for " + std::to_string(num_classes) +
                        " classes");
    out.push_back(e.label);
  }
  return out;
}

double dataset_score(
    const std::function<std::vector<double>(const std::vector<double>&)>& predict,
    const std::vector<Example>& data, MetricKind metric, int num_classes) {
  std::vector<int> preds;
  preds.reserve(data.size());
  for (const Example& e : data) preds.push_back(argmax_class(predict(e.features)));
  return score(preds, labels_of(data, num_classes), metric, num_classes);
}

}  // namespace

void logreg_loss_grad(const std::vector<double>& weights,
                      const std::vector<std::vector<double>>& features,
                      const std::vector<int>& labels, int num_classes,
                      double* loss, std::vector<double>* grad) {
  const int n = static_cast<int>(features.size());
  if (n == 0) throw ConfigError("logreg: empty training set");
  const int dim = static_cast<int>(features[0].size());
  const int row = dim + 1;  // bias last
  if (static_cast<int>(weights.size()) != num_classes * row)
    throw ConfigError("logreg: weight vector has wrong size");

  if (loss) *loss = 0;
  if (grad) grad->assign(weights.size(), 0.0);

  std::vector<double> logits(num_classes);
  for (int i = 0; i < n; ++i) {
    const std::vector<double>& x = features[i];
    for (int c = 0; c < num_classes; ++c) {
      double z = weights[c * row + dim];
      for (int j = 0; j < dim; ++j) z += weights[c * row + j] * x[j];
      logits[c] = z;
    }
    const std::vector<double> probs = softmax_from_logits(logits);
    if (loss) *loss -= std::log(std::max(probs[labels[i]], 1e-300));
    if (grad) {
      for (int c = 0; c < num_classes; ++c) {
        const double delta = probs[c] - (labels[i] == c ? 1.0 : 0.0);
        for (int j = 0; j < dim; ++j) (*grad)[c * row + j] += delta * x[j];
        (*grad)[c * row + dim] += delta;
      }
    }
  }
  if (loss) *loss /= n;
  if (grad)
    for (double& g : *grad) g /= n;
}

namespace {

struct LinearModel {
  std::vector<double> weights;
  int dim = 0;
  int num_classes = 0;
  int pattern = 0;

  std::vector<double> predict(const std::vector<double>& raw) const {
    const std::vector<double> x = apply_pattern(raw, pattern);
    const int row = dim + 1;
    std::vector<double> logits(num_classes);
    for (int c = 0; c < num_classes; ++c) {
      double z = weights[c * row + dim];
      for (int j = 0; j < dim; ++j) z += weights[c * row + j] * x[j];
      logits[c] = z;
    }
    return softmax_from_logits(logits);
  }
};

TrainedModel train_logreg(const LearnerSpec& spec,
                          const std::vector<Example>& train,
                          const std::vector<Example>& dev, const HyperPoint& h,
                          MetricKind metric, int num_classes,
                          std::uint64_t seed, const TrainContext& ctx,
                          bool practical) {
  (void)spec;
  const LogregHypers hp = read_logreg_hypers(h);
  const int dim = static_cast<int>(train[0].features.size());
  const int row = dim + 1;

  std::vector<std::vector<double>> mapped;
  mapped.reserve(train.size());
  for (const Example& e : train) mapped.push_back(apply_pattern(e.features, hp.pattern));
  const std::vector<int> labels = labels_of(train, num_classes);

  std::vector<double> weights(static_cast<std::size_t>(num_classes) * row, 0.0);
  const int eval_every =
      std::max(1, static_cast<int>(std::llround(hp.eval_frequency * hp.max_steps)));

  Rng noise_rng(derive_seed(seed, {"noise"}));
  const bool noisy = ctx.noisy && ctx.noise_rate > 0.0;

  auto dev_score_now = [&]() {
    LinearModel m{weights, dim, num_classes, hp.pattern};
    return dataset_score([&m](const std::vector<double>& x) { return m.predict(x); },
                         dev, metric, num_classes);
  };

  double best_score = -std::numeric_limits<double>::infinity();
  int best_step = -1;
  std::vector<double> best_weights = weights;

  std::vector<std::vector<double>> step_features;
  std::vector<double> grad;
  double loss = 0;
  for (int step = 1; step <= hp.max_steps; ++step) {
    const std::vector<std::vector<double>>* batch = &mapped;
    if (noisy) {
      step_features = mapped;
      for (auto& xs : step_features)
        for (double& v : xs)
          if (noise_rng.next_unit() < ctx.noise_rate) v = 0.0;
      batch = &step_features;
    }
    logreg_loss_grad(weights, *batch, labels, num_classes, &loss, &grad);
    for (std::size_t i = 0; i < weights.size(); ++i)
      weights[i] -= hp.learning_rate * grad[i];

    if (!practical && (step % eval_every == 0 || step == hp.max_steps)) {
      const double s = dev_score_now();
      if (s > best_score) {  // ties keep the earliest checkpoint
        best_score = s;
        best_step = step;
        best_weights = weights;
      }
    }
  }

  TrainedModel model;
  if (practical) {
    best_weights = weights;
    best_step = hp.max_steps;
    best_score = std::numeric_limits<double>::quiet_NaN();
  }
  auto lm = std::make_shared<LinearModel>(
      LinearModel{std::move(best_weights), dim, num_classes, hp.pattern});
  model.predict_proba = [lm](const std::vector<double>& x) { return lm->predict(x); };
  model.best_dev_score = best_score;
  model.meta = CheckpointMeta{best_step, h.canonical(), ctx.run_index, seed};
  return model;
}

TrainedModel train_centroid(const LearnerSpec& spec,
                            const std::vector<Example>& train,
                            const std::vector<Example>& dev, const HyperPoint& h,
                            MetricKind metric, int num_classes,
                            std::uint64_t seed, const TrainContext& ctx,
                            bool practical) {
  const int pattern = h.has("pattern") ? h.value_as_int("pattern") : 0;
  const int dim = static_cast<int>(train[0].features.size());

  std::vector<std::vector<double>> centroids(num_classes,
                                             std::vector<double>(dim, 0.0));
  std::vector<int> counts(num_classes, 0);
  Rng noise_rng(derive_seed(seed, {"noise"}));
  const bool noisy = ctx.noisy && ctx.noise_rate > 0.0;
  for (const Example& e : train) {
    if (!e.has_label() || e.label >= num_classes)
      throw ConfigError("centroid: missing or out-of-range training label");
    std::vector<double> x = apply_pattern(e.features, pattern);
    if (noisy)
      for (double& v : x)
        if (noise_rng.next_unit() < ctx.noise_rate) v = 0.0;
    for (int j = 0; j < dim; ++j) centroids[e.label][j] += x[j];
    ++counts[e.label];
  }
  std::vector<char> present(num_classes, 0);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) {
      present[c] = 1;
      for (double& v : centroids[c]) v /= counts[c];
    }
  }

  const double tau2 = 2.0 * spec.centroid_temperature * spec.centroid_temperature;
  struct CentroidModel {
    std::vector<std::vector<double>> centroids;
    std::vector<char> present;
    int pattern;
    double tau2;

    std::vector<double> predict(const std::vector<double>& raw) const {
      const std::vector<double> x = apply_pattern(raw, pattern);
      const int c_count = static_cast<int>(centroids.size());
      std::vector<double> neg(c_count);
      for (int c = 0; c < c_count; ++c) {
        if (!present[c]) {
          neg[c] = -1e18;
          continue;
        }
        double d2 = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double diff = x[j] - centroids[c][j];
          d2 += diff * diff;
        }
        neg[c] = -d2 / tau2;
      }
      return softmax_from_logits(neg);
    }
  };
  auto cm = std::make_shared<CentroidModel>(
      CentroidModel{std::move(centroids), std::move(present), pattern, tau2});

  TrainedModel model;
  model.predict_proba = [cm](const std::vector<double>& x) { return cm->predict(x); };
  model.best_dev_score =
      practical ? std::numeric_limits<double>::quiet_NaN()
                : dataset_score(model.predict_proba, dev, metric, num_classes);
  model.meta = CheckpointMeta{0, h.canonical(), ctx.run_index, seed};
  return model;
}

std::vector<double> oracle_weights_for(const LearnerSpec& spec,
                                       std::size_t n_dims) {
  std::vector<double> w = spec.oracle_weights;
  if (w.empty()) {
    w.resize(n_dims);
    for (std::size_t i = 0; i < n_dims; ++i)
      w[i] = default_oracle_weight(static_cast<int>(i));
  }
  if (w.size() != n_dims)
    throw ConfigError("oracle: weight count does not match the hyper space");
  return w;
}

// The noise stream identity: only dimensions the score surface actually uses
// participate, so varying an ignored dimension cannot change observed scores.
std::string oracle_effective_tag(const HyperPoint& h,
                                 const std::vector<double>& weights) {
  std::string tag;
  for (std::size_t i = 0; i < h.names.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    if (!tag.empty()) tag += ',';
    tag += h.names[i];
    tag += '=';
    tag += h.values[i];
  }
  return tag;
}

TrainedModel train_oracle(const LearnerSpec& spec,
                          const std::vector<Example>& train,
                          const std::vector<Example>& dev, const HyperPoint& h,
                          int num_classes, std::uint64_t seed,
                          const TrainContext& ctx, bool practical) {
  (void)train;
  (void)seed;
  const std::vector<double> weights = oracle_weights_for(spec, h.names.size());
  const double truth = oracle_true_score(spec, h);
  const std::uint64_t noise_base =
      derive_seed(ctx.master_seed,
                  {"oracle", oracle_effective_tag(h, weights),
                   "k=" + std::to_string(ctx.run_index)});

  TrainedModel model;
  model.oracle = true;
  model.oracle_true = truth;
  model.oracle_sigma = spec.oracle_sigma;
  model.oracle_noise_base = noise_base;
  const int c_count = num_classes;
  model.predict_proba = [c_count](const std::vector<double>&) {
    return std::vector<double>(c_count, 1.0 / c_count);
  };
  if (practical) {
    model.best_dev_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    Rng rng(derive_seed(noise_base, {"dev"}));
    model.best_dev_score = truth + spec.oracle_sigma /
                                       std::sqrt(static_cast<double>(dev.size())) *
                                       rng.next_gaussian();
  }
  model.meta = CheckpointMeta{0, h.canonical(), ctx.run_index, seed};
  return model;
}

}  // namespace

double oracle_true_score(const LearnerSpec& spec, const HyperPoint& h) {
  const std::vector<double> weights = oracle_weights_for(spec, h.names.size());
  double v = spec.oracle_base;
  for (std::size_t i = 0; i < h.indices.size(); ++i) {
    const int m = h.dim_sizes[i];
    const int peak = (m - 1) / 2;
    const double off =
        static_cast<double>(h.indices[i] - peak) / std::max(1, m - 1);
    v -= weights[i] * off * off;
  }
  return std::clamp(v, 0.0, 1.0);
}

std::size_t oracle_argmax(const LearnerSpec& spec, const HyperSpace& space) {
  const std::size_t n = space.grid_size();
  std::size_t best = 0;
  double best_score = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = oracle_true_score(spec, space.point_at(i));
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

TrainedModel train(const LearnerSpec& spec, const std::vector<Example>& train_set,
                   const std::vector<Example>& dev, const HyperPoint& h,
                   MetricKind metric, int num_classes, std::uint64_t seed,
                   const TrainContext& ctx) {
  if (train_set.empty()) throw ConfigError("train: empty training set");
  if (dev.empty())
    throw DegenerateSplitError("train: empty dev set (degenerate split)");
  switch (spec.kind) {
    case LearnerKind::logreg_gd:
      return train_logreg(spec, train_set, dev, h, metric, num_classes, seed, ctx, false);
    case LearnerKind::nearest_centroid:
      return train_centroid(spec, train_set, dev, h, metric, num_classes, seed, ctx, false);
    case LearnerKind::oracle:
      return train_oracle(spec, train_set, dev, h, num_classes, seed, ctx, false);
  }
  throw ConfigError("unknown learner kind");
}

TrainedModel train_full(const LearnerSpec& spec,
                        const std::vector<Example>& train_set,
                        const HyperPoint& h, int num_classes,
                        std::uint64_t seed, const TrainContext& ctx) {
  if (train_set.empty()) throw ConfigError("train_full: empty training set");
  const std::vector<Example> no_dev;
  switch (spec.kind) {
    case LearnerKind::logreg_gd:
      return train_logreg(spec, train_set, no_dev, h, MetricKind::accuracy,
                          num_classes, seed, ctx, true);
    case LearnerKind::nearest_centroid:
      return train_centroid(spec, train_set, no_dev, h, MetricKind::accuracy,
                            num_classes, seed, ctx, true);
    case LearnerKind::oracle:
      return train_oracle(spec, train_set, no_dev, h, num_classes, seed, ctx, true);
  }
  throw ConfigError("unknown learner kind");
}

double evaluate_model(const TrainedModel& model,
                      const std::vector<Example>& data, MetricKind metric,
                      int num_classes, std::string_view eval_tag) {
  if (data.empty()) throw ConfigError("evaluate_model: empty dataset");
  if (model.oracle) {
    Rng rng(derive_seed(model.oracle_noise_base, {eval_tag}));
    return model.oracle_true +
           model.oracle_sigma / std::sqrt(static_cast<double>(data.size())) *
               rng.next_gaussian();
  }
  return dataset_score(model.predict_proba, data, metric, num_classes);
}

}  // namespace fseval
