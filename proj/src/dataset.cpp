#include "fseval/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fseval/error.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

int Dataset::dim() const {
  return examples.empty() ? 0 : static_cast<int>(examples[0].features.size());
}

void Dataset::validate() const {
  if (num_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  const int d = dim();
  if (d < 1 && !examples.empty())
    throw ConfigError("dataset has zero-dimensional features");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& e = examples[i];
    if (static_cast<int>(e.features.size()) != d)
      throw ConfigError("example " + std::to_string(i) +
                        " has inconsistent feature dimension");
    if (role == Role::unlabeled) {
      if (e.has_label())
        throw ConfigError("unlabeled dataset contains a label at index " +
                          std::to_string(i));
    } else {
      if (!e.has_label())
        throw ConfigError("missing label at index " + std::to_string(i));
      if (e.label >= num_classes)
        throw ConfigError("label out of range at index " + std::to_string(i));
    }
  }
}

namespace {

std::vector<double> class_mean(int c, int dim, double separation) {
  std::vector<double> mean(dim, 0.0);
  if (c > 0) {
    const int axis = (c - 1) % dim;
    const int cycle = (c - 1) / dim;  // how often the axes have wrapped
    mean[axis] = separation * (1.0 + cycle);
  }
  return mean;
}

Dataset draw_role(const SyntheticTaskConfig& cfg, Role role, int n,
                  std::string_view tag, std::vector<int>* truth_out) {
  Dataset ds;
  ds.role = role;
  ds.num_classes = cfg.num_classes;
  ds.examples.reserve(n);
  Rng rng(derive_seed(cfg.seed, {"synthetic", tag}));
  for (int i = 0; i < n; ++i) {
    const int label = i % cfg.num_classes;
    Example e;
    e.features = class_mean(label, cfg.dim, cfg.separation);
    for (int j = 0; j < cfg.dim; ++j) e.features[j] += rng.next_gaussian();
    e.label = role == Role::unlabeled ? kNoLabel : label;
    if (truth_out) truth_out->push_back(label);
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

}  // namespace

TaskBundle generate_synthetic_task(const SyntheticTaskConfig& cfg) {
  if (cfg.dim < 1) throw ConfigError("synthetic task: dim must be >= 1");
  if (cfg.num_classes < 2) throw ConfigError("synthetic task: need >= 2 classes");
  if (cfg.n_labeled < 1 || cfg.n_unlabeled < 1 || cfg.n_test < 1)
    throw ConfigError("synthetic task: all role sizes must be >= 1");
  if (cfg.separation < 0) throw ConfigError("synthetic task: separation < 0");

  TaskBundle bundle;
  bundle.labeled = draw_role(cfg, Role::labeled, cfg.n_labeled, "labeled", nullptr);
  bundle.unlabeled =
      draw_role(cfg, Role::unlabeled, cfg.n_unlabeled, "unlabeled", &bundle.pool_truth);
  bundle.test = draw_role(cfg, Role::test, cfg.n_test, "test", nullptr);
  return bundle;
}

const char* to_string(MetricKind kind) {
  return kind == MetricKind::accuracy ? "accuracy" : "macro_f1";
}

MetricKind metric_from_string(const std::string& token) {
  if (token == "accuracy") return MetricKind::accuracy;
  if (token == "macro_f1") return MetricKind::macro_f1;
  throw ConfigError("unknown metric: " + token);
}

double score(const std::vector<int>& predictions, const std::vector<int>& truth,
             MetricKind kind, int num_classes) {
  if (predictions.size() != truth.size())
    throw ConfigError("score: predictions and truth differ in length");
  if (predictions.empty()) throw ConfigError("score: empty input");

  if (kind == MetricKind::accuracy) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (predictions[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
  }

  if (num_classes < 2) throw ConfigError("score: macro_f1 needs num_classes");
  std::vector<long long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predictions[i], t = truth[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes)
      throw ConfigError("score: class id out of range");
    if (p == t) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    f1_sum += denom > 0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return f1_sum / num_classes;
}

Dataset load_dataset(const std::string& path, Role role, int num_classes_hint) {
  const std::string text = read_file(path);
  Dataset ds;
  ds.role = role;
  int max_label = -1;
  int line_number = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    Example e;
    // features, then an optional whitespace-separated label
    const std::size_t ws = sv.find_first_of(" \t");
    std::string_view feat = ws == std::string_view::npos ? sv : sv.substr(0, ws);
    if (ws != std::string_view::npos) {
      const std::string_view rest = trim(sv.substr(ws));
      if (!rest.empty())
        e.label = static_cast<int>(
            parse_int(rest, path + ":" + std::to_string(line_number)));
    }
    for (const std::string& f : split(feat, ','))
      e.features.push_back(
          parse_double(f, path + ":" + std::to_string(line_number)));
    max_label = std::max(max_label, e.label);
    ds.examples.push_back(std::move(e));
  }
  if (ds.examples.empty()) throw ConfigError("empty dataset file: " + path);
  ds.num_classes = num_classes_hint > 0 ? num_classes_hint : max_label + 1;
  ds.validate();
  return ds;
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (const Example& e : dataset.examples) {
    for (std::size_t j = 0; j < e.features.size(); ++j) {
      if (j) out += ',';
      out += format_double(e.features[j]);
    }
    if (e.has_label()) {
      out += ' ';
      out += std::to_string(e.label);
    }
    out += '\n';
  }
  return out;
}

std::vector<double> embed(const Embedder& embedder, const Example& example) {
  return embedder ? embedder(example) : example.features;
}

}  // namespace fseval
