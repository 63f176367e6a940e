#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fseval {

enum class Role { labeled, unlabeled, test };

constexpr int kNoLabel = -1;

struct Example {
  std::vector<double> features;
  int label = kNoLabel;  // class id in [0, C) or kNoLabel

  bool has_label() const { return label >= 0; }
};

// Immutable after construction; indices 0..N-1 are stable identifiers that
// split plans and pseudo-label records point into.
struct Dataset {
  Role role = Role::labeled;
  int num_classes = 0;
  std::vector<Example> examples;

  int size() const { return static_cast<int>(examples.size()); }
  int dim() const;

  // Enforces the role/label contract and uniform feature dimension.
  void validate() const;
};

struct SyntheticTaskConfig {
  int num_classes = 2;
  int dim = 2;
  double separation = 4.0;
  int n_labeled = 64;
  int n_unlabeled = 500;
  int n_test = 2000;
  std::uint64_t seed = 0;
};

struct TaskBundle {
  std::string name = "synthetic";
  Dataset labeled;
  Dataset unlabeled;
  Dataset test;
  // Generator-side labels of the unlabeled pool. Only evaluation code (e.g.
  // pseudo-label accuracy measurements) may look at these; the pipeline never
  // does. Empty for file-loaded tasks.
  std::vector<int> pool_truth;
};

// Gaussian mixture task: one isotropic unit-variance component per class.
// Class 0 sits at the origin; class c > 0 at separation * (1 + (c-1)/d) along
// axis (c-1) mod d, so classes 0 and 1 are exactly `separation` apart.
// Each role is drawn from its own derived seed stream, so e.g. changing
// n_labeled leaves the test set untouched. Labels cycle 0,1,...,C-1,0,...
TaskBundle generate_synthetic_task(const SyntheticTaskConfig& config);

enum class MetricKind { accuracy, macro_f1 };

const char* to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& token);

// accuracy: fraction of exact matches.
// macro_f1: unweighted mean of per-class F1 over all num_classes classes; a
// class absent from both predictions and truth contributes F1 = 0.
double score(const std::vector<int>& predictions, const std::vector<int>& truth,
             MetricKind kind, int num_classes);

// File format: one example per line, comma-separated features followed by an
// optional whitespace-separated integer label. '#' starts a comment line.
Dataset load_dataset(const std::string& path, Role role, int num_classes_hint = 0);
std::string serialize_dataset(const Dataset& dataset);

// Maps an example to the representation used by model-informed splitting.
// An empty std::function means the identity embedder (raw features).
using Embedder = std::function<std::vector<double>(const Example&)>;

std::vector<double> embed(const Embedder& embedder, const Example& example);

}  // namespace fseval
