#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fseval/metrics.hpp"
#include "fseval/orchestrator.hpp"

namespace fseval {

struct SelfTrainConfig {
  int generations = 1;
  double increasing_factor = 3.0;
  double sample_ratio = 1.0;  // 1.0 single-split, 2/3 cross-split
  enum class Labeling { single, cross };
  Labeling labeling = Labeling::single;
  bool noisy = false;
  double noise_rate = 0.05;
  bool best_config_only = false;

  void validate() const;
};

struct PseudoLabel {
  int pool_index = 0;
  int label = 0;
  double confidence = 0.0;
};

struct GenerationRecord {
  int generation = 0;                 // 1-based
  std::vector<int> train_sizes;       // per split, after this generation's additions
  std::vector<std::vector<PseudoLabel>> additions;  // per split; empty in generation 1
  MeanStd test;                       // over the K generation models
  bool truncated = false;             // pool exhausted before the size target
};

// Ensemble labeling across the K split models: per candidate the probability
// vectors are averaged (over a seeded subsample of round(K * sample_ratio)
// models per example when sample_ratio < 1), the label is the argmax, the
// confidence its probability. Selection is class-balanced: floor(quota / C)
// top-confidence picks per class, remainder by global confidence.
std::vector<PseudoLabel> pseudo_label_cross(
    const std::vector<TrainedModel>& models, const Dataset& pool,
    const std::vector<int>& candidates, int quota, double sample_ratio,
    int num_classes, std::uint64_t seed);

// Single-model variant: split k labels its own next generation.
std::vector<PseudoLabel> pseudo_label_single(const TrainedModel& model,
                                             const Dataset& pool,
                                             const std::vector<int>& candidates,
                                             int quota, int num_classes);

// Iterative self-training over the plan's splits with fixed h*. Generation 1
// trains the K models exactly as run_search does (same derived seeds, no
// noise), so a single-generation run reproduces the plain search's test
// scores. Generation g targets a per-split training size of
// ceil(S_k * increasing_factor^(g-1)), S_k the split's original train size,
// filling the gap with pseudo-labeled pool examples (own model or cross-split
// ensemble per config); when noisy is set these retrained generations zero
// each input coordinate independently at noise_rate per step. A pool index
// never enters the same split twice; an exhausted pool truncates the schedule
// and flags the record.
std::vector<GenerationRecord> self_train(const TaskBundle& bundle,
                                         const SplitPlan& plan,
                                         const HyperPoint& h_star,
                                         const LearnerSpec& spec,
                                         MetricKind metric,
                                         const SelfTrainConfig& config,
                                         std::uint64_t master_seed,
                                         int workers = 1);

// A model trained under one pattern-analog configuration, with that
// configuration's mean dev score.
struct PatternModel {
  std::string pattern_value;
  double dev_mean = 0.0;
  TrainedModel model;
};

// mode best_only=false averages all models' probabilities; best_only=true
// averages only the models whose pattern equals the dev-best one.
std::function<std::vector<double>(const std::vector<double>&)>
best_config_ensemble(const std::vector<PatternModel>& models, bool best_only);

// Generation/pseudo-label audit records appended to the run log.
std::string serialize_generations(const std::vector<GenerationRecord>& records);

}  // namespace fseval
