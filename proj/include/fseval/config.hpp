#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fseval/learners.hpp"
#include "fseval/orchestrator.hpp"
#include "fseval/selftrain.hpp"

namespace fseval {

// Experiment configuration file: line-oriented `key = value` pairs, '#'
// comments, a mandatory `schema_version = 1`. Unknown keys are rejected.
// `space.<name> = v1,v2,...` declares one hyper dimension per line; file
// order fixes the grid order. The full schema is documented in the README.
struct ExperimentConfig {
  int schema_version = 1;

  // task
  std::string task_name = "synthetic";
  std::string task_kind = "synthetic";  // synthetic | file
  SyntheticTaskConfig synthetic;
  bool synthetic_seed_set = false;  // else derived from the master seed
  std::string path_labeled, path_unlabeled, path_test;
  int file_num_classes = 0;

  // split
  Strategy strategy = Strategy::ms;
  int num_runs = 4;
  std::optional<double> ratio;

  // learner + space
  LearnerSpec learner;
  HyperSpace space;

  MetricKind metric = MetricKind::accuracy;
  RunMode mode = RunMode::benchmark;
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::string out_dir = "out";

  // optional sections
  int practical_l = 0;
  std::vector<int> stability_ks;
  std::vector<Strategy> compare_list;
  std::string sensitivity_factor;
  std::vector<std::string> sensitivity_values;
  std::optional<SelfTrainConfig> selftrain;

  TaskBundle load_task() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace fseval
