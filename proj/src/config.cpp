#include "fseval/config.hpp"

#include <set>

#include "fseval/error.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

namespace {

bool parse_bool(const std::string& v, const std::string& ctx) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean '" + v + "' in " + ctx);
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (const std::string& tok : split(v, ',')) {
    const std::string t{trim(tok)};
    if (t.empty()) throw ConfigError("empty element in list '" + v + "'");
    out.push_back(t);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  SelfTrainConfig selftrain;
  bool any_selftrain_key = false;
  bool sample_ratio_set = false;
  bool schema_seen = false;
  bool compare_set = false;

  std::set<std::string> seen;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view raw(text.data() + pos,
                               (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_number;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected key = value");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    const std::string ctx = "config key " + key;
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": empty key or value");
    if (!seen.insert(key).second)
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": duplicate key " + key);

    if (key == "schema_version") {
      cfg.schema_version = static_cast<int>(parse_int(value, ctx));
      if (cfg.schema_version != 1)
        throw ConfigError("unsupported schema_version " + value);
      schema_seen = true;
    } else if (key == "task.name") {
      cfg.task_name = value;
    } else if (key == "task.kind") {
      if (value != "synthetic" && value != "file")
        throw ConfigError("task.kind must be synthetic or file");
      cfg.task_kind = value;
    } else if (key == "task.classes") {
      cfg.synthetic.num_classes = static_cast<int>(parse_int(value, ctx));
      cfg.file_num_classes = cfg.synthetic.num_classes;
    } else if (key == "task.dim") {
      cfg.synthetic.dim = static_cast<int>(parse_int(value, ctx));
    } else if (key == "task.separation") {
      cfg.synthetic.separation = parse_double(value, ctx);
    } else if (key == "task.n_labeled") {
      cfg.synthetic.n_labeled = static_cast<int>(parse_int(value, ctx));
    } else if (key == "task.n_unlabeled") {
      cfg.synthetic.n_unlabeled = static_cast<int>(parse_int(value, ctx));
    } else if (key == "task.n_test") {
      cfg.synthetic.n_test = static_cast<int>(parse_int(value, ctx));
    } else if (key == "task.seed") {
      cfg.synthetic.seed = parse_u64(value, ctx);
      cfg.synthetic_seed_set = true;
    } else if (key == "task.path_labeled") {
      cfg.path_labeled = value;
    } else if (key == "task.path_unlabeled") {
      cfg.path_unlabeled = value;
    } else if (key == "task.path_test") {
      cfg.path_test = value;
    } else if (key == "split.strategy") {
      cfg.strategy = strategy_from_string(value);
    } else if (key == "split.k") {
      cfg.num_runs = static_cast<int>(parse_int(value, ctx));
    } else if (key == "split.ratio") {
      cfg.ratio = parse_double(value, ctx);
    } else if (key == "learner.kind") {
      cfg.learner.kind = learner_from_string(value);
    } else if (key == "learner.temperature") {
      cfg.learner.centroid_temperature = parse_double(value, ctx);
    } else if (key == "learner.sigma") {
      cfg.learner.oracle_sigma = parse_double(value, ctx);
    } else if (key == "learner.base") {
      cfg.learner.oracle_base = parse_double(value, ctx);
    } else if (key == "learner.weights") {
      for (const std::string& w : parse_list(value))
        cfg.learner.oracle_weights.push_back(parse_double(w, ctx));
    } else if (key.rfind("space.", 0) == 0) {
      const std::string name = key.substr(6);
      if (name.empty()) throw ConfigError("space dimension with empty name");
      cfg.space.dims.push_back(HyperSpace::Dim{name, parse_list(value)});
    } else if (key == "metric") {
      cfg.metric = metric_from_string(value);
    } else if (key == "mode") {
      cfg.mode = run_mode_from_string(value);
    } else if (key == "seed") {
      cfg.master_seed = parse_u64(value, ctx);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(parse_int(value, ctx));
      if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "practical.l") {
      cfg.practical_l = static_cast<int>(parse_int(value, ctx));
    } else if (key == "stability.ks") {
      for (const std::string& tok : parse_list(value))
        cfg.stability_ks.push_back(static_cast<int>(parse_int(tok, ctx)));
    } else if (key == "compare.strategies") {
      for (const std::string& tok : parse_list(value))
        cfg.compare_list.push_back(strategy_from_string(tok));
      compare_set = true;
    } else if (key == "sensitivity.factor") {
      cfg.sensitivity_factor = value;
    } else if (key == "sensitivity.values") {
      cfg.sensitivity_values = parse_list(value);
    } else if (key == "selftrain.generations") {
      selftrain.generations = static_cast<int>(parse_int(value, ctx));
      any_selftrain_key = true;
    } else if (key == "selftrain.increasing_factor") {
      selftrain.increasing_factor = parse_double(value, ctx);
      any_selftrain_key = true;
    } else if (key == "selftrain.sample_ratio") {
      selftrain.sample_ratio = parse_double(value, ctx);
      sample_ratio_set = true;
      any_selftrain_key = true;
    } else if (key == "selftrain.labeling") {
      if (value == "single") {
        selftrain.labeling = SelfTrainConfig::Labeling::single;
      } else if (value == "cross") {
        selftrain.labeling = SelfTrainConfig::Labeling::cross;
      } else {
        throw ConfigError("selftrain.labeling must be single or cross");
      }
      any_selftrain_key = true;
    } else if (key == "selftrain.noisy") {
      selftrain.noisy = parse_bool(value, ctx);
      any_selftrain_key = true;
    } else if (key == "selftrain.noise_rate") {
      selftrain.noise_rate = parse_double(value, ctx);
      any_selftrain_key = true;
    } else if (key == "selftrain.best_config_only") {
      selftrain.best_config_only = parse_bool(value, ctx);
      any_selftrain_key = true;
    } else {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": unknown key '" + key + "'");
    }
  }

  if (!schema_seen) throw ConfigError("config: missing schema_version");
  if (cfg.task_kind == "file" && (cfg.path_labeled.empty() || cfg.path_test.empty()))
    throw ConfigError("config: task.kind=file needs task.path_labeled and task.path_test");
  if (cfg.space.dims.empty())
    throw ConfigError("config: at least one space.<name> dimension is required");
  cfg.space.validate();
  if (cfg.num_runs < 1) throw ConfigError("config: split.k must be >= 1");

  // A ratio strategy without an explicit ratio defaults to a 1:1 split.
  const bool needs_ratio = cfg.strategy == Strategy::bag ||
                           cfg.strategy == Strategy::rand ||
                           cfg.strategy == Strategy::ms;
  if (needs_ratio && !cfg.ratio.has_value()) cfg.ratio = 0.5;

  if (!compare_set)
    cfg.compare_list = {Strategy::cv,   Strategy::mdl, Strategy::bag,
                        Strategy::rand, Strategy::mi,  Strategy::ms};

  if (any_selftrain_key) {
    if (!sample_ratio_set)
      selftrain.sample_ratio =
          selftrain.labeling == SelfTrainConfig::Labeling::cross ? 2.0 / 3.0 : 1.0;
    selftrain.validate();
    cfg.selftrain = selftrain;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path));
}

TaskBundle ExperimentConfig::load_task() const {
  if (task_kind == "synthetic") {
    SyntheticTaskConfig syn = synthetic;
    if (!synthetic_seed_set) syn.seed = derive_seed(master_seed, {"task"});
    TaskBundle bundle = generate_synthetic_task(syn);
    bundle.name = task_name;
    return bundle;
  }
  TaskBundle bundle;
  bundle.name = task_name;
  bundle.labeled = load_dataset(path_labeled, Role::labeled, file_num_classes);
  const int classes = bundle.labeled.num_classes;
  bundle.test = load_dataset(path_test, Role::test, classes);
  if (!path_unlabeled.empty()) {
    bundle.unlabeled = load_dataset(path_unlabeled, Role::unlabeled, classes);
  } else {
    bundle.unlabeled.role = Role::unlabeled;
    bundle.unlabeled.num_classes = classes;
  }
  return bundle;
}

}  // namespace fseval
