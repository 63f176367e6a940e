#include "fseval/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fseval/error.hpp"
#include "fseval/parallel.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

void SelfTrainConfig::validate() const {
  if (generations < 1) throw ConfigError("selftrain: generations must be >= 1");
  if (increasing_factor < 1.0)
    throw ConfigError("selftrain: increasing_factor must be >= 1");
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0))
    throw ConfigError("selftrain: sample_ratio must be in (0, 1]");
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw ConfigError("selftrain: noise_rate must be in [0, 1)");
}

namespace {

int argmax_label(const std::vector<double>& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c)
    if (probs[c] > probs[best]) best = c;
  return best;
}

// Class-balanced pick: floor(quota/C) per class by confidence, remainder by
// global confidence. Candidate order is deterministic: confidence descending,
// pool index ascending on ties.
std::vector<PseudoLabel> select_balanced(std::vector<PseudoLabel> scored,
                                         int quota, int num_classes) {
  std::sort(scored.begin(), scored.end(), [](const PseudoLabel& a, const PseudoLabel& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.pool_index < b.pool_index;
  });
  const int per_class = quota / num_classes;
  std::vector<int> taken_per_class(num_classes, 0);
  std::vector<char> taken(scored.size(), 0);
  std::vector<PseudoLabel> out;
  out.reserve(quota);
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(out.size()) < quota; ++i) {
    if (taken_per_class[scored[i].label] >= per_class) continue;
    ++taken_per_class[scored[i].label];
    taken[i] = 1;
    out.push_back(scored[i]);
  }
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(out.size()) < quota; ++i) {
    if (taken[i]) continue;
    out.push_back(scored[i]);
  }
  return out;
}

}  // namespace

std::vector<PseudoLabel> pseudo_label_cross(
    const std::vector<TrainedModel>& models, const Dataset& pool,
    const std::vector<int>& candidates, int quota, double sample_ratio,
    int num_classes, std::uint64_t seed) {
  if (models.size() < 2) throw ConfigError("pseudo_label_cross: need >= 2 models");
  if (quota > static_cast<int>(candidates.size()))
    throw ConfigError("pseudo_label_cross: quota exceeds the candidate pool");
  const int n_models = static_cast<int>(models.size());
  const int votes =
      sample_ratio < 1.0
          ? std::max(1, static_cast<int>(std::llround(n_models * sample_ratio)))
          : n_models;

  std::vector<PseudoLabel> scored;
  scored.reserve(candidates.size());
  for (int idx : candidates) {
    const Example& e = pool.examples[idx];
    std::vector<int> voters(n_models);
    for (int m = 0; m < n_models; ++m) voters[m] = m;
    if (votes < n_models) {
      Rng rng(derive_seed(seed, {"vote", "i=" + std::to_string(idx)}));
      voters = rng.sample_without_replacement(n_models, votes);
      std::sort(voters.begin(), voters.end());
    }
    std::vector<double> mean_probs(num_classes, 0.0);
    for (int m : voters) {
      const std::vector<double> p = models[m].predict_proba(e.features);
      for (int c = 0; c < num_classes; ++c) mean_probs[c] += p[c];
    }
    for (double& v : mean_probs) v /= voters.size();
    const int label = argmax_label(mean_probs);
    scored.push_back(PseudoLabel{idx, label, mean_probs[label]});
  }
  return select_balanced(std::move(scored), quota, num_classes);
}

std::vector<PseudoLabel> pseudo_label_single(const TrainedModel& model,
                                             const Dataset& pool,
                                             const std::vector<int>& candidates,
                                             int quota, int num_classes) {
  if (quota > static_cast<int>(candidates.size()))
    throw ConfigError("pseudo_label_single: quota exceeds the candidate pool");
  std::vector<PseudoLabel> scored;
  scored.reserve(candidates.size());
  for (int idx : candidates) {
    const std::vector<double> p = model.predict_proba(pool.examples[idx].features);
    const int label = argmax_label(p);
    scored.push_back(PseudoLabel{idx, label, p[label]});
  }
  return select_balanced(std::move(scored), quota, num_classes);
}

std::vector<GenerationRecord> self_train(const TaskBundle& bundle,
                                         const SplitPlan& plan,
                                         const HyperPoint& h_star,
                                         const LearnerSpec& spec,
                                         MetricKind metric,
                                         const SelfTrainConfig& config,
                                         std::uint64_t master_seed,
                                         int workers) {
  config.validate();
  const Dataset& labeled = bundle.labeled;
  const Dataset& pool = bundle.unlabeled;
  const int num_classes = labeled.num_classes;
  const int runs = plan.num_runs;
  if (runs < 1) throw ConfigError("self_train: empty split plan");
  if (config.labeling == SelfTrainConfig::Labeling::cross && runs < 2)
    throw ConfigError("self_train: cross labeling needs K >= 2");

  // Per split: the fixed labeled part, the accumulated pseudo additions, and
  // the set of pool indices already used.
  std::vector<std::vector<Example>> base_train(runs), dev_sets(runs);
  std::vector<std::vector<Example>> pseudo(runs);
  std::vector<std::set<int>> used(runs);
  for (int k = 0; k < runs; ++k) {
    base_train[k] = gather_examples(labeled, plan.splits[k].train);
    dev_sets[k] = gather_examples(labeled, plan.splits[k].dev);
  }

  std::vector<GenerationRecord> records;
  std::vector<TrainedModel> models(runs);

  for (int g = 1; g <= config.generations; ++g) {
    GenerationRecord rec;
    rec.generation = g;
    rec.additions.resize(runs);

    if (g > 1) {
      // Grow each split's training set toward
      // ceil(S_k * factor^(g-1)) with pseudo-labeled pool examples.
      for (int k = 0; k < runs; ++k) {
        const int base_size = static_cast<int>(base_train[k].size());
        const int target = static_cast<int>(std::ceil(
            base_size * std::pow(config.increasing_factor, g - 1) - 1e-9));
        const int current =
            base_size + static_cast<int>(pseudo[k].size());
        int quota = target - current;
        if (quota <= 0) continue;

        std::vector<int> candidates;
        for (int i = 0; i < pool.size(); ++i)
          if (!used[k].count(i)) candidates.push_back(i);
        if (quota > static_cast<int>(candidates.size())) {
          quota = static_cast<int>(candidates.size());
          rec.truncated = true;
        }
        if (quota == 0) continue;

        std::vector<PseudoLabel> picks;
        if (config.labeling == SelfTrainConfig::Labeling::cross) {
          picks = pseudo_label_cross(
              models, pool, candidates, quota, config.sample_ratio, num_classes,
              derive_seed(master_seed, {"pl", "g=" + std::to_string(g)}));
        } else {
          picks = pseudo_label_single(models[k], pool, candidates, quota, num_classes);
        }
        for (const PseudoLabel& p : picks) {
          Example e = pool.examples[p.pool_index];
          e.label = p.label;
          pseudo[k].push_back(std::move(e));
          used[k].insert(p.pool_index);
        }
        rec.additions[k] = std::move(picks);
      }
    }

    // Train this generation's K models.
    parallel_for(runs, workers, [&](int k) {
      std::vector<Example> train_set = base_train[k];
      train_set.insert(train_set.end(), pseudo[k].begin(), pseudo[k].end());
      const std::uint64_t seed =
          g == 1 ? training_seed(master_seed, h_star, k)
                 : derive_seed(master_seed,
                               {"selftrain", "g=" + std::to_string(g),
                                "h=" + h_star.canonical(), "k=" + std::to_string(k)});
      TrainContext ctx;
      ctx.master_seed = master_seed;
      ctx.run_index = k;
      // The first generation is the clean teacher; noise applies to the
      // retrained generations only.
      ctx.noisy = config.noisy && g > 1;
      ctx.noise_rate = config.noise_rate;
      models[k] = train(spec, train_set, dev_sets[k], h_star, metric,
                        num_classes, seed, ctx);
    });

    std::vector<double> tests;
    for (int k = 0; k < runs; ++k) {
      rec.train_sizes.push_back(static_cast<int>(base_train[k].size() + pseudo[k].size()));
      tests.push_back(evaluate_model(models[k], bundle.test.examples, metric,
                                     num_classes, "test"));
    }
    rec.test = mean_std(tests);
    records.push_back(std::move(rec));
  }
  return records;
}

std::function<std::vector<double>(const std::vector<double>&)>
best_config_ensemble(const std::vector<PatternModel>& models, bool best_only) {
  if (models.empty()) throw ConfigError("best_config_ensemble: empty model set");
  std::vector<const TrainedModel*> chosen;
  if (best_only) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < models.size(); ++i)
      if (models[i].dev_mean > models[best].dev_mean) best = i;
    const std::string& pattern = models[best].pattern_value;
    for (const PatternModel& m : models)
      if (m.pattern_value == pattern) chosen.push_back(&m.model);
  } else {
    for (const PatternModel& m : models) chosen.push_back(&m.model);
  }
  std::vector<std::function<std::vector<double>(const std::vector<double>&)>> preds;
  preds.reserve(chosen.size());
  for (const TrainedModel* m : chosen) preds.push_back(m->predict_proba);
  return [preds](const std::vector<double>& x) {
    std::vector<double> mean = preds[0](x);
    for (std::size_t i = 1; i < preds.size(); ++i) {
      const std::vector<double> p = preds[i](x);
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
    }
    for (double& v : mean) v /= static_cast<double>(preds.size());
    return mean;
  };
}

std::string serialize_generations(const std::vector<GenerationRecord>& records) {
  std::string out;
  for (const GenerationRecord& rec : records) {
    Record gen;
    gen.kind = "gen";
    std::string sizes;
    for (std::size_t k = 0; k < rec.train_sizes.size(); ++k) {
      if (k) sizes += ',';
      sizes += std::to_string(rec.train_sizes[k]);
    }
    gen.fields = {{"g", std::to_string(rec.generation)},
                  {"sizes", sizes},
                  {"test_mean", format_double(rec.test.mean)},
                  {"test_std", format_double(rec.test.std)},
                  {"truncated", rec.truncated ? "1" : "0"}};
    out += format_record(gen);
    out += '\n';
    for (std::size_t k = 0; k < rec.additions.size(); ++k) {
      for (const PseudoLabel& p : rec.additions[k]) {
        Record pl;
        pl.kind = "pl";
        pl.fields = {{"g", std::to_string(rec.generation)},
                     {"split", std::to_string(k)},
                     {"pool_index", std::to_string(p.pool_index)},
                     {"label", std::to_string(p.label)},
                     {"confidence", format_double(p.confidence)}};
        out += format_record(pl);
        out += '\n';
      }
    }
  }
  return out;
}

}  // namespace fseval
