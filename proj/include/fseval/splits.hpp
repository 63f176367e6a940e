#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fseval/dataset.hpp"

namespace fseval {

enum class Strategy { cv, mdl, bag, rand, mi, ms, loocv };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& token);

struct DataSplit {
  int k = 0;                // run index, 0-based
  std::vector<int> train;   // multiset only under BAG (draw order); sorted otherwise
  std::vector<int> dev;     // duplicate-free, sorted
};

struct SplitPlan {
  Strategy strategy = Strategy::ms;
  int num_runs = 0;     // K; equals splits.size()
  double ratio = 0.0;   // r; 0 for strategies that do not take one
  std::uint64_t seed = 0;
  std::vector<DataSplit> splits;
  std::vector<std::string> warnings;  // e.g. ignored parameters; not serialized
};

// K-fold cross validation: a seeded permutation of {0..N-1} is cut into K
// folds whose sizes differ by at most one (the first N mod K folds are the
// larger ones). Fold k is the dev set, everything else trains.
SplitPlan make_cv(int n, int k, std::uint64_t seed);

// Half the data (seeded choice) is joint training data; the other half is
// folded into K parts F_1..F_K. Split k trains on the joint half plus
// F_1..F_{k-1} and validates on F_k. Requires N even and K <= N/2.
SplitPlan make_mdl(int n, int k, std::uint64_t seed);

// Per split, floor(N*r) draws with replacement form the training multiset;
// the dev set is the out-of-bag complement. An empty complement is a
// degenerate split and throws rather than silently resampling.
SplitPlan make_bag(int n, int k, double r, std::uint64_t seed);

// Per split, two independent without-replacement samples: floor(N*r) train
// and floor(N*(1-r)) dev. Train and dev may overlap each other.
SplitPlan make_rand(int n, int k, double r, std::uint64_t seed);

// Model-informed splitting: embed all labeled examples, run 2-means with
// deterministic farthest-pair initialization, and emit the split
// (cluster A = train, cluster B = dev) plus its role-swapped mirror. K must
// be even; K > 2 repeats with K/2 - 1 further seeded initializations.
SplitPlan make_mi(const Dataset& labeled, int k, const Embedder& embedder,
                  std::uint64_t seed);

// Multi-splits: per split an independent seeded permutation cut at
// floor(N*r); train and dev are disjoint and cover {0..N-1}. Split k depends
// only on (seed, k), so the first K splits of a larger plan equal the K-plan.
SplitPlan make_ms(int n, int k, double r, std::uint64_t seed);

// Leave-one-out: dev_k = {k}, train_k = the rest; K = N.
SplitPlan make_loocv(int n);

// Uniform entry point. `ratio` given to a strategy that does not take one is
// ignored with a warning record on the plan; a missing required ratio or an
// infeasible K raises ConfigError.
SplitPlan make_splits(Strategy strategy, const Dataset& labeled, int k,
                      std::optional<double> ratio, std::uint64_t seed,
                      const Embedder& embedder = {});

// Line-oriented audit format: a header line
//   strategy=<tag>\tK=<int>\tr=<float>\tseed=<u64>
// then per split one `train ...` and one `dev ...` line of indices.
std::string serialize_split_plan(const SplitPlan& plan);
SplitPlan parse_split_plan(const std::string& text);

// 2-means used by make_mi; exposed for tests. Returns cluster ids (0/1) per
// row. Throws DegenerateSplitError when no two distinct points exist or a
// cluster empties out.
std::vector<int> two_means(const std::vector<std::vector<double>>& points,
                           std::uint64_t init_seed, bool farthest_pair_init);

}  // namespace fseval
