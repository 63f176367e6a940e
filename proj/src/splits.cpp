#include "fseval/splits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fseval/error.hpp"
#include "fseval/rng.hpp"
#include "fseval/textio.hpp"

namespace fseval {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::cv: return "cv";
    case Strategy::mdl: return "mdl";
    case Strategy::bag: return "bag";
    case Strategy::rand: return "rand";
    case Strategy::mi: return "mi";
    case Strategy::ms: return "ms";
    case Strategy::loocv: return "loocv";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& token) {
  if (token == "cv") return Strategy::cv;
  if (token == "mdl") return Strategy::mdl;
  if (token == "bag") return Strategy::bag;
  if (token == "rand") return Strategy::rand;
  if (token == "mi") return Strategy::mi;
  if (token == "ms") return Strategy::ms;
  if (token == "loocv") return Strategy::loocv;
  throw ConfigError("unknown strategy: " + token);
}

namespace {

// floor(n * r) robust to cases where n * r is an exact integer value that
// double rounding would land just below (e.g. 10 * 0.7).
int scaled_count(int n, double r) {
  return static_cast<int>(std::floor(n * r + 1e-9));
}

std::uint64_t split_seed(std::uint64_t master, Strategy s, int k) {
  return derive_seed(master, {"split", to_string(s), "k=" + std::to_string(k)});
}

std::vector<int> identity_permutation(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  return p;
}

// Balanced fold boundaries: the first (n mod k) folds take one extra element.
std::vector<std::pair<int, int>> fold_ranges(int n, int k) {
  std::vector<std::pair<int, int>> ranges;
  const int base = n / k, extra = n % k;
  int start = 0;
  for (int i = 0; i < k; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    ranges.emplace_back(start, start + len);
    start += len;
  }
  return ranges;
}

void sort_unique_check(std::vector<int>& v) { std::sort(v.begin(), v.end()); }

}  // namespace

SplitPlan make_cv(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cv: K must be >= 2");
  if (k > n) throw ConfigError("cv: K > N");
  std::vector<int> perm = identity_permutation(n);
  Rng rng(split_seed(seed, Strategy::cv, 0));
  rng.shuffle(perm);

  SplitPlan plan{Strategy::cv, k, 0.0, seed, {}, {}};
  const auto ranges = fold_ranges(n, k);
  for (int i = 0; i < k; ++i) {
    DataSplit s;
    s.k = i;
    for (int j = 0; j < n; ++j) {
      const bool in_fold = j >= ranges[i].first && j < ranges[i].second;
      (in_fold ? s.dev : s.train).push_back(perm[j]);
    }
    sort_unique_check(s.train);
    sort_unique_check(s.dev);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

SplitPlan make_mdl(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("mdl: K must be >= 2");
  if (n % 2 != 0) throw ConfigError("mdl: N must be even");
  if (k > n / 2) throw ConfigError("mdl: K > N/2");
  std::vector<int> perm = identity_permutation(n);
  Rng rng(split_seed(seed, Strategy::mdl, 0));
  rng.shuffle(perm);

  const int half = n / 2;
  const std::vector<int> joint(perm.begin(), perm.begin() + half);
  const std::vector<int> rest(perm.begin() + half, perm.end());
  const auto ranges = fold_ranges(half, k);

  SplitPlan plan{Strategy::mdl, k, 0.0, seed, {}, {}};
  for (int i = 0; i < k; ++i) {
    DataSplit s;
    s.k = i;
    s.train = joint;
    for (int j = 0; j < ranges[i].first; ++j) s.train.push_back(rest[j]);
    for (int j = ranges[i].first; j < ranges[i].second; ++j) s.dev.push_back(rest[j]);
    sort_unique_check(s.train);
    sort_unique_check(s.dev);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

SplitPlan make_bag(int n, int k, double r, std::uint64_t seed) {
  if (k < 1) throw ConfigError("bag: K must be >= 1");
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("bag: r must be in (0, 1]");
  const int draws = scaled_count(n, r);
  if (draws < 1) throw ConfigError("bag: N*r rounds down to zero draws");

  SplitPlan plan{Strategy::bag, k, r, seed, {}, {}};
  for (int i = 0; i < k; ++i) {
    Rng rng(split_seed(seed, Strategy::bag, i));
    DataSplit s;
    s.k = i;
    std::vector<char> seen(n, 0);
    for (int j = 0; j < draws; ++j) {
      const int idx = rng.next_below(n);
      s.train.push_back(idx);  // draw order, duplicates kept
      seen[idx] = 1;
    }
    for (int j = 0; j < n; ++j)
      if (!seen[j]) s.dev.push_back(j);
    if (s.dev.empty())
      throw DegenerateSplitError("bag: split k=" + std::to_string(i) +
                                 " has an empty out-of-bag dev set");
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

SplitPlan make_rand(int n, int k, double r, std::uint64_t seed) {
  if (k < 1) throw ConfigError("rand: K must be >= 1");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("rand: r must be in (0, 1)");
  const int n_train = scaled_count(n, r);
  const int n_dev = scaled_count(n, 1.0 - r);
  if (n_train < 1 || n_dev < 1)
    throw ConfigError("rand: train or dev size rounds down to zero");

  SplitPlan plan{Strategy::rand, k, r, seed, {}, {}};
  for (int i = 0; i < k; ++i) {
    Rng rng(split_seed(seed, Strategy::rand, i));
    DataSplit s;
    s.k = i;
    s.train = rng.sample_without_replacement(n, n_train);
    s.dev = rng.sample_without_replacement(n, n_dev);
    sort_unique_check(s.train);
    sort_unique_check(s.dev);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

SplitPlan make_ms(int n, int k, double r, std::uint64_t seed) {
  if (k < 1) throw ConfigError("ms: K must be >= 1");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("ms: r must be in (0, 1)");
  const int n_train = scaled_count(n, r);
  if (n_train < 1 || n_train >= n)
    throw ConfigError("ms: split ratio leaves an empty part");

  SplitPlan plan{Strategy::ms, k, r, seed, {}, {}};
  for (int i = 0; i < k; ++i) {
    Rng rng(split_seed(seed, Strategy::ms, i));
    std::vector<int> perm = identity_permutation(n);
    rng.shuffle(perm);
    DataSplit s;
    s.k = i;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.dev.assign(perm.begin() + n_train, perm.end());
    sort_unique_check(s.train);
    sort_unique_check(s.dev);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

SplitPlan make_loocv(int n) {
  if (n < 2) throw ConfigError("loocv: N must be >= 2");
  SplitPlan plan{Strategy::loocv, n, 0.0, 0, {}, {}};
  for (int i = 0; i < n; ++i) {
    DataSplit s;
    s.k = i;
    s.dev.push_back(i);
    for (int j = 0; j < n; ++j)
      if (j != i) s.train.push_back(j);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

std::vector<int> two_means(const std::vector<std::vector<double>>& points,
                           std::uint64_t init_seed, bool farthest_pair_init) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw DegenerateSplitError("mi: fewer than two points");

  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      d += diff * diff;
    }
    return d;
  };

  int ca = 0, cb = 1;
  if (farthest_pair_init) {
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = dist2(points[i], points[j]);
        if (d > best) {
          best = d;
          ca = i;
          cb = j;
        }
      }
    if (best <= 0.0)
      throw DegenerateSplitError("mi: all embeddings identical, no two distinct sets");
  } else {
    bool any_differs = false;
    for (int i = 1; i < n && !any_differs; ++i)
      any_differs = dist2(points[0], points[i]) > 0.0;
    if (!any_differs)
      throw DegenerateSplitError("mi: all embeddings identical, no two distinct sets");
    Rng rng(init_seed);
    ca = rng.next_below(n);
    cb = rng.next_below(n);
    while (dist2(points[ca], points[cb]) == 0.0) cb = rng.next_below(n);
  }

  std::vector<double> ma = points[ca], mb = points[cb];
  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    int na = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
      const int c = dist2(points[i], ma) <= dist2(points[i], mb) ? 0 : 1;
      if (c != assign[i]) changed = true;
      assign[i] = c;
      (c == 0 ? na : nb)++;
    }
    if (na == 0 || nb == 0)
      throw DegenerateSplitError("mi: clustering collapsed to one cluster");
    if (!changed) break;
    std::fill(ma.begin(), ma.end(), 0.0);
    std::fill(mb.begin(), mb.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      auto& m = assign[i] == 0 ? ma : mb;
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += points[i][j];
    }
    for (std::size_t j = 0; j < ma.size(); ++j) ma[j] /= na;
    for (std::size_t j = 0; j < mb.size(); ++j) mb[j] /= nb;
  }
  return assign;
}

SplitPlan make_mi(const Dataset& labeled, int k, const Embedder& embedder,
                  std::uint64_t seed) {
  if (k < 2 || k % 2 != 0) throw ConfigError("mi: K must be even and >= 2");
  const int n = labeled.size();
  if (n < 2) throw ConfigError("mi: need at least two labeled examples");

  std::vector<std::vector<double>> reps;
  reps.reserve(n);
  for (const Example& e : labeled.examples) reps.push_back(embed(embedder, e));

  SplitPlan plan{Strategy::mi, k, 0.0, seed, {}, {}};
  for (int pair = 0; pair < k / 2; ++pair) {
    const auto assign =
        two_means(reps, split_seed(seed, Strategy::mi, pair), pair == 0);
    DataSplit a, b;
    a.k = 2 * pair;
    b.k = 2 * pair + 1;
    for (int i = 0; i < n; ++i) {
      if (assign[i] == 0) {
        a.train.push_back(i);
        b.dev.push_back(i);
      } else {
        a.dev.push_back(i);
        b.train.push_back(i);
      }
    }
    if (a.train.empty() || a.dev.empty())
      throw DegenerateSplitError("mi: empty cluster in pair " + std::to_string(pair));
    plan.splits.push_back(std::move(a));
    plan.splits.push_back(std::move(b));
  }
  return plan;
}

SplitPlan make_splits(Strategy strategy, const Dataset& labeled, int k,
                      std::optional<double> ratio, std::uint64_t seed,
                      const Embedder& embedder) {
  const int n = labeled.size();
  auto warn_ratio = [&](SplitPlan plan) {
    if (ratio.has_value())
      plan.warnings.push_back(std::string("ratio ignored by strategy ") +
                              to_string(strategy));
    return plan;
  };
  auto need_ratio = [&]() {
    if (!ratio.has_value())
      throw ConfigError(std::string(to_string(strategy)) + ": ratio required");
    return *ratio;
  };
  switch (strategy) {
    case Strategy::cv: return warn_ratio(make_cv(n, k, seed));
    case Strategy::mdl: return warn_ratio(make_mdl(n, k, seed));
    case Strategy::bag: return make_bag(n, k, need_ratio(), seed);
    case Strategy::rand: return make_rand(n, k, need_ratio(), seed);
    case Strategy::mi: return warn_ratio(make_mi(labeled, k, embedder, seed));
    case Strategy::ms: return make_ms(n, k, need_ratio(), seed);
    case Strategy::loocv: {
      SplitPlan plan = warn_ratio(make_loocv(n));
      if (k != n)
        plan.warnings.push_back("K ignored by strategy loocv (K = N = " +
                                std::to_string(n) + ")");
      return plan;
    }
  }
  throw ConfigError("unknown strategy");
}

std::string serialize_split_plan(const SplitPlan& plan) {
  std::string out;
  Record header;
  header.kind = "split_plan";
  header.fields = {{"strategy", to_string(plan.strategy)},
                   {"K", std::to_string(plan.num_runs)},
                   {"r", format_double(plan.ratio)},
                   {"seed", std::to_string(plan.seed)}};
  out += format_record(header);
  out += '\n';
  for (const DataSplit& s : plan.splits) {
    out += "train";
    for (int idx : s.train) out += ' ' + std::to_string(idx);
    out += "\ndev";
    for (int idx : s.dev) out += ' ' + std::to_string(idx);
    out += '\n';
  }
  return out;
}

SplitPlan parse_split_plan(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  SplitPlan plan;
  bool have_header = false;
  std::vector<int>* expect = nullptr;
  DataSplit current;
  auto parse_indices = [&](std::string_view sv, std::vector<int>& out) {
    std::istringstream ss{std::string(sv)};
    std::string token;
    while (ss >> token)
      out.push_back(static_cast<int>(
          parse_int(token, "split plan line " + std::to_string(line_number))));
  };
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (!have_header) {
      const Record r = parse_record(sv, line_number);
      if (r.kind != "split_plan")
        throw ConfigError("line 1: expected split_plan header");
      plan.strategy = strategy_from_string(r.get("strategy", "split plan"));
      plan.num_runs = static_cast<int>(parse_int(r.get("K", "split plan"), "K"));
      plan.ratio = parse_double(r.get("r", "split plan"), "r");
      plan.seed = parse_u64(r.get("seed", "split plan"), "seed");
      have_header = true;
      continue;
    }
    if (sv == "train" || sv.rfind("train ", 0) == 0) {
      if (expect)
        throw ConfigError("line " + std::to_string(line_number) +
                          ": train record while dev expected");
      current = DataSplit{};
      current.k = static_cast<int>(plan.splits.size());
      parse_indices(sv.substr(5), current.train);
      expect = &current.dev;
    } else if (sv == "dev" || sv.rfind("dev ", 0) == 0) {
      if (!expect)
        throw ConfigError("line " + std::to_string(line_number) +
                          ": dev record without a preceding train record");
      parse_indices(sv.substr(3), current.dev);
      plan.splits.push_back(current);
      expect = nullptr;
    } else {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": unrecognized record");
    }
  }
  if (!have_header) throw ConfigError("split plan: missing header");
  if (expect) throw ConfigError("split plan: truncated (dev record missing)");
  if (static_cast<int>(plan.splits.size()) != plan.num_runs)
    throw ConfigError("split plan: K does not match the number of splits");
  return plan;
}

}  // namespace fseval
