// Times the grid executor's serial reference path against the OpenMP path on
// a logreg workload and checks that both produce the same run log bit for
// bit. Usage: bench_grid [workers] [grid_scale]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "fseval/orchestrator.hpp"
#include "fseval/parallel.hpp"

using namespace fseval;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const int workers = argc > 1 ? std::atoi(argv[1]) : hardware_workers();
  const int scale = argc > 2 ? std::atoi(argv[2]) : 1;

  SyntheticTaskConfig task;
  task.n_labeled = 64;
  task.n_unlabeled = 64;
  task.n_test = 512;
  task.seed = 11;
  const TaskBundle bundle = generate_synthetic_task(task);
  const SplitPlan plan = make_ms(bundle.labeled.size(), 8, 0.5, 3);

  HyperSpace space;
  std::vector<std::string> lrs;
  for (int i = 0; i < 2 * scale; ++i) lrs.push_back("0." + std::to_string(5 + i));
  space.dims = {{"learning_rate", lrs},
                {"max_steps", {"300", "600"}},
                {"eval_frequency", {"0.02", "0.04"}},
                {"pattern", {"0", "1"}}};

  LearnerSpec spec;
  spec.kind = LearnerKind::logreg_gd;

  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &space;
  in.spec = &spec;
  in.metric = MetricKind::accuracy;
  in.master_seed = 17;

  std::printf("grid %zu x K=%d jobs=%zu, omp max threads %d\n", space.grid_size(),
              plan.num_runs, space.grid_size() * plan.num_runs,
              hardware_workers());

  in.workers = 1;
  auto t0 = std::chrono::steady_clock::now();
  const SearchResult serial = run_search(in, RunMode::audit);
  const double serial_s = seconds_since(t0);
  std::printf("serial reference : %.3f s\n", serial_s);

  in.workers = workers;
  t0 = std::chrono::steady_clock::now();
  const SearchResult parallel = run_search(in, RunMode::audit);
  const double parallel_s = seconds_since(t0);
  std::printf("openmp x%-8d : %.3f s  (speedup %.2fx)\n", workers, parallel_s,
              serial_s / parallel_s);

  const bool identical =
      serialize_run_log(serial) == serialize_run_log(parallel) &&
      serialize_summary(serial) == serialize_summary(parallel);
  std::printf("bit-identical    : %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
