#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fseval/config.hpp"
#include "fseval/error.hpp"
#include "fseval/metrics.hpp"
#include "fseval/orchestrator.hpp"
#include "fseval/selftrain.hpp"
#include "fseval/textio.hpp"

namespace fs = std::filesystem;
using namespace fseval;

namespace {

void print_usage() {
  std::cout <<
      "usage: fseval <subcommand> --config <file> [options]\n"
      "\n"
      "subcommands:\n"
      "  splits               write the split plan for the configured strategy\n"
      "  search               benchmark-mode grid search (test scores for h* only)\n"
      "  rerun                practical mode: retrain on all labeled data with h*\n"
      "  compare-strategies   audit-mode strategy comparison table\n"
      "  stability-scan       audit runs across stability.ks, curve data per K\n"
      "  sensitivity          factor perturbation table\n"
      "  selftrain            iterative self-training generation log\n"
      "  report               regenerate all report files from run.log alone\n"
      "  replay               re-aggregate run.log and verify summary.txt matches\n"
      "\n"
      "options:\n"
      "  --config <file>   experiment config (required)\n"
      "  --seed <u64>      override the master seed\n"
      "  --out <dir>       override the output directory\n"
      "  --workers <n>     override the worker count\n"
      "  --strategy <tok>  override the split strategy (cv|mdl|bag|rand|mi|ms|loocv)\n"
      "  --k <n>           override the number of runs K\n"
      "  --ratio <r>       override the split ratio\n";
}

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> strategy;
  std::optional<int> k;
  std::optional<double> ratio;
};

CliArgs parse_args(int argc, char** argv) {
  CliArgs args;
  if (argc < 2) throw ConfigError("missing subcommand (see --help)");
  args.subcommand = argv[1];
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw ConfigError("flag " + flag + " needs a value");
      return argv[++i];
    };
    if (flag == "--config") {
      args.config_path = next();
    } else if (flag == "--seed") {
      args.seed = parse_u64(next(), "--seed");
    } else if (flag == "--out") {
      args.out = next();
    } else if (flag == "--workers") {
      args.workers = static_cast<int>(parse_int(next(), "--workers"));
    } else if (flag == "--strategy") {
      args.strategy = next();
    } else if (flag == "--k") {
      args.k = static_cast<int>(parse_int(next(), "--k"));
    } else if (flag == "--ratio") {
      args.ratio = parse_double(next(), "--ratio");
    } else {
      throw ConfigError("unknown flag: " + flag);
    }
  }
  if (args.config_path.empty()) throw ConfigError("--config is required");
  return args;
}

void append_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot append to " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("write failed: " + path);
}

void print_warnings(const SplitPlan& plan) {
  for (const std::string& w : plan.warnings)
    std::cerr << "warning\t" << w << "\n";
}

HyperPoint point_from_canonical(const HyperSpace& space, const std::string& canon) {
  HyperPoint p = space.point_at(0);
  for (const std::string& pair : split(canon, ',')) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos)
      throw ConfigError("malformed hyper assignment '" + pair + "'");
    p = space.replace_value(p, pair.substr(0, eq), pair.substr(eq + 1));
  }
  return p;
}

// The last selected hyper point recorded in the out dir's summary file.
HyperPoint load_best_point(const std::string& out_dir, const HyperSpace& space) {
  const std::string path = out_dir + "/summary.txt";
  const std::string text = read_file(path);
  std::string canon;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string line =
        text.substr(pos, (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line_number;
    if (line.rfind("best\t", 0) == 0) {
      const Record rec = parse_record(line, line_number);
      canon = rec.get("h", "summary best record");
    }
  }
  if (canon.empty())
    throw ConfigError("no best record in " + path + "; run `search` first");
  return point_from_canonical(space, canon);
}

SearchResult run_configured_search(const ExperimentConfig& cfg,
                                   const TaskBundle& bundle, RunMode mode,
                                   const SplitPlan& plan) {
  SearchInputs in;
  in.bundle = &bundle;
  in.plan = &plan;
  in.space = &cfg.space;
  in.spec = &cfg.learner;
  in.metric = cfg.metric;
  in.master_seed = cfg.master_seed;
  in.workers = cfg.workers;
  return run_search(in, mode);
}

// Rebuilds every derived report file from run.log alone. Used both right
// after a run and by the `report` subcommand, so regeneration is trivially
// byte-identical.
void regenerate_reports(const ExperimentConfig& cfg) {
  const std::string log_path = cfg.out_dir + "/run.log";
  const std::vector<LogSection> sections = parse_run_log(read_file(log_path));

  // Strategy table: first section per strategy (in log order) is the base-K
  // run; later sections with other K values are stability-scan points.
  std::vector<Strategy> order;
  std::vector<StrategyReport> reports;
  std::vector<std::vector<std::pair<int, const LogSection*>>> curves;
  for (const LogSection& s : sections) {
    if (s.mode != RunMode::audit || s.rows.empty()) continue;
    std::size_t si = 0;
    for (; si < order.size(); ++si)
      if (order[si] == s.strategy) break;
    if (si == order.size()) {
      order.push_back(s.strategy);
      curves.emplace_back();
      const SearchResult res = reaggregate(s);
      StrategyReport rep;
      rep.strategy = s.strategy;
      rep.performance = MeanStd{res.test_mean, res.test_std, res.num_runs < 2};
      rep.correlation = correlation_from_section(s);
      reports.push_back(std::move(rep));
    }
    bool seen_k = false;
    for (const auto& [k, sec] : curves[si]) seen_k = seen_k || k == s.num_runs;
    if (!seen_k) curves[si].emplace_back(s.num_runs, &s);
  }

  for (std::size_t si = 0; si < order.size(); ++si) {
    if (curves[si].size() < 2) continue;
    StabilityReport stab;
    std::vector<double> perf, rhos;
    std::sort(curves[si].begin(), curves[si].end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, sec] : curves[si]) {
      const SearchResult res = reaggregate(*sec);
      StabilityEntry entry;
      entry.k = k;
      entry.test = MeanStd{res.test_mean, res.test_std, res.num_runs < 2};
      entry.rho = correlation_from_section(*sec).rho;
      stab.entries.push_back(entry);
      perf.push_back(entry.test.mean);
      rhos.push_back(entry.rho);
    }
    stab.perf_std = mean_std(perf).std;
    stab.rho_std = mean_std(rhos).std;
    reports[si].stability = std::move(stab);
  }

  if (!reports.empty()) {
    write_file(cfg.out_dir + "/report.txt",
               render_strategy_table(reports, cfg.task_name, cfg.metric));
    write_file(cfg.out_dir + "/report.tsv",
               render_strategy_tsv(reports, cfg.task_name));
    std::string curves_text;
    for (const StrategyReport& rep : reports) {
      if (rep.stability.entries.empty()) continue;
      curves_text += "strategy\t";
      curves_text += to_string(rep.strategy);
      curves_text += '\n';
      curves_text += render_stability_curves(rep);
    }
    if (!curves_text.empty())
      write_file(cfg.out_dir + "/curves.txt", curves_text);
  }

  // Sensitivity tables from note records.
  for (const LogSection& s : sections) {
    SensitivityResult sens;
    for (const std::string& line : s.extra_lines) {
      const Record rec = parse_record(line, 0);
      if (rec.kind != "note" || !rec.find("factor")) continue;
      sens.factor = rec.get("factor", "sensitivity note");
      sens.values.push_back(rec.get("value", "sensitivity note"));
      sens.dev_means.push_back(
          parse_double(rec.get("dev_mean", "sensitivity note"), "dev_mean"));
      sens.test_means.push_back(
          parse_double(rec.get("test_mean", "sensitivity note"), "test_mean"));
    }
    if (sens.values.empty()) continue;
    sens.dev_std = mean_std(sens.dev_means).std;
    sens.test_std = mean_std(sens.test_means).std;
    write_file(cfg.out_dir + "/sensitivity.txt", render_sensitivity_table(sens));
  }

  // Self-training generation table and pseudo-label audit file.
  std::string gen_table, pl_audit;
  for (const LogSection& s : sections) {
    for (const std::string& line : s.extra_lines) {
      const Record rec = parse_record(line, 0);
      if (rec.kind == "gen") {
        gen_table += line;
        gen_table += '\n';
      } else if (rec.kind == "pl") {
        pl_audit += rec.get("pool_index", "pl record") + "\t" +
                    rec.get("label", "pl record") + "\t" +
                    rec.get("confidence", "pl record") + "\t" +
                    rec.get("g", "pl record") + "\n";
      }
    }
  }
  if (!gen_table.empty()) write_file(cfg.out_dir + "/selftrain.txt", gen_table);
  if (!pl_audit.empty())
    write_file(cfg.out_dir + "/pseudo_labels.txt",
               "pool_index\tlabel\tconfidence\tgeneration\n" + pl_audit);
}

// Audit export of the oracle's noiseless score surface over the grid.
void write_oracle_table(const ExperimentConfig& cfg) {
  if (cfg.learner.kind != LearnerKind::oracle) return;
  std::string out = "h\ttrue_score\n";
  for (const HyperPoint& h : cfg.space.enumerate()) {
    out += h.canonical();
    out += '\t';
    out += format_double(oracle_true_score(cfg.learner, h));
    out += '\n';
  }
  write_file(cfg.out_dir + "/oracle_table.txt", out);
}

int run_cli(const CliArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.master_seed = *args.seed;
  if (args.out) cfg.out_dir = *args.out;
  if (args.workers) cfg.workers = *args.workers;
  if (args.strategy) cfg.strategy = strategy_from_string(*args.strategy);
  if (args.k) cfg.num_runs = *args.k;
  if (args.ratio) cfg.ratio = *args.ratio;
  fs::create_directories(cfg.out_dir);
  if (args.subcommand != "report" && args.subcommand != "replay")
    write_oracle_table(cfg);

  const std::string log_path = cfg.out_dir + "/run.log";
  const std::string summary_path = cfg.out_dir + "/summary.txt";

  if (args.subcommand == "splits") {
    const TaskBundle bundle = cfg.load_task();
    const SplitPlan plan = make_splits(cfg.strategy, bundle.labeled, cfg.num_runs,
                                       cfg.ratio, cfg.master_seed);
    print_warnings(plan);
    write_file(cfg.out_dir + "/splits.txt", serialize_split_plan(plan));
    std::cout << "wrote " << cfg.out_dir << "/splits.txt (" << plan.splits.size()
              << " splits)\n";
    return kExitOk;
  }

  if (args.subcommand == "search") {
    if (cfg.mode == RunMode::practical)
      throw ConfigError("mode=practical is served by the rerun subcommand");
    const TaskBundle bundle = cfg.load_task();
    const SplitPlan plan = make_splits(cfg.strategy, bundle.labeled, cfg.num_runs,
                                       cfg.ratio, cfg.master_seed);
    print_warnings(plan);
    write_file(cfg.out_dir + "/splits.txt", serialize_split_plan(plan));
    const SearchResult result = run_configured_search(cfg, bundle, cfg.mode, plan);
    append_file(log_path, serialize_run_log(result));
    append_file(summary_path, serialize_summary(result));
    if (cfg.mode == RunMode::audit)
      std::cout << "AUDIT mode: every grid point was scored on the test set\n";
    std::cout << "best " << result.best_canonical << "\n"
              << "test " << format_fixed(result.test_mean, 4) << " +-"
              << format_fixed(result.test_std, 4) << " over K=" << result.num_runs
              << "\n";
    return kExitOk;
  }

  if (args.subcommand == "rerun") {
    const TaskBundle bundle = cfg.load_task();
    const HyperPoint h_star = load_best_point(cfg.out_dir, cfg.space);
    const int l_runs = cfg.practical_l > 0 ? cfg.practical_l : 1;
    const SearchResult result =
        practical_rerun(bundle, h_star, cfg.learner, cfg.metric, l_runs,
                        cfg.master_seed, cfg.workers, cfg.strategy);
    append_file(log_path, serialize_run_log(result));
    append_file(summary_path, serialize_summary(result));
    std::cout << "practical rerun of " << result.best_canonical << "\n"
              << "test " << format_fixed(result.test_mean, 4) << " +-"
              << format_fixed(result.test_std, 4) << " over L=" << result.num_runs
              << "\n";
    return kExitOk;
  }

  if (args.subcommand == "compare-strategies") {
    const TaskBundle bundle = cfg.load_task();
    for (Strategy s : cfg.compare_list) {
      const SplitPlan plan =
          make_splits(s, bundle.labeled, cfg.num_runs, cfg.ratio, cfg.master_seed);
      print_warnings(plan);
      const SearchResult base = run_configured_search(cfg, bundle, RunMode::audit, plan);
      append_file(log_path, serialize_run_log(base));
      append_file(summary_path, serialize_summary(base));
      for (int k : cfg.stability_ks) {
        if (k == cfg.num_runs) continue;
        const SplitPlan scan_plan =
            make_splits(s, bundle.labeled, k, cfg.ratio, cfg.master_seed);
        const SearchResult res =
            run_configured_search(cfg, bundle, RunMode::audit, scan_plan);
        append_file(log_path, serialize_run_log(res));
        append_file(summary_path, serialize_summary(res));
      }
    }
    regenerate_reports(cfg);
    std::cout << read_file(cfg.out_dir + "/report.txt");
    return kExitOk;
  }

  if (args.subcommand == "stability-scan") {
    if (cfg.stability_ks.size() < 2)
      throw ConfigError("stability-scan needs stability.ks with >= 2 values");
    const TaskBundle bundle = cfg.load_task();
    for (int k : cfg.stability_ks) {
      const SplitPlan plan =
          make_splits(cfg.strategy, bundle.labeled, k, cfg.ratio, cfg.master_seed);
      print_warnings(plan);
      const SearchResult res = run_configured_search(cfg, bundle, RunMode::audit, plan);
      append_file(log_path, serialize_run_log(res));
      append_file(summary_path, serialize_summary(res));
    }
    regenerate_reports(cfg);
    std::cout << read_file(cfg.out_dir + "/curves.txt");
    return kExitOk;
  }

  if (args.subcommand == "sensitivity") {
    if (cfg.sensitivity_factor.empty())
      throw ConfigError("sensitivity needs sensitivity.factor");
    std::vector<std::string> values = cfg.sensitivity_values;
    if (values.empty()) {
      const int di = cfg.space.dim_index(cfg.sensitivity_factor);
      if (di < 0)
        throw ConfigError("sensitivity.values required for factor " +
                          cfg.sensitivity_factor);
      values = cfg.space.dims[di].values;
    }
    const TaskBundle bundle = cfg.load_task();
    const SplitPlan plan = make_splits(cfg.strategy, bundle.labeled, cfg.num_runs,
                                       cfg.ratio, cfg.master_seed);
    print_warnings(plan);
    const HyperPoint fixed = cfg.space.point_at(0);
    const SensitivityResult result =
        sensitivity(cfg.sensitivity_factor, values, fixed, bundle, plan,
                    cfg.space, cfg.learner, cfg.metric, cfg.master_seed,
                    cfg.workers);
    // Header + note records so `report` can rebuild the table from the log.
    SearchResult shell;
    shell.mode = RunMode::audit;
    shell.strategy = cfg.strategy;
    shell.num_runs = cfg.num_runs;
    shell.ratio = cfg.ratio.value_or(0.0);
    shell.master_seed = cfg.master_seed;
    shell.metric = cfg.metric;
    shell.learner = cfg.learner.kind;
    std::string section = serialize_run_log(shell);
    for (std::size_t i = 0; i < result.values.size(); ++i) {
      Record note;
      note.kind = "note";
      note.fields = {{"factor", result.factor},
                     {"value", result.values[i]},
                     {"dev_mean", format_double(result.dev_means[i])},
                     {"test_mean", format_double(result.test_means[i])}};
      section += format_record(note);
      section += '\n';
    }
    append_file(log_path, section);
    regenerate_reports(cfg);
    std::cout << read_file(cfg.out_dir + "/sensitivity.txt");
    return kExitOk;
  }

  if (args.subcommand == "selftrain") {
    if (!cfg.selftrain)
      throw ConfigError("selftrain needs a selftrain.* section in the config");
    const TaskBundle bundle = cfg.load_task();
    const SplitPlan plan = make_splits(cfg.strategy, bundle.labeled, cfg.num_runs,
                                       cfg.ratio, cfg.master_seed);
    print_warnings(plan);
    const SearchResult search = run_configured_search(cfg, bundle, RunMode::benchmark, plan);
    append_file(log_path, serialize_run_log(search));
    append_file(summary_path, serialize_summary(search));
    const HyperPoint h_star = point_from_canonical(cfg.space, search.best_canonical);
    const std::vector<GenerationRecord> generations =
        self_train(bundle, plan, h_star, cfg.learner, cfg.metric, *cfg.selftrain,
                   cfg.master_seed, cfg.workers);
    append_file(log_path, serialize_generations(generations));
    regenerate_reports(cfg);
    for (const GenerationRecord& g : generations) {
      std::cout << "generation " << g.generation << " sizes";
      for (int s : g.train_sizes) std::cout << ' ' << s;
      std::cout << " test " << format_fixed(g.test.mean, 4) << " +-"
                << format_fixed(g.test.std, 4)
                << (g.truncated ? " (pool exhausted)" : "") << "\n";
    }
    return kExitOk;
  }

  if (args.subcommand == "report") {
    regenerate_reports(cfg);
    std::cout << "reports regenerated from " << log_path << "\n";
    return kExitOk;
  }

  if (args.subcommand == "replay") {
    const std::string log_text = read_file(log_path);
    const std::string summary_text = read_file(summary_path);
    std::string recomputed;
    if (!replay_matches(log_text, summary_text, &recomputed))
      throw ReplayMismatchError("replay: re-aggregated summary differs from " +
                                summary_path);
    std::cout << "replay ok: " << summary_path
              << " reproduced from the run log\n";
    return kExitOk;
  }

  throw ConfigError("unknown subcommand: " + args.subcommand);
}

std::string sanitize(std::string message) {
  for (char& c : message)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return message;
}

void print_error(int code, const char* kind, const std::string& message) {
  std::cerr << "error\tcode=" << code << "\tkind=" << kind << "\tmessage="
            << sanitize(message) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 &&
      (std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h")) {
    print_usage();
    return kExitOk;
  }
  try {
    return run_cli(parse_args(argc, argv));
  } catch (const ReplayMismatchError& e) {
    print_error(kExitReplayMismatch, "replay_mismatch", e.what());
    return kExitReplayMismatch;
  } catch (const DegenerateSplitError& e) {
    print_error(kExitDegenerateSplit, "degenerate_split", e.what());
    return kExitDegenerateSplit;
  } catch (const ConfigError& e) {
    print_error(kExitConfig, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error(1, "internal", e.what());
    return 1;
  }
}
