#include "mfcg/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mfcg/errors.hpp"
#include "mfcg/run_io.hpp"

namespace fs = std::filesystem;

namespace mfcg {

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

TrainConfig config_from_file_or_default(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return train_config_from_json(read_json_file(path));
}

nlohmann::json solution_json(const AnalyticalSolution& sol) {
  return nlohmann::json{{"gamma2", sol.gamma2},
                        {"gamma1", sol.gamma1},
                        {"gamma0", sol.gamma0},
                        {"m", sol.m},
                        {"limit_mean", sol.limit_mean},
                        {"limit_var", sol.limit_var},
                        {"limit_std", sol.limit_std()}};
}

nlohmann::json report_json(const RunReport& rep) {
  nlohmann::json j;
  const auto names = RunReport::field_names();
  const auto vals = rep.values();
  for (int f = 0; f < RunReport::kFields; ++f) j[names[f]] = vals[f];
  return j;
}

int run_oracle(const std::string& config_path) {
  const TrainConfig cfg = config_from_file_or_default(config_path);
  const AnalyticalSolution sol = analytical_solution(cfg.lq);
  std::cout << solution_json(sol).dump(2) << "\n";
  return 0;
}

int run_train(const std::string& algo, const std::string& config_path,
              long seed, bool seed_set, const std::string& out_dir) {
  TrainConfig cfg = config_from_file_or_default(config_path);
  if (!algo.empty()) cfg.algo = algo_from_name(algo);
  if (seed_set) cfg.seed = static_cast<std::uint64_t>(seed);
  const TrainArtifacts art = train_run_to_dir(cfg, out_dir);
  nlohmann::json summary{{"out", out_dir},
                         {"algo", algo_name(cfg.algo)},
                         {"seed", cfg.seed},
                         {"steps_completed",
                          static_cast<long>(art.metrics.size())},
                         {"status", art.diverged ? "diverged" : "ok"}};
  if (!art.metrics.empty()) {
    summary["mean_global"] = art.metrics.back().mean_global;
    summary["mean_local"] = art.metrics.back().mean_local;
  }
  if (art.diverged) summary["divergence_step"] = art.divergence_step;
  std::cout << summary.dump(2) << "\n";
  return art.diverged ? 2 : 0;
}

int run_eval(const std::string& run_dir, const std::string& grid_spec,
             const std::string& out_path) {
  const TrainConfig cfg = load_run_config(run_dir);
  GridSpec grid;
  if (!grid_spec.empty()) {
    grid = GridSpec::parse(grid_spec);
  } else {
    grid = default_grid(analytical_solution(cfg.lq));
  }
  const RunReport rep = evaluate_run(run_dir, grid, out_path);
  std::cout << report_json(rep).dump(2) << "\n";
  return 0;
}

int run_sweep(const std::string& algo, const std::string& config_path,
              int seeds, long base_seed, const std::string& out_dir) {
  TrainConfig cfg = config_from_file_or_default(config_path);
  if (!algo.empty()) cfg.algo = algo_from_name(algo);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create sweep directory: " + out_dir);

  std::vector<RunReport> reports;
  bool any_diverged = false;
  for (int s = 0; s < seeds; ++s) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = static_cast<std::uint64_t>(base_seed + s);
    const std::string dir =
        (fs::path(out_dir) / ("seed_" + std::to_string(base_seed + s)))
            .string();
    const TrainArtifacts art = train_run_to_dir(run_cfg, dir);
    if (art.diverged) {
      any_diverged = true;
      continue;
    }
    const GridSpec grid = default_grid(analytical_solution(run_cfg.lq));
    reports.push_back(evaluate_run(dir, grid));
  }
  if (reports.empty()) {
    std::cerr << "all runs diverged\n";
    return 2;
  }
  const AggregateReport agg = aggregate_runs(reports);
  nlohmann::json j;
  j["runs"] = agg.runs;
  j["mean"] = report_json(agg.mean);
  j["std"] = report_json(agg.stddev);
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& r : reports) per_seed.push_back(report_json(r));
  j["per_seed"] = per_seed;
  std::ofstream out(fs::path(out_dir) / "aggregate.json");
  if (!out) throw IoError("cannot write aggregate.json under " + out_dir);
  out << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return any_diverged ? 2 : 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"actor-critic solvers for mean-field control games on the "
               "linear-quadratic benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_dir, algo, grid_spec, run_dir, eval_out;
  long seed = 0;
  int num_seeds = 5;
  long base_seed = 0;

  auto* oracle = app.add_subcommand(
      "oracle", "print the closed-form equilibrium as JSON");
  oracle->add_option("--config", config_path, "training config JSON");

  auto* train = app.add_subcommand("train", "train one run into a directory");
  train->add_option("--algo", algo,
                    "baseline | batch | minibatch | drl (overrides config)");
  train->add_option("--config", config_path, "training config JSON");
  auto* seed_opt = train->add_option("--seed", seed, "RNG seed");
  train->add_option("--out", out_dir, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a run against the oracle");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--grid", grid_spec, "lo:hi:step (default: oracle support)");
  eval->add_option("--out", eval_out, "eval CSV path (default <run>/eval.csv)");

  auto* sweep = app.add_subcommand("sweep", "train several seeds and aggregate");
  sweep->add_option("--algo", algo, "algorithm (overrides config)");
  sweep->add_option("--config", config_path, "training config JSON");
  sweep->add_option("--seeds", num_seeds, "number of seeds")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", base_seed, "first seed");
  sweep->add_option("--out", out_dir, "sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (oracle->parsed()) return run_oracle(config_path);
    if (train->parsed())
      return run_train(algo, config_path, seed, seed_opt->count() > 0,
                       out_dir);
    if (eval->parsed()) return run_eval(run_dir, grid_spec, eval_out);
    if (sweep->parsed())
      return run_sweep(algo, config_path, num_seeds, base_seed, out_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mfcg
