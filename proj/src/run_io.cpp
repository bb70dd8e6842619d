#include "mfcg/run_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mfcg/errors.hpp"

namespace fs = std::filesystem;

namespace mfcg {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path) {
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

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw IoError("bad number in CSV: " + s);
  return v;
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& metrics) {
  std::ostringstream out;
  out << "step,lr_multiplier,score_loss_global,score_loss_local,critic_loss,"
         "actor_loss,mean_global,mean_local,var_global,var_local\n";
  for (const auto& r : metrics) {
    out << r.step << ',' << format_g17(r.lr_multiplier) << ','
        << format_g17(r.score_loss_global) << ','
        << format_g17(r.score_loss_local) << ',' << format_g17(r.critic_loss)
        << ',' << format_g17(r.actor_loss) << ',' << format_g17(r.mean_global)
        << ',' << format_g17(r.mean_local) << ',' << format_g17(r.var_global)
        << ',' << format_g17(r.var_local) << '\n';
  }
  write_text(path, out.str());
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty metrics file: " + path);
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ls, tok, ',')) cols.push_back(tok);
    if (cols.size() != 10) throw IoError("bad metrics row: " + line);
    MetricsRecord r;
    r.step = std::stol(cols[0]);
    r.lr_multiplier = parse_double(cols[1]);
    r.score_loss_global = parse_double(cols[2]);
    r.score_loss_local = parse_double(cols[3]);
    r.critic_loss = parse_double(cols[4]);
    r.actor_loss = parse_double(cols[5]);
    r.mean_global = parse_double(cols[6]);
    r.mean_local = parse_double(cols[7]);
    r.var_global = parse_double(cols[8]);
    r.var_local = parse_double(cols[9]);
    out.push_back(r);
  }
  return out;
}

void write_particles_csv(const std::string& path, const EmpiricalMeasure& meas) {
  std::ostringstream out;
  out << "x\n";
  for (long i = 0; i < meas.size(); ++i) out << format_g17(meas.x(i)) << '\n';
  write_text(path, out.str());
}

EmpiricalMeasure read_particles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty particle file: " + path);
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vals.push_back(parse_double(line));
  }
  EmpiricalMeasure meas;
  meas.x = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                             static_cast<long>(vals.size()));
  return meas;
}

void write_eval_csv(const std::string& path, const std::vector<double>& xs,
                    const std::vector<double>& value_learned,
                    const std::vector<double>& value_true,
                    const std::vector<double>& control_learned,
                    const std::vector<double>& control_true) {
  std::ostringstream out;
  out << "x,value_learned,value_true,control_learned,control_true\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << format_g17(xs[i]) << ',' << format_g17(value_learned[i]) << ','
        << format_g17(value_true[i]) << ',' << format_g17(control_learned[i])
        << ',' << format_g17(control_true[i]) << '\n';
  }
  write_text(path, out.str());
}

namespace {

nlohmann::json manifest_base(const TrainConfig& cfg) {
  nlohmann::json j;
  j["config"] = train_config_to_json(cfg);
  j["seed"] = cfg.seed;
  j["code_version"] = "mfcg 1.0.0";
  j["created_at"] = now_iso8601();
  return j;
}

}  // namespace

TrainArtifacts train_run_to_dir(const TrainConfig& cfg, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "checkpoints", ec);
  if (ec) throw IoError("cannot create run directory: " + dir);

  write_json((fs::path(dir) / "config.json").string(),
             train_config_to_json(cfg));
  nlohmann::json manifest = manifest_base(cfg);
  manifest["status"] = "running";
  write_json((fs::path(dir) / "manifest.json").string(), manifest);

  Trainer trainer(cfg);
  bool diverged = false;
  long div_step = -1;
  const auto checkpoint = [&] {
    const std::string path =
        (fs::path(dir) / "checkpoints" /
         ("step_" + std::to_string(trainer.current_step()) + ".json"))
            .string();
    write_json(path, trainer.checkpoint_json());
  };
  while (!trainer.done()) {
    try {
      trainer.step();
    } catch (const DivergenceError&) {
      diverged = true;
      div_step = trainer.current_step();
      break;
    }
    if (trainer.current_step() % cfg.checkpoint_period == 0 &&
        !trainer.done())
      checkpoint();
  }
  checkpoint();  // terminal (or abort-time) state

  write_metrics_csv((fs::path(dir) / "metrics.csv").string(),
                    trainer.metrics());
  write_particles_csv((fs::path(dir) / "particles_global.csv").string(),
                      trainer.particles_global());
  write_particles_csv((fs::path(dir) / "particles_local.csv").string(),
                      trainer.particles_local());

  manifest["status"] = diverged ? "diverged" : "ok";
  if (diverged) manifest["divergence_step"] = div_step;
  manifest["finished_at"] = now_iso8601();
  write_json((fs::path(dir) / "manifest.json").string(), manifest);

  TrainArtifacts art = trainer.artifacts();
  art.diverged = diverged;
  art.divergence_step = div_step;
  return art;
}

TrainConfig load_run_config(const std::string& run_dir) {
  return train_config_from_json(
      read_json((fs::path(run_dir) / "config.json").string()));
}

CheckpointData load_latest_checkpoint(const std::string& run_dir) {
  const fs::path ckdir = fs::path(run_dir) / "checkpoints";
  long best = -1;
  fs::path best_path;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(ckdir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("step_", 0) != 0 || entry.path().extension() != ".json")
      continue;
    const long step = std::stol(name.substr(5));
    if (step > best) {
      best = step;
      best_path = entry.path();
    }
  }
  if (ec || best < 0)
    throw IoError("no checkpoints under " + ckdir.string());
  return checkpoint_from_json(read_json(best_path.string()));
}

EmpiricalMeasure load_run_particles(const std::string& run_dir,
                                    const std::string& which) {
  return read_particles_csv(
      (fs::path(run_dir) / ("particles_" + which + ".csv")).string());
}

RunReport evaluate_run(const std::string& run_dir, const GridSpec& grid,
                       const std::string& eval_path) {
  const TrainConfig cfg = load_run_config(run_dir);
  const AnalyticalSolution sol = analytical_solution(cfg.lq);
  const CheckpointData ck = load_latest_checkpoint(run_dir);
  const EmpiricalMeasure pg = load_run_particles(run_dir, "global");
  const EmpiricalMeasure pl = load_run_particles(run_dir, "local");

  RunReport rep;
  const ValueErrors ve = eval_value(ck.critic, sol, grid);
  rep.value_sup = ve.sup;
  rep.value_l2 = ve.l2;
  rep.policy_sup = eval_policy(ck.actor, sol, grid);
  const DistributionErrors dg = eval_distribution(pg, sol);
  const DistributionErrors dl = eval_distribution(pl, sol);
  rep.mean_err_global = dg.mean_err;
  rep.mean_err_local = dl.mean_err;
  rep.std_err_global = dg.std_err;
  rep.std_err_local = dl.std_err;
  rep.ks_global = dg.ks;
  rep.ks_local = dl.ks;

  const auto xs = grid.points();
  std::vector<double> vl(xs.size()), vt(xs.size()), al(xs.size()),
      at(xs.size());
  Workspace ws;
  GaussianPolicy::Workspaces pws;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    vl[i] = ck.critic.value1(xs[i], ws);
    vt[i] = value_function(xs[i], sol);
    double mean, stddev;
    ck.actor.forward_heads(xs[i], pws, mean, stddev);
    al[i] = mean;
    at[i] = optimal_control(xs[i], sol);
  }
  const std::string out_path =
      eval_path.empty() ? (fs::path(run_dir) / "eval.csv").string()
                        : eval_path;
  write_eval_csv(out_path, xs, vl, vt, al, at);
  return rep;
}

}  // namespace mfcg
