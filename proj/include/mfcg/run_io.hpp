#pragma once

#include <string>
#include <vector>

#include "mfcg/eval.hpp"
#include "mfcg/train.hpp"

namespace mfcg {

// shortest text that parses back to the same double (17 significant digits)
std::string format_g17(double v);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& metrics);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

void write_particles_csv(const std::string& path, const EmpiricalMeasure& meas);
EmpiricalMeasure read_particles_csv(const std::string& path);

// plot-ready table: x, learned/true value, learned/true control
void write_eval_csv(const std::string& path, const std::vector<double>& xs,
                    const std::vector<double>& value_learned,
                    const std::vector<double>& value_true,
                    const std::vector<double>& control_learned,
                    const std::vector<double>& control_true);

// Full run-directory lifecycle: config.json, manifest.json, periodic and
// final checkpoints, metrics.csv, particle CSVs. A numerical divergence stops
// training, is recorded in the manifest and flagged on the artifacts.
TrainArtifacts train_run_to_dir(const TrainConfig& cfg, const std::string& dir);

TrainConfig load_run_config(const std::string& run_dir);
CheckpointData load_latest_checkpoint(const std::string& run_dir);
EmpiricalMeasure load_run_particles(const std::string& run_dir,
                                    const std::string& which);  // global|local

// evaluate a finished run against the closed form on the given grid,
// writing eval.csv into the run directory (or eval_path if nonempty)
RunReport evaluate_run(const std::string& run_dir, const GridSpec& grid,
                       const std::string& eval_path = "");

}  // namespace mfcg
