#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amtm/engine.hpp"

namespace amtm {

/// Experiment-level configuration; JSON files mirror these field names and
/// CLI flags override file values.
struct RunConfig {
  std::string kind = "single";  // convergence | n-sweep | compare | single
  std::string out_dir = "out";

  std::string topology_file;       // empty: built-in 25-node sample
  double capacity_mbps = 5000.0;   // capacity of the generated sample topology
  double capacity_jitter = 0.0;    // per-link spread of the sample capacities
  int k_paths = 5;
  double alpha = 0.5;
  std::vector<TrafficClass> classes = default_class_table();

  double arrival_rate_per_s = 30.0;
  int preload_flows = 0;
  double duration_s = 100.0;
  double tick_s = 0.01;
  std::string scheme = "amtm";
  std::string regime = "deep";
  double mu = 1e-4;
  double epsilon = 1e-5;
  double n0 = 1e-4;
  double w_star_s = 0.2;
  bool adaptive_n = true;
  double nipu_interval_s = 0.1;
  double te_period_s = 10.0;
  double b_max_mbit = 100.0;
  double initial_price = 0.0;
  std::uint64_t seed = 1;
  double warmup_s = 0.0;
  bool parallel = true;
  double solver_tol_rel = 1e-4;
  int solver_max_iters = 20000;

  // convergence
  int sample_links = 20;
  int oracle_every = 10;  // NIPU rounds between oracle solves

  // sweeps
  std::vector<double> n_grid = {1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
  std::vector<double> intensity_grid = {5.0, 10.0, 20.0, 50.0};
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

/// Materializes the simulation config: loads or generates the topology and
/// maps the flat fields onto SimConfig.
SimConfig to_sim_config(const RunConfig& rc);

}  // namespace amtm
