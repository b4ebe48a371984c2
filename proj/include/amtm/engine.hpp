#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "amtm/baselines.hpp"
#include "amtm/link_dynamics.hpp"
#include "amtm/pricing.hpp"
#include "amtm/topology.hpp"
#include "amtm/traffic.hpp"

namespace amtm {

enum class Scheme { amtm, centralized, semi_centralized };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SimConfig {
  Network network;
  int k_paths = 5;
  std::vector<TrafficClass> classes = default_class_table();
  double alpha = 0.5;
  double arrival_rate_per_s = 0.0;
  int preload_flows = 0;           // stationary flows injected at t = 0
  double preload_duration_s = -1;  // < 0: outlive the run
  double duration_s = 100.0;
  double tick_s = 0.01;
  Scheme scheme = Scheme::amtm;
  PriceUpdateConfig price;
  double te_period_s = 10.0;  // cadence of the periodic baselines
  double b_max_mbit = 100.0;  // per virtual queue
  double initial_price = 0.0;
  std::uint64_t seed = 1;
  bool parallel = true;
  double warmup_s = 0.0;  // excluded by windowed metrics
  SolveOptions solver;

  void validate() const;
};

struct FlowRecord {
  std::int64_t id = 0;
  int cls = 0;
  QosKind qos = QosKind::delay_tolerant;
  double arrival_s = 0.0;
  double admit_s = -1.0;  // < 0: never admitted
  double end_s = 0.0;
  double mean_rate_mbps = 0.0;
  double queueing_delay_s = 0.0;
  bool rejected = false;
};

struct NipuSample {
  double t = 0.0;
  double n_gain = 0.0;
  double w_bar_s = 0.0;
  int active_flows = 0;
  int messages = 0;
  double utility_instant = 0.0;
  std::vector<double> lambda;                 // per link
  std::vector<double> backlog_per_link_mbit;  // sum of incident R per link
};

struct PeriodSample {
  double t0 = 0.0;
  double t1 = 0.0;
  double utility_integral = 0.0;  // integral of total utility over the period
  double mean_utilization = 0.0;
  long messages = 0;
  int admissions = 0;
  double admission_wait_sum_s = 0.0;
  int active_at_end = 0;
  int boundary_flows = 0;                // flows in the boundary solve
  std::vector<double> link_served_mbit;  // per link within the period
};

struct SimReport {
  Scheme scheme = Scheme::amtm;
  double duration_s = 0.0;
  double tick_s = 0.0;
  double te_period_s = 0.0;
  double warmup_s = 0.0;
  int nodes = 0;
  int nlinks = 0;
  std::vector<double> capacity_mbps;

  std::vector<NipuSample> nipu;
  std::vector<PeriodSample> periods;
  std::vector<FlowRecord> flows;
  std::vector<double> tick_utility;          // running total utility per tick
  std::vector<double> link_served_integral;  // Mbit per link over the run
  double utility_total = 0.0;                // integral over the whole run
  double peak_queue_backlog_mbit = 0.0;      // max single virtual queue
  double overflow_total_mbit = 0.0;
  long rejected = 0;
  long trace_flows = 0;
};

struct NipuEvent {
  double t = 0.0;
  int round = 0;
  const std::vector<Flow>* active = nullptr;   // snapshots with current Theta/x
  const StateReport* report = nullptr;         // the (stale) report consumed
  const std::vector<double>* lambda = nullptr; // prices after the update
  const std::vector<double>* backlog_mbit = nullptr;  // current per-segment R
  double n_gain = 0.0;
  double w_bar_s = 0.0;
};

struct EngineHooks {
  std::function<void(const NipuEvent&)> after_nipu;
};

/// Builds the arrival trace for a config: stationary preload plus Poisson
/// arrivals over the run horizon. Deterministic in the seed.
std::vector<Flow> make_trace(const SimConfig& cfg);

SimReport run(const SimConfig& cfg, const EngineHooks* hooks = nullptr);

/// Same engine fed from a prebuilt trace (sorted by arrival time); lets the
/// comparison schemes replay identical flows.
SimReport replay_flow_trace(const SimConfig& cfg, const std::vector<Flow>& trace,
                            const EngineHooks* hooks = nullptr);

}  // namespace amtm
