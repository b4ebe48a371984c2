#pragma once

#include <string>
#include <vector>

#include "amtm/engine.hpp"
#include "amtm/run_config.hpp"

namespace amtm {

struct ConvergenceVariantResult {
  double final_rel_error = 0.0;      // ||lambda - lambda*|| / ||lambda*|| at the end
  double max_link_backlog_mbit = 0;  // max per-link backlog sum at the end
  double mean_tracking_error = 0.0;  // mean of the per-sample relative errors
  bool backlog_bounded = true;       // stayed below b_max per queue
  int samples = 0;
};

struct ConvergenceResult {
  ConvergenceVariantResult stationary;
  ConvergenceVariantResult dynamic;
};

/// Fig.4-style study: stationary preload and dynamic arrivals, emitting
/// lambda / lambda_hat / lambda_star traces for sampled links plus per-link
/// backlog traces.
ConvergenceResult cmd_convergence(const RunConfig& rc, bool write_csv = true);

struct NSweepResult {
  std::vector<double> n_values;
  std::vector<double> mean_delay_s;
  std::vector<double> total_utility;
  int delay_inversions = 0;    // strict increases along the n grid
  int utility_inversions = 0;  // strict increases along the n grid
  double adaptive_terminal_w_bar_s = 0.0;
  std::vector<double> adaptive_n_trace;
};

/// Fig.5-style study: fixed-n sweep on an identical replayed trace plus one
/// adaptive-n run recording the n trajectory.
NSweepResult cmd_n_sweep(const RunConfig& rc, bool write_csv = true);

struct CompareRow {
  double intensity = 0.0;
  Scheme scheme = Scheme::amtm;
  double mean_utilization = 0.0;
  double utility_total = 0.0;        // post-warmup integral
  double utility_time_avg = 0.0;
  double delay_mean_all_s = 0.0;
  double delay_mean_sensitive_s = 0.0;
  double admission_wait_mean_s = 0.0;
  double messages_per_round = 0.0;   // per NIPU (amtm) or per TE period
  long trace_flows = 0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  const CompareRow& row(double intensity, Scheme s) const;
};

/// Fig.12-style study: per intensity, the three schemes replay an identical
/// trace; emits utilization, utility, delay and message-scale columns.
CompareResult cmd_compare(const RunConfig& rc, bool write_csv = true);

/// One run of the configured scheme; emits time series, per-flow records and
/// a summary.
SimReport cmd_single(const RunConfig& rc, bool write_csv = true);

}  // namespace amtm
