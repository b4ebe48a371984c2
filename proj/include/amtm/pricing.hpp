#pragma once

#include <span>
#include <vector>

#include "amtm/link_dynamics.hpp"
#include "amtm/topology.hpp"
#include "amtm/traffic.hpp"

namespace amtm {

struct PriceUpdateConfig {
  double mu = 1e-4;        // gradient step on overload - idle
  double n_gain = 1e-4;    // backlog gain (deep regime)
  double epsilon = 1e-5;   // adaptation step for n
  double w_star_s = 0.2;   // queueing-time threshold
  QueueRegime regime = QueueRegime::deep;
  double nipu_interval_s = 0.1;
  bool adaptive_n = true;

  void validate() const;
};

struct FdtcDecision {
  bool admitted = false;
  int path_id = -1;
  double rate_mbps = 0.0;
  double path_price = 0.0;
};

/// Algorithm of the service broker on flow arrival: delay-sensitive flows take
/// the path minimizing propagation plus queueing delay, delay-tolerant flows
/// the cheapest path; the admitted rate maximizes u(x) - price * x under the
/// class peak. Ties break toward the lowest path index.
FdtcDecision fdtc_allocate(const Flow& flow, const PathSet& ps,
                           std::span<const double> prices,
                           std::span<const double> link_delay_s,
                           std::span<const double> queue_est_s);

/// Dual-gradient update from flow information:
/// lambda_e <- max(0, lambda_e + mu * (load_e - C_e)).
void nipu_flow_based(std::vector<double>& prices, const std::vector<Flow>& flows,
                     const PathSet& ps, std::span<const double> capacity,
                     double mu, bool parallel);

/// Shallow-queue update from node state:
/// lambda_e <- max(0, lambda_e + mu * (sum overload through e - idle_e)).
void nipu_shallow(std::vector<double>& prices, const StateReport& report,
                  const PathSet& ps, double mu, bool parallel);

struct NipuDeepResult {
  double w_bar_s = 0.0;  // average queueing time over active paths
  double n_after = 0.0;
};

/// Deep-queue update: recomputes retention and overload from the report,
/// adapts n against the queueing-time threshold, and applies
/// lambda_e <- max(0, lambda_e + n * backlog_term_e + mu * (overload_e - idle_e)).
/// cfg.n_gain is updated in place when adaptive_n is set.
NipuDeepResult nipu_deep(std::vector<double>& prices, const StateReport& report,
                         const PathSet& ps, std::span<const double> capacity,
                         PriceUpdateConfig& cfg, bool parallel);

/// Lagrange dual of the utility maximization at the given prices; an upper
/// bound on the utility of any feasible allocation. Flows with a routing
/// decision are priced on their chosen paths when restrict_to_chosen is set,
/// otherwise on all candidate paths of their node pair.
double dual_value(std::span<const double> prices, const std::vector<Flow>& flows,
                  const PathSet& ps, std::span<const double> capacity,
                  bool restrict_to_chosen = false);

/// Per-segment prefix sums of backlog along each path:
/// out[seg(p,s)] = sum_{k<=s} R_p^k. Used by the deep update and Eq.-style
/// capacity reductions.
std::vector<double> backlog_prefix_sums(const PathSet& ps,
                                        std::span<const double> backlog_mbit,
                                        bool parallel);

}  // namespace amtm
