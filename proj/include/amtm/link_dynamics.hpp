#pragma once

#include <array>
#include <span>
#include <vector>

#include "amtm/topology.hpp"

namespace amtm {

// Priority tiers of the two-priority egress queues: delay-sensitive traffic
// is served to exhaustion before delay-tolerant traffic on each link.
inline constexpr int kTierHigh = 0;
inline constexpr int kTierLow = 1;
inline constexpr int kTiers = 2;

enum class QueueRegime { flow_based, shallow, deep };

/// Fluid state of every link and virtual queue. Rates are Mbps, volumes Mbit.
/// One simulation instance owns one state; updates are single-writer per tick.
struct LinkDynamicsState {
  // r^0 per (tier, path)
  std::array<std::vector<double>, kTiers> injected;
  std::vector<double> injected_total;  // per path

  // per (tier, segment)
  std::array<std::vector<double>, kTiers> arrival;  // alpha (deep regime)
  std::array<std::vector<double>, kTiers> carried;  // beta = r^s
  std::array<std::vector<double>, kTiers> backlog;  // R (deep regime)

  std::vector<double> carried_total;  // per segment
  std::vector<double> backlog_total;  // per segment
  std::vector<double> idle_mbps;      // per link

  std::vector<double> overflow_by_link_mbit;  // cumulative buffer-bound drops
  double peak_backlog_mbit = 0.0;             // max single virtual queue seen

  // E[R] accumulators over the ticks since the last report
  std::vector<double> backlog_window_sum;  // per segment
  int window_ticks = 0;

  void init(const PathSet& ps);
  void add_injected(int path, int tier, double delta_mbps);
  void clear_injected();
  double total_overflow_mbit() const;
};

/// Snapshot the TE server consumes: r^0 per path, r^s and R per segment,
/// idle bandwidth per link, plus the window mean of R.
struct StateReport {
  std::vector<double> idle_mbps;
  std::vector<double> injected_mbps;
  std::vector<double> carried_mbps;
  std::vector<double> backlog_mbit;
  std::vector<double> backlog_mean_mbit;
};

/// Shallow regime: same-tick fixed point of the fair-forwarding rule. At each
/// link, all incident segments are scaled by the common factor C/demand when
/// demand exceeds capacity. Tiers are ignored (drop-based, nothing queues).
/// Throws on non-convergence after max_sweeps Jacobi sweeps.
void propagate_shallow(const PathSet& ps, std::span<const double> capacity,
                       LinkDynamicsState& st, bool parallel,
                       int max_sweeps = 1000, double tol_mbps = 1e-9);

/// Deep regime: advance the virtual queues one tick. Per link, backlogged
/// queues are served proportionally to R first, then empty-but-flowing queues
/// proportionally to inflow; both are clipped at what the queue can emit.
/// The low tier receives no service on a link whose high tier entered the
/// tick backlogged. Backlog beyond b_max overflows and is counted.
void step_deep(const PathSet& ps, std::span<const double> capacity,
               LinkDynamicsState& st, double dt_s, double b_max_mbit,
               bool parallel);

/// Little's-law estimate: sum of incident backlogs divided by link capacity.
double queueing_estimate(const PathSet& ps, const LinkDynamicsState& st,
                         int link, double capacity_mbps);
std::vector<double> queueing_estimates(const PathSet& ps,
                                       std::span<const double> capacity,
                                       const LinkDynamicsState& st,
                                       bool parallel);

StateReport make_report(const PathSet& ps, const LinkDynamicsState& st);
void reset_window(LinkDynamicsState& st);

}  // namespace amtm
