#include "amtm/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace amtm {

void PriceUpdateConfig::validate() const {
  if (mu <= 0.0) throw std::invalid_argument("price config: mu must be positive");
  if (n_gain < 0.0) throw std::invalid_argument("price config: n must be nonnegative");
  if (epsilon <= 0.0) throw std::invalid_argument("price config: epsilon must be positive");
  if (w_star_s <= 0.0) throw std::invalid_argument("price config: W* must be positive");
  if (nipu_interval_s <= 0.0) throw std::invalid_argument("price config: interval must be positive");
}

FdtcDecision fdtc_allocate(const Flow& flow, const PathSet& ps,
                           std::span<const double> prices,
                           std::span<const double> link_delay_s,
                           std::span<const double> queue_est_s) {
  FdtcDecision d;
  const auto [first, count] = ps.candidates(flow.src, flow.dst);
  if (count == 0) return d;  // rejected: no candidate path

  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int p = first; p < first + count; ++p) {
    double cost = 0.0;
    if (flow.qos == QosKind::delay_sensitive) {
      for (int e : ps.paths[p].links) cost += link_delay_s[e] + queue_est_s[e];
    } else {
      for (int e : ps.paths[p].links) cost += prices[e];
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = p;
    }
  }
  d.admitted = true;
  d.path_id = best;
  d.path_price = ps.path_sum(best, prices);
  d.rate_mbps = optimal_rate(flow.util, d.path_price, flow.peak_mbps);
  return d;
}

namespace {

// Per-path admitted totals in flow order; feeds the flow-based link loads.
std::vector<double> path_rates(const std::vector<Flow>& flows, const PathSet& ps) {
  std::vector<double> r(ps.path_count(), 0.0);
  for (const Flow& f : flows) {
    for (size_t i = 0; i < f.path_ids.size(); ++i) r[f.path_ids[i]] += f.rates_mbps[i];
  }
  return r;
}

}  // namespace

void nipu_flow_based(std::vector<double>& prices, const std::vector<Flow>& flows,
                     const PathSet& ps, std::span<const double> capacity,
                     double mu, bool parallel) {
  const std::vector<double> rate = path_rates(flows, ps);
  const int nl = ps.nlinks;
#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < nl; ++e) {
    double load = 0.0;
    for (int i = ps.link_path_first[e]; i < ps.link_path_first[e + 1]; ++i)
      load += rate[ps.link_path[i]];
    prices[e] = std::max(0.0, prices[e] + mu * (load - capacity[e]));
  }
}

void nipu_shallow(std::vector<double>& prices, const StateReport& report,
                  const PathSet& ps, double mu, bool parallel) {
  const int nl = ps.nlinks;
#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < nl; ++e) {
    double overload = 0.0;
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i) {
      const int seg = ps.link_seg[i];
      // O^s telescopes to r^0 - r^s.
      overload += report.injected_mbps[ps.seg_path[seg]] - report.carried_mbps[seg];
    }
    prices[e] = std::max(0.0, prices[e] + mu * (overload - report.idle_mbps[e]));
  }
}

std::vector<double> backlog_prefix_sums(const PathSet& ps,
                                        std::span<const double> backlog_mbit,
                                        bool parallel) {
  std::vector<double> pref(ps.seg_count());
  const int np = ps.path_count();
#pragma omp parallel for if (parallel) schedule(static)
  for (int p = 0; p < np; ++p) {
    double acc = 0.0;
    for (int seg = ps.path_seg_first[p]; seg < ps.path_seg_first[p + 1]; ++seg) {
      acc += backlog_mbit[seg];
      pref[seg] = acc;
    }
  }
  return pref;
}

NipuDeepResult nipu_deep(std::vector<double>& prices, const StateReport& report,
                         const PathSet& ps, std::span<const double> capacity,
                         PriceUpdateConfig& cfg, bool parallel) {
  const int np = ps.path_count();
  const int nl = ps.nlinks;

  // Average queueing time over the paths that saw traffic in the window;
  // W_p sums the expected backlog of the path's own queues over link capacity.
  double w_sum = 0.0;
  int w_count = 0;
  for (int p = 0; p < np; ++p) {
    double w_p = 0.0;
    bool active = report.injected_mbps[p] > 0.0;
    for (int seg = ps.path_seg_first[p]; seg < ps.path_seg_first[p + 1]; ++seg) {
      w_p += report.backlog_mean_mbit[seg] / capacity[ps.seg_link[seg]];
      if (report.backlog_mean_mbit[seg] > 0.0) active = true;
    }
    if (active) {
      w_sum += w_p;
      ++w_count;
    }
  }
  const double w_bar = w_count > 0 ? w_sum / w_count : 0.0;

  if (cfg.adaptive_n) {
    cfg.n_gain = w_bar > cfg.w_star_s ? cfg.n_gain + cfg.epsilon
                                      : std::max(0.0, cfg.n_gain - cfg.epsilon);
  }
  const double n = cfg.n_gain;
  const double mu = cfg.mu;

  const std::vector<double> pref = backlog_prefix_sums(ps, report.backlog_mbit, parallel);

#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < nl; ++e) {
    double backlog_term = 0.0;
    double overload = 0.0;
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i) {
      const int seg = ps.link_seg[i];
      backlog_term += pref[seg];
      overload += report.injected_mbps[ps.seg_path[seg]] - report.carried_mbps[seg];
    }
    prices[e] = std::max(0.0, prices[e] + n * backlog_term +
                                  mu * (overload - report.idle_mbps[e]));
  }
  return NipuDeepResult{w_bar, cfg.n_gain};
}

double dual_value(std::span<const double> prices, const std::vector<Flow>& flows,
                  const PathSet& ps, std::span<const double> capacity,
                  bool restrict_to_chosen) {
  double total = 0.0;
  for (size_t e = 0; e < prices.size(); ++e) total += prices[e] * capacity[e];
  for (const Flow& f : flows) {
    double pmin = std::numeric_limits<double>::infinity();
    if (restrict_to_chosen && !f.path_ids.empty()) {
      for (int p : f.path_ids) pmin = std::min(pmin, ps.path_sum(p, prices));
    } else {
      const auto [first, count] = ps.candidates(f.src, f.dst);
      for (int p = first; p < first + count; ++p)
        pmin = std::min(pmin, ps.path_sum(p, prices));
    }
    if (!std::isfinite(pmin)) continue;  // no usable path
    const double x = optimal_rate(f.util, pmin, f.peak_mbps);
    total += utility_value(f.util, x) - pmin * x;
  }
  return total;
}

}  // namespace amtm
