#include "amtm/link_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amtm {

void LinkDynamicsState::init(const PathSet& ps) {
  const int np = ps.path_count();
  const int ns = ps.seg_count();
  const int nl = ps.nlinks;
  for (int t = 0; t < kTiers; ++t) {
    injected[t].assign(np, 0.0);
    arrival[t].assign(ns, 0.0);
    carried[t].assign(ns, 0.0);
    backlog[t].assign(ns, 0.0);
  }
  injected_total.assign(np, 0.0);
  carried_total.assign(ns, 0.0);
  backlog_total.assign(ns, 0.0);
  idle_mbps.assign(nl, 0.0);
  overflow_by_link_mbit.assign(nl, 0.0);
  backlog_window_sum.assign(ns, 0.0);
  window_ticks = 0;
}

void LinkDynamicsState::add_injected(int path, int tier, double delta_mbps) {
  injected[tier][path] += delta_mbps;
  injected_total[path] += delta_mbps;
}

void LinkDynamicsState::clear_injected() {
  for (int t = 0; t < kTiers; ++t)
    std::fill(injected[t].begin(), injected[t].end(), 0.0);
  std::fill(injected_total.begin(), injected_total.end(), 0.0);
}

double LinkDynamicsState::total_overflow_mbit() const {
  double s = 0.0;
  for (double v : overflow_by_link_mbit) s += v;
  return s;
}

namespace {

// Splits `budget` across queues proportionally to weight, clipping each queue
// at avail; freed budget is redistributed among the unclipped. out[i] is the
// served volume, aligned with idx. Returns total served.
double waterfill(const std::vector<int>& idx, const std::vector<double>& weight,
                 const std::vector<double>& avail, double budget,
                 std::vector<double>& out) {
  const size_t n = idx.size();
  out.assign(n, 0.0);
  std::vector<char> done(n, 0);
  double served = 0.0;
  while (budget > 0.0) {
    double wsum = 0.0;
    for (size_t i = 0; i < n; ++i)
      if (!done[i]) wsum += weight[i];
    if (wsum <= 0.0) break;
    const double ratio = budget / wsum;
    bool clipped = false;
    for (size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      if (ratio * weight[i] >= avail[i]) {
        out[i] = avail[i];
        budget -= avail[i];
        served += avail[i];
        done[i] = 1;
        clipped = true;
      }
    }
    if (!clipped) {
      for (size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        out[i] = ratio * weight[i];
        served += out[i];
      }
      budget = 0.0;
    }
  }
  return served;
}

struct ServeScratch {
  std::vector<int> phase_a;
  std::vector<int> phase_b;
  std::vector<double> weight;
  std::vector<double> avail;
  std::vector<double> out;
};

// Serve one tier on one link. Phase membership is fixed by the pre-tick
// state: phase A drains backlogged queues proportionally to R, phase B passes
// empty-but-flowing queues proportionally to inflow. Updates carried/backlog
// for every incident segment of the tier, returns the served volume.
double serve_tier(const PathSet& ps, LinkDynamicsState& st, int link, int tier,
                  double budget_vol, double dt, double b_max,
                  double& overflow_acc, ServeScratch& sc) {
  auto& backlog = st.backlog[tier];
  auto& arrival = st.arrival[tier];
  auto& carried = st.carried[tier];
  const int s0 = ps.link_seg_first[link];
  const int s1 = ps.link_seg_first[link + 1];

  for (int i = s0; i < s1; ++i) carried[ps.link_seg[i]] = 0.0;

  sc.phase_a.clear();
  sc.phase_b.clear();
  for (int i = s0; i < s1; ++i) {
    const int seg = ps.link_seg[i];
    if (backlog[seg] > 0.0)
      sc.phase_a.push_back(seg);
    else if (arrival[seg] > 0.0)
      sc.phase_b.push_back(seg);
  }

  double served_total = 0.0;
  for (int phase = 0; phase < 2; ++phase) {
    const std::vector<int>& members = phase == 0 ? sc.phase_a : sc.phase_b;
    if (members.empty()) continue;
    sc.weight.clear();
    sc.avail.clear();
    for (int seg : members) {
      if (phase == 0) {
        sc.weight.push_back(backlog[seg]);
        sc.avail.push_back(backlog[seg] + arrival[seg] * dt);
      } else {
        sc.weight.push_back(arrival[seg]);
        sc.avail.push_back(arrival[seg] * dt);
      }
    }
    const double served = waterfill(members, sc.weight, sc.avail, budget_vol, sc.out);
    budget_vol -= served;
    served_total += served;
    for (size_t i = 0; i < members.size(); ++i) {
      const int seg = members[i];
      carried[seg] = sc.out[i] / dt;
      if (sc.out[i] >= sc.avail[i]) {
        backlog[seg] = 0.0;  // queue fully drained this tick
      } else {
        backlog[seg] = sc.avail[i] - sc.out[i];
      }
      if (backlog[seg] > b_max) {
        overflow_acc += backlog[seg] - b_max;
        backlog[seg] = b_max;
      }
    }
  }
  return served_total;
}

}  // namespace

void step_deep(const PathSet& ps, std::span<const double> capacity,
               LinkDynamicsState& st, double dt_s, double b_max_mbit,
               bool parallel) {
  if (dt_s <= 0.0) throw std::invalid_argument("step_deep: dt must be positive");
  const int ns = ps.seg_count();
  const int nl = ps.nlinks;

  // Arrivals: ingress segments take the current injected rate; downstream
  // segments take the upstream departure of the previous tick (one tick of
  // store-and-forward per hop).
  for (int t = 0; t < kTiers; ++t) {
    auto& arr = st.arrival[t];
    const auto& car = st.carried[t];
    const auto& inj = st.injected[t];
#pragma omp parallel for if (parallel) schedule(static)
    for (int seg = 0; seg < ns; ++seg) {
      arr[seg] = ps.seg_pos[seg] == 1 ? inj[ps.seg_path[seg]] : car[seg - 1];
    }
  }

#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < nl; ++e) {
    thread_local ServeScratch sc;
    const double budget = capacity[e] * dt_s;
    // Strict priority: any high-tier backlog at tick start blocks the low tier.
    bool hi_backlogged = false;
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i)
      if (st.backlog[kTierHigh][ps.link_seg[i]] > 0.0) hi_backlogged = true;

    double overflow = 0.0;
    const double hi_served =
        serve_tier(ps, st, e, kTierHigh, budget, dt_s, b_max_mbit, overflow, sc);
    const double lo_budget = hi_backlogged ? 0.0 : budget - hi_served;
    const double lo_served =
        serve_tier(ps, st, e, kTierLow, lo_budget, dt_s, b_max_mbit, overflow, sc);
    st.overflow_by_link_mbit[e] += overflow;
    st.idle_mbps[e] = std::max(capacity[e] - (hi_served + lo_served) / dt_s, 0.0);
  }

  double peak = st.peak_backlog_mbit;
#pragma omp parallel for if (parallel) schedule(static) reduction(max : peak)
  for (int seg = 0; seg < ns; ++seg) {
    st.carried_total[seg] = st.carried[kTierHigh][seg] + st.carried[kTierLow][seg];
    st.backlog_total[seg] = st.backlog[kTierHigh][seg] + st.backlog[kTierLow][seg];
    st.backlog_window_sum[seg] += st.backlog_total[seg];
    peak = std::max(peak, std::max(st.backlog[kTierHigh][seg], st.backlog[kTierLow][seg]));
  }
  st.peak_backlog_mbit = peak;
  ++st.window_ticks;
}

void propagate_shallow(const PathSet& ps, std::span<const double> capacity,
                       LinkDynamicsState& st, bool parallel, int max_sweeps,
                       double tol_mbps) {
  const int ns = ps.seg_count();
  const int nl = ps.nlinks;

  // Pass-through initial iterate.
  std::vector<double> cur(ns), next(ns);
#pragma omp parallel for if (parallel) schedule(static)
  for (int seg = 0; seg < ns; ++seg) cur[seg] = st.injected_total[ps.seg_path[seg]];

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
#pragma omp parallel for if (parallel) schedule(static) reduction(max : delta)
    for (int e = 0; e < nl; ++e) {
      const int s0 = ps.link_seg_first[e];
      const int s1 = ps.link_seg_first[e + 1];
      double demand = 0.0;
      for (int i = s0; i < s1; ++i) {
        const int seg = ps.link_seg[i];
        demand += ps.seg_pos[seg] == 1 ? st.injected_total[ps.seg_path[seg]]
                                       : cur[seg - 1];
      }
      const double f = demand > capacity[e] ? capacity[e] / demand : 1.0;
      for (int i = s0; i < s1; ++i) {
        const int seg = ps.link_seg[i];
        const double inflow = ps.seg_pos[seg] == 1
                                  ? st.injected_total[ps.seg_path[seg]]
                                  : cur[seg - 1];
        next[seg] = inflow * f;
        delta = std::max(delta, std::abs(next[seg] - cur[seg]));
      }
    }
    cur.swap(next);
    if (delta < tol_mbps) break;
  }
  if (sweep >= max_sweeps)
    throw std::runtime_error("propagate_shallow: no fixed point after max sweeps");

  st.carried_total = cur;
#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < nl; ++e) {
    double served = 0.0;
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i)
      served += st.carried_total[ps.link_seg[i]];
    st.idle_mbps[e] = std::max(capacity[e] - served, 0.0);
  }
  for (int t = 0; t < kTiers; ++t)
    std::fill(st.backlog[t].begin(), st.backlog[t].end(), 0.0);
  std::fill(st.backlog_total.begin(), st.backlog_total.end(), 0.0);
}

double queueing_estimate(const PathSet& ps, const LinkDynamicsState& st,
                         int link, double capacity_mbps) {
  double r = 0.0;
  for (int i = ps.link_seg_first[link]; i < ps.link_seg_first[link + 1]; ++i)
    r += st.backlog_total[ps.link_seg[i]];
  return r / capacity_mbps;
}

std::vector<double> queueing_estimates(const PathSet& ps,
                                       std::span<const double> capacity,
                                       const LinkDynamicsState& st,
                                       bool parallel) {
  std::vector<double> q(ps.nlinks);
#pragma omp parallel for if (parallel) schedule(static)
  for (int e = 0; e < ps.nlinks; ++e) q[e] = queueing_estimate(ps, st, e, capacity[e]);
  return q;
}

StateReport make_report(const PathSet& ps, const LinkDynamicsState& st) {
  StateReport rep;
  rep.idle_mbps = st.idle_mbps;
  rep.injected_mbps = st.injected_total;
  rep.carried_mbps = st.carried_total;
  rep.backlog_mbit = st.backlog_total;
  rep.backlog_mean_mbit.resize(ps.seg_count());
  if (st.window_ticks > 0) {
    for (int s = 0; s < ps.seg_count(); ++s)
      rep.backlog_mean_mbit[s] = st.backlog_window_sum[s] / st.window_ticks;
  } else {
    rep.backlog_mean_mbit = st.backlog_total;
  }
  return rep;
}

void reset_window(LinkDynamicsState& st) {
  std::fill(st.backlog_window_sum.begin(), st.backlog_window_sum.end(), 0.0);
  st.window_ticks = 0;
}

}  // namespace amtm
