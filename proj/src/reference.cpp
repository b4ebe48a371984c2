#include "amtm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amtm::reference {

namespace {

int seg_of(const PathSet& ps, int path, int pos) {
  return ps.path_seg_first[path] + pos - 1;
}

struct QueueRef {
  int seg;
  double weight;
  double avail;
  double out = 0.0;
  bool done = false;
};

// Proportional split of budget with per-queue caps, redistributing freed
// budget among the rest.
double split_budget(std::vector<QueueRef>& qs, double budget) {
  double served = 0.0;
  for (;;) {
    double wsum = 0.0;
    for (const auto& q : qs)
      if (!q.done) wsum += q.weight;
    if (wsum <= 0.0 || budget <= 0.0) break;
    bool clipped = false;
    for (auto& q : qs) {
      if (q.done) continue;
      if (budget / wsum * q.weight >= q.avail) {
        q.out = q.avail;
        budget -= q.avail;
        served += q.avail;
        q.done = true;
        clipped = true;
      }
    }
    if (!clipped) {
      for (auto& q : qs) {
        if (q.done) continue;
        q.out = budget / wsum * q.weight;
        served += q.out;
      }
      break;
    }
  }
  return served;
}

}  // namespace

void step_deep(const PathSet& ps, std::span<const double> capacity,
               LinkDynamicsState& st, double dt_s, double b_max_mbit) {
  if (dt_s <= 0.0) throw std::invalid_argument("step_deep: dt must be positive");

  for (int t = 0; t < kTiers; ++t) {
    for (int p = 0; p < ps.path_count(); ++p) {
      for (int s = 1; s <= ps.paths[p].length(); ++s) {
        const int seg = seg_of(ps, p, s);
        st.arrival[t][seg] = s == 1 ? st.injected[t][p] : st.carried[t][seg - 1];
      }
    }
  }

  for (int e = 0; e < ps.nlinks; ++e) {
    // Gather the link's virtual queues by scanning every path position.
    std::vector<int> segs;
    for (int p = 0; p < ps.path_count(); ++p)
      for (int s = 1; s <= ps.paths[p].length(); ++s)
        if (ps.paths[p].links[s - 1] == e) segs.push_back(seg_of(ps, p, s));

    double budget = capacity[e] * dt_s;
    bool hi_backlogged = false;
    for (int seg : segs)
      if (st.backlog[kTierHigh][seg] > 0.0) hi_backlogged = true;

    double served_all = 0.0;
    for (int t = 0; t < kTiers; ++t) {
      double tier_budget = budget - served_all;
      if (t == kTierLow && hi_backlogged) tier_budget = 0.0;
      for (int seg : segs) st.carried[t][seg] = 0.0;

      // Phase membership from the pre-tick state.
      std::vector<QueueRef> phase_a, phase_b;
      for (int seg : segs) {
        const double r = st.backlog[t][seg];
        const double a = st.arrival[t][seg];
        if (r > 0.0)
          phase_a.push_back({seg, r, r + a * dt_s});
        else if (a > 0.0)
          phase_b.push_back({seg, a, a * dt_s});
      }

      for (std::vector<QueueRef>* qs : {&phase_a, &phase_b}) {
        const double served = split_budget(*qs, tier_budget);
        tier_budget -= served;
        served_all += served;
        for (const auto& q : *qs) {
          st.carried[t][q.seg] = q.out / dt_s;
          if (q.out >= q.avail)
            st.backlog[t][q.seg] = 0.0;
          else
            st.backlog[t][q.seg] = q.avail - q.out;
          if (st.backlog[t][q.seg] > b_max_mbit) {
            st.overflow_by_link_mbit[e] += st.backlog[t][q.seg] - b_max_mbit;
            st.backlog[t][q.seg] = b_max_mbit;
          }
        }
      }
    }
    st.idle_mbps[e] = std::max(capacity[e] - served_all / dt_s, 0.0);
  }

  for (int seg = 0; seg < ps.seg_count(); ++seg) {
    st.carried_total[seg] = st.carried[kTierHigh][seg] + st.carried[kTierLow][seg];
    st.backlog_total[seg] = st.backlog[kTierHigh][seg] + st.backlog[kTierLow][seg];
    st.backlog_window_sum[seg] += st.backlog_total[seg];
    st.peak_backlog_mbit =
        std::max(st.peak_backlog_mbit,
                 std::max(st.backlog[kTierHigh][seg], st.backlog[kTierLow][seg]));
  }
  ++st.window_ticks;
}

void propagate_shallow(const PathSet& ps, std::span<const double> capacity,
                       LinkDynamicsState& st, int max_sweeps, double tol_mbps) {
  const int ns = ps.seg_count();
  std::vector<double> cur(ns), next(ns);
  for (int seg = 0; seg < ns; ++seg) cur[seg] = st.injected_total[ps.seg_path[seg]];

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int e = 0; e < ps.nlinks; ++e) {
      double demand = 0.0;
      for (int p = 0; p < ps.path_count(); ++p)
        for (int s = 1; s <= ps.paths[p].length(); ++s)
          if (ps.paths[p].links[s - 1] == e)
            demand += s == 1 ? st.injected_total[p] : cur[seg_of(ps, p, s) - 1];
      const double f = demand > capacity[e] ? capacity[e] / demand : 1.0;
      for (int p = 0; p < ps.path_count(); ++p)
        for (int s = 1; s <= ps.paths[p].length(); ++s)
          if (ps.paths[p].links[s - 1] == e) {
            const int seg = seg_of(ps, p, s);
            const double inflow = s == 1 ? st.injected_total[p] : cur[seg - 1];
            next[seg] = inflow * f;
            delta = std::max(delta, std::abs(next[seg] - cur[seg]));
          }
    }
    cur.swap(next);
    if (delta < tol_mbps) break;
  }
  if (sweep >= max_sweeps)
    throw std::runtime_error("reference propagate_shallow: no fixed point");

  st.carried_total = cur;
  for (int e = 0; e < ps.nlinks; ++e) {
    double served = 0.0;
    for (int p = 0; p < ps.path_count(); ++p)
      for (int s = 1; s <= ps.paths[p].length(); ++s)
        if (ps.paths[p].links[s - 1] == e) served += cur[seg_of(ps, p, s)];
    st.idle_mbps[e] = std::max(capacity[e] - served, 0.0);
  }
  for (int t = 0; t < kTiers; ++t)
    std::fill(st.backlog[t].begin(), st.backlog[t].end(), 0.0);
  std::fill(st.backlog_total.begin(), st.backlog_total.end(), 0.0);
}

std::vector<double> queueing_estimates(const PathSet& ps,
                                       std::span<const double> capacity,
                                       const LinkDynamicsState& st) {
  std::vector<double> q(ps.nlinks, 0.0);
  for (int e = 0; e < ps.nlinks; ++e) {
    double r = 0.0;
    for (int p = 0; p < ps.path_count(); ++p)
      for (int s = 1; s <= ps.paths[p].length(); ++s)
        if (ps.paths[p].links[s - 1] == e) r += st.backlog_total[seg_of(ps, p, s)];
    q[e] = r / capacity[e];
  }
  return q;
}

std::vector<double> nipu_shallow_delta(const StateReport& report, const PathSet& ps,
                                       double mu) {
  std::vector<double> delta(ps.nlinks, 0.0);
  for (int e = 0; e < ps.nlinks; ++e) {
    double overload = 0.0;
    for (int p = 0; p < ps.path_count(); ++p) {
      for (int s = 1; s <= ps.paths[p].length(); ++s) {
        if (ps.paths[p].links[s - 1] != e) continue;
        // O^s = sum_{k<=s} d^k with d^k = r^{k-1} - r^k.
        double o = 0.0;
        for (int k = 1; k <= s; ++k) {
          const double up = k == 1 ? report.injected_mbps[p]
                                   : report.carried_mbps[seg_of(ps, p, k - 1)];
          o += up - report.carried_mbps[seg_of(ps, p, k)];
        }
        overload += o;
      }
    }
    delta[e] = mu * (overload - report.idle_mbps[e]);
  }
  return delta;
}

std::vector<double> deep_backlog_term(const StateReport& report, const PathSet& ps) {
  std::vector<double> term(ps.nlinks, 0.0);
  for (int e = 0; e < ps.nlinks; ++e) {
    double t = 0.0;
    for (int p = 0; p < ps.path_count(); ++p)
      for (int s = 1; s <= ps.paths[p].length(); ++s)
        if (ps.paths[p].links[s - 1] == e)
          for (int k = 1; k <= s; ++k) t += report.backlog_mbit[seg_of(ps, p, k)];
    term[e] = t;
  }
  return term;
}

}  // namespace amtm::reference
