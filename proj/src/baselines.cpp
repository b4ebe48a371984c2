#include "amtm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace amtm {

namespace {

struct FlowView {
  const Flow* flow;
  std::vector<int> cands;  // candidate path ids
};

std::vector<FlowView> make_views(const std::vector<Flow>& flows, const PathSet& ps,
                                 bool restrict_to_chosen) {
  std::vector<FlowView> v;
  v.reserve(flows.size());
  for (const Flow& f : flows) {
    FlowView fv{&f, {}};
    if (restrict_to_chosen && !f.path_ids.empty()) {
      fv.cands = f.path_ids;
    } else {
      const auto [first, count] = ps.candidates(f.src, f.dst);
      fv.cands.resize(count);
      std::iota(fv.cands.begin(), fv.cands.end(), first);
    }
    v.push_back(std::move(fv));
  }
  return v;
}

NumSolution solve_reduced(const std::vector<Flow>& flows, const PathSet& ps,
                          std::span<const double> capacity,
                          const std::vector<std::uint8_t>& exhausted,
                          const SolveOptions& opt) {
  if (flows.empty()) throw std::invalid_argument("solve_num: empty flow set");
  const int nl = ps.nlinks;
  const int nf = static_cast<int>(flows.size());
  const bool par = opt.parallel;

  const std::vector<FlowView> views = make_views(flows, ps, opt.restrict_to_chosen);

  std::vector<double> lambda(nl, 0.0);
  if (!opt.warm_lambda.empty()) lambda = opt.warm_lambda;
  for (int e = 0; e < nl; ++e)
    if (exhausted[e]) lambda[e] = opt.price_ceiling;

  std::vector<int> chosen(nf, -1);
  std::vector<double> x(nf, 0.0);
  std::vector<double> phi(nf, 0.0);
  std::vector<double> load(nl, 0.0);
  std::vector<double> path_rate(ps.path_count(), 0.0);

  // Fills `out_load` from a per-flow multi-path allocation.
  auto loads_of = [&](const std::vector<std::vector<double>>& alloc,
                      std::vector<double>& out_load) {
    std::fill(path_rate.begin(), path_rate.end(), 0.0);
    for (int j = 0; j < nf; ++j)
      for (size_t c = 0; c < views[j].cands.size(); ++c)
        path_rate[views[j].cands[c]] += alloc[j][c];
#pragma omp parallel for if (par) schedule(static)
    for (int e = 0; e < nl; ++e) {
      double l = 0.0;
      for (int i = ps.link_path_first[e]; i < ps.link_path_first[e + 1]; ++i)
        l += path_rate[ps.link_path[i]];
      out_load[e] = l;
    }
  };

  // Feasibility scaling: every flow is shrunk by the worst overload factor on
  // any path it uses. Returns the scaled utility, scales `alloc` in place.
  auto scale_feasible = [&](std::vector<std::vector<double>>& alloc,
                            const std::vector<double>& lds) {
    double u = 0.0;
    for (int j = 0; j < nf; ++j) {
      double total = 0.0;
      double worst = 1.0;
      for (size_t c = 0; c < views[j].cands.size(); ++c) {
        if (alloc[j][c] <= 0.0) continue;
        total += alloc[j][c];
        for (int e : ps.paths[views[j].cands[c]].links) {
          if (capacity[e] > 0.0)
            worst = std::max(worst, lds[e] / capacity[e]);
          else
            worst = std::numeric_limits<double>::infinity();
        }
      }
      if (total <= 0.0) continue;
      if (!std::isfinite(worst)) {
        for (auto& v : alloc[j]) v = 0.0;
        continue;
      }
      for (auto& v : alloc[j]) v /= worst;
      u += utility_value(views[j].flow->util, total / worst);
    }
    return u;
  };

  std::vector<std::vector<double>> xsum(nf), scratch(nf);
  for (int j = 0; j < nf; ++j) {
    xsum[j].assign(views[j].cands.size(), 0.0);
    scratch[j].assign(views[j].cands.size(), 0.0);
  }
  int avg_iters = 0;

  double best_dual = std::numeric_limits<double>::infinity();
  std::vector<double> best_lambda = lambda;
  double best_primal = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_alloc = scratch;

  std::vector<double> tmp_load(nl, 0.0);
  double step_scale = 1.0;
  int stalls = 0;
  int it = 0;
  bool converged = false;

  for (it = 0; it < opt.max_iters; ++it) {
#pragma omp parallel for if (par) schedule(static)
    for (int j = 0; j < nf; ++j) {
      const FlowView& fv = views[j];
      double pmin = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (size_t c = 0; c < fv.cands.size(); ++c) {
        const double price = ps.path_sum(fv.cands[c], lambda);
        if (price < pmin) {
          pmin = price;
          arg = static_cast<int>(c);
        }
      }
      std::fill(scratch[j].begin(), scratch[j].end(), 0.0);
      if (arg < 0) {
        chosen[j] = -1;
        x[j] = 0.0;
        phi[j] = 0.0;
        continue;
      }
      chosen[j] = fv.cands[arg];
      x[j] = optimal_rate(fv.flow->util, pmin, fv.flow->peak_mbps);
      phi[j] = utility_value(fv.flow->util, x[j]) - pmin * x[j];
      scratch[j][arg] = x[j];
      xsum[j][arg] += x[j];
    }
    ++avg_iters;

    loads_of(scratch, load);

    double dual = 0.0;
    for (int j = 0; j < nf; ++j) dual += phi[j];
    for (int e = 0; e < nl; ++e) dual += lambda[e] * capacity[e];

    auto restart_average = [&] {
      for (int j = 0; j < nf; ++j)
        std::fill(xsum[j].begin(), xsum[j].end(), 0.0);
      avg_iters = 0;
    };

    if (!std::isfinite(best_dual) ||
        dual < best_dual - 1e-12 * std::abs(best_dual)) {
      best_dual = dual;
      best_lambda = lambda;
      stalls = 0;
    } else if (++stalls >= 30) {
      step_scale *= 0.5;
      stalls = 0;
      restart_average();
    }
    // Periodic window restarts: the late windows average the concentrated
    // iterates and close the primal gap on tie-oscillating instances.
    if (it >= 256 && (it & (it - 1)) == 0) restart_average();

    // Feasible primal from the instantaneous allocation.
    {
      std::vector<std::vector<double>> inst = scratch;
      const double u = scale_feasible(inst, load);
      if (u > best_primal) {
        best_primal = u;
        best_alloc = std::move(inst);
      }
    }
    // Periodically try the ergodic average, which converges where the
    // instantaneous iterate oscillates between equal-price paths.
    if ((it + 1) % 50 == 0 && avg_iters > 0) {
      std::vector<std::vector<double>> avg(nf);
      for (int j = 0; j < nf; ++j) {
        avg[j].resize(xsum[j].size());
        for (size_t c = 0; c < xsum[j].size(); ++c) avg[j][c] = xsum[j][c] / avg_iters;
      }
      loads_of(avg, tmp_load);
      const double u = scale_feasible(avg, tmp_load);
      if (u > best_primal) {
        best_primal = u;
        best_alloc = std::move(avg);
      }
    }

    const double gap = best_dual - best_primal;
    const bool gap_ok = std::isfinite(best_primal) && best_primal != 0.0 &&
                        gap <= opt.tol_rel * std::abs(best_primal);

    // Diminishing base step so the projected iteration contracts; the stall
    // halvings only accelerate it.
    const double step =
        opt.initial_step * step_scale / (1.0 + static_cast<double>(it) / 200.0);
    double move = 0.0;
    for (int e = 0; e < nl; ++e) {
      if (exhausted[e]) continue;  // pinned at the ceiling
      const double cap = std::max(capacity[e], 1e-9);
      const double next = std::max(0.0, lambda[e] + step * (load[e] - capacity[e]) / cap);
      move = std::max(move, std::abs(next - lambda[e]));
      lambda[e] = next;
    }

    if (gap_ok && (opt.lambda_tol <= 0.0 || move < opt.lambda_tol)) {
      converged = true;
      ++it;
      break;
    }
    if (step < 1e-14) {
      converged = gap_ok;
      ++it;
      break;
    }
  }

  NumSolution sol;
  // Converged runs report the settled iterate; aborted runs report the best
  // dual iterate seen.
  sol.lambda = converged ? lambda : best_lambda;
  sol.dual = best_dual;
  sol.utility = best_primal;
  sol.gap = best_dual - best_primal;
  sol.iterations = it;
  sol.converged = converged;
  sol.capacity_exhausted = exhausted;
  sol.paths.resize(nf);
  sol.rates.resize(nf);
  sol.flow_rate.assign(nf, 0.0);
  for (int j = 0; j < nf; ++j) {
    for (size_t c = 0; c < views[j].cands.size(); ++c) {
      if (best_alloc[j][c] > 1e-12) {
        sol.paths[j].push_back(views[j].cands[c]);
        sol.rates[j].push_back(best_alloc[j][c]);
        sol.flow_rate[j] += best_alloc[j][c];
      }
    }
  }
  return sol;
}

}  // namespace

NumSolution solve_num(const std::vector<Flow>& flows, const PathSet& ps,
                      std::span<const double> capacity, const SolveOptions& opt) {
  std::vector<std::uint8_t> exhausted(ps.nlinks, 0);
  return solve_reduced(flows, ps, capacity, exhausted, opt);
}

NumSolution solve_num_with_backlog(const std::vector<Flow>& flows, const PathSet& ps,
                                   std::span<const double> capacity,
                                   std::span<const double> backlog_mbit,
                                   double n_gain, const SolveOptions& opt) {
  if (n_gain < 0.0) throw std::invalid_argument("solve_num_with_backlog: n must be nonnegative");
  const std::vector<double> pref = backlog_prefix_sums(ps, backlog_mbit, opt.parallel);
  std::vector<double> cap(capacity.begin(), capacity.end());
  std::vector<std::uint8_t> exhausted(ps.nlinks, 0);
  for (int e = 0; e < ps.nlinks; ++e) {
    double burden = 0.0;
    for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i)
      burden += pref[ps.link_seg[i]];
    cap[e] = capacity[e] - n_gain * burden;
    if (cap[e] <= 0.0) {
      cap[e] = 0.0;
      exhausted[e] = 1;
    }
  }
  NumSolution sol = solve_reduced(flows, ps, cap, exhausted, opt);
  return sol;
}

CentralizedOutcome centralized_period(std::vector<Flow>& flows, const PathSet& ps,
                                      std::span<const double> capacity,
                                      const SolveOptions& opt) {
  CentralizedOutcome out;
  out.messages = 2 * static_cast<long>(flows.size());
  if (flows.empty()) return out;
  out.solution = solve_num(flows, ps, capacity, opt);
  for (size_t j = 0; j < flows.size(); ++j) {
    flows[j].path_ids = out.solution.paths[j];
    flows[j].rates_mbps = out.solution.rates[j];
  }
  return out;
}

SemiAllocation semi_centralized_period(std::span<const double> demand_mbps,
                                       const PathSet& ps,
                                       std::span<const double> capacity,
                                       const std::vector<TrafficClass>& classes) {
  const int ncls = static_cast<int>(classes.size());
  const int npairs = ps.nodes * ps.nodes;
  SemiAllocation alloc;
  alloc.budgets.resize(static_cast<size_t>(npairs) * ncls);

  std::vector<double> residual(capacity.begin(), capacity.end());

  std::vector<char> reporting(npairs, 0);
  for (int pair = 0; pair < npairs; ++pair)
    for (int c = 0; c < ncls; ++c)
      if (demand_mbps[static_cast<size_t>(pair) * ncls + c] > 0.0) reporting[pair] = 1;
  for (int pair = 0; pair < npairs; ++pair) alloc.groups_reporting += reporting[pair];
  alloc.messages = 2L * alloc.groups_reporting;

  // Classes in descending weight order: higher-weighted classes are served
  // first out of the shared residual capacity.
  std::vector<int> order(ncls);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return classes[a].weight > classes[b].weight; });

  for (int c : order) {
    for (int pair = 0; pair < npairs; ++pair) {
      const double demand = demand_mbps[static_cast<size_t>(pair) * ncls + c];
      if (demand <= 0.0) continue;
      const int src = pair / ps.nodes;
      const int dst = pair % ps.nodes;
      const auto [first, count] = ps.candidates(src, dst);
      if (count == 0) continue;
      auto& slot = alloc.budgets[static_cast<size_t>(pair) * ncls + c];

      if (classes[c].qos == QosKind::delay_sensitive) {
        // Pinned to the shortest candidate path.
        double avail = std::numeric_limits<double>::infinity();
        for (int e : ps.paths[first].links) avail = std::min(avail, residual[e]);
        const double grant = std::min(demand, std::max(avail, 0.0));
        if (grant > 0.0) {
          slot.push_back({first, grant});
          for (int e : ps.paths[first].links) residual[e] -= grant;
        }
      } else {
        // Spread over candidate paths proportionally to residual capacity.
        // Shares come from a residual snapshot; grants are clipped against the
        // live residual since candidate paths can share links.
        std::vector<double> path_resid(count);
        double total = 0.0;
        for (int i = 0; i < count; ++i) {
          double avail = std::numeric_limits<double>::infinity();
          for (int e : ps.paths[first + i].links) avail = std::min(avail, residual[e]);
          path_resid[i] = std::max(avail, 0.0);
          total += path_resid[i];
        }
        if (total <= 0.0) continue;
        for (int i = 0; i < count; ++i) {
          if (path_resid[i] <= 0.0) continue;
          const double share = demand * path_resid[i] / total;
          double avail = std::numeric_limits<double>::infinity();
          for (int e : ps.paths[first + i].links) avail = std::min(avail, residual[e]);
          const double grant = std::min(share, std::max(avail, 0.0));
          if (grant <= 0.0) continue;
          slot.push_back({first + i, grant});
          for (int e : ps.paths[first + i].links) residual[e] -= grant;
        }
      }
    }
  }
  return alloc;
}

}  // namespace amtm
