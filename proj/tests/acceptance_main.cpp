// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line with the measured quantities.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <vector>

#include "amtm/baselines.hpp"
#include "amtm/engine.hpp"
#include "amtm/experiments.hpp"
#include "amtm/metrics.hpp"
#include "amtm/pricing.hpp"
#include "amtm/reference.hpp"
#include "amtm/run_config.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace amtm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  void require(bool ok) { pass = pass && ok; }
};

void report(int criterion, const Verdict& v, const std::string& detail) {
  std::printf("ACCEPTANCE %d %s: %s\n", criterion, v.pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[768];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

}  // namespace

TEST_CASE("criterion_1 state-based shallow update equals flow-based update") {
  const auto t0 = Clock::now();
  testutil::Rng rng(101);
  double worst = 0.0;
  int instances = 0;
  while (instances < 100) {
    const int hops = 1 + rng.uniform_int(3);  // 1..3 links
    std::vector<testutil::EdgeSpec> edges;
    for (int i = 0; i < hops; ++i)
      edges.push_back({i, i + 1, rng.uniform(5.0, 30.0), 1.0, true});
    const Network net = testutil::make_network(hops + 1, edges);
    const PathSet ps = build_pathset(net, 1);

    std::vector<Flow> flows;
    const int nf = 1 + rng.uniform_int(5);
    for (int j = 0; j < nf && static_cast<int>(flows.size()) < 5; ++j) {
      int a = rng.uniform_int(hops + 1), b = rng.uniform_int(hops + 1);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      Flow f = testutil::make_flow(j, a, b, rng.uniform(0.5, 3.0), 0.5,
                                   rng.uniform(5.0, 40.0));
      const auto [first, count] = ps.candidates(a, b);
      if (count == 0) continue;
      f.path_ids = {first};
      f.rates_mbps = {optimal_rate(f.util, rng.uniform(0.0, 0.5), f.peak_mbps)};
      flows.push_back(std::move(f));
    }
    if (flows.empty()) continue;
    ++instances;

    LinkDynamicsState st;
    st.init(ps);
    for (const Flow& f : flows)
      st.add_injected(f.path_ids[0], kTierLow, f.rates_mbps[0]);
    propagate_shallow(ps, net.capacities_mbps(), st, false);
    const StateReport rep = make_report(ps, st);

    const double mu = rng.uniform(0.01, 0.2);
    std::vector<double> p_state(ps.nlinks, rng.uniform(0.0, 2.0));
    std::vector<double> p_flow = p_state;
    nipu_shallow(p_state, rep, ps, mu, false);
    nipu_flow_based(p_flow, flows, ps, net.capacities_mbps(), mu, false);
    for (int e = 0; e < ps.nlinks; ++e)
      worst = std::max(worst, std::abs(p_state[e] - p_flow[e]));
  }
  const double elapsed = seconds_since(t0);

  Verdict v;
  v.require(worst < 1e-9);
  v.require(elapsed < 10.0);
  CHECK(v.pass);
  report(1, v,
         fmt("max |delta| = %.3e over 100 instances (tol 1e-9), %.2f s", worst, elapsed));
}

TEST_CASE("criterion_2 centralized solver reproduces the hand KKT point") {
  const auto t0 = Clock::now();
  const Network net = testutil::make_network(2, {{0, 1, 10.0, 1.0, true}});
  const PathSet ps = build_pathset(net, 1);
  std::vector<Flow> flows{testutil::make_flow(0, 0, 1, 3.0, 0.5, 100.0),
                          testutil::make_flow(1, 0, 1, 1.0, 0.5, 100.0)};
  SolveOptions opt;
  opt.lambda_tol = 1e-7;
  const NumSolution sol = solve_num(flows, ps, net.capacities_mbps(), opt);
  const double elapsed = seconds_since(t0);

  Verdict v;
  v.require(std::abs(sol.flow_rate[0] - 9.0) < 1e-3);
  v.require(std::abs(sol.flow_rate[1] - 1.0) < 1e-3);
  v.require(std::abs(sol.lambda[0] - 1.0) < 1e-3);
  v.require(std::abs(sol.utility - 20.0) < 1e-3);
  v.require(elapsed < 1.0);
  CHECK(v.pass);
  report(2, v,
         fmt("x = (%.4f, %.4f), lambda = %.4f, U = %.4f, %.3f s", sol.flow_rate[0],
             sol.flow_rate[1], sol.lambda[0], sol.utility, elapsed));
}

TEST_CASE("criterion_3 stationary convergence to the centralized optimum") {
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.network = make_sample_topology(100.0, 0.2);
  cfg.k_paths = 5;
  cfg.preload_flows = 3000;
  cfg.arrival_rate_per_s = 0.0;
  cfg.duration_s = 40.0;
  cfg.tick_s = 0.01;
  cfg.te_period_s = 10.0;
  cfg.price.nipu_interval_s = 0.02;
  cfg.price.mu = 6e-4;
  cfg.price.adaptive_n = false;
  cfg.price.n_gain = 1e-3;
  cfg.seed = 3;
  cfg.parallel = true;

  std::vector<Flow> admitted;
  EngineHooks hooks;
  hooks.after_nipu = [&](const NipuEvent& ev) {
    if (admitted.empty()) admitted = *ev.active;
  };
  const SimReport rep = run(cfg, &hooks);

  SolveOptions opt;
  opt.restrict_to_chosen = true;
  opt.lambda_tol = 1e-6;
  opt.max_iters = 50000;
  const PathSet ps = build_pathset(cfg.network, cfg.k_paths);
  const NumSolution sol = solve_num(admitted, ps, cfg.network.capacities_mbps(), opt);

  const auto& lam = rep.nipu.back().lambda;
  double num = 0.0, den = 0.0;
  for (size_t e = 0; e < lam.size(); ++e) {
    num += (lam[e] - sol.lambda[e]) * (lam[e] - sol.lambda[e]);
    den += sol.lambda[e] * sol.lambda[e];
  }
  const double rel_err = std::sqrt(num / den);
  double max_link_backlog = 0.0;
  for (double r : rep.nipu.back().backlog_per_link_mbit)
    max_link_backlog = std::max(max_link_backlog, r);
  const double elapsed = seconds_since(t0);

  Verdict v;
  v.require(static_cast<int>(admitted.size()) >= 500);
  v.require(sol.converged);
  v.require(rel_err < 0.01);
  v.require(max_link_backlog < 0.1);
  v.require(elapsed < 120.0);
  CHECK(v.pass);
  report(3, v,
         fmt("flows = %zu, |lambda - lambda*|/|lambda*| = %.4f (tol 0.01), max link "
             "backlog = %.4f Mbit (tol 0.1), %.1f s",
             admitted.size(), rel_err, max_link_backlog, elapsed));
}

TEST_CASE("criterion_4 dynamic balance at 30 flows per second") {
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.network = make_sample_topology(800.0, 0.2);
  cfg.k_paths = 5;
  cfg.arrival_rate_per_s = 30.0;
  // Long enough that the flow population (durations up to 600 s) is
  // stationary over the whole second half.
  cfg.duration_s = 1200.0;
  cfg.tick_s = 0.01;
  cfg.te_period_s = 10.0;
  cfg.price.nipu_interval_s = 0.02;
  cfg.price.mu = 6e-4;
  cfg.price.adaptive_n = false;
  cfg.price.n_gain = 1e-3;
  cfg.b_max_mbit = 100.0;
  cfg.seed = 4;
  cfg.parallel = true;

  const SimReport rep = run(cfg);

  // Total backlog trace over the second half of the run.
  std::vector<double> t, y;
  for (const auto& s : rep.nipu) {
    if (s.t < 0.5 * cfg.duration_s) continue;
    double total = 0.0;
    for (double r : s.backlog_per_link_mbit) total += r;
    t.push_back(s.t);
    y.push_back(total);
  }
  const Regression trend = block_trend(t, y, 20);
  const bool flat = std::abs(trend.slope) <= 3.0 * trend.slope_stderr;
  const double elapsed = seconds_since(t0);

  Verdict v;
  v.require(rep.peak_queue_backlog_mbit < cfg.b_max_mbit);
  v.require(flat);
  v.require(elapsed < 300.0);
  CHECK(v.pass);
  report(4, v,
         fmt("peak queue = %.2f Mbit (bound %.0f), slope = %.3e +- %.3e Mbit/s "
             "(|slope| <= 3 sigma: %s), %.1f s",
             rep.peak_queue_backlog_mbit, cfg.b_max_mbit, trend.slope,
             trend.slope_stderr, flat ? "yes" : "no", elapsed));
}

TEST_CASE("criterion_5 queueing/utility tradeoff in n and the adaptive threshold") {
  const auto t0 = Clock::now();
  RunConfig rc;
  rc.capacity_mbps = 250.0;
  rc.capacity_jitter = 0.2;
  rc.k_paths = 5;
  rc.arrival_rate_per_s = 50.0;
  rc.duration_s = 300.0;
  rc.warmup_s = 60.0;
  rc.tick_s = 0.01;
  // Slow control plane: the queueing the n term regulates builds up from the
  // churn between price updates.
  rc.nipu_interval_s = 2.0;
  rc.te_period_s = 10.0;
  rc.mu = 5e-4;
  rc.n0 = 1e-4;
  rc.epsilon = 2e-5;
  rc.w_star_s = 0.2;
  rc.b_max_mbit = 2000.0;
  rc.seed = 5;
  rc.n_grid = {2e-5, 6.3e-5, 2e-4, 6.3e-4, 2e-3};

  const NSweepResult res = cmd_n_sweep(rc, false);
  const double elapsed = seconds_since(t0);

  const double w_lo = 0.5 * rc.w_star_s, w_hi = 1.5 * rc.w_star_s;
  Verdict v;
  v.require(res.delay_inversions <= 1);
  v.require(res.utility_inversions <= 1);
  v.require(res.adaptive_terminal_w_bar_s >= w_lo);
  v.require(res.adaptive_terminal_w_bar_s <= w_hi);
  v.require(elapsed < 600.0);
  CHECK(v.pass);
  std::string grid;
  for (size_t i = 0; i < res.n_values.size(); ++i)
    grid += fmt("(n=%.2g: W=%.3fs U=%.0f) ", res.n_values[i], res.mean_delay_s[i],
                res.total_utility[i]);
  report(5, v,
         fmt("%sdelay inversions = %d, utility inversions = %d, adaptive W = %.3f s "
             "(band [%.2f, %.2f]), %.1f s",
             grid.c_str(), res.delay_inversions, res.utility_inversions,
             res.adaptive_terminal_w_bar_s, w_lo, w_hi, elapsed));
}

namespace {

RunConfig compare_config() {
  RunConfig rc;
  rc.capacity_mbps = 250.0;
  rc.capacity_jitter = 0.2;
  rc.k_paths = 5;
  rc.duration_s = 150.0;
  rc.warmup_s = 10.0;
  rc.tick_s = 0.01;
  rc.nipu_interval_s = 0.1;
  rc.te_period_s = 5.0;
  rc.mu = 5e-4;
  rc.n0 = 1e-3;
  rc.adaptive_n = false;
  rc.b_max_mbit = 100.0;
  rc.seed = 6;
  rc.intensity_grid = {10.0, 20.0, 50.0, 100.0};
  rc.solver_tol_rel = 1e-4;
  rc.solver_max_iters = 6000;
  return rc;
}

const CompareResult& shared_compare() {
  static const CompareResult res = cmd_compare(compare_config(), false);
  return res;
}

}  // namespace

TEST_CASE("criterion_6 per-period utility ordering across schemes") {
  const auto t0 = Clock::now();
  const RunConfig rc = compare_config();
  const CompareResult& res = shared_compare();
  const double elapsed = seconds_since(t0);

  Verdict v;
  std::string detail;
  for (double inten : rc.intensity_grid) {
    const double uc = res.row(inten, Scheme::centralized).utility_total;
    const double ua = res.row(inten, Scheme::amtm).utility_total;
    const double us = res.row(inten, Scheme::semi_centralized).utility_total;
    v.require(uc >= ua);
    v.require(ua >= us);
    detail += fmt("[%g/s: C=%.0f A=%.0f S=%.0f] ", inten, uc, ua, us);
  }
  const double top = rc.intensity_grid.back();
  const double uc = res.row(top, Scheme::centralized).utility_total;
  const double ua = res.row(top, Scheme::amtm).utility_total;
  const double us = res.row(top, Scheme::semi_centralized).utility_total;
  v.require(ua >= 1.05 * us);
  v.require(ua >= 0.85 * uc);
  v.require(elapsed < 600.0);
  CHECK(v.pass);
  report(6, v,
         fmt("%stop intensity: amtm/semi = %.3f (>= 1.05), amtm/centralized = %.3f "
             "(>= 0.85), %.1f s",
             detail.c_str(), ua / us, ua / uc, elapsed));
}

TEST_CASE("criterion_7 sensitive-flow queueing beats the centralized admission wait") {
  const RunConfig rc = compare_config();
  const CompareResult& res = shared_compare();
  const double top = rc.intensity_grid.back();
  const double amtm_delay = res.row(top, Scheme::amtm).delay_mean_sensitive_s;
  const double cent_wait = res.row(top, Scheme::centralized).admission_wait_mean_s;

  Verdict v;
  v.require(amtm_delay < cent_wait);
  v.require(cent_wait > 0.475 * rc.te_period_s);
  v.require(cent_wait < 0.525 * rc.te_period_s);
  CHECK(v.pass);
  report(7, v,
         fmt("amtm sensitive queueing = %.4f s < centralized wait = %.3f s; wait/period "
             "= %.3f (0.5 +- 5%%)",
             amtm_delay, cent_wait, cent_wait / rc.te_period_s));
}

TEST_CASE("criterion_8 control-message scale: constant for amtm, linear for centralized") {
  const RunConfig rc = compare_config();
  const CompareResult& res = shared_compare();

  Verdict v;
  // amtm: per NIPU round, #nodes + #links, independent of intensity.
  const long expect = 25 + 110;
  double amtm_min = 1e18, amtm_max = -1e18;
  for (double inten : rc.intensity_grid) {
    const double m = res.row(inten, Scheme::amtm).messages_per_round;
    amtm_min = std::min(amtm_min, m);
    amtm_max = std::max(amtm_max, m);
    v.require(m == static_cast<double>(expect));
  }
  v.require(amtm_min == amtm_max);  // constant across the 10x sweep

  // centralized: per-period messages regress linearly on the flows solved.
  std::vector<double> x, y;
  for (double inten : rc.intensity_grid) {
    SimConfig ci = to_sim_config(rc);
    ci.arrival_rate_per_s = inten;
    ci.scheme = Scheme::centralized;
    const SimReport rep = replay_flow_trace(ci, make_trace(ci));
    for (const auto& p : rep.periods) {
      if (p.t0 < rc.warmup_s) continue;
      x.push_back(p.boundary_flows);
      y.push_back(static_cast<double>(p.messages));
    }
  }
  const Regression fit = linear_fit(x, y);
  v.require(fit.r2 > 0.95);
  CHECK(v.pass);
  report(8, v,
         fmt("amtm messages/round = %.0f (expected %ld, flat across 10x), centralized "
             "R^2 = %.4f slope = %.3f",
             amtm_max, expect, fit.r2, fit.slope));
}

TEST_CASE("criterion_9 randomized property suites") {
  testutil::Rng rng(901);
  Verdict v;
  int cases = 0;

  // Closed-form admitted rate vs numeric maximizer, 1000 draws at 1e-6.
  {
    bool ok = true;
    for (int i = 0; i < 1000; ++i, ++cases) {
      const UtilityFunction u{rng.uniform(0.5, 4.0), rng.uniform(0.15, 0.9)};
      const double lam = rng.uniform(0.02, 3.0);
      const double cap = rng.uniform(5.0, 200.0);
      const double got = optimal_rate(u, lam, cap);
      const double ref = testutil::golden_max(
          [&](double xx) { return utility_value(u, xx) - lam * xx; }, 0.0, cap);
      if (std::abs(got - ref) > 1e-6 * std::max(1.0, std::abs(ref))) ok = false;
    }
    v.require(ok);
  }

  // Price nonnegativity under randomized deep updates.
  {
    const Network net = make_sample_topology(50.0, 0.2);
    const PathSet ps = build_pathset(net, 2);
    PriceUpdateConfig cfg;
    cfg.mu = 0.05;
    cfg.n_gain = 1e-3;
    cfg.adaptive_n = true;
    std::vector<double> prices(ps.nlinks, 0.0);
    bool ok = true;
    StateReport rep;
    rep.idle_mbps.assign(ps.nlinks, 0.0);
    rep.injected_mbps.assign(ps.path_count(), 0.0);
    rep.carried_mbps.assign(ps.seg_count(), 0.0);
    rep.backlog_mbit.assign(ps.seg_count(), 0.0);
    for (int i = 0; i < 1000; ++i, ++cases) {
      for (int e = 0; e < ps.nlinks; ++e) rep.idle_mbps[e] = rng.uniform(0.0, 50.0);
      for (int p = 0; p < ps.path_count(); ++p)
        rep.injected_mbps[p] = rng.uniform() < 0.2 ? rng.uniform(0.0, 20.0) : 0.0;
      for (int s = 0; s < ps.seg_count(); ++s) {
        rep.carried_mbps[s] = rng.uniform(0.0, rep.injected_mbps[ps.seg_path[s]]);
        rep.backlog_mbit[s] = rng.uniform() < 0.2 ? rng.uniform(0.0, 5.0) : 0.0;
      }
      rep.backlog_mean_mbit = rep.backlog_mbit;
      nipu_deep(prices, rep, ps, net.capacities_mbps(), cfg, false);
      for (double pr : prices)
        if (pr < 0.0) ok = false;
    }
    v.require(ok);
  }

  // Capacity non-violation and per-queue volume conservation over random ticks.
  {
    const Network net = make_sample_topology(80.0, 0.2);
    const PathSet ps = build_pathset(net, 3);
    const auto cap = net.capacities_mbps();
    LinkDynamicsState st;
    st.init(ps);
    bool ok = true;
    const double dt = 0.02;
    LinkDynamicsState prev = st;
    for (int tick = 0; tick < 1000; ++tick, ++cases) {
      if (tick % 25 == 0) {
        st.clear_injected();
        for (int p = 0; p < ps.path_count(); ++p) {
          if (rng.uniform() < 0.1) st.add_injected(p, kTierHigh, rng.uniform(0.0, 6.0));
          if (rng.uniform() < 0.15) st.add_injected(p, kTierLow, rng.uniform(0.0, 40.0));
        }
      }
      prev = st;
      step_deep(ps, cap, st, dt, 50.0, false);
      for (int e = 0; e < ps.nlinks; ++e) {
        double served = 0.0;
        for (int i = ps.link_seg_first[e]; i < ps.link_seg_first[e + 1]; ++i)
          served += st.carried_total[ps.link_seg[i]];
        if (served > cap[e] + 1e-9) ok = false;
      }
      const double overflow_tick =
          st.total_overflow_mbit() - prev.total_overflow_mbit();
      for (int t = 0; t < kTiers && ok; ++t)
        for (int seg = 0; seg < ps.seg_count(); ++seg) {
          // Balance up to the (separately counted) buffer-bound overflow.
          const double balance =
              prev.backlog[t][seg] + (st.arrival[t][seg] - st.carried[t][seg]) * dt;
          const double clamped = std::max(balance, 0.0);
          const double diff = clamped - st.backlog[t][seg];
          if (diff < -1e-9 || diff > overflow_tick + 1e-9) ok = false;
        }
    }
    v.require(ok);
  }

  // Determinism: identical config and seed give bit-identical reports.
  {
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      SimConfig cfg;
      cfg.network = make_sample_topology(120.0, 0.2);
      cfg.k_paths = 3;
      cfg.arrival_rate_per_s = 12.0 + 3.0 * i;
      cfg.duration_s = 6.0;
      cfg.tick_s = 0.01;
      cfg.te_period_s = 2.0;
      cfg.price.nipu_interval_s = 0.1;
      cfg.seed = 70 + i;
      cfg.parallel = i % 2 == 0;
      const SimReport a = run(cfg);
      const SimReport b = run(cfg);
      if (a.tick_utility != b.tick_utility) ok = false;
      if (a.link_served_integral != b.link_served_integral) ok = false;
      if (a.nipu.size() != b.nipu.size()) ok = false;
      for (size_t k = 0; ok && k < a.nipu.size(); ++k)
        if (a.nipu[k].lambda != b.nipu[k].lambda) ok = false;
      ++cases;
    }
    v.require(ok);
  }

  CHECK(v.pass);
  report(9, v,
         fmt("%d randomized cases across rate/price/conservation/determinism properties",
             cases));
}
