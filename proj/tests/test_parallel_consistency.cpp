// The OpenMP kernels must be bit-identical to their serial execution (the
// parallel loops write disjoint elements and keep inner sums in fixed order),
// and must agree with the definitional reference implementations.

#include <cmath>

#include "amtm/engine.hpp"
#include "amtm/link_dynamics.hpp"
#include "amtm/pricing.hpp"
#include "amtm/reference.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace amtm;

namespace {

struct Loaded {
  Network net = make_sample_topology(120.0);
  PathSet ps = build_pathset(net, 3);
  LinkDynamicsState st;

  explicit Loaded(std::uint64_t seed) {
    st.init(ps);
    testutil::Rng rng(seed);
    for (int p = 0; p < ps.path_count(); ++p) {
      if (rng.uniform() < 0.2) st.add_injected(p, kTierHigh, rng.uniform(0.0, 8.0));
      if (rng.uniform() < 0.3) st.add_injected(p, kTierLow, rng.uniform(0.0, 40.0));
    }
    for (int t = 0; t < kTiers; ++t)
      for (int seg = 0; seg < ps.seg_count(); ++seg)
        if (rng.uniform() < 0.15) st.backlog[t][seg] = rng.uniform(0.0, 6.0);
    for (int seg = 0; seg < ps.seg_count(); ++seg)
      st.backlog_total[seg] = st.backlog[0][seg] + st.backlog[1][seg];
  }
};

bool exactly_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("step_deep: parallel execution is bit-identical to serial") {
  Loaded a(3), b(3);
  const auto cap = a.net.capacities_mbps();
  for (int tick = 0; tick < 25; ++tick) {
    step_deep(a.ps, cap, a.st, 0.01, 50.0, false);
    step_deep(b.ps, cap, b.st, 0.01, 50.0, true);
  }
  CHECK(exactly_equal(a.st.backlog_total, b.st.backlog_total));
  CHECK(exactly_equal(a.st.carried_total, b.st.carried_total));
  CHECK(exactly_equal(a.st.idle_mbps, b.st.idle_mbps));
  CHECK(exactly_equal(a.st.overflow_by_link_mbit, b.st.overflow_by_link_mbit));
  CHECK(a.st.peak_backlog_mbit == b.st.peak_backlog_mbit);
}

TEST_CASE("step_deep: kernel agrees with the reference implementation") {
  Loaded a(4), b(4);
  const auto cap = a.net.capacities_mbps();
  for (int tick = 0; tick < 10; ++tick) {
    step_deep(a.ps, cap, a.st, 0.01, 50.0, true);
    reference::step_deep(b.ps, cap, b.st, 0.01, 50.0);
  }
  CHECK(max_diff(a.st.backlog_total, b.st.backlog_total) < 1e-9);
  CHECK(max_diff(a.st.carried_total, b.st.carried_total) < 1e-9);
  CHECK(max_diff(a.st.idle_mbps, b.st.idle_mbps) < 1e-9);
}

TEST_CASE("propagate_shallow: parallel bit-identical to serial, close to reference") {
  Loaded a(5), b(5), c(5);
  const auto cap = a.net.capacities_mbps();
  propagate_shallow(a.ps, cap, a.st, false);
  propagate_shallow(b.ps, cap, b.st, true);
  reference::propagate_shallow(c.ps, cap, c.st);
  CHECK(exactly_equal(a.st.carried_total, b.st.carried_total));
  CHECK(exactly_equal(a.st.idle_mbps, b.st.idle_mbps));
  CHECK(max_diff(a.st.carried_total, c.st.carried_total) < 1e-6);
}

TEST_CASE("nipu updates: parallel bit-identical to serial") {
  Loaded a(6);
  const auto cap = a.net.capacities_mbps();
  step_deep(a.ps, cap, a.st, 0.01, 50.0, true);
  const StateReport rep = make_report(a.ps, a.st);

  std::vector<double> p1(a.ps.nlinks, 0.3), p2(a.ps.nlinks, 0.3);
  PriceUpdateConfig c1, c2;
  c1.mu = 1e-3;
  c2.mu = 1e-3;
  c1.n_gain = c2.n_gain = 1e-3;
  nipu_deep(p1, rep, a.ps, cap, c1, false);
  nipu_deep(p2, rep, a.ps, cap, c2, true);
  CHECK(exactly_equal(p1, p2));
  CHECK(c1.n_gain == c2.n_gain);

  std::vector<double> s1(a.ps.nlinks, 0.3), s2(a.ps.nlinks, 0.3);
  nipu_shallow(s1, rep, a.ps, 1e-3, false);
  nipu_shallow(s2, rep, a.ps, 1e-3, true);
  CHECK(exactly_equal(s1, s2));
}

TEST_CASE("engine: parallel run equals serial run bit-for-bit") {
  SimConfig cfg;
  cfg.network = make_sample_topology(100.0);
  cfg.k_paths = 3;
  cfg.arrival_rate_per_s = 15.0;
  cfg.duration_s = 8.0;
  cfg.tick_s = 0.01;
  cfg.te_period_s = 2.0;
  cfg.price.nipu_interval_s = 0.1;
  cfg.seed = 9;
  cfg.parallel = false;
  const SimReport serial = run(cfg);
  cfg.parallel = true;
  const SimReport parallel = run(cfg);

  CHECK(serial.utility_total == parallel.utility_total);
  CHECK(exactly_equal(serial.tick_utility, parallel.tick_utility));
  CHECK(exactly_equal(serial.link_served_integral, parallel.link_served_integral));
  REQUIRE(serial.nipu.size() == parallel.nipu.size());
  for (size_t i = 0; i < serial.nipu.size(); ++i)
    CHECK(exactly_equal(serial.nipu[i].lambda, parallel.nipu[i].lambda));
  REQUIRE(serial.flows.size() == parallel.flows.size());
  for (size_t i = 0; i < serial.flows.size(); ++i) {
    CHECK(serial.flows[i].mean_rate_mbps == parallel.flows[i].mean_rate_mbps);
    CHECK(serial.flows[i].queueing_delay_s == parallel.flows[i].queueing_delay_s);
  }
}
