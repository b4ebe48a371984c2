// Benchmark of the OpenMP kernels against the serial reference
// implementations on a synthetic heavy load, with a max-difference column as
// a cross-check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "amtm/link_dynamics.hpp"
#include "amtm/pricing.hpp"
#include "amtm/reference.hpp"
#include "amtm/topology.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct Fixture {
  amtm::Network net;
  amtm::PathSet ps;
  std::vector<double> capacity;
  amtm::LinkDynamicsState st;

  Fixture() : net(amtm::make_sample_topology(500.0)), ps(amtm::build_pathset(net, 5)) {
    capacity = net.capacities_mbps();
    st.init(ps);
    // Load every path with pseudo-random injected rates and backlogs.
    std::uint64_t s = 12345;
    auto rnd = [&]() {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      return (s >> 11) * 0x1.0p-53;
    };
    for (int p = 0; p < ps.path_count(); ++p) {
      st.add_injected(p, amtm::kTierHigh, 0.4 * rnd());
      st.add_injected(p, amtm::kTierLow, 1.4 * rnd());
    }
    for (int t = 0; t < amtm::kTiers; ++t)
      for (int seg = 0; seg < ps.seg_count(); ++seg) st.backlog[t][seg] = 5.0 * rnd();
    for (int seg = 0; seg < ps.seg_count(); ++seg)
      st.backlog_total[seg] = st.backlog[0][seg] + st.backlog[1][seg];
  }
};

}  // namespace

int main() {
  const int reps = 200;
  Fixture fx;
  std::printf("paths=%d segments=%d links=%d", fx.ps.path_count(), fx.ps.seg_count(),
              fx.ps.nlinks);
#ifdef _OPENMP
  std::printf(" threads=%d\n", omp_get_max_threads());
#else
  std::printf(" threads=1 (no OpenMP)\n");
#endif
  std::printf("%-22s %12s %12s %9s %12s\n", "kernel", "serial ms", "omp ms", "speedup",
              "max |diff|");

  // deep step
  {
    amtm::LinkDynamicsState ref = fx.st;
    amtm::LinkDynamicsState par = fx.st;
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i)
      amtm::reference::step_deep(fx.ps, fx.capacity, ref, 0.01, 100.0);
    const double ref_ms = ms_since(t0);
    t0 = Clock::now();
    for (int i = 0; i < reps; ++i)
      amtm::step_deep(fx.ps, fx.capacity, par, 0.01, 100.0, true);
    const double par_ms = ms_since(t0);
    std::printf("%-22s %12.2f %12.2f %8.2fx %12.3e\n", "step_deep", ref_ms, par_ms,
                ref_ms / par_ms, max_abs_diff(ref.backlog_total, par.backlog_total));
  }

  // shallow fixed point
  {
    amtm::LinkDynamicsState ref = fx.st;
    amtm::LinkDynamicsState par = fx.st;
    auto t0 = Clock::now();
    for (int i = 0; i < reps / 10; ++i)
      amtm::reference::propagate_shallow(fx.ps, fx.capacity, ref);
    const double ref_ms = ms_since(t0);
    t0 = Clock::now();
    for (int i = 0; i < reps / 10; ++i)
      amtm::propagate_shallow(fx.ps, fx.capacity, par, true);
    const double par_ms = ms_since(t0);
    std::printf("%-22s %12.2f %12.2f %8.2fx %12.3e\n", "propagate_shallow", ref_ms,
                par_ms, ref_ms / par_ms,
                max_abs_diff(ref.carried_total, par.carried_total));
  }

  // deep price update
  {
    amtm::LinkDynamicsState st = fx.st;
    amtm::step_deep(fx.ps, fx.capacity, st, 0.01, 100.0, true);
    const amtm::StateReport rep = amtm::make_report(fx.ps, st);

    std::vector<double> ref_delta;
    auto t0 = Clock::now();
    for (int i = 0; i < reps / 10; ++i)
      ref_delta = amtm::reference::deep_backlog_term(rep, fx.ps);
    const double ref_ms = ms_since(t0);

    std::vector<double> par_delta(fx.ps.nlinks);
    t0 = Clock::now();
    for (int i = 0; i < reps / 10; ++i) {
      const auto pref = amtm::backlog_prefix_sums(fx.ps, rep.backlog_mbit, true);
      for (int e = 0; e < fx.ps.nlinks; ++e) {
        double term = 0.0;
        for (int k = fx.ps.link_seg_first[e]; k < fx.ps.link_seg_first[e + 1]; ++k)
          term += pref[fx.ps.link_seg[k]];
        par_delta[e] = term;
      }
    }
    const double par_ms = ms_since(t0);
    std::printf("%-22s %12.2f %12.2f %8.2fx %12.3e\n", "deep_backlog_term", ref_ms,
                par_ms, ref_ms / par_ms, max_abs_diff(ref_delta, par_delta));
  }

  // queueing estimates
  {
    std::vector<double> ref_q, par_q;
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i)
      ref_q = amtm::reference::queueing_estimates(fx.ps, fx.capacity, fx.st);
    const double ref_ms = ms_since(t0);
    t0 = Clock::now();
    for (int i = 0; i < reps; ++i)
      par_q = amtm::queueing_estimates(fx.ps, fx.capacity, fx.st, true);
    const double par_ms = ms_since(t0);
    std::printf("%-22s %12.2f %12.2f %8.2fx %12.3e\n", "queueing_estimates", ref_ms,
                par_ms, ref_ms / par_ms, max_abs_diff(ref_q, par_q));
  }
  return 0;
}
