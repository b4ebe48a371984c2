#include "amtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amtm {

UtilizationStats link_utilization(const SimReport& rep, double t0, double t1) {
  if (t1 < 0.0) t1 = rep.duration_s;
  if (t1 <= t0) throw std::invalid_argument("link_utilization: empty window");
  UtilizationStats out;
  out.per_link.assign(rep.nlinks, 0.0);

  if (t0 == 0.0 && t1 == rep.duration_s) {
    for (int e = 0; e < rep.nlinks; ++e)
      out.per_link[e] =
          rep.link_served_integral[e] / (rep.capacity_mbps[e] * rep.duration_s);
  } else {
    // Assemble from period samples, weighting partial overlaps.
    for (const PeriodSample& p : rep.periods) {
      const double lo = std::max(p.t0, t0);
      const double hi = std::min(p.t1, t1);
      if (hi <= lo) continue;
      const double w = (hi - lo) / (p.t1 - p.t0);
      for (int e = 0; e < rep.nlinks; ++e)
        out.per_link[e] += w * p.link_served_mbit[e] / rep.capacity_mbps[e];
    }
    for (int e = 0; e < rep.nlinks; ++e) out.per_link[e] /= (t1 - t0);
  }
  for (double u : out.per_link) out.mean += u;
  out.mean /= std::max(rep.nlinks, 1);
  return out;
}

double network_utility_integral(const SimReport& rep, double t0, double t1) {
  if (t1 < 0.0) t1 = rep.duration_s;
  double total = 0.0;
  const double dt = rep.tick_s;
  const long k0 = std::lround(std::ceil(t0 / dt - 1e-9));
  const long k1 = std::min<long>(std::lround(std::ceil(t1 / dt - 1e-9)),
                                 static_cast<long>(rep.tick_utility.size()));
  for (long k = k0; k < k1; ++k) total += rep.tick_utility[k] * dt;
  return total;
}

DelayStats queueing_delay_stats(const SimReport& rep, bool sensitive_only,
                                double min_admit_s) {
  std::vector<double> delays;
  for (const FlowRecord& f : rep.flows) {
    if (f.rejected || f.admit_s < min_admit_s) continue;
    if (sensitive_only && f.qos != QosKind::delay_sensitive) continue;
    if (f.end_s <= f.admit_s) continue;
    delays.push_back(f.queueing_delay_s);
  }
  DelayStats st;
  st.count = static_cast<int>(delays.size());
  if (delays.empty()) return st;
  double sum = 0.0;
  for (double d : delays) sum += d;
  st.mean_s = sum / delays.size();
  std::sort(delays.begin(), delays.end());
  auto pct = [&](double q) {
    const size_t i = static_cast<size_t>(q * (delays.size() - 1));
    return delays[i];
  };
  st.p50_s = pct(0.50);
  st.p95_s = pct(0.95);
  st.p99_s = pct(0.99);
  return st;
}

double mean_admission_wait(const SimReport& rep, double t0, double t1) {
  if (t1 < 0.0) t1 = rep.duration_s;
  double sum = 0.0;
  long n = 0;
  for (const FlowRecord& f : rep.flows) {
    if (f.admit_s < 0.0 || f.arrival_s < t0 || f.arrival_s >= t1) continue;
    sum += f.admit_s - f.arrival_s;
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

MessageScale control_message_scale(const SimReport& rep) {
  MessageScale ms;
  for (const PeriodSample& p : rep.periods) {
    ms.per_period.push_back(p.messages);
    ms.boundary_flows.push_back(p.boundary_flows);
  }
  if (rep.scheme == Scheme::amtm) ms.per_control_round = rep.nodes + rep.nlinks;
  return ms;
}

Regression linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  Regression r;
  const size_t n = x.size();
  if (n < 2 || y.size() != n) return r;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  r.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) r.slope_stderr = std::sqrt(sse / (n - 2) / sxx);
  return r;
}

Regression block_trend(const std::vector<double>& t, const std::vector<double>& y,
                       int blocks) {
  const size_t n = t.size();
  if (n < static_cast<size_t>(blocks) || blocks < 3) return linear_fit(t, y);
  std::vector<double> bt(blocks, 0.0), by(blocks, 0.0);
  std::vector<int> cnt(blocks, 0);
  for (size_t i = 0; i < n; ++i) {
    const int b = std::min<int>(static_cast<int>(i * blocks / n), blocks - 1);
    bt[b] += t[i];
    by[b] += y[i];
    ++cnt[b];
  }
  for (int b = 0; b < blocks; ++b) {
    bt[b] /= cnt[b];
    by[b] /= cnt[b];
  }
  return linear_fit(bt, by);
}

}  // namespace amtm
