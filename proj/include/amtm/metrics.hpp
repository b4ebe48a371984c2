#pragma once

#include <vector>

#include "amtm/engine.hpp"

namespace amtm {

struct UtilizationStats {
  std::vector<double> per_link;  // time-average served/C over the window
  double mean = 0.0;
};

/// Time-averaged link utilization over [t0, t1); defaults to the whole run.
UtilizationStats link_utilization(const SimReport& rep, double t0 = 0.0,
                                  double t1 = -1.0);

/// Integral of total utility over [t0, t1), recomputed from the tick series.
double network_utility_integral(const SimReport& rep, double t0 = 0.0,
                                double t1 = -1.0);

struct DelayStats {
  int count = 0;
  double mean_s = 0.0;
  double p50_s = 0.0;
  double p95_s = 0.0;
  double p99_s = 0.0;
};

/// Queueing-delay statistics over flows admitted at or after min_admit_s;
/// sensitive_only restricts to delay-sensitive classes.
DelayStats queueing_delay_stats(const SimReport& rep, bool sensitive_only,
                                double min_admit_s = 0.0);

/// Mean admission wait (admit - arrival) over flows arriving in [t0, t1).
double mean_admission_wait(const SimReport& rep, double t0 = 0.0, double t1 = -1.0);

struct MessageScale {
  std::vector<long> per_period;
  std::vector<int> boundary_flows;  // flows in the boundary solve (centralized)
  long per_control_round = 0;       // amtm: constant #nodes + #links
};
MessageScale control_message_scale(const SimReport& rep);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};
Regression linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// OLS on block means; the block aggregation washes out short-range
/// autocorrelation so the slope error is usable for trend tests.
Regression block_trend(const std::vector<double>& t, const std::vector<double>& y,
                       int blocks = 20);

}  // namespace amtm
