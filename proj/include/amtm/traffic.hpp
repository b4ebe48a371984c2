#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace amtm {

enum class QosKind { delay_sensitive, delay_tolerant };

struct TrafficClass {
  std::string name;
  double peak_mbps = 0.0;
  QosKind qos = QosKind::delay_tolerant;
  double duration_min_s = 0.0;
  double duration_max_s = 0.0;
  double weight = 1.0;
  double probability = 0.0;
};

/// Interactive / real-time multimedia / elastic mix.
std::vector<TrafficClass> default_class_table();
void validate_class_table(const std::vector<TrafficClass>& classes);

/// Alpha-fair utility u(x) = w/(1-alpha) * x^(1-alpha). The admission path
/// touches utilities only through utility_value and optimal_rate, so other
/// concave families with an invertible marginal can slot in here.
struct UtilityFunction {
  double weight = 1.0;
  double alpha = 0.5;  // >= 0 and != 1
};

double utility_value(const UtilityFunction& u, double rate_mbps);

/// argmax_x u(x) - path_price * x, clamped to [0, cap].
double optimal_rate(const UtilityFunction& u, double path_price, double cap_mbps);

enum class FlowStatus { pending, active, finished, rejected };

struct Flow {
  std::int64_t id = 0;
  int cls = 0;
  UtilityFunction util;
  QosKind qos = QosKind::delay_tolerant;
  int src = 0;
  int dst = 0;
  double arrival_s = 0.0;
  double duration_s = 0.0;
  double peak_mbps = 0.0;

  // Routing decision and admitted rates; Theta_jp is 1 exactly for path_ids.
  std::vector<int> path_ids;
  std::vector<double> rates_mbps;
  FlowStatus status = FlowStatus::pending;
  double admit_s = -1.0;

  double total_rate() const {
    double s = 0.0;
    for (double r : rates_mbps) s += r;
    return s;
  }
};

/// Poisson arrivals with the class mix of the class table. Streams windows:
/// generate(0,50) followed by generate(50,100) equals generate(0,100).
class FlowGenerator {
 public:
  FlowGenerator(double intensity_per_s, std::vector<TrafficClass> classes,
                int node_count, double alpha, std::uint64_t seed);

  std::vector<Flow> generate(double t0, double t1);

  /// `count` flows arriving at t = 0 with a fixed lifetime; class, pair and
  /// utility are sampled as usual. Used for stationary preloads.
  std::vector<Flow> stationary(int count, double duration_s);

  std::int64_t generated() const { return next_id_; }

 private:
  double uniform();  // 53-bit uniform in [0,1)
  Flow make_flow(double t);

  double intensity_;
  std::vector<TrafficClass> classes_;
  std::vector<double> class_cdf_;
  int node_count_;
  double alpha_;
  std::mt19937_64 rng_;
  bool primed_ = false;
  double next_arrival_ = 0.0;
  std::int64_t next_id_ = 0;
};

inline std::vector<Flow> generate_arrivals(FlowGenerator& g, double t0, double t1) {
  return g.generate(t0, t1);
}

}  // namespace amtm
