#include "amtm/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace amtm {

std::vector<TrafficClass> default_class_table() {
  return {
      {"interactive", 10.0, QosKind::delay_sensitive, 10.0, 30.0, 3.0, 0.86},
      {"multimedia", 20.0, QosKind::delay_sensitive, 60.0, 300.0, 2.0, 0.07},
      {"elastic", 100.0, QosKind::delay_tolerant, 10.0, 600.0, 1.0, 0.07},
  };
}

void validate_class_table(const std::vector<TrafficClass>& classes) {
  if (classes.empty()) throw std::invalid_argument("empty class table");
  double psum = 0.0;
  for (const auto& c : classes) {
    if (c.weight <= 0.0) throw std::invalid_argument("class weight must be positive: " + c.name);
    if (c.peak_mbps <= 0.0) throw std::invalid_argument("class peak rate must be positive: " + c.name);
    if (c.duration_min_s > c.duration_max_s)
      throw std::invalid_argument("class duration range inverted: " + c.name);
    if (c.probability < 0.0) throw std::invalid_argument("negative class probability: " + c.name);
    psum += c.probability;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("class probabilities must sum to 1");
}

double utility_value(const UtilityFunction& u, double rate_mbps) {
  if (rate_mbps < 0.0) throw std::invalid_argument("utility_value: negative rate");
  if (u.alpha == 0.0) return u.weight * rate_mbps;  // linear
  return u.weight / (1.0 - u.alpha) * std::pow(rate_mbps, 1.0 - u.alpha);
}

double optimal_rate(const UtilityFunction& u, double path_price, double cap_mbps) {
  if (path_price < 0.0) throw std::invalid_argument("optimal_rate: negative price");
  if (path_price == 0.0) return cap_mbps;
  if (u.alpha == 0.0) return path_price < u.weight ? cap_mbps : 0.0;
  // First-order condition w * x^(-alpha) = price.
  const double x = std::pow(u.weight / path_price, 1.0 / u.alpha);
  return std::min(cap_mbps, x);
}

FlowGenerator::FlowGenerator(double intensity_per_s, std::vector<TrafficClass> classes,
                             int node_count, double alpha, std::uint64_t seed)
    : intensity_(intensity_per_s),
      classes_(std::move(classes)),
      node_count_(node_count),
      alpha_(alpha),
      rng_(seed) {
  if (intensity_ < 0.0) throw std::invalid_argument("negative arrival intensity");
  if (node_count_ < 2) throw std::invalid_argument("need at least two nodes");
  validate_class_table(classes_);
  double acc = 0.0;
  for (const auto& c : classes_) {
    acc += c.probability;
    class_cdf_.push_back(acc);
  }
  class_cdf_.back() = 1.0;
}

double FlowGenerator::uniform() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

Flow FlowGenerator::make_flow(double t) {
  Flow f;
  f.id = next_id_++;
  const double uc = uniform();
  int cls = 0;
  while (uc >= class_cdf_[cls] && cls + 1 < static_cast<int>(classes_.size())) ++cls;
  const TrafficClass& c = classes_[cls];
  f.cls = cls;
  f.qos = c.qos;
  f.peak_mbps = c.peak_mbps;
  f.util = UtilityFunction{c.weight, alpha_};
  f.arrival_s = t;
  f.duration_s = c.duration_min_s + uniform() * (c.duration_max_s - c.duration_min_s);
  f.src = static_cast<int>(uniform() * node_count_);
  if (f.src >= node_count_) f.src = node_count_ - 1;
  int d = static_cast<int>(uniform() * (node_count_ - 1));
  if (d >= node_count_ - 1) d = node_count_ - 2;
  f.dst = d + (d >= f.src ? 1 : 0);
  return f;
}

std::vector<Flow> FlowGenerator::stationary(int count, double duration_s) {
  std::vector<Flow> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Flow f = make_flow(0.0);
    f.duration_s = duration_s;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Flow> FlowGenerator::generate(double t0, double t1) {
  if (t0 >= t1) throw std::invalid_argument("generate: t0 must precede t1");
  std::vector<Flow> out;
  if (intensity_ <= 0.0) return out;
  if (!primed_) {
    next_arrival_ = t0 - std::log1p(-uniform()) / intensity_;
    primed_ = true;
  }
  while (next_arrival_ < t1) {
    out.push_back(make_flow(next_arrival_));
    next_arrival_ -= std::log1p(-uniform()) / intensity_;
  }
  return out;
}

}  // namespace amtm
