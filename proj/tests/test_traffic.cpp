#include <cmath>

#include "amtm/traffic.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace amtm;

TEST_CASE("alpha-fair utility values") {
  CHECK(utility_value({1.0, 0.5}, 4.0) == doctest::Approx(4.0));
  CHECK(utility_value({2.0, 0.5}, 0.0) == doctest::Approx(0.0));
  CHECK(utility_value({3.0, 0.5}, 25.0) == doctest::Approx(30.0));
  CHECK_THROWS_AS(utility_value({1.0, 0.5}, -1.0), std::invalid_argument);
}

TEST_CASE("utility is strictly concave") {
  testutil::Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const UtilityFunction u{rng.uniform(0.5, 4.0), rng.uniform(0.1, 0.9)};
    const double x1 = rng.uniform(0.01, 50.0);
    double x2 = rng.uniform(0.01, 50.0);
    if (x1 == x2) x2 += 1.0;
    const double th = rng.uniform(0.05, 0.95);
    const double mid = utility_value(u, th * x1 + (1 - th) * x2);
    const double chord = th * utility_value(u, x1) + (1 - th) * utility_value(u, x2);
    CHECK(mid > chord);
  }
}

TEST_CASE("optimal rate closed form") {
  const double inf_cap = 1e18;
  CHECK(optimal_rate({1.0, 0.5}, 1.0, inf_cap) == doctest::Approx(1.0));
  CHECK(optimal_rate({3.0, 0.5}, 1.0, inf_cap) == doctest::Approx(9.0));
  CHECK(optimal_rate({1.0, 0.5}, 0.0, 10.0) == doctest::Approx(10.0));
}

TEST_CASE("optimal rate matches the numeric maximizer") {
  testutil::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const UtilityFunction u{rng.uniform(0.5, 4.0), rng.uniform(0.2, 0.9)};
    const double lam = rng.uniform(0.05, 3.0);
    const double cap = rng.uniform(5.0, 200.0);
    const double got = optimal_rate(u, lam, cap);
    const double ref = testutil::golden_max(
        [&](double x) { return utility_value(u, x) - lam * x; }, 0.0, cap);
    CHECK(got == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("optimal rate is nonincreasing in the path price") {
  testutil::Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const UtilityFunction u{rng.uniform(0.5, 4.0), rng.uniform(0.2, 0.9)};
    const double cap = rng.uniform(5.0, 200.0);
    double p1 = rng.uniform(0.01, 2.0), p2 = rng.uniform(0.01, 2.0);
    if (p1 > p2) std::swap(p1, p2);
    CHECK(optimal_rate(u, p1, cap) >= optimal_rate(u, p2, cap));
  }
}

TEST_CASE("class table defaults mirror the multiclass parameters") {
  const auto classes = default_class_table();
  REQUIRE(classes.size() == 3);
  CHECK(classes[0].peak_mbps == 10.0);
  CHECK(classes[1].peak_mbps == 20.0);
  CHECK(classes[2].peak_mbps == 100.0);
  CHECK(classes[0].weight == 3.0);
  CHECK(classes[1].weight == 2.0);
  CHECK(classes[2].weight == 1.0);
  CHECK(classes[0].probability == doctest::Approx(0.86));
  validate_class_table(classes);

  auto bad = classes;
  bad[0].probability = 0.5;
  CHECK_THROWS_AS(validate_class_table(bad), std::invalid_argument);
}

TEST_CASE("zero intensity generates nothing") {
  FlowGenerator gen(0.0, default_class_table(), 10, 0.5, 1);
  CHECK(gen.generate(0.0, 100.0).empty());
}

TEST_CASE("poisson arrivals match intensity and class mix within 3 sigma") {
  FlowGenerator gen(30.0, default_class_table(), 25, 0.5, 42);
  const auto flows = gen.generate(0.0, 100.0);
  const double mean = 3000.0, sigma = std::sqrt(3000.0);
  CHECK(std::abs(static_cast<double>(flows.size()) - mean) < 3.0 * sigma);

  double counts[3] = {0, 0, 0};
  for (const Flow& f : flows) counts[f.cls] += 1.0;
  const double n = static_cast<double>(flows.size());
  const double probs[3] = {0.86, 0.07, 0.07};
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt(n * probs[c] * (1 - probs[c]));
    CHECK(std::abs(counts[c] - n * probs[c]) < 3.0 * sd);
  }
  for (const Flow& f : flows) {
    CHECK(f.src != f.dst);
    CHECK(f.src >= 0);
    CHECK(f.src < 25);
    CHECK(f.dst >= 0);
    CHECK(f.dst < 25);
    const TrafficClass& c = default_class_table()[f.cls];
    CHECK(f.duration_s >= c.duration_min_s);
    CHECK(f.duration_s <= c.duration_max_s);
  }
}

TEST_CASE("same seed gives identical flow lists; windows stream consistently") {
  const auto table = default_class_table();
  FlowGenerator a(30.0, table, 25, 0.5, 7);
  FlowGenerator b(30.0, table, 25, 0.5, 7);
  const auto fa = a.generate(0.0, 50.0);
  const auto fb = b.generate(0.0, 50.0);
  REQUIRE(fa.size() == fb.size());
  for (size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].arrival_s == fb[i].arrival_s);
    CHECK(fa[i].src == fb[i].src);
    CHECK(fa[i].dst == fb[i].dst);
    CHECK(fa[i].cls == fb[i].cls);
    CHECK(fa[i].duration_s == fb[i].duration_s);
  }
  // Window streaming: [0,25) + [25,50) equals [0,50).
  FlowGenerator c(30.0, table, 25, 0.5, 7);
  auto fc = c.generate(0.0, 25.0);
  const auto more = c.generate(25.0, 50.0);
  fc.insert(fc.end(), more.begin(), more.end());
  REQUIRE(fc.size() == fa.size());
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fc[i].arrival_s == fa[i].arrival_s);
}
