#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rfa/necrosis.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace rfa {
namespace {

using testing::closed_form_rate;
using testing::cube;

TEST(DamageRate, MatchesClosedFormAt100C) {
  const ArrheniusParams p;
  const double want = closed_form_rate(100.0);
  EXPECT_NEAR(damage_rate(100.0, p), want, 1e-9 * want);
  const ScalarVolume psi = accumulate(ScalarVolume(cube(3)), ScalarVolume(cube(3), 100.0), 1.0, p);
  for (double v : psi.values()) ASSERT_NEAR(v, want, 1e-9 * want);
}

TEST(DamageRate, AbsoluteZeroContributesNothing) {
  const ArrheniusParams p;
  EXPECT_EQ(damage_rate(-273.15, p), 0.0);
  EXPECT_EQ(damage_rate(-300.0, p), 0.0);
  const auto psi = accumulate(ScalarVolume(cube(3)), ScalarVolume(cube(3), -273.15), 1.0, p);
  for (double v : psi.values()) ASSERT_EQ(v, 0.0);
}

TEST(DamageRate, ThresholdTimesAtReferenceTemperatures) {
  const ArrheniusParams p;
  // Seconds to reach damage 1 at constant temperature.
  const double t50 = 1.0 / damage_rate(50.0, p);
  const double t70 = 1.0 / damage_rate(70.0, p);
  EXPECT_NEAR(t50, 1.0 / closed_form_rate(50.0), 1e-9 * t50);
  EXPECT_GT(t50, 3600.0);
  EXPECT_LT(t70, 120.0);
  EXPECT_GT(t70, 30.0);
}

TEST(Accumulate, ThreeMinutesAt50And70C) {
  const ArrheniusParams p;
  const GridSpec g = cube(3);
  ScalarVolume at50(g), at70(g);
  for (int s = 0; s < 1800; ++s) {
    accumulate_inplace(at50, ScalarVolume(g, 50.0), 0.1, p, 1);
    accumulate_inplace(at70, ScalarVolume(g, 70.0), 0.1, p, 1);
  }
  EXPECT_LT(at50[0], 1.0);
  EXPECT_GT(at70[0], 1.0);
  EXPECT_NEAR(at70[0], 180.0 * closed_form_rate(70.0), 1e-9 * at70[0]);
  EXPECT_EQ(count_nonzero(classify(at50, p)), 0u);
  EXPECT_EQ(count_nonzero(classify(at70, p)), g.count());
}

TEST(DamageRate, IsMonotoneInTemperature) {
  const ArrheniusParams p;
  double prev = 0.0;
  for (double t = 0.0; t <= 150.0; t += 0.5) {
    const double r = damage_rate(t, p);
    ASSERT_GE(r, prev) << t;
    prev = r;
  }
}

TEST(Classify, ThresholdIsStrict) {
  ScalarVolume psi(cube(3));
  psi[0] = 1.0;
  psi[1] = std::nextafter(1.0, 2.0);
  psi[2] = 0.999;
  const auto m = classify(psi, ArrheniusParams{});
  EXPECT_EQ(m[0], 0);
  EXPECT_EQ(m[1], 1);
  EXPECT_EQ(m[2], 0);
  EXPECT_EQ(count_nonzero(m), 1u);
}

std::vector<double> random_trajectory(CounterRng& rng, int steps) {
  std::vector<double> t(steps);
  double x = 37.0;
  for (auto& v : t) {
    x = std::clamp(x + 6.0 * (rng.uniform() - 0.45), 20.0, 110.0);
    v = x;
  }
  return t;
}

double integrate_trajectory(const std::vector<double>& temps, double dt, std::size_t begin, std::size_t end,
                            double psi0 = 0.0) {
  ScalarVolume psi(cube(3), psi0);
  for (std::size_t s = begin; s < end; ++s) accumulate_inplace(psi, ScalarVolume(cube(3), temps[s]), dt, {}, 1);
  return psi[13];
}

TEST(Accumulate, MonotoneInTimeAndTemperature) {
  CounterRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto temps = random_trajectory(rng, 200);
    std::vector<double> hotter = temps;
    for (auto& v : hotter) v += 1.0 + 4.0 * rng.uniform();
    double prev = 0.0;
    ScalarVolume psi(cube(3));
    for (double t : temps) {
      accumulate_inplace(psi, ScalarVolume(cube(3), t), 0.1, {}, 1);
      ASSERT_GE(psi[0], prev);
      prev = psi[0];
    }
    ASSERT_GT(integrate_trajectory(hotter, 0.1, 0, hotter.size()), integrate_trajectory(temps, 0.1, 0, temps.size()));
  }
}

TEST(Accumulate, AdditiveOverSplitTrajectories) {
  CounterRng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto temps = random_trajectory(rng, 150);
    const std::size_t cut = 1 + rng.below(148);
    const double whole = integrate_trajectory(temps, 0.1, 0, temps.size());
    const double first = integrate_trajectory(temps, 0.1, 0, cut);
    const double resumed = integrate_trajectory(temps, 0.1, cut, temps.size(), first);
    const double second = integrate_trajectory(temps, 0.1, cut, temps.size());
    ASSERT_EQ(resumed, whole);
    ASSERT_NEAR(first + second, whole, 1e-12 * std::max(1.0, whole));
  }
}

TEST(Accumulate, RejectsNegativeDtAndMismatchedGrids) {
  const ScalarVolume psi(cube(3)), t(cube(3), 60.0);
  EXPECT_EQ(testing::error_message([&] { accumulate(psi, t, -0.1, {}); }), "invalid dt");
  EXPECT_EQ(testing::error_message([&] { accumulate(psi, ScalarVolume(cube(4)), 0.1, {}); }), "grid mismatch");
  EXPECT_EQ(accumulate(psi, t, 0.0, {}), psi);
}

TEST(ArrheniusParams, Validation) {
  ArrheniusParams p;
  EXPECT_NO_THROW(p.validate());
  p.gas_constant = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

}  // namespace
}  // namespace rfa
