#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsspde/models.hpp"
#include "rsspde/regime.hpp"

using namespace rsspde;

namespace {

RateMatrix two_state(double q12, double q21) {
  return rate_matrix_table({{0.0, q12}, {q21, 0.0}});
}

}  // namespace

TEST_CASE("interval layout covers each positive rate once, in target order") {
  RateMatrix q = rate_matrix_table({{0.0, 1.0, 2.0}, {0.5, 0.0, 0.5}, {2.0, 1.0, 0.0}});
  CHECK(q.num_regimes == 3);
  CHECK(q.bound_L == doctest::Approx(3.0));

  GalerkinState x{0.0};
  IntervalLayout row1 = build_intervals(x, 1, q);
  REQUIRE(row1.segments.size() == 2);
  CHECK(row1.segments[0].target == 2);
  CHECK(row1.segments[0].lo == doctest::Approx(0.0));
  CHECK(row1.segments[0].hi == doctest::Approx(1.0));
  CHECK(row1.segments[1].target == 3);
  CHECK(row1.segments[1].hi == doctest::Approx(3.0));
  CHECK(row1.total == doctest::Approx(3.0));

  CHECK(evaluate_gamma(row1, 0.5, q.bound_L) == 1);   // 1 -> 2
  CHECK(evaluate_gamma(row1, 2.0, q.bound_L) == 2);   // 1 -> 3
  CHECK(evaluate_gamma(row1, 2.9999, q.bound_L) == 2);

  IntervalLayout row2 = build_intervals(x, 2, q);
  CHECK(row2.total == doctest::Approx(1.0));
  CHECK(evaluate_gamma(row2, 0.25, q.bound_L) == -1);  // 2 -> 1
  CHECK(evaluate_gamma(row2, 0.75, q.bound_L) == 1);   // 2 -> 3
  CHECK(evaluate_gamma(row2, 1.5, q.bound_L) == 0);    // remainder: no move
}

TEST_CASE("holding times and transitions match the exact chain law") {
  RateMatrix q = two_state(0.7, 1.3);
  auto const_path = [](double) { return GalerkinState{0.0}; };

  const int n = 20000;
  Rng rng(101, 0, Channel::kRegime);
  double sum1 = 0.0, sumsq1 = 0.0;
  int from1_to2 = 0;
  for (int k = 0; k < n; ++k) {
    SwitchSample s = next_switch(const_path, 1, q, 0.0, 1e9, rng);
    REQUIRE(std::isfinite(s.time));
    sum1 += s.time;
    sumsq1 += s.time * s.time;
    if (s.regime == 2) ++from1_to2;
  }
  CHECK(from1_to2 == n);  // only one target from state 1
  double mean = sum1 / n;
  double var = sumsq1 / n - mean * mean;
  // Exp(0.7): mean 1/0.7, sd 1/0.7
  CHECK(std::abs(mean - 1.0 / 0.7) < 3.0 / (0.7 * std::sqrt(static_cast<double>(n))));
  CHECK(std::abs(var - 1.0 / 0.49) < 3.0 * std::sqrt(8.0 / 0.49 / 0.49 / n));

  Rng rng2(101, 1, Channel::kRegime);
  double sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    SwitchSample s = next_switch(const_path, 2, q, 5.0, 1e9, rng2);
    sum2 += s.time - 5.0;
    CHECK(s.regime == 1);
  }
  CHECK(std::abs(sum2 / n - 1.0 / 1.3) < 3.0 / (1.3 * std::sqrt(static_cast<double>(n))));
}

TEST_CASE("zero rows never switch and state dependence is honored") {
  RateMatrix q;
  q.num_regimes = 2;
  q.bound_L = 2.0;
  q.rates = [](const GalerkinState& x, int i, int j) {
    if (i == 1 && j == 2) return x[0] > 0.0 ? 2.0 : 0.0;
    return 0.0;
  };

  auto neg_path = [](double) { return GalerkinState{-1.0}; };
  Rng rng(7, 0, Channel::kRegime);
  SwitchSample none = next_switch(neg_path, 1, q, 0.0, 50.0, rng);
  CHECK(!std::isfinite(none.time));

  auto pos_path = [](double) { return GalerkinState{1.0}; };
  Rng rng2(7, 1, Channel::kRegime);
  const int n = 5000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    SwitchSample s = next_switch(pos_path, 1, q, 0.0, 1e9, rng2);
    REQUIRE(std::isfinite(s.time));
    CHECK(s.regime == 2);
    sum += s.time;
  }
  CHECK(std::abs(sum / n - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));

  // state 2 has no outgoing rates at all
  Rng rng3(7, 2, Channel::kRegime);
  SwitchSample stay = next_switch(pos_path, 2, q, 0.0, 50.0, rng3);
  CHECK(!std::isfinite(stay.time));
}

TEST_CASE("time-varying path is sampled at the candidate left limit") {
  // rate flips on at t = 1: candidates before then are all rejected
  RateMatrix q;
  q.num_regimes = 2;
  q.bound_L = 5.0;
  q.rates = [](const GalerkinState& x, int i, int j) {
    return (i == 1 && j == 2 && x[0] >= 1.0) ? 5.0 : 0.0;
  };
  auto ramp = [](double t) { return GalerkinState{t}; };
  Rng rng(13, 0, Channel::kRegime);
  for (int k = 0; k < 200; ++k) {
    SwitchSample s = next_switch(ramp, 1, q, 0.0, 100.0, rng);
    REQUIRE(std::isfinite(s.time));
    CHECK(s.time >= 1.0);
  }
}
