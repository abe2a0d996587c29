#include "rsspde/regime.hpp"

#include <cmath>
#include <stdexcept>

#include "rsspde/numerics.hpp"

namespace rsspde {

IntervalLayout build_intervals(const GalerkinState& x, int regime, const RateMatrix& q) {
  if (regime < 1 || regime > q.num_regimes) {
    throw std::invalid_argument("build_intervals: regime " + std::to_string(regime) +
                                " outside [1, " + std::to_string(q.num_regimes) + "]");
  }
  IntervalLayout layout;
  layout.regime = regime;
  CompensatedSum cum;
  for (int j = 1; j <= q.num_regimes; ++j) {
    if (j == regime) continue;
    double rate = q.rates(x, regime, j);
    if (rate < 0.0 || !std::isfinite(rate)) {
      throw std::runtime_error("build_intervals: rate q(" + std::to_string(regime) + "," +
                               std::to_string(j) + ") = " + std::to_string(rate) +
                               " is not a finite nonnegative number");
    }
    if (rate == 0.0) continue;
    double lo = cum.value();
    cum.add(rate);
    layout.segments.push_back({j, lo, cum.value()});
  }
  layout.total = cum.value();
  // ulp-scale slack: the row sum may equal bound_L exactly up to accumulation
  double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, q.bound_L);
  if (layout.total > q.bound_L + slack) {
    throw std::runtime_error("build_intervals: row sum " + std::to_string(layout.total) +
                             " for regime " + std::to_string(regime) +
                             " exceeds bound_L = " + std::to_string(q.bound_L));
  }
  return layout;
}

int evaluate_gamma(const IntervalLayout& layout, double r, double bound_L) {
  if (!(r >= 0.0 && r <= bound_L)) {
    throw std::invalid_argument("evaluate_gamma: mark " + std::to_string(r) +
                                " outside [0, " + std::to_string(bound_L) + "]");
  }
  if (r >= layout.total) return 0;
  // segments are consecutive and sorted; locate by upper bound on lo
  std::size_t lo = 0, hi = layout.segments.size();
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (layout.segments[mid].lo <= r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const auto& seg = layout.segments[lo];
  if (r >= seg.lo && r < seg.hi) return seg.target - layout.regime;
  return 0;  // r sits in a rounding gap between segments
}

SwitchSample next_switch(const std::function<GalerkinState(double)>& x_path, int regime,
                         const RateMatrix& q, double t0, double t_max, Rng& rng) {
  SwitchSample out;
  out.regime = regime;
  if (!q.enabled()) return out;
  double t = t0;
  while (true) {
    t += rng.next_exponential(q.bound_L);
    if (t > t_max) return out;
    double r = rng.next_double() * q.bound_L;
    IntervalLayout layout = build_intervals(x_path(t), regime, q);
    int disp = evaluate_gamma(layout, r, q.bound_L);
    if (disp != 0) {
      out.time = t;
      out.regime = regime + disp;
      return out;
    }
  }
}

}  // namespace rsspde
