#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rsspde/rng.hpp"

namespace rsspde {

using GalerkinState = std::vector<double>;

// State-dependent generator of the switching process.  Regimes are 1-based;
// rates(x, i, j) is the jump rate i -> j (i != j), rows are evaluated lazily.
// bound_L must dominate every row sum: sup_{x,i} sum_{j != i} rates(x,i,j).
struct RateMatrix {
  std::function<double(const GalerkinState&, int, int)> rates;
  int num_regimes = 0;  // truncation level S_max; 0 means no switching
  double bound_L = 0.0;

  bool enabled() const { return num_regimes > 0 && bound_L > 0.0; }
};

// Consecutive half-open segments of [0, bound_L], one per positive
// off-diagonal rate of row i, laid out in increasing target order.  A mark
// falling in segment (target j) moves the regime from i to j; a mark in the
// uncovered remainder is a no-op.
struct IntervalLayout {
  struct Segment {
    int target;
    double lo;
    double hi;  // [lo, hi)
  };
  int regime = 0;
  std::vector<Segment> segments;
  double total = 0.0;
};

IntervalLayout build_intervals(const GalerkinState& x, int regime, const RateMatrix& q);

// Displacement j - i for a mark r in [0, bound_L]; 0 in the remainder.
int evaluate_gamma(const IntervalLayout& layout, double r, double bound_L);

struct SwitchSample {
  double time = std::numeric_limits<double>::infinity();
  int regime = 0;
};

// First accepted switch after t0 via thinning: candidate times are a Poisson
// process of rate bound_L; each candidate draws a mark r ~ U[0, bound_L] and
// is accepted iff the displacement at the left-limit state is nonzero.
// Returns (+inf, i) if nothing is accepted before t_max.
SwitchSample next_switch(const std::function<GalerkinState(double)>& x_path, int regime,
                         const RateMatrix& q, double t0, double t_max, Rng& rng);

}  // namespace rsspde
