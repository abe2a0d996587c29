#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace rsspde {

// Neumaier compensated summation; error stays at ulp scale regardless of n.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Deterministic reduction independent of evaluation order upstream: the
// result depends only on the index order of the input.
double pairwise_sum(std::span<const double> xs);

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased (n-1)
  std::size_t n = 0;
  double se() const;
};
MeanVar mean_var(std::span<const double> xs);

// Adaptive Simpson quadrature with absolute/relative tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_tol = 0.0, int max_depth = 40);

// n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// sum_{j>=1} j^{-p} for p > 1, via direct sum plus Euler-Maclaurin tail.
double zeta_sum(double p);

// Least squares line y ~ a + b x; returns (a, b).
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace rsspde
