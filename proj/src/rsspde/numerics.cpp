#include "rsspde/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace rsspde {

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double MeanVar::se() const { return n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0; }

MeanVar mean_var(std::span<const double> xs) {
  MeanVar out;
  out.n = xs.size();
  if (out.n == 0) return out;
  out.mean = pairwise_sum(xs) / static_cast<double>(out.n);
  if (out.n < 2) return out;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double d = xs[i] - out.mean;
    sq[i] = d * d;
  }
  out.var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
  return out;
}

namespace {

double simpson_panel(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double m, double fm, double whole,
                   double tol, int depth) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = simpson_panel(a, fa, m, fm, flm);
  double right = simpson_panel(m, fm, b, fb, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b);
  double m = 0.5 * (a + b);
  double fm = f(m);
  double whole = simpson_panel(a, fa, b, fb, fm);
  double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  if (tol == 0.0) tol = rel_tol;  // integrand may vanish at the coarse level
  double result = simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
  // one refinement pass if the coarse estimate badly misjudged the scale
  double tol2 = std::max(abs_tol, rel_tol * std::abs(result));
  if (tol2 > 0.0 && tol2 < 0.1 * tol) {
    result = simpson_rec(f, a, fa, b, fb, m, fm, whole, tol2, max_depth);
  }
  return result;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration from the Chebyshev-like initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

double zeta_sum(double p) {
  if (p <= 1.0) throw std::invalid_argument("zeta_sum: requires p > 1");
  const int n = 200000;
  CompensatedSum s;
  for (int j = 1; j <= n; ++j) s.add(std::pow(static_cast<double>(j), -p));
  // Euler-Maclaurin tail: sum_{j>n} j^-p = n^{1-p}/(p-1) - n^-p/2 + p n^{-p-1}/12 - ...
  double nn = static_cast<double>(n);
  double tail = std::pow(nn, 1.0 - p) / (p - 1.0) - 0.5 * std::pow(nn, -p) +
                p / 12.0 * std::pow(nn, -p - 1.0);
  return s.value() + tail;
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line: need two equal-length samples");
  }
  double n = static_cast<double>(x.size());
  double sx = pairwise_sum(x), sy = pairwise_sum(y);
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double b = sxy / sxx;
  return {my - b * mx, b};
}

}  // namespace rsspde
