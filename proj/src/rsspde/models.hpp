#pragma once

#include <memory>
#include <vector>

#include "rsspde/spde.hpp"

namespace rsspde {

// Collocation transform for the Dirichlet eigenbasis e_j(x) = sqrt(2) sin(jx)
// on (0, pi) with the normalized measure dmu = dx/pi.  Interior nodes
// x_m = m pi / (n_grid + 1); the rectangle rule with weight 1/(n_grid + 1)
// integrates any trig polynomial of degree < 2(n_grid + 1) that vanishes at
// the endpoints exactly, so products of up to (2 n_grid / n_modes + 1) modes
// are quadrature-exact.
class SineBasis {
 public:
  SineBasis(int n_modes, int n_grid);

  int n_modes() const { return n_modes_; }
  int n_grid() const { return n_grid_; }

  // u(x_m) = sum_j c_j sqrt(2) sin(j x_m)
  void to_grid(const std::vector<double>& coeffs, std::vector<double>& grid) const;
  // c_j = (1/(n_grid+1)) sum_m u(x_m) sqrt(2) sin(j x_m)
  void to_coeffs(const std::vector<double>& grid, std::vector<double>& coeffs) const;
  // mean of |u|^p over dmu via the node rule
  double mean_abs_pow(const std::vector<double>& grid, double p) const;

 private:
  int n_modes_;
  int n_grid_;
  std::vector<double> table_;  // [m * n_modes + j] = sqrt(2) sin((j+1) x_{m+1})
};

// Linear diagonal model on H = l2: dX_j = -lambda_j X_j dt + sigma_j dW_j.
// Exact transition law makes it the integrator/ergodics validation model.
struct LinearModelParams {
  int n_modes = 8;
  double lambda0 = 1.0;
  double lambda_pow = 0.0;  // lambda_j = lambda0 * j^lambda_pow
  double sigma0 = 0.1;
  double sigma_pow = 0.0;  // sigma_j = sigma0 * j^{-sigma_pow}
  double period = 1.0;
};

ModelSpec build_linear_model(const LinearModelParams& p);

inline double linear_mean_factor(double lambda, double t) { return std::exp(-lambda * t); }
inline double linear_transition_var(double lambda, double sigma, double t) {
  return sigma * sigma * (1.0 - std::exp(-2.0 * lambda * t)) / (2.0 * lambda);
}

// Stochastic porous-media model on H = H^{-gamma}((0,pi); dmu), V = L^{r+1}:
//   A(t, x, i) = -kappa(t,i) (-Laplace)^gamma (|x|^{r-1} x) + g(t,i) x
// with diagonal diffusion b_j(t,x,i) j^{-s} in the orthonormal basis of H,
//   b_j = bprime(t,i) / (1 + j^{-2 gamma} |<x, e_j>_{L2}|).
// Periodic coefficients: kappa, g, bprime oscillate with the stated period
// and a per-regime phase.
struct PorousMediaParams {
  int n_modes = 8;
  int n_grid = 0;  // 0: 2 * n_modes (dealiased for r <= 3)
  double gamma_frac = 1.0;
  double r_exponent = 3.0;  // r > 1
  double s_decay = 0.9;     // 1/2 < s <= gamma_frac
  double kappa0 = 1.0;
  double kappa_amp = 0.2;  // kappa in [kappa0 - amp, kappa0 + amp]
  double g0 = 0.2;
  double g_amp = 0.0;
  double g_reg = 0.0;  // regime-alternating shift
  double bprime0 = 0.5;
  double bprime_amp = 0.1;
  double period = 1.0;

  double kappa_min() const { return kappa0 - std::abs(kappa_amp); }
  double kappa_max() const { return kappa0 + std::abs(kappa_amp); }
  double g_sup() const { return std::abs(g0) + std::abs(g_amp) + std::abs(g_reg); }
  double bprime_min() const { return bprime0 - std::abs(bprime_amp); }
  double bprime_max() const { return bprime0 + std::abs(bprime_amp); }
};

ModelSpec build_porous_media_model(const PorousMediaParams& p);

// Sharp constant of the scalar inequality
// (|a|^{r-1}a - |b|^{r-1}b)(a - b) >= c_r |a - b|^{r+1}:  c_r = 2^{1-r}.
inline double monotonicity_constant(double r) { return std::pow(2.0, 1.0 - r); }

// Banded generator: within |i-j| <= band_m, downward rates M and upward rates
// M - drift_gap, constant in x.  Lyapunov function f(i) = i^2.
RateMatrix rate_matrix_banded(int band_m, double rate_M, double drift_gap, int s_max);

// Heavy-tail generator: q_ij = level * j^{-(1+delta)} with
// level = (lo + hi)/2, all j != i.  Lyapunov function f(i) = i^{delta/2}.
RateMatrix rate_matrix_decay(double delta, double lo, double hi, int s_max);

// Dense table for small regime counts; bound_L = max row sum.
RateMatrix rate_matrix_table(const std::vector<std::vector<double>>& q);

std::function<double(int)> lyapunov_f_banded();
std::function<double(int)> lyapunov_f_decay(double delta);

// Jump coefficients.  Additive: H = z c_H phi_k; damped: H = z c_H x/(1+|x|_H);
// large jumps J = min(z, z_cap) c_J phi_k with phi_k the k-th orthonormal
// direction of H.  Attaching updates the declared assumption constants and
// rejects parameters that break the growth or dissipativity conditions.
struct JumpCoefParams {
  enum class Choice { kOff, kAdditive, kDamped };
  Choice choice = Choice::kOff;
  double c_H = 0.1;
  double c_J = 0.2;
  int mode_k = 1;
  double z_cap = 2.0;
};

void attach_jump_coefs(ModelSpec& model, const JumpCoefParams& jumps, const LevyMeasure& levy);

}  // namespace rsspde
