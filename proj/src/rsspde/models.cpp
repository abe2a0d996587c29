#include "rsspde/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {
constexpr double kPi = std::numbers::pi;

double regime_phase(int regime) { return 0.5 * kPi * ((regime - 1) % 4); }
}  // namespace

SineBasis::SineBasis(int n_modes, int n_grid) : n_modes_(n_modes), n_grid_(n_grid) {
  if (n_modes < 1) throw std::invalid_argument("SineBasis: n_modes must be >= 1");
  if (n_grid < n_modes) throw std::invalid_argument("SineBasis: n_grid must be >= n_modes");
  table_.resize(static_cast<size_t>(n_grid) * n_modes);
  const double sqrt2 = std::sqrt(2.0);
  for (int m = 0; m < n_grid; ++m) {
    const double x = kPi * (m + 1) / (n_grid + 1);
    for (int j = 0; j < n_modes; ++j) {
      table_[static_cast<size_t>(m) * n_modes + j] = sqrt2 * std::sin((j + 1) * x);
    }
  }
}

void SineBasis::to_grid(const std::vector<double>& coeffs, std::vector<double>& grid) const {
  grid.assign(n_grid_, 0.0);
  for (int m = 0; m < n_grid_; ++m) {
    const double* row = &table_[static_cast<size_t>(m) * n_modes_];
    double acc = 0.0;
    for (int j = 0; j < n_modes_; ++j) acc += coeffs[j] * row[j];
    grid[m] = acc;
  }
}

void SineBasis::to_coeffs(const std::vector<double>& grid, std::vector<double>& coeffs) const {
  coeffs.assign(n_modes_, 0.0);
  const double w = 1.0 / (n_grid_ + 1);
  for (int m = 0; m < n_grid_; ++m) {
    const double* row = &table_[static_cast<size_t>(m) * n_modes_];
    const double f = grid[m] * w;
    for (int j = 0; j < n_modes_; ++j) coeffs[j] += f * row[j];
  }
}

double SineBasis::mean_abs_pow(const std::vector<double>& grid, double p) const {
  CompensatedSum acc;
  for (int m = 0; m < n_grid_; ++m) acc.add(std::pow(std::abs(grid[m]), p));
  return acc.value() / (n_grid_ + 1);
}

ModelSpec build_linear_model(const LinearModelParams& p) {
  if (p.n_modes < 1) throw std::invalid_argument("linear model: n_modes must be >= 1");
  if (p.lambda0 <= 0.0) throw std::invalid_argument("linear model: lambda0 must be > 0");
  if (p.sigma0 < 0.0) throw std::invalid_argument("linear model: sigma0 must be >= 0");
  if (p.period <= 0.0) throw std::invalid_argument("linear model: period must be > 0");

  const int n = p.n_modes;
  std::vector<double> lambda(n), sigma(n);
  for (int j = 0; j < n; ++j) {
    lambda[j] = p.lambda0 * std::pow(j + 1, p.lambda_pow);
    sigma[j] = p.sigma0 * std::pow(j + 1, -p.sigma_pow);
  }

  ModelSpec m;
  m.n_modes = n;
  m.period = p.period;
  m.h_weight.assign(n, 1.0);
  m.inv_sqrt_hw.assign(n, 1.0);
  m.v_norm = [n](const GalerkinState& x) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += x[j] * x[j];
    return std::sqrt(s);
  };
  m.vstar_norm = m.v_norm;  // V = H = V*
  m.drift = [lambda, n](double, const GalerkinState& x, int) {
    std::vector<double> a(n);
    for (int j = 0; j < n; ++j) a[j] = -lambda[j] * x[j];
    return a;
  };
  m.diffusion = [sigma](double, const GalerkinState&, int) { return sigma; };
  m.wiener_enabled = p.sigma0 > 0.0;  // sigma0 == 0: deterministic drift flow

  double lam_min = lambda[0], lam_max = lambda[0];
  double b2 = 0.0, floor_rate = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    lam_min = std::min(lam_min, lambda[j]);
    lam_max = std::max(lam_max, lambda[j]);
    b2 += sigma[j] * sigma[j];
    floor_rate = std::min(floor_rate, 2.0 * lambda[j] * sigma[j] * sigma[j]);
  }
  floor_rate *= 0.999;  // keep the monotonicity margin strictly positive

  AssumptionConstants& k = m.constants;
  k.alpha = 2.0;
  k.beta = 0.0;
  k.theta = 2.0 * lam_min;
  k.K = 0.0;
  k.gamma_growth = 0.0;
  k.c = std::max(lam_max * lam_max, 1e-2);
  k.C_sup = b2;
  k.lambda_exp = 2.0;
  k.rho_const = 0.0;
  k.lip_B = 0.0;  // constant diffusion
  k.bn_multiplier = [sigma](int) { return sigma; };
  k.delta_n = [floor_rate](int) { return floor_rate; };
  k.ktilde_n = [](int) { return 0.0; };
  return m;
}

ModelSpec build_porous_media_model(const PorousMediaParams& p) {
  if (p.n_modes < 1) throw std::invalid_argument("porous media: n_modes must be >= 1");
  if (p.r_exponent <= 1.0) throw std::invalid_argument("porous media: r must be > 1");
  if (p.gamma_frac <= 0.0 || p.gamma_frac > 1.0)
    throw std::invalid_argument("porous media: gamma must lie in (0, 1]");
  if (p.s_decay <= 0.5 || p.s_decay > p.gamma_frac)
    throw std::invalid_argument("porous media: s must lie in (1/2, gamma]");
  if (p.kappa_min() <= 0.0)
    throw std::invalid_argument("porous media: kappa0 - |kappa_amp| must be > 0");
  if (p.bprime_min() < 0.0)
    throw std::invalid_argument("porous media: bprime0 - |bprime_amp| must be >= 0");
  if (p.period <= 0.0) throw std::invalid_argument("porous media: period must be > 0");
  const int n = p.n_modes;
  const int n_grid = p.n_grid == 0 ? 2 * n : p.n_grid;
  // 2x collocation keeps the cubic nonlinearity and the V-norm alias-free
  if (n_grid < 2 * n)
    throw std::invalid_argument("porous media: n_grid must be >= 2 * n_modes");

  const double r = p.r_exponent;
  const double gamma = p.gamma_frac;
  const double s = p.s_decay;
  const double period = p.period;
  auto basis = std::make_shared<SineBasis>(n, n_grid);

  const double kappa0 = p.kappa0, kappa_amp = p.kappa_amp;
  const double g0 = p.g0, g_amp = p.g_amp, g_reg = p.g_reg;
  const double bp0 = p.bprime0, bp_amp = p.bprime_amp;
  auto kappa_fn = [kappa0, kappa_amp, period](double t, int i) {
    return kappa0 + kappa_amp * std::sin(2.0 * kPi * t / period + regime_phase(i));
  };
  auto g_fn = [g0, g_amp, g_reg, period](double t, int i) {
    return g0 + g_amp * std::sin(2.0 * kPi * t / period) + ((i - 1) % 2 ? g_reg : 0.0);
  };
  auto bprime_fn = [bp0, bp_amp, period](double t, int i) {
    return bp0 + bp_amp * std::sin(2.0 * kPi * t / period + regime_phase(i));
  };

  std::vector<double> lam_gamma(n), hw(n), inv_shw(n), mode_decay(n), damp_w(n);
  for (int j = 0; j < n; ++j) {
    const double jj = j + 1;
    lam_gamma[j] = std::pow(jj, 2.0 * gamma);  // lambda_j^gamma, lambda_j = j^2
    hw[j] = 1.0 / lam_gamma[j];
    inv_shw[j] = std::pow(jj, gamma);
    mode_decay[j] = std::pow(jj, -s);
    damp_w[j] = std::pow(jj, -2.0 * gamma);
  }

  ModelSpec m;
  m.n_modes = n;
  m.period = period;
  m.h_weight = hw;
  m.inv_sqrt_hw = inv_shw;
  m.v_norm = [basis, r](const GalerkinState& x) {
    std::vector<double> grid;
    basis->to_grid(x, grid);
    return std::pow(basis->mean_abs_pow(grid, r + 1.0), 1.0 / (r + 1.0));
  };
  // a drift value a acts by <a, v> = <theta_a, v>_{L2(dmu)} with coefficients
  // h_w a_j, so |a|_{V*} is the conjugate Lebesgue norm of theta_a
  m.vstar_norm = [basis, hw, r, n](const GalerkinState& a) {
    const double q = (r + 1.0) / r;
    std::vector<double> weighted(n), grid;
    for (int j = 0; j < n; ++j) weighted[j] = hw[j] * a[j];
    basis->to_grid(weighted, grid);
    return std::pow(basis->mean_abs_pow(grid, q), 1.0 / q);
  };
  m.drift = [basis, kappa_fn, g_fn, lam_gamma, r, n](double t, const GalerkinState& x, int i) {
    std::vector<double> grid, psi_c;
    basis->to_grid(x, grid);
    for (double& u : grid) u = std::copysign(std::pow(std::abs(u), r), u);
    basis->to_coeffs(grid, psi_c);
    const double kap = kappa_fn(t, i), g = g_fn(t, i);
    std::vector<double> a(n);
    for (int j = 0; j < n; ++j) a[j] = -kap * lam_gamma[j] * psi_c[j] + g * x[j];
    return a;
  };
  m.diffusion = [bprime_fn, mode_decay, damp_w, n](double t, const GalerkinState& x, int i) {
    const double bp = bprime_fn(t, i);
    std::vector<double> mult(n);
    for (int j = 0; j < n; ++j)
      mult[j] = bp / (1.0 + damp_w[j] * std::abs(x[j])) * mode_decay[j];
    return mult;
  };
  m.wiener_enabled = p.bprime_max() > 0.0;
  m.kappa_fn = kappa_fn;
  m.g_fn = g_fn;

  const double k1 = p.kappa_min(), k2 = p.kappa_max();
  const double g_sup = p.g_sup();
  const double bp_min = p.bprime_min(), bp_max = p.bprime_max();
  const double b_l2 = bp_max * bp_max * zeta_sum(2.0 * s);
  const double lip_b2 = bp_max * bp_max * zeta_sum(2.0 * s + 2.0 * gamma);
  const double q = (r + 1.0) / r;  // conjugate exponent of alpha
  const double growth_c = std::pow(2.0, q - 1.0) * std::pow(g_sup, q);
  const double growth_slope =
      std::pow(2.0, q - 1.0) * (std::pow(k2, q) + std::pow(g_sup, q));
  const double cr = monotonicity_constant(r);
  const double lam_exp = std::max(2.0, r);

  AssumptionConstants& k = m.constants;
  k.alpha = r + 1.0;
  k.beta = 0.0;
  k.theta = 2.0 * k1;
  k.K = 2.0 * g_sup + lip_b2;
  k.gamma_growth = 0.0;
  k.c = std::max(2.0 * g_sup, growth_slope);
  k.C_sup = std::max(b_l2, growth_c);
  k.lambda_exp = lam_exp;
  k.rho_const = 0.0;
  k.lip_B = std::sqrt(lip_b2);
  k.bn_multiplier = [mode_decay, bp_min, n](int level) {
    std::vector<double> bn(n);
    for (int j = 0; j < n; ++j) bn[j] = bp_min / (1.0 + level) * mode_decay[j];
    return bn;
  };
  k.delta_n = [k1, cr, bp_min, lam_exp](int level) {
    // 0.9 cushion: the sharp constant is attained only in degenerate corners
    return 0.9 * 2.0 * k1 * cr * std::pow(bp_min / (1.0 + level), lam_exp);
  };
  const double ktilde = k.K;
  k.ktilde_n = [ktilde](int) { return ktilde; };
  return m;
}

RateMatrix rate_matrix_banded(int band_m, double rate_M, double drift_gap, int s_max) {
  if (band_m < 1) throw std::invalid_argument("banded rates: band_m must be >= 1");
  if (rate_M <= 0.0) throw std::invalid_argument("banded rates: rate_M must be > 0");
  if (drift_gap <= 0.0 || drift_gap > rate_M)
    throw std::invalid_argument("banded rates: drift_gap must lie in (0, rate_M]");
  if (s_max < 2) throw std::invalid_argument("banded rates: s_max must be >= 2");
  RateMatrix q;
  q.num_regimes = s_max;
  // 5% headroom over the exact max row sum: thinning stays exact and the
  // row-sum domination check keeps a strictly positive margin
  q.bound_L = 1.05 * band_m * (2.0 * rate_M - drift_gap);
  q.rates = [band_m, rate_M, drift_gap, s_max](const GalerkinState&, int i, int j) {
    if (j < 1 || j > s_max || j == i || std::abs(i - j) > band_m) return 0.0;
    return j < i ? rate_M : rate_M - drift_gap;
  };
  return q;
}

RateMatrix rate_matrix_decay(double delta, double lo, double hi, int s_max) {
  if (delta <= 0.0) throw std::invalid_argument("decay rates: delta must be > 0");
  if (lo <= 0.0 || hi < lo)
    throw std::invalid_argument("decay rates: need 0 < lo <= hi");
  if (s_max < 2) throw std::invalid_argument("decay rates: s_max must be >= 2");
  const double mid = 0.5 * (lo + hi);
  RateMatrix q;
  q.num_regimes = s_max;
  q.bound_L = hi * zeta_sum(1.0 + delta);
  q.rates = [mid, delta, s_max](const GalerkinState&, int i, int j) {
    if (j < 1 || j > s_max || j == i) return 0.0;
    return mid * std::pow(j, -(1.0 + delta));
  };
  return q;
}

RateMatrix rate_matrix_table(const std::vector<std::vector<double>>& q) {
  const int s = static_cast<int>(q.size());
  if (s < 2) throw std::invalid_argument("rate table: need at least 2 regimes");
  double bound = 0.0;
  for (int i = 0; i < s; ++i) {
    if (static_cast<int>(q[i].size()) != s)
      throw std::invalid_argument("rate table: matrix must be square");
    double row = 0.0;
    for (int j = 0; j < s; ++j) {
      if (j == i) continue;
      if (!(q[i][j] >= 0.0))
        throw std::invalid_argument("rate table: off-diagonal rates must be >= 0");
      row += q[i][j];
    }
    bound = std::max(bound, row);
  }
  RateMatrix out;
  out.num_regimes = s;
  out.bound_L = bound;
  auto table = q;
  out.rates = [table, s](const GalerkinState&, int i, int j) {
    if (i < 1 || i > s || j < 1 || j > s || i == j) return 0.0;
    return table[i - 1][j - 1];
  };
  return out;
}

std::function<double(int)> lyapunov_f_banded() {
  return [](int i) { return static_cast<double>(i) * i; };
}

std::function<double(int)> lyapunov_f_decay(double delta) {
  return [delta](int i) { return std::pow(i, 0.5 * delta); };
}

void attach_jump_coefs(ModelSpec& model, const JumpCoefParams& jumps, const LevyMeasure& levy) {
  model.levy = levy;
  model.small_jump = nullptr;
  model.large_jump = nullptr;
  model.small_jump_linear_in_z = false;
  model.comp_nodes.clear();
  if (jumps.choice == JumpCoefParams::Choice::kOff || !levy.any()) return;

  if (jumps.c_H < 0.0 || jumps.c_J < 0.0)
    throw std::invalid_argument("jump coefs: c_H and c_J must be >= 0");
  if (jumps.mode_k < 1 || jumps.mode_k > model.n_modes)
    throw std::invalid_argument("jump coefs: mode_k out of range");
  if (jumps.z_cap < 1.0) throw std::invalid_argument("jump coefs: z_cap must be >= 1");
  if (model.constants.alpha <= 1.0)
    throw std::invalid_argument("jump coefs: dissipativity exponent too weak for jumps");

  // e_k direction normalized in H
  std::vector<double> phi(model.n_modes, 0.0);
  phi[jumps.mode_k - 1] = model.inv_sqrt_hw[jumps.mode_k - 1];

  const double c_h = jumps.c_H;
  const double c_j = jumps.c_J;
  const double z_cap = jumps.z_cap;
  const int n = model.n_modes;

  if (levy.small.enabled && c_h > 0.0) {
    if (jumps.choice == JumpCoefParams::Choice::kAdditive) {
      model.small_jump = [phi, c_h, n](double, const GalerkinState&, int, double z) {
        std::vector<double> h(n);
        for (int j = 0; j < n; ++j) h[j] = z * c_h * phi[j];
        return h;
      };
    } else {
      const std::vector<double> hw = model.h_weight;
      model.small_jump = [hw, c_h, n](double, const GalerkinState& x, int, double z) {
        double norm2 = 0.0;
        for (int j = 0; j < n; ++j) norm2 += hw[j] * x[j] * x[j];
        const double f = z * c_h / (1.0 + std::sqrt(norm2));
        std::vector<double> h(n);
        for (int j = 0; j < n; ++j) h[j] = f * x[j];
        return h;
      };
    }
    model.small_jump_linear_in_z = true;
    model.comp_nodes = levy.truncated_nodes(levy.eps_trunc);

    const double hc = c_h * c_h * levy.small_second_moment();
    model.constants.C_sup += hc;
    model.constants.c += hc;
    if (jumps.choice == JumpCoefParams::Choice::kDamped) {
      // x / (1 + |x|_H) is 2-Lipschitz
      model.constants.K += 4.0 * hc;
    }
    const double ktilde = model.constants.K;
    model.constants.ktilde_n = [ktilde](int) { return ktilde; };
  }

  if (levy.large.enabled && c_j > 0.0) {
    model.large_jump = [phi, c_j, z_cap, n](double, const GalerkinState&, int, double z) {
      std::vector<double> out(n);
      const double f = std::min(z, z_cap) * c_j;
      for (int j = 0; j < n; ++j) out[j] = f * phi[j];
      return out;
    };
  }
}

}  // namespace rsspde
