#include "rsspde/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void validate_small(const SmallJumpSpec& s) {
  require(s.alpha > 0.0 && s.alpha < 2.0, "small jumps: alpha must lie in (0, 2)");
  require(s.scale > 0.0, "small jumps: scale must be positive");
}

}  // namespace

double LevyMeasure::small_mass(double eps) const {
  if (!small.enabled) return 0.0;
  validate_small(small);
  require(eps > 0.0 && eps < 1.0, "small jumps: eps_trunc must lie in (0, 1)");
  // 2 * scale * int_eps^1 z^{-1-a} dz
  return 2.0 * small.scale * (std::pow(eps, -small.alpha) - 1.0) / small.alpha;
}

double LevyMeasure::small_mean(double eps) const {
  (void)eps;
  return 0.0;  // symmetric measure
}

double LevyMeasure::small_second_moment() const {
  if (!small.enabled) return 0.0;
  validate_small(small);
  // 2 * scale * int_0^1 z^{1-a} dz
  return 2.0 * small.scale / (2.0 - small.alpha);
}

double LevyMeasure::small_abs_moment(double p) const {
  if (!small.enabled) return 0.0;
  validate_small(small);
  require(p > small.alpha, "small jumps: moment order must exceed alpha");
  return 2.0 * small.scale / (p - small.alpha);
}

double LevyMeasure::small_second_moment_above(double eps) const {
  if (!small.enabled) return 0.0;
  validate_small(small);
  require(eps > 0.0 && eps < 1.0, "small jumps: truncation must lie in (0,1)");
  // int_{eps<=|z|<1} z^2 nu(dz) = 2 scale (1 - eps^{2-a}) / (2 - a)
  return 2.0 * small.scale * (1.0 - std::pow(eps, 2.0 - small.alpha)) / (2.0 - small.alpha);
}

double LevyMeasure::sample_small_magnitude(double eps, double u) const {
  // CDF on [eps, 1): F(z) = (eps^-a - z^-a) / (eps^-a - 1)
  double ea = std::pow(eps, -small.alpha);
  return std::pow(ea - u * (ea - 1.0), -1.0 / small.alpha);
}

double LevyMeasure::small_integrate(const std::function<double(double)>& f, double rel_tol,
                                    double z_floor) const {
  if (!small.enabled) return 0.0;
  validate_small(small);
  // substitute z = e^y: integral of [f(z) + f(-z)] scale e^{-a y} dy on [ln z_floor, 0]
  double a = small.alpha;
  double scale = small.scale;
  auto g = [&](double y) {
    double z = std::exp(y);
    return (f(z) + f(-z)) * scale * std::exp(-a * y);
  };
  return adaptive_simpson(g, std::log(z_floor), 0.0, rel_tol);
}

double LevyMeasure::large_integrate(const std::function<double(double)>& f) const {
  if (!large.enabled || large.rate <= 0.0) return 0.0;
  require(large.z_max > 1.0, "large jumps: z_max must exceed 1");
  static thread_local std::vector<double> nodes, weights;
  if (nodes.size() != 32) gauss_legendre(32, nodes, weights);
  double lo = 1.0, hi = large.z_max;
  CompensatedSum s;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    double z = 0.5 * (hi - lo) * nodes[q] + 0.5 * (hi + lo);
    s.add(weights[q] * f(z));
  }
  // marks are uniform: density 1/(z_max - 1), total mass = rate
  return large.rate * 0.5 * s.value();
}

std::vector<LevyMeasure::Node> LevyMeasure::truncated_nodes(double eps) const {
  std::vector<Node> out;
  if (!small.enabled) return out;
  validate_small(small);
  // composite Gauss-Legendre on log|z| over [ln eps, 0], both signs
  const int panels = 8, per_panel = 8;
  std::vector<double> nodes, weights;
  gauss_legendre(per_panel, nodes, weights);
  double y0 = std::log(eps);
  double a = small.alpha;
  for (int p = 0; p < panels; ++p) {
    double lo = y0 + (0.0 - y0) * p / panels;
    double hi = y0 + (0.0 - y0) * (p + 1) / panels;
    for (int q = 0; q < per_panel; ++q) {
      double y = 0.5 * (hi - lo) * nodes[q] + 0.5 * (hi + lo);
      double w = 0.5 * (hi - lo) * weights[q] * small.scale * std::exp(-a * y);
      double z = std::exp(y);
      out.push_back({z, w});
      out.push_back({-z, w});
    }
  }
  return out;
}

std::vector<double> wiener_increment(const NoiseConfig& cfg, double dt, Rng& rng) {
  if (dt < 0.0 || !std::isfinite(dt)) {
    throw std::invalid_argument("wiener_increment: dt must be finite and nonnegative");
  }
  std::vector<double> out(static_cast<std::size_t>(cfg.n_modes), 0.0);
  // consume one keyed slot per call even for dt == 0 to keep call indices aligned
  uint64_t slot = rng.take_slot();
  if (dt == 0.0) return out;
  double root = std::sqrt(dt);
  for (int j = 0; j < cfg.n_modes; ++j) {
    out[static_cast<std::size_t>(j)] = root * rng.gaussian_at(slot, static_cast<uint32_t>(j));
  }
  return out;
}

SmallJumpWindow small_jump_increments(const NoiseConfig& cfg, double t0, double t1, Rng& rng) {
  if (t1 < t0) throw std::invalid_argument("small_jump_increments: t1 < t0");
  SmallJumpWindow win;
  const LevyMeasure& levy = cfg.levy;
  win.eps = levy.eps_trunc;
  if (!levy.small.enabled) return win;
  win.mean_rate = levy.small_mean(levy.eps_trunc);
  double mass = levy.small_mass(levy.eps_trunc);
  if (mass <= 0.0) return win;
  double t = t0;
  while (true) {
    t += rng.next_exponential(mass);
    if (t >= t1) break;
    double u = rng.next_double();
    double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
    win.events.push_back({t, sign * levy.sample_small_magnitude(levy.eps_trunc, u)});
  }
  return win;
}

std::vector<JumpEvent> large_jump_events(const NoiseConfig& cfg, double t0, double t1, Rng& rng) {
  if (t1 < t0) throw std::invalid_argument("large_jump_events: t1 < t0");
  std::vector<JumpEvent> out;
  const LargeJumpSpec& spec = cfg.levy.large;
  if (!spec.enabled || spec.rate <= 0.0) return out;
  require(spec.z_max > 1.0, "large jumps: z_max must exceed 1");
  double t = t0;
  while (true) {
    t += rng.next_exponential(spec.rate);
    if (t >= t1) break;
    double z = 1.0 + rng.next_double() * (spec.z_max - 1.0);
    out.push_back({t, z});
  }
  return out;
}

}  // namespace rsspde
