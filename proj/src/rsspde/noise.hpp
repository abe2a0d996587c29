#pragma once

#include <functional>
#include <vector>

#include "rsspde/rng.hpp"

namespace rsspde {

// Jump activity nu(dz) = scale * |z|^{-1-alpha} dz on 0 < |z| < 1 (both signs,
// symmetric), so the mass near 0 is infinite for alpha > 0 and simulation
// truncates at |z| >= eps_trunc with the bias pushed into a compensator drift.
struct SmallJumpSpec {
  bool enabled = false;
  double alpha = 0.5;   // in (0, 2)
  double scale = 1.0;
};

// Finite activity on |z| >= 1: rate * (mark density), marks ~ U[1, z_max].
struct LargeJumpSpec {
  bool enabled = false;
  double rate = 0.0;
  double z_max = 2.0;
};

struct LevyMeasure {
  SmallJumpSpec small;
  LargeJumpSpec large;
  double eps_trunc = 1e-3;

  bool any() const { return small.enabled || large.enabled; }

  // mass of {eps <= |z| < 1}
  double small_mass(double eps) const;
  // first moment of {eps <= |z| < 1} (zero: the measure is symmetric)
  double small_mean(double eps) const;
  // second moment of the whole small-jump range {0 < |z| < 1} (closed form)
  double small_second_moment() const;
  // p-th absolute moment of {0 < |z| < 1}; finite iff p > alpha
  double small_abs_moment(double p) const;
  // second moment of the simulated range {eps <= |z| < 1}
  double small_second_moment_above(double eps) const;
  // inverse CDF of |z| restricted to [eps, 1)
  double sample_small_magnitude(double eps, double u) const;

  // integral of f against nu restricted to {z_floor <= |z| < 1}, adaptive on
  // log|z| with the given relative tolerance
  double small_integrate(const std::function<double(double)>& f, double rel_tol,
                         double z_floor = 1e-10) const;
  // integral of f against nu restricted to {|z| >= 1} (fixed Gauss-Legendre)
  double large_integrate(const std::function<double(double)>& f) const;

  // fixed nodes/weights with sum_q w_q f(z_q) ~ integral over {eps <= |z| < 1};
  // used for the per-step compensator so the hot path stays allocation-free
  struct Node {
    double z;
    double w;
  };
  std::vector<Node> truncated_nodes(double eps) const;
};

struct NoiseConfig {
  int n_modes = 0;
  LevyMeasure levy;
};

struct JumpEvent {
  double t;
  double z;
};

// Wiener increments, variance dt per mode.  Mode j of call k is a pure
// function of (seed, stream, k, j): runs at different truncation levels see
// the same per-mode noise, and the k-th call is replayable.
std::vector<double> wiener_increment(const NoiseConfig& cfg, double dt, Rng& rng);

struct SmallJumpWindow {
  std::vector<JumpEvent> events;  // sorted by time
  double eps = 0.0;               // truncation threshold used
  double mean_rate = 0.0;         // integral of z nu(dz) over {eps <= |z| < 1}, per unit time
};

// Marked events of the truncated small-jump process on [t0, t1).
SmallJumpWindow small_jump_increments(const NoiseConfig& cfg, double t0, double t1, Rng& rng);

// Marked events of the compound-Poisson large-jump process on [t0, t1).
std::vector<JumpEvent> large_jump_events(const NoiseConfig& cfg, double t0, double t1, Rng& rng);

}  // namespace rsspde
