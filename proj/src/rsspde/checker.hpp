#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rsspde/spde.hpp"

namespace rsspde {

// A concrete input that attains (or violates) a condition's worst margin.
// Witnesses carry complete inputs so a reported failure can be re-evaluated.
struct Witness {
  double t = 0.0;
  int regime = 1;
  GalerkinState x;
  GalerkinState y;  // empty for single-state conditions
  double lhs = 0.0;
  double rhs = 0.0;
  std::string note;
};

struct ConditionReport {
  std::string name;
  bool pass = true;
  bool skipped = false;
  int samples = 0;
  double min_margin = 0.0;  // rhs - lhs at the worst sample; < 0 means violated
  Witness worst;
  std::string detail;
};

struct CheckReport {
  std::vector<ConditionReport> conditions;

  bool pass() const;
  void append(CheckReport other);
  std::string summary() const;
};

struct CheckOptions {
  int n_samples = 10000;
  double radius = 5.0;          // sampling ball in H for the global conditions
  int n_levels = 4;             // locality radii 1..n_levels for the level checks
  std::vector<int> sup_levels = {10, 20, 40};  // trend levels for the sup tests
  uint64_t seed = 1;
  int workers = 0;
};

// Monotonicity, coercivity and growth inequalities on random states.
// Sampling falsifies; a clean report says "no violation found", not "proved".
CheckReport check_A1(const ModelSpec& model, const CheckOptions& opts);

// Diffusion Lipschitz bound, nondegeneracy floors B_n, and the nondegenerate
// local monotonicity inequality, per radius level.
CheckReport check_A2(const ModelSpec& model, const CheckOptions& opts);

// Switching-rate conditions (row-sum bound, irreducibility, Lyapunov drift of
// the regime chain for the supplied f), the drift-regularity probe, and the
// large-|v| dissipativity trend.
CheckReport check_Q_and_D(const ModelSpec& model, const std::function<double(int)>& lyap_f,
                          const CheckOptions& opts);

CheckReport check_all(const ModelSpec& model, const std::function<double(int)>& lyap_f,
                      const CheckOptions& opts);

// int_{|z|<1} |H(t,x,i,z)|_H^2 nu(dz), exact for coefficients linear in z
double small_jump_energy(const ModelSpec& model, double t, const GalerkinState& x, int regime);
// same for |H(t,x,i,z) - H(t,y,i,z)|_H^2
double small_jump_energy_diff(const ModelSpec& model, double t, const GalerkinState& x,
                              const GalerkinState& y, int regime);

// a random state with |x|_H <= radius (occasionally a single-mode spike,
// which probes the near-equality corners of the inequalities)
GalerkinState random_state(Rng& rng, const ModelSpec& model, double radius);

}  // namespace rsspde
