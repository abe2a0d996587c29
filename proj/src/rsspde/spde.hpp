#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsspde/noise.hpp"
#include "rsspde/regime.hpp"
#include "rsspde/rng.hpp"

namespace rsspde {

struct HybridSample {
  double t = 0.0;
  GalerkinState state;
  int regime = 1;
};

// Constants the model declares for the well-posedness/ergodicity conditions
// the checker verifies.  Levels n index the nondegeneracy floors B_n.
struct AssumptionConstants {
  double alpha = 2.0;         // coercivity exponent
  double beta = 0.0;          // growth exponent
  double theta = 0.0;         // coercivity constant
  double K = 0.0;             // local monotonicity constant
  double gamma_growth = 0.0;  // V-growth coefficient in (G2)
  double c = 0.0;             // shared lower-order constant
  double C_sup = 0.0;         // sup_t of the locally integrable bound C(t)
  double lambda_exp = 2.0;    // exponent in the nondegenerate monotonicity bound
  double rho_const = 0.0;     // rho(v) == rho_const for the built-in models
  double lip_B = 0.0;         // diffusion Lipschitz constant in L2(H)

  // per-level diagonal of B_n in the orthonormal basis of H
  std::function<std::vector<double>(int)> bn_multiplier;
  std::function<double(int)> delta_n;
  std::function<double(int)> ktilde_n;
};

// A Galerkin model.  Coefficient vectors live in the L2 eigenbasis e_j; the
// state space H weighs mode j by h_weight[j] (so |x|_H^2 = sum h_w x_j^2) and
// the orthonormal basis of H is h_weight[j]^{-1/2} e_j.  Cylindrical noise
// and diagonal operators (diffusion multipliers, B_n) are expressed in that
// orthonormal basis; converting an increment to e_j coordinates multiplies by
// inv_sqrt_hw[j].  The duality pairing <A, v> extends <.,.>_H and uses the
// same weights.
struct ModelSpec {
  int n_modes = 0;
  double period = 1.0;  // common period of the time-dependent coefficients

  std::vector<double> h_weight;
  std::vector<double> inv_sqrt_hw;
  std::function<double(const GalerkinState&)> v_norm;
  // norm of a drift value as an element of V* (defaults to |.|_H when unset)
  std::function<double(const GalerkinState&)> vstar_norm;

  // A(t, x, i): e_j coordinates of the drift, as an element of V*
  std::function<std::vector<double>(double, const GalerkinState&, int)> drift;
  // per-mode diffusion multipliers (orthonormal basis of H)
  std::function<std::vector<double>(double, const GalerkinState&, int)> diffusion;
  // H(t, x, i, z) and J(t, x, i, z): e_j coordinates of jump coefficients
  std::function<std::vector<double>(double, const GalerkinState&, int, double)> small_jump;
  std::function<std::vector<double>(double, const GalerkinState&, int, double)> large_jump;
  bool small_jump_linear_in_z = false;

  bool wiener_enabled = true;
  LevyMeasure levy;
  RateMatrix rates;

  AssumptionConstants constants;

  // introspection used by the checker for the porous-media inequalities;
  // unset for models without a kappa/g decomposition
  std::function<double(double, int)> kappa_fn;
  std::function<double(double, int)> g_fn;

  // cached quadrature nodes for the small-jump compensator
  std::vector<LevyMeasure::Node> comp_nodes;

  double h_norm2(const GalerkinState& x) const {
    double s = 0.0;
    for (int j = 0; j < n_modes; ++j) s += h_weight[j] * x[j] * x[j];
    return s;
  }
  double h_norm(const GalerkinState& x) const { return std::sqrt(h_norm2(x)); }
  double h_inner(const GalerkinState& a, const GalerkinState& b) const {
    double s = 0.0;
    for (int j = 0; j < n_modes; ++j) s += h_weight[j] * a[j] * b[j];
    return s;
  }
  // <A, v> duality pairing; identical weights to <.,.>_H by construction
  double duality(const GalerkinState& a, const GalerkinState& v) const {
    return h_inner(a, v);
  }
};

void validate_model(const ModelSpec& model);

struct StepControl {
  double dt_max = 1e-3;
  double implicit_tol = 1e-10;  // H-norm of the fixed-point residual
  int implicit_max_iters = 200;
  bool taming_fallback = false;
};

struct StepNoise {
  std::span<const double> dW;           // empty means no Wiener term
  std::span<const JumpEvent> small;     // events inside [t, t+dt)
  // optional additional drift (e_j coordinates), applied explicitly at the
  // left endpoint: coupling and control feedback terms enter here so their
  // Girsanov/steering bookkeeping sees exactly what the integrator added
  std::span<const double> extra_drift;
};

struct StepStats {
  int iterations = 0;
  bool tamed = false;
  bool fault = false;
  std::string fault_detail;
};

// One drift-implicit Euler step on [t, t+dt] with frozen regime:
//   X+ = X + A(t+dt, X+, i) dt + B(t, X, i) dW + sum_m H(t_m, X, i, z_m)
//        - dt * int_{eps<=|z|<1} H(t, X, i, z) nu(dz).
// Regime switches and large jumps must sit on step boundaries.
HybridSample step(const HybridSample& from, double dt, const ModelSpec& model,
                  const StepControl& ctrl, const StepNoise& noise, StepStats* stats = nullptr);

struct Event {
  enum class Kind { kSwitch, kBigJump, kTruncation, kFault };
  double t = 0.0;
  Kind kind = Kind::kSwitch;
  std::string detail;
};

const char* event_kind_name(Event::Kind k);

struct TrajectoryResult {
  uint32_t stream_id = 0;
  std::vector<HybridSample> samples;  // at the requested observation times
  std::vector<Event> events;
  // full path at every grid node when dense output is requested; event times
  // appear twice (left limit first, post-event value second)
  std::vector<HybridSample> dense;
  bool fault = false;
  int truncations = 0;
  int max_implicit_iters = 0;
  int tamed_steps = 0;
};

struct TrajectoryOptions {
  std::vector<double> obs_times;
  bool dense = false;
};

TrajectoryResult run_trajectory(const GalerkinState& x0, int i0, double t_end,
                                const ModelSpec& model, const StepControl& ctrl,
                                const TrajectoryOptions& opts, uint64_t seed,
                                uint32_t stream_id);

struct EnsembleOptions {
  int n_traj = 1;
  int workers = 0;  // 0: hardware concurrency
  std::vector<double> obs_times;
  bool dense = false;
  uint32_t stream_offset = 0;
  // optional per-trajectory initial condition; default repeats (x0, i0)
  std::function<std::pair<GalerkinState, int>(uint32_t)> initial;
};

struct EnsembleResult {
  std::vector<TrajectoryResult> trajectories;  // index == stream_id - offset
  int faults = 0;
  int truncations = 0;
};

EnsembleResult run_ensemble(const GalerkinState& x0, int i0, double t_end,
                            const ModelSpec& model, const StepControl& ctrl,
                            const EnsembleOptions& opts, uint64_t seed);

// Deterministic worker pool; fn(i) runs once for each i in [0, n), results
// must be written to slot i by the caller's closure.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Per-observation-time first/second moments, reduced in trajectory order.
struct EnsembleSummary {
  std::vector<double> times;
  std::vector<int> n_valid;
  std::vector<std::vector<double>> mode_mean;  // [time][mode]
  std::vector<std::vector<double>> mode_var;
  std::vector<double> h2_mean;
  std::vector<double> h2_se;
};

EnsembleSummary summarize(const EnsembleResult& ens, const ModelSpec& model);

}  // namespace rsspde
