#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "rsspde/spde.hpp"

namespace rsspde {

// Configuration of the coupled pair (X, Y): Y carries the extra drift
// |x-y|^{a'} (X-Y)/|X-Y|^eps pulling it toward X, and the Girsanov density R
// reweights Y back to the plain dynamics.
struct CouplingConfig {
  double eps = 0.5;    // singularity exponent of the coupling drift
  int n_stop = 100;    // coupled once |X-Y|_H <= 1/n_stop
  double t_end = 1.0;
  StepControl ctrl;
  bool keep_record = false;  // store per-step noise/states for the second-pass density
  std::vector<double> obs_times;  // path samples to record (with keep_record or not)
};

struct CouplingDerived {
  double alpha_prime = 0.0;  // (lambda+2-alpha)/(2 lambda): the Holder exponent
  double r = 0.0;            // (alpha - lambda(1-eps))/2
};

// Checks the admissible window 0 v (alpha-2) < lambda (1-eps) < (2 alpha-2) ^ alpha
// and alpha' in (0, eps); throws std::invalid_argument outside it.
CouplingDerived validate_coupling(const ModelSpec& model, const CouplingConfig& cfg);

// Everything needed to replay one step's density increment offline.
struct CoupledStepRecord {
  double t = 0.0;
  double dt = 0.0;
  std::vector<double> dw;      // shared Wiener increments (orthonormal basis of H)
  GalerkinState x_left;
  GalerkinState y_left;
};

struct CoupledPairResult {
  HybridSample x_final;
  HybridSample y_final;
  double tau = std::numeric_limits<double>::infinity();  // grid time of coupling
  bool coupled = false;
  double log_r = 0.0;  // Girsanov exponent accumulated up to tau ^ t_end
  double r = 1.0;
  double sep0 = 0.0;   // |x - y|_H at t = 0
  bool clamp_hit = false;  // singularity guard engaged (separation under the cutoff)
  uint64_t noise_hash_x = 0;  // FNV-1a over the noise record each path consumed
  uint64_t noise_hash_y = 0;
  std::vector<CoupledStepRecord> record;  // nonempty only with keep_record
  std::vector<HybridSample> x_path;       // at the requested observation times
  std::vector<HybridSample> y_path;
  bool fault = false;
  std::string fault_detail;
};

// One coupled pair under shared Wiener and small-jump records; the regime is
// frozen at `regime` and large jumps must be disabled.  After the separation
// first drops to 1/n_stop the paths are glued (the coupling drift and the
// density integrand both vanish at zero separation) and X alone is integrated
// to t_end.
CoupledPairResult run_coupled_pair(const GalerkinState& x, const GalerkinState& y, int regime,
                                   const ModelSpec& model, const CouplingConfig& cfg,
                                   uint64_t seed, uint32_t stream_id);

// Second pass over the stored record; must reproduce result.log_r to 1e-8.
double recompute_log_r(const ModelSpec& model, const CouplingConfig& cfg,
                       const CoupledPairResult& result);

// Tail bound P(tau > t) <= e^{t Ktilde eps/2} / (t eps) |x-y|^{eps - alpha'}.
double coupling_tail_envelope(double t, double ktilde, double eps, double alpha_prime,
                              double sep0);

struct HolderPoint {
  double separation = 0.0;
  double coupled_estimate = 0.0;  // E[f(X_T)] - E[R_T f(Y_T)]
  double coupled_se = 0.0;
  double naive_estimate = 0.0;    // two independent plain ensembles
  double naive_se = 0.0;
  bool conclusive = false;        // |coupled_estimate| > 3 coupled_se
};

struct HolderProbeResult {
  std::vector<HolderPoint> points;
  double slope = 0.0;        // log-log regression of |estimate| on separation
  double slope_floor = 0.0;  // theoretical exponent (lambda+2-alpha)/(2 lambda)
  int n_conclusive = 0;
  bool conclusive = false;   // at least two conclusive points for the regression
};

// |P_{0,T} f(x) - P_{0,T} f(y)| over a grid of separations, estimated both by
// the coupled representation and by naive ensemble differencing.
HolderProbeResult holder_probe(const ModelSpec& model,
                               const std::function<double(const HybridSample&)>& f, int regime,
                               const std::vector<std::pair<GalerkinState, GalerkinState>>& pairs,
                               const CouplingConfig& cfg, int n_traj, uint64_t seed,
                               int workers = 0);

// Steered control probe: free dynamics to t1, cutoff at radius R, then the
// deterministic steered path y toward the target, and the stochastic run
// forced by the regularized open-loop control along y.
struct ControlProbeConfig {
  GalerkinState target;   // the point to reach at time t_end
  double t1 = 0.3;
  double t_end = 1.0;
  double m_factor = 6.0;  // M; requires m = 2M - (K + rho + 1) t_end > 0
  double radius = 5.0;    // R: cutoff applied to the state at t1
  double eps_reg = 1e-2;  // regularization of the feedback gain
  int n_level = 4;        // nondegeneracy level for the gain shaping
  double delta = 0.1;     // success threshold on the terminal miss
  StepControl ctrl;
};

struct ControlProbeResult {
  GalerkinState terminal;  // controlled state at t_end
  double miss = 0.0;       // |terminal - target|_H
  bool success = false;
  bool cutoff_applied = false;  // |X(t1)|_H exceeded R
  bool decay_ok = true;         // steered path obeyed the decay bound (5% slack)
  double decay_margin = std::numeric_limits<double>::infinity();
  double steered_gap = 0.0;  // |y(t_end) - target|_H of the deterministic stage
  bool fault = false;
};

// m = 2M - (K + rho + 1) t_end from the model constants; throws when <= 0.
double control_margin(const ModelSpec& model, const ControlProbeConfig& cfg);

ControlProbeResult control_probe(const GalerkinState& x, int regime, const ModelSpec& model,
                                 const ControlProbeConfig& cfg, uint64_t seed,
                                 uint32_t stream_id);

}  // namespace rsspde
