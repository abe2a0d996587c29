#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsspde/spde.hpp"

namespace rsspde {

// Hybrid Lyapunov function V(x, i) = |x|_H^2 + f(i); f nonnegative and
// nondecreasing in the regime index (empty f means the |x|_H^2 part alone).
struct LyapunovSpec {
  std::function<double(int)> f;

  double value(const ModelSpec& model, const GalerkinState& x, int regime) const {
    return model.h_norm2(x) + (f ? f(regime) : 0.0);
  }
};

// Extended generator applied to V at (t, x, i):
//   2 <A(t,x,i), x> + |B(t,x,i)|_{L2}^2
//   + int_{|z|<1} |H(t,x,i,z)|_H^2 nu(dz)
//   + int_{|z|>=1} (|J(t,x,i,z)|_H^2 + 2 <x, J(t,x,i,z)>_H) nu(dz)
//   + sum_{j != i} (f(j) - f(i)) q_ij(x).
// With truncated_small the small-jump integral runs over the simulated range
// {eps_trunc <= |z| < 1}, which is what the martingale residual of a simulated
// path must use; pass false for the full theoretical measure.
double generator_apply_V(double t, const GalerkinState& x, int regime, const ModelSpec& model,
                         const LyapunovSpec& spec, bool truncated_small = true);

// Dynkin residual along one densely recorded path:
//   r(t_k) = V(X_{t_k}, L_{t_k}) - V(X_0, L_0) - sum_{m<k} dt_m AV(t_m, X_{t_m}, L_{t_m})
// with the sum over left endpoints of the grid intervals.  The residual is a
// mean-zero martingale up to time-discretization bias.
struct ResidualSeries {
  std::vector<double> t;
  std::vector<double> residual;
};

ResidualSeries drift_martingale_residual(const TrajectoryResult& path, const ModelSpec& model,
                                         const LyapunovSpec& spec);

// Residual at the last recorded node with node time <= t (post-event value).
double residual_at(const ResidualSeries& series, double t);

// Time fraction the ensemble spends in {|X|_V + regime > level} after burn_in,
// pooled over trajectories (dense output required).
struct OccupationProfile {
  std::vector<int> levels;
  std::vector<double> fraction;
};

OccupationProfile occupation_profile(const EnsembleResult& ens, const ModelSpec& model,
                                     const std::vector<int>& levels, double burn_in);

// Sampled sup of AV over {|v|_V + regime > level}, one entry per level; the
// full (untruncated) jump measure, states concentrated near the boundary where
// the sup is attained.  Negative, decreasing values certify an inward drift
// that deepens with the level.
std::vector<double> dissipativity_profile(const ModelSpec& model, const LyapunovSpec& spec,
                                          const std::vector<int>& levels, int n_samples,
                                          uint64_t seed, int workers = 0);

// Feature projection used by the distribution tests: the first four e_j
// coordinates (fewer when n_modes < 4) followed by |x|_H.
std::vector<double> phase_features(const ModelSpec& model, const GalerkinState& x);

struct TwoSampleResult {
  double stat = 0.0;     // observed statistic
  double p_value = 1.0;  // (1 + #{permuted >= observed}) / (1 + n_perms)
  int n_a = 0;
  int n_b = 0;
};

// Energy-distance permutation test between two samples of equal-length
// feature vectors.  The statistic 2 E|A-B| - E|A-A'| - E|B-B'| is zero exactly
// when the two sample sets coincide and positive when they separate.
TwoSampleResult energy_permutation_test(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& b, int n_perms,
                                        uint64_t seed, int workers = 0);

// Total-variation permutation test between two samples of regime labels.
TwoSampleResult tv_permutation_test(const std::vector<int>& a, const std::vector<int>& b,
                                    int num_regimes, int n_perms, uint64_t seed);

// One two-sample comparison between phase cells (s_a + k_a L) and
// (s_b + k_b L); cross marks the positive control across distinct phases.
struct PhaseComparison {
  double phase_a = 0.0;
  double phase_b = 0.0;
  int k_a = 0;
  int k_b = 0;
  bool cross = false;
  TwoSampleResult energy;
  TwoSampleResult tv;
};

struct PeriodicityOptions {
  std::vector<double> phases;  // offsets s within one period
  int k_min = 10;              // compared period indices k in [k_min, k_max]
  int k_max = 14;
  int n_perms = 999;
  uint64_t seed = 1;
  int workers = 0;
};

// Same-phase comparisons (s, k) vs (s, k') for every pair k < k' — the law of
// X(s + kL) should stabilize in k — plus one cross comparison per pair of
// phases exactly half a period apart, which should separate.  The two groups
// of every comparison are disjoint trajectory halves (even vs odd index), so
// each test sees independent samples.  The ensemble must contain an
// observation at every s + k*period.
std::vector<PhaseComparison> periodicity_test(const EnsembleResult& ens, const ModelSpec& model,
                                              const PeriodicityOptions& opts);

// Replica-resolved n-term averages (1/n) sum_i phi(X(s + i L), L(s + i L)).
struct ErgodicAverageReport {
  std::vector<int> checkpoints;
  std::vector<std::vector<double>> averages;  // [replica][checkpoint]
  std::vector<double> across_mean;            // per checkpoint, over replicas
  std::vector<double> across_var;
  std::vector<double> across_se;
};

struct ErgodicAverageOptions {
  double phase = 0.0;
  int n_terms = 200;
  std::vector<int> checkpoints = {50, 200};
  int n_replicas = 100;
  int burn_periods = 10;
  uint64_t seed = 1;
  int workers = 0;
  StepControl ctrl;
};

ErgodicAverageReport ergodic_average_test(const ModelSpec& model, const GalerkinState& x0, int i0,
                                          const std::function<double(const HybridSample&)>& phi,
                                          const ErgodicAverageOptions& opts);

// Bounded observables for the averaging experiments.
std::function<double(const HybridSample&)> obs_h2_clipped(const ModelSpec& model, double clip);
std::function<double(const HybridSample&)> obs_mode_clipped(int mode, double clip);
std::function<double(const HybridSample&)> obs_regime_indicator(int regime);

}  // namespace rsspde
