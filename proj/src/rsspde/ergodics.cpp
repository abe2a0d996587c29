#include "rsspde/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "rsspde/checker.hpp"
#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

double l2norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double generator_apply_V(double t, const GalerkinState& x, int regime, const ModelSpec& model,
                         const LyapunovSpec& spec, bool truncated_small) {
  GalerkinState a = model.drift(t, x, regime);
  double val = 2.0 * model.duality(a, x);

  if (model.wiener_enabled && model.diffusion) {
    val += l2norm2(model.diffusion(t, x, regime));
  }

  if (model.levy.small.enabled && model.small_jump) {
    if (model.small_jump_linear_in_z) {
      double m2 = truncated_small ? model.levy.small_second_moment_above(model.levy.eps_trunc)
                                  : model.levy.small_second_moment();
      val += m2 * model.h_norm2(model.small_jump(t, x, regime, 1.0));
    } else if (truncated_small) {
      std::vector<LevyMeasure::Node> nodes = model.comp_nodes;
      if (nodes.empty()) nodes = model.levy.truncated_nodes(model.levy.eps_trunc);
      for (const auto& nd : nodes) val += nd.w * model.h_norm2(model.small_jump(t, x, regime, nd.z));
    } else {
      val += model.levy.small_integrate(
          [&](double z) { return model.h_norm2(model.small_jump(t, x, regime, z)); }, 1e-9);
    }
  }

  if (model.levy.large.enabled && model.large_jump) {
    val += model.levy.large_integrate([&](double z) {
      GalerkinState jmp = model.large_jump(t, x, regime, z);
      return model.h_norm2(jmp) + 2.0 * model.h_inner(x, jmp);
    });
  }

  if (model.rates.enabled() && spec.f) {
    double fi = spec.f(regime);
    CompensatedSum sw;
    for (int j = 1; j <= model.rates.num_regimes; ++j) {
      if (j == regime) continue;
      double q = model.rates.rates(x, regime, j);
      if (q > 0.0) sw.add((spec.f(j) - fi) * q);
    }
    val += sw.value();
  }
  return val;
}

ResidualSeries drift_martingale_residual(const TrajectoryResult& path, const ModelSpec& model,
                                         const LyapunovSpec& spec) {
  require(!path.dense.empty(), "drift_martingale_residual: dense output required");
  ResidualSeries out;
  out.t.reserve(path.dense.size());
  out.residual.reserve(path.dense.size());

  const HybridSample& first = path.dense.front();
  double v0 = spec.value(model, first.state, first.regime);
  out.t.push_back(first.t);
  out.residual.push_back(0.0);

  CompensatedSum integral;
  for (std::size_t k = 1; k < path.dense.size(); ++k) {
    const HybridSample& prev = path.dense[k - 1];
    const HybridSample& cur = path.dense[k];
    double dt = cur.t - prev.t;
    if (dt > 0.0) {
      integral.add(dt * generator_apply_V(prev.t, prev.state, prev.regime, model, spec, true));
    }
    out.t.push_back(cur.t);
    out.residual.push_back(spec.value(model, cur.state, cur.regime) - v0 - integral.value());
  }
  return out;
}

double residual_at(const ResidualSeries& series, double t) {
  require(!series.t.empty(), "residual_at: empty series");
  auto it = std::upper_bound(series.t.begin(), series.t.end(), t + 1e-12);
  if (it == series.t.begin()) throw std::invalid_argument("residual_at: t before first node");
  std::size_t idx = static_cast<std::size_t>(it - series.t.begin()) - 1;
  return series.residual[idx];
}

OccupationProfile occupation_profile(const EnsembleResult& ens, const ModelSpec& model,
                                     const std::vector<int>& levels, double burn_in) {
  require(!levels.empty(), "occupation_profile: no levels");
  OccupationProfile out;
  out.levels = levels;
  out.fraction.assign(levels.size(), 0.0);

  std::vector<CompensatedSum> hit(levels.size());
  CompensatedSum total;
  for (const TrajectoryResult& traj : ens.trajectories) {
    if (traj.fault) continue;
    require(!traj.dense.empty(), "occupation_profile: dense output required");
    for (std::size_t k = 0; k + 1 < traj.dense.size(); ++k) {
      const HybridSample& node = traj.dense[k];
      double dt = traj.dense[k + 1].t - node.t;
      if (dt <= 0.0 || node.t < burn_in) continue;
      double depth = model.v_norm(node.state) + node.regime;
      total.add(dt);
      for (std::size_t l = 0; l < levels.size(); ++l) {
        if (depth > levels[l]) hit[l].add(dt);
      }
    }
  }
  require(total.value() > 0.0, "occupation_profile: no time after burn-in");
  for (std::size_t l = 0; l < levels.size(); ++l) out.fraction[l] = hit[l].value() / total.value();
  return out;
}

std::vector<double> dissipativity_profile(const ModelSpec& model, const LyapunovSpec& spec,
                                          const std::vector<int>& levels, int n_samples,
                                          uint64_t seed, int workers) {
  require(n_samples > 0, "dissipativity_profile: n_samples must be positive");
  int num_regimes = model.rates.enabled() ? model.rates.num_regimes : 1;
  std::vector<double> out(levels.size(), -std::numeric_limits<double>::infinity());

  for (std::size_t l = 0; l < levels.size(); ++l) {
    // pre-draw inputs single-threaded, evaluate in parallel, reduce by max
    Rng rng(seed, 300 + static_cast<uint32_t>(l), Channel::kProbe);
    std::vector<double> ts(n_samples), excess(n_samples);
    std::vector<int> regimes(n_samples);
    std::vector<GalerkinState> dirs(n_samples);
    for (int s = 0; s < n_samples; ++s) {
      ts[s] = rng.next_double() * model.period;
      regimes[s] = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(num_regimes));
      // bias toward the boundary of the region, where the sup is attained
      double u = rng.next_double();
      excess[s] = u * u;
      dirs[s] = random_state(rng, model, 1.0);
    }
    std::vector<double> vals(n_samples, -std::numeric_limits<double>::infinity());
    parallel_for(n_samples, workers, [&](int s) {
      double dir_norm = model.v_norm(dirs[s]);
      if (!(dir_norm > 0.0)) return;
      double base = std::max(0.0, static_cast<double>(levels[l]) - regimes[s]);
      double target = (base + 0.01) * (1.0 + excess[s]);
      GalerkinState v = dirs[s];
      for (double& c : v) c *= target / dir_norm;
      vals[s] = generator_apply_V(ts[s], v, regimes[s], model, spec, false);
    });
    for (double v : vals) out[l] = std::max(out[l], v);
  }
  return out;
}

std::vector<double> phase_features(const ModelSpec& model, const GalerkinState& x) {
  int k = std::min(4, model.n_modes);
  std::vector<double> f(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j < k; ++j) f[j] = x[j];
  f[k] = model.h_norm(x);
  return f;
}

namespace {

// Pooled pairwise Euclidean distances, row-major upper triangle (i < j).
std::vector<float> distance_matrix(const std::vector<std::vector<double>>& pooled, int workers) {
  const int n = static_cast<int>(pooled.size());
  std::vector<float> d(static_cast<std::size_t>(n) * n, 0.0f);
  parallel_for(n, workers, [&](int i) {
    const std::vector<double>& a = pooled[i];
    for (int j = i + 1; j < n; ++j) {
      const std::vector<double>& b = pooled[j];
      double s = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        double diff = a[c] - b[c];
        s += diff * diff;
      }
      d[static_cast<std::size_t>(i) * n + j] = static_cast<float>(std::sqrt(s));
    }
  });
  return d;
}

// 2 E|A-B| - E|A-A'| - E|B-B'| from the pooled triangle and 0/1 labels.
double energy_stat(const std::vector<float>& d, const std::vector<uint8_t>& label, int n,
                   int n_a) {
  double uxx = 0.0, uyy = 0.0, utot = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* row = d.data() + static_cast<std::size_t>(i) * n;
    for (int j = i + 1; j < n; ++j) {
      double v = row[j];
      utot += v;
      if (label[i] == label[j]) {
        if (label[i] == 0) {
          uxx += v;
        } else {
          uyy += v;
        }
      }
    }
  }
  double uxy = utot - uxx - uyy;
  double na = n_a, nb = n - n_a;
  return 2.0 * uxy / (na * nb) - 2.0 * uxx / (na * na) - 2.0 * uyy / (nb * nb);
}

void shuffle_labels(std::vector<uint8_t>& label, Rng& rng) {
  for (std::size_t i = label.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
    std::swap(label[i], label[j]);
  }
}

}  // namespace

TwoSampleResult energy_permutation_test(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& b, int n_perms,
                                        uint64_t seed, int workers) {
  require(a.size() >= 2 && b.size() >= 2, "energy test: need at least two samples per group");
  require(n_perms >= 1, "energy test: n_perms must be positive");
  const int n_a = static_cast<int>(a.size());
  const int n = n_a + static_cast<int>(b.size());
  std::vector<std::vector<double>> pooled;
  pooled.reserve(n);
  for (const auto& v : a) pooled.push_back(v);
  for (const auto& v : b) pooled.push_back(v);
  for (const auto& v : pooled) {
    require(v.size() == pooled.front().size(), "energy test: feature lengths differ");
  }

  std::vector<float> d = distance_matrix(pooled, workers);

  std::vector<uint8_t> base(n, 1);
  std::fill(base.begin(), base.begin() + n_a, uint8_t{0});

  TwoSampleResult out;
  out.n_a = n_a;
  out.n_b = n - n_a;
  out.stat = energy_stat(d, base, n, n_a);

  std::vector<double> perm_stats(n_perms);
  parallel_for(n_perms, workers, [&](int r) {
    Rng rng(seed, static_cast<uint32_t>(r + 1), Channel::kPermutation);
    std::vector<uint8_t> label = base;
    shuffle_labels(label, rng);
    perm_stats[r] = energy_stat(d, label, n, n_a);
  });

  int geq = 0;
  for (double s : perm_stats) {
    if (s >= out.stat - 1e-12) ++geq;
  }
  out.p_value = static_cast<double>(1 + geq) / static_cast<double>(1 + n_perms);
  return out;
}

TwoSampleResult tv_permutation_test(const std::vector<int>& a, const std::vector<int>& b,
                                    int num_regimes, int n_perms, uint64_t seed) {
  require(!a.empty() && !b.empty(), "tv test: empty group");
  require(num_regimes >= 1, "tv test: num_regimes must be positive");
  require(n_perms >= 1, "tv test: n_perms must be positive");
  const int n_a = static_cast<int>(a.size());
  const int n = n_a + static_cast<int>(b.size());
  std::vector<int> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (int r : pooled) {
    require(r >= 1 && r <= num_regimes, "tv test: regime label out of range");
  }

  auto tv_stat = [&](const std::vector<uint8_t>& label) {
    std::vector<int> ca(num_regimes, 0), cb(num_regimes, 0);
    for (int i = 0; i < n; ++i) {
      if (label[i] == 0) {
        ++ca[pooled[i] - 1];
      } else {
        ++cb[pooled[i] - 1];
      }
    }
    double s = 0.0;
    for (int r = 0; r < num_regimes; ++r) {
      s += std::abs(static_cast<double>(ca[r]) / n_a - static_cast<double>(cb[r]) / (n - n_a));
    }
    return 0.5 * s;
  };

  std::vector<uint8_t> base(n, 1);
  std::fill(base.begin(), base.begin() + n_a, uint8_t{0});

  TwoSampleResult out;
  out.n_a = n_a;
  out.n_b = n - n_a;
  out.stat = tv_stat(base);

  int geq = 0;
  for (int r = 0; r < n_perms; ++r) {
    Rng rng(seed, static_cast<uint32_t>(r + 1), Channel::kPermutation);
    std::vector<uint8_t> label = base;
    shuffle_labels(label, rng);
    if (tv_stat(label) >= out.stat - 1e-12) ++geq;
  }
  out.p_value = static_cast<double>(1 + geq) / static_cast<double>(1 + n_perms);
  return out;
}

namespace {

// Index of the ensemble observation at time target, or -1.
int find_obs_index(const std::vector<HybridSample>& samples, double target) {
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (std::abs(samples[k].t - target) <= 1e-9 * std::max(1.0, std::abs(target))) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

struct PhaseCell {
  std::vector<std::vector<double>> features;
  std::vector<int> regimes;
};

// Observations at time index `obs` from one trajectory half (even/odd index).
PhaseCell extract_cell(const EnsembleResult& ens, const ModelSpec& model, int obs, int parity) {
  PhaseCell cell;
  for (std::size_t i = static_cast<std::size_t>(parity); i < ens.trajectories.size(); i += 2) {
    const TrajectoryResult& traj = ens.trajectories[i];
    if (traj.fault) continue;
    const HybridSample& s = traj.samples.at(static_cast<std::size_t>(obs));
    cell.features.push_back(phase_features(model, s.state));
    cell.regimes.push_back(s.regime);
  }
  return cell;
}

uint64_t mix_seed(uint64_t seed, uint64_t idx) { return seed ^ (0x9E3779B97F4A7C15ull * (idx + 1)); }

}  // namespace

std::vector<PhaseComparison> periodicity_test(const EnsembleResult& ens, const ModelSpec& model,
                                              const PeriodicityOptions& opts) {
  require(!opts.phases.empty(), "periodicity test: no phases");
  require(opts.k_min < opts.k_max, "periodicity test: need k_min < k_max");
  require(ens.trajectories.size() >= 8, "periodicity test: ensemble too small");
  const std::vector<HybridSample>& ref = ens.trajectories.front().samples;

  auto obs_index = [&](double phase, int k) {
    double target = phase + k * model.period;
    int idx = find_obs_index(ref, target);
    require(idx >= 0, "periodicity test: no observation at phase " + std::to_string(phase) +
                          " + " + std::to_string(k) + " periods");
    return idx;
  };

  std::vector<PhaseComparison> out;
  uint64_t cmp_idx = 0;
  for (double phase : opts.phases) {
    for (int ka = opts.k_min; ka <= opts.k_max; ++ka) {
      for (int kb = ka + 1; kb <= opts.k_max; ++kb) {
        PhaseCell ca = extract_cell(ens, model, obs_index(phase, ka), 0);
        PhaseCell cb = extract_cell(ens, model, obs_index(phase, kb), 1);
        PhaseComparison cmp;
        cmp.phase_a = cmp.phase_b = phase;
        cmp.k_a = ka;
        cmp.k_b = kb;
        cmp.energy = energy_permutation_test(ca.features, cb.features, opts.n_perms,
                                             mix_seed(opts.seed, cmp_idx), opts.workers);
        if (model.rates.enabled()) {
          cmp.tv = tv_permutation_test(ca.regimes, cb.regimes, model.rates.num_regimes,
                                       opts.n_perms, mix_seed(opts.seed, cmp_idx) + 1);
        }
        out.push_back(std::move(cmp));
        cmp_idx += 2;
      }
    }
  }

  // positive control: phases exactly half a period apart must separate
  int k_mid = (opts.k_min + opts.k_max) / 2;
  for (std::size_t p = 0; p < opts.phases.size(); ++p) {
    for (std::size_t q = 0; q < opts.phases.size(); ++q) {
      if (p == q) continue;
      double gap = opts.phases[q] - opts.phases[p];
      if (std::abs(gap - 0.5 * model.period) > 1e-9 * model.period) continue;
      PhaseCell ca = extract_cell(ens, model, obs_index(opts.phases[p], k_mid), 0);
      PhaseCell cb = extract_cell(ens, model, obs_index(opts.phases[q], k_mid), 1);
      PhaseComparison cmp;
      cmp.phase_a = opts.phases[p];
      cmp.phase_b = opts.phases[q];
      cmp.k_a = cmp.k_b = k_mid;
      cmp.cross = true;
      cmp.energy = energy_permutation_test(ca.features, cb.features, opts.n_perms,
                                           mix_seed(opts.seed, cmp_idx), opts.workers);
      if (model.rates.enabled()) {
        cmp.tv = tv_permutation_test(ca.regimes, cb.regimes, model.rates.num_regimes, opts.n_perms,
                                     mix_seed(opts.seed, cmp_idx) + 1);
      }
      out.push_back(std::move(cmp));
      cmp_idx += 2;
    }
  }
  return out;
}

ErgodicAverageReport ergodic_average_test(const ModelSpec& model, const GalerkinState& x0, int i0,
                                          const std::function<double(const HybridSample&)>& phi,
                                          const ErgodicAverageOptions& opts) {
  require(opts.n_terms >= 1, "ergodic average: n_terms must be positive");
  require(opts.n_replicas >= 2, "ergodic average: need at least two replicas");
  require(!opts.checkpoints.empty(), "ergodic average: no checkpoints");
  for (int c : opts.checkpoints) {
    require(c >= 1 && c <= opts.n_terms, "ergodic average: checkpoint out of range");
  }
  require(std::is_sorted(opts.checkpoints.begin(), opts.checkpoints.end()),
          "ergodic average: checkpoints must be sorted");

  double burn = opts.burn_periods * model.period;
  std::vector<double> obs_times(opts.n_terms);
  for (int i = 0; i < opts.n_terms; ++i) obs_times[i] = burn + opts.phase + (i + 1) * model.period;

  EnsembleOptions eopts;
  eopts.n_traj = opts.n_replicas;
  eopts.workers = opts.workers;
  eopts.obs_times = obs_times;
  EnsembleResult ens = run_ensemble(x0, i0, obs_times.back(), model, opts.ctrl, eopts, opts.seed);
  if (ens.faults > 0) {
    throw std::runtime_error("ergodic average: " + std::to_string(ens.faults) +
                             " replica(s) faulted");
  }

  ErgodicAverageReport rep;
  rep.checkpoints = opts.checkpoints;
  rep.averages.assign(opts.n_replicas, std::vector<double>(opts.checkpoints.size(), 0.0));
  for (int r = 0; r < opts.n_replicas; ++r) {
    const TrajectoryResult& traj = ens.trajectories[r];
    CompensatedSum acc;
    std::size_t next_cp = 0;
    for (int i = 0; i < opts.n_terms && next_cp < opts.checkpoints.size(); ++i) {
      acc.add(phi(traj.samples.at(static_cast<std::size_t>(i))));
      if (i + 1 == opts.checkpoints[next_cp]) {
        rep.averages[r][next_cp] = acc.value() / (i + 1);
        ++next_cp;
      }
    }
  }

  rep.across_mean.resize(opts.checkpoints.size());
  rep.across_var.resize(opts.checkpoints.size());
  rep.across_se.resize(opts.checkpoints.size());
  std::vector<double> col(opts.n_replicas);
  for (std::size_t c = 0; c < opts.checkpoints.size(); ++c) {
    for (int r = 0; r < opts.n_replicas; ++r) col[r] = rep.averages[r][c];
    MeanVar mv = mean_var(col);
    rep.across_mean[c] = mv.mean;
    rep.across_var[c] = mv.var;
    rep.across_se[c] = mv.se();
  }
  return rep;
}

std::function<double(const HybridSample&)> obs_h2_clipped(const ModelSpec& model, double clip) {
  require(clip > 0.0, "obs_h2_clipped: clip must be positive");
  return [w = model.h_weight, clip](const HybridSample& s) {
    double v = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) v += w[j] * s.state[j] * s.state[j];
    return std::min(v, clip);
  };
}

std::function<double(const HybridSample&)> obs_mode_clipped(int mode, double clip) {
  require(mode >= 1, "obs_mode_clipped: mode is 1-based");
  require(clip > 0.0, "obs_mode_clipped: clip must be positive");
  return [mode, clip](const HybridSample& s) {
    return std::clamp(s.state.at(static_cast<std::size_t>(mode - 1)), -clip, clip);
  };
}

std::function<double(const HybridSample&)> obs_regime_indicator(int regime) {
  return [regime](const HybridSample& s) { return s.regime == regime ? 1.0 : 0.0; };
}

}  // namespace rsspde
