#include "rsspde/coupling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

uint64_t fnv1a(uint64_t h, const double* data, std::size_t n) {
  constexpr uint64_t kPrime = 0x100000001B3ull;
  for (std::size_t k = 0; k < n; ++k) {
    uint64_t bits = std::bit_cast<uint64_t>(data[k]);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFFu;
      h *= kPrime;
    }
  }
  return h;
}

constexpr uint64_t kFnvOffset = 0xCBF29CE484222325ull;

double sep_norm(const ModelSpec& model, const GalerkinState& a, const GalerkinState& b) {
  double s = 0.0;
  for (int j = 0; j < model.n_modes; ++j) {
    double d = a[j] - b[j];
    s += model.h_weight[j] * d * d;
  }
  return std::sqrt(s);
}

// Density increment of one step, from left-endpoint values:
//   u_j = amp * Dhat_j / (m_j * max(sep, cutoff)^eps),   Dhat_j = Delta_j / inv_sqrt_hw_j,
//   d log R = -sum_j u_j dW_j - dt/2 sum_j u_j^2.
double log_r_increment(const ModelSpec& model, int regime, double amp, double eps, double cutoff,
                       double t, const GalerkinState& x_left, const GalerkinState& y_left,
                       const std::vector<double>& dw, double dt, bool* degenerate) {
  double sep = sep_norm(model, x_left, y_left);
  double denom_sep = std::pow(std::max(sep, cutoff), eps);
  std::vector<double> mult = model.diffusion(t, y_left, regime);
  double ds = 0.0, quad = 0.0;
  for (int j = 0; j < model.n_modes; ++j) {
    double m = mult[j];
    if (!(std::abs(m) > 0.0)) {
      if (degenerate) *degenerate = true;
      return 0.0;
    }
    double u = amp * (x_left[j] - y_left[j]) / model.inv_sqrt_hw[j] / (m * denom_sep);
    ds += u * dw[j];
    quad += u * u;
  }
  return -ds - 0.5 * dt * quad;
}

}  // namespace

CouplingDerived validate_coupling(const ModelSpec& model, const CouplingConfig& cfg) {
  const double alpha = model.constants.alpha;
  const double lambda = model.constants.lambda_exp;
  require(cfg.eps > 0.0 && cfg.eps < 1.0, "coupling: eps must lie in (0,1)");
  require(cfg.n_stop >= 1, "coupling: n_stop must be positive");
  require(cfg.t_end > 0.0, "coupling: t_end must be positive");
  double lo = std::max(0.0, alpha - 2.0);
  double hi = std::min(2.0 * alpha - 2.0, alpha);
  require(lo < hi, "coupling: admissible eps window is empty for these exponents");
  double mid = lambda * (1.0 - cfg.eps);
  require(lo < mid && mid < hi,
          "coupling: eps violates 0 v (alpha-2) < lambda(1-eps) < (2 alpha-2) ^ alpha");
  CouplingDerived d;
  d.alpha_prime = (lambda + 2.0 - alpha) / (2.0 * lambda);
  d.r = 0.5 * (alpha - mid);
  require(d.alpha_prime > 0.0 && d.alpha_prime < cfg.eps,
          "coupling: the Holder exponent must lie in (0, eps)");
  return d;
}

double coupling_tail_envelope(double t, double ktilde, double eps, double alpha_prime,
                              double sep0) {
  require(t > 0.0, "envelope: t must be positive");
  return std::exp(t * ktilde * eps / 2.0) / (t * eps) * std::pow(sep0, eps - alpha_prime);
}

CoupledPairResult run_coupled_pair(const GalerkinState& x, const GalerkinState& y, int regime,
                                   const ModelSpec& model, const CouplingConfig& cfg,
                                   uint64_t seed, uint32_t stream_id) {
  CouplingDerived derived = validate_coupling(model, cfg);
  validate_model(model);
  require(static_cast<int>(x.size()) == model.n_modes && x.size() == y.size(),
          "coupled pair: state sizes must match n_modes");
  require(!model.levy.large.enabled, "coupled pair: large jumps must be disabled");
  require(model.wiener_enabled && static_cast<bool>(model.diffusion),
          "coupled pair: the density needs a nondegenerate Wiener term");

  const double cutoff = 1.0 / static_cast<double>(cfg.n_stop);
  CoupledPairResult out;
  out.sep0 = sep_norm(model, x, y);
  const double amp = out.sep0 > 0.0 ? std::pow(out.sep0, derived.alpha_prime) : 0.0;

  HybridSample xs{0.0, x, regime};
  HybridSample ys{0.0, y, regime};
  bool glued = out.sep0 <= cutoff;
  if (glued) {
    out.coupled = true;
    out.tau = 0.0;
    ys = xs;
  }

  out.noise_hash_x = kFnvOffset;
  out.noise_hash_y = kFnvOffset;

  TrajectoryStreams streams(seed, stream_id);
  NoiseConfig ncfg{model.n_modes, model.levy};

  const int n_steps =
      std::max(1, static_cast<int>(std::ceil(cfg.t_end / cfg.ctrl.dt_max - 1e-12)));
  std::vector<double> obs = cfg.obs_times;
  std::sort(obs.begin(), obs.end());
  std::size_t next_obs = 0;
  auto record_obs = [&](double t) {
    while (next_obs < obs.size() && obs[next_obs] <= t + 1e-12) {
      out.x_path.push_back(xs);
      out.y_path.push_back(ys);
      ++next_obs;
    }
  };
  record_obs(0.0);

  for (int k = 0; k < n_steps; ++k) {
    const double t0 = cfg.t_end * static_cast<double>(k) / static_cast<double>(n_steps);
    const double t1 = cfg.t_end * static_cast<double>(k + 1) / static_cast<double>(n_steps);
    const double dt = t1 - t0;
    xs.t = t0;
    ys.t = t0;

    std::vector<double> dw = wiener_increment(ncfg, dt, streams.wiener);
    SmallJumpWindow window = small_jump_increments(ncfg, t0, t1, streams.small_jump);

    out.noise_hash_x = fnv1a(out.noise_hash_x, dw.data(), dw.size());
    out.noise_hash_y = fnv1a(out.noise_hash_y, dw.data(), dw.size());
    for (const JumpEvent& ev : window.events) {
      out.noise_hash_x = fnv1a(out.noise_hash_x, &ev.t, 1);
      out.noise_hash_x = fnv1a(out.noise_hash_x, &ev.z, 1);
      out.noise_hash_y = fnv1a(out.noise_hash_y, &ev.t, 1);
      out.noise_hash_y = fnv1a(out.noise_hash_y, &ev.z, 1);
    }

    StepNoise xnoise;
    xnoise.dW = dw;
    xnoise.small = window.events;

    StepStats st;
    if (glued) {
      HybridSample xn = step(xs, dt, model, cfg.ctrl, xnoise, &st);
      if (st.fault) {
        out.fault = true;
        out.fault_detail = st.fault_detail;
        break;
      }
      xs = xn;
      ys = xs;
    } else {
      double sep = sep_norm(model, xs.state, ys.state);
      bool clamped = sep <= cutoff;
      if (clamped) out.clamp_hit = true;
      double denom_sep = std::pow(std::max(sep, cutoff), cfg.eps);

      std::vector<double> mult = model.diffusion(t0, ys.state, regime);
      std::vector<double> extra(static_cast<std::size_t>(model.n_modes));
      double u_dot_dw = 0.0, u_quad = 0.0;
      bool degenerate = false;
      for (int j = 0; j < model.n_modes; ++j) {
        double delta = xs.state[j] - ys.state[j];
        extra[j] = amp * delta / denom_sep;
        double m = mult[j];
        if (!(std::abs(m) > 0.0)) {
          degenerate = true;
          break;
        }
        double u = amp * (delta / model.inv_sqrt_hw[j]) / (m * denom_sep);
        u_dot_dw += u * dw[j];
        u_quad += u * u;
      }
      if (degenerate) {
        out.fault = true;
        out.fault_detail = "degenerate diffusion multiplier in the density";
        break;
      }

      if (cfg.keep_record) {
        out.record.push_back({t0, dt, dw, xs.state, ys.state});
      }

      StepNoise ynoise;
      ynoise.dW = dw;
      ynoise.small = window.events;
      ynoise.extra_drift = extra;

      HybridSample xn = step(xs, dt, model, cfg.ctrl, xnoise, &st);
      if (st.fault) {
        out.fault = true;
        out.fault_detail = st.fault_detail;
        break;
      }
      StepStats sty;
      HybridSample yn = step(ys, dt, model, cfg.ctrl, ynoise, &sty);
      if (sty.fault) {
        out.fault = true;
        out.fault_detail = sty.fault_detail;
        break;
      }
      out.log_r += -u_dot_dw - 0.5 * dt * u_quad;
      xs = xn;
      ys = yn;

      if (sep_norm(model, xs.state, ys.state) <= cutoff) {
        glued = true;
        out.coupled = true;
        out.tau = t1;
        ys = xs;
      }
    }
    record_obs(t1);
  }

  out.x_final = xs;
  out.y_final = ys;
  out.r = std::exp(out.log_r);
  return out;
}

double recompute_log_r(const ModelSpec& model, const CouplingConfig& cfg,
                       const CoupledPairResult& result) {
  CouplingDerived derived = validate_coupling(model, cfg);
  const double cutoff = 1.0 / static_cast<double>(cfg.n_stop);
  const double amp = result.sep0 > 0.0 ? std::pow(result.sep0, derived.alpha_prime) : 0.0;
  CompensatedSum acc;
  const int regime = result.x_final.regime;
  for (const CoupledStepRecord& rec : result.record) {
    bool degenerate = false;
    acc.add(log_r_increment(model, regime, amp, cfg.eps, cutoff, rec.t, rec.x_left, rec.y_left,
                            rec.dw, rec.dt, &degenerate));
    if (degenerate) throw std::runtime_error("recompute_log_r: degenerate diffusion multiplier");
  }
  return acc.value();
}

HolderProbeResult holder_probe(const ModelSpec& model,
                               const std::function<double(const HybridSample&)>& f, int regime,
                               const std::vector<std::pair<GalerkinState, GalerkinState>>& pairs,
                               const CouplingConfig& cfg, int n_traj, uint64_t seed,
                               int workers) {
  require(!pairs.empty(), "holder probe: no pairs");
  require(n_traj >= 2, "holder probe: need at least two trajectories");
  CouplingDerived derived = validate_coupling(model, cfg);

  HolderProbeResult out;
  out.slope_floor = derived.alpha_prime;

  TrajectoryOptions plain_opts;
  plain_opts.obs_times = {cfg.t_end};  // terminal value only
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const GalerkinState& x = pairs[p].first;
    const GalerkinState& y = pairs[p].second;

    std::vector<double> coupled(n_traj), from_x(n_traj), from_y(n_traj);
    std::vector<uint8_t> bad(static_cast<std::size_t>(n_traj), 0);
    uint32_t base = static_cast<uint32_t>(p) * static_cast<uint32_t>(3 * n_traj);
    parallel_for(n_traj, workers, [&](int i) {
      CoupledPairResult pair =
          run_coupled_pair(x, y, regime, model, cfg, seed, base + static_cast<uint32_t>(i));
      TrajectoryResult alt = run_trajectory(y, regime, cfg.t_end, model, cfg.ctrl, plain_opts,
                                            seed, base + static_cast<uint32_t>(n_traj + i));
      if (pair.fault || alt.fault || alt.samples.empty()) {
        bad[static_cast<std::size_t>(i)] = 1;
        return;
      }
      coupled[i] = f(pair.x_final) - pair.r * f(pair.y_final);
      from_x[i] = f(pair.x_final);
      from_y[i] = f(alt.samples.back());
    });

    std::vector<double> cvals, xvals, yvals;
    for (int i = 0; i < n_traj; ++i) {
      if (bad[static_cast<std::size_t>(i)]) continue;
      cvals.push_back(coupled[i]);
      xvals.push_back(from_x[i]);
      yvals.push_back(from_y[i]);
    }
    require(cvals.size() >= 2, "holder probe: too many faulted pairs");

    MeanVar mc = mean_var(cvals);
    MeanVar mx = mean_var(xvals);
    MeanVar my = mean_var(yvals);

    HolderPoint pt;
    pt.separation = sep_norm(model, x, y);
    pt.coupled_estimate = mc.mean;
    pt.coupled_se = mc.se();
    pt.naive_estimate = mx.mean - my.mean;
    pt.naive_se = std::sqrt(mx.se() * mx.se() + my.se() * my.se());
    pt.conclusive = std::abs(pt.coupled_estimate) > 3.0 * pt.coupled_se;
    out.points.push_back(pt);
  }

  std::vector<double> lx, ly;
  for (const HolderPoint& pt : out.points) {
    if (!pt.conclusive || pt.separation <= 0.0) continue;
    lx.push_back(std::log(pt.separation));
    ly.push_back(std::log(std::abs(pt.coupled_estimate)));
  }
  out.n_conclusive = static_cast<int>(lx.size());
  out.conclusive = out.n_conclusive >= 2;
  if (out.conclusive) out.slope = fit_line(lx, ly).second;
  return out;
}

double control_margin(const ModelSpec& model, const ControlProbeConfig& cfg) {
  double m = 2.0 * cfg.m_factor -
             (model.constants.K + model.constants.rho_const + 1.0) * cfg.t_end;
  require(m > 0.0, "control probe: need 2M > (K + rho + 1) T");
  return m;
}

ControlProbeResult control_probe(const GalerkinState& x, int regime, const ModelSpec& model,
                                 const ControlProbeConfig& cfg, uint64_t seed,
                                 uint32_t stream_id) {
  validate_model(model);
  require(static_cast<int>(x.size()) == model.n_modes, "control probe: x has wrong mode count");
  require(static_cast<int>(cfg.target.size()) == model.n_modes,
          "control probe: target has wrong mode count");
  require(cfg.t1 > 0.0 && cfg.t1 < cfg.t_end, "control probe: need 0 < t1 < t_end");
  require(!model.levy.large.enabled, "control probe: large jumps must be disabled");
  require(cfg.radius > 0.0, "control probe: radius must be positive");
  require(cfg.eps_reg > 0.0, "control probe: eps_reg must be positive");
  const double m = control_margin(model, cfg);

  std::vector<double> bn;
  if (model.constants.bn_multiplier) bn = model.constants.bn_multiplier(cfg.n_level);
  require(static_cast<int>(bn.size()) == model.n_modes,
          "control probe: the model declares no nondegeneracy floor");

  const int n_steps =
      std::max(2, static_cast<int>(std::ceil(cfg.t_end / cfg.ctrl.dt_max - 1e-12)));
  const double dt = cfg.t_end / static_cast<double>(n_steps);
  int k1 = std::clamp(static_cast<int>(std::lround(cfg.t1 / dt)), 1, n_steps - 1);
  const double t1 = dt * static_cast<double>(k1);
  const double horizon = cfg.t_end - t1;

  ControlProbeResult out;
  TrajectoryStreams streams(seed, stream_id);
  NoiseConfig ncfg{model.n_modes, model.levy};

  // stage 0: free dynamics on [0, t1]
  HybridSample cur{0.0, x, regime};
  for (int k = 0; k < k1; ++k) {
    double ta = dt * static_cast<double>(k);
    double tb = dt * static_cast<double>(k + 1);
    cur.t = ta;
    std::vector<double> dw;
    StepNoise noise;
    if (model.wiener_enabled) {
      dw = wiener_increment(ncfg, dt, streams.wiener);
      noise.dW = dw;
    }
    SmallJumpWindow window = small_jump_increments(ncfg, ta, tb, streams.small_jump);
    noise.small = window.events;
    StepStats st;
    HybridSample next = step(cur, dt, model, cfg.ctrl, noise, &st);
    if (st.fault) {
      out.fault = true;
      return out;
    }
    cur = next;
  }

  // cutoff: the steered path starts from X(t1) 1_{|X(t1)| <= R}
  GalerkinState y0 = cur.state;
  if (model.h_norm(y0) > cfg.radius) {
    std::fill(y0.begin(), y0.end(), 0.0);
    out.cutoff_applied = true;
  }

  // stage 1: deterministic steered path toward the target, with the decay
  // bound |y - target|^2 <= e^{-m (t-t1)/(T-t1)} (R + |target|)^2
  //                        + int_t1^t e^{-m (t-s)/(T-t1)} |A(s, target)|^2 ds
  // checked pointwise with 5% slack.
  ModelSpec det = model;
  det.wiener_enabled = false;
  det.levy.small.enabled = false;
  det.levy.large.enabled = false;

  const double gain = cfg.m_factor / horizon;
  std::vector<GalerkinState> steered(static_cast<std::size_t>(n_steps - k1 + 1));
  steered[0] = y0;
  HybridSample ycur{t1, y0, regime};
  double target_norm = model.h_norm(cfg.target);
  double weighted_integral = 0.0;  // int e^{-m(t-s)/horizon} |A(s,target)|^2 ds
  auto drift_norm2_at_target = [&](double s) {
    GalerkinState a = model.drift(s, cfg.target, regime);
    return model.h_norm2(a);
  };
  double prev_a2 = drift_norm2_at_target(t1);
  out.decay_margin = std::numeric_limits<double>::infinity();
  for (int k = k1; k < n_steps; ++k) {
    double ta = dt * static_cast<double>(k);
    double tb = dt * static_cast<double>(k + 1);
    ycur.t = ta;
    std::vector<double> extra(static_cast<std::size_t>(model.n_modes));
    for (int j = 0; j < model.n_modes; ++j) {
      extra[j] = -gain * (ycur.state[j] - cfg.target[j]);
    }
    StepNoise noise;
    noise.extra_drift = extra;
    StepStats st;
    HybridSample next = step(ycur, dt, det, cfg.ctrl, noise, &st);
    if (st.fault) {
      out.fault = true;
      return out;
    }
    ycur = next;
    steered[static_cast<std::size_t>(k - k1 + 1)] = ycur.state;

    double decay = std::exp(-m * dt / horizon);
    double a2 = drift_norm2_at_target(tb);
    weighted_integral = decay * weighted_integral + 0.5 * dt * (decay * prev_a2 + a2);
    prev_a2 = a2;

    GalerkinState dev = ycur.state;
    for (int j = 0; j < model.n_modes; ++j) dev[j] -= cfg.target[j];
    double lhs = model.h_norm2(dev);
    double base = cfg.radius + target_norm;
    double bound = std::exp(-m * (tb - t1) / horizon) * base * base + weighted_integral;
    double margin = 1.05 * bound - lhs;
    out.decay_margin = std::min(out.decay_margin, margin);
    if (margin < 0.0) out.decay_ok = false;
  }
  {
    GalerkinState dev = ycur.state;
    for (int j = 0; j < model.n_modes; ++j) dev[j] -= cfg.target[j];
    out.steered_gap = model.h_norm(dev);
  }

  // stage 2: stochastic run forced along the steered path by the regularized
  // open-loop control -(M/(T-t1)) (eps B_n^{-1} + I)^{-1} (y(t) - target)
  for (int k = k1; k < n_steps; ++k) {
    double ta = dt * static_cast<double>(k);
    double tb = dt * static_cast<double>(k + 1);
    cur.t = ta;
    const GalerkinState& ypath = steered[static_cast<std::size_t>(k - k1)];
    std::vector<double> extra(static_cast<std::size_t>(model.n_modes));
    for (int j = 0; j < model.n_modes; ++j) {
      double fac = bn[j] / (bn[j] + cfg.eps_reg);
      extra[j] = -gain * fac * (ypath[j] - cfg.target[j]);
    }
    std::vector<double> dw;
    StepNoise noise;
    noise.extra_drift = extra;
    if (model.wiener_enabled) {
      dw = wiener_increment(ncfg, dt, streams.wiener);
      noise.dW = dw;
    }
    SmallJumpWindow window = small_jump_increments(ncfg, ta, tb, streams.small_jump);
    noise.small = window.events;
    StepStats st;
    HybridSample next = step(cur, dt, model, cfg.ctrl, noise, &st);
    if (st.fault) {
      out.fault = true;
      return out;
    }
    cur = next;
  }

  out.terminal = cur.state;
  GalerkinState dev = cur.state;
  for (int j = 0; j < model.n_modes; ++j) dev[j] -= cfg.target[j];
  out.miss = model.h_norm(dev);
  out.success = out.miss <= cfg.delta;
  return out;
}

}  // namespace rsspde
