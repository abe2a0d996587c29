#include "rsspde/spde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

bool all_finite(const GalerkinState& x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// explosion guard: treat runaway norms as faults before they become inf
constexpr double kNormCap = 1e12;

}  // namespace

void validate_model(const ModelSpec& model) {
  if (model.n_modes <= 0) throw std::invalid_argument("model: n_modes must be positive");
  if (static_cast<int>(model.h_weight.size()) != model.n_modes ||
      static_cast<int>(model.inv_sqrt_hw.size()) != model.n_modes) {
    throw std::invalid_argument("model: weight vectors must have n_modes entries");
  }
  if (!model.drift) throw std::invalid_argument("model: drift is required");
  if (model.wiener_enabled && !model.diffusion) {
    throw std::invalid_argument("model: diffusion required when the Wiener term is enabled");
  }
  if (model.levy.small.enabled && !model.small_jump) {
    throw std::invalid_argument("model: small-jump coefficient required");
  }
  if (model.levy.large.enabled && !model.large_jump) {
    throw std::invalid_argument("model: large-jump coefficient required");
  }
  if (model.period <= 0.0) throw std::invalid_argument("model: period must be positive");
}

const char* event_kind_name(Event::Kind k) {
  switch (k) {
    case Event::Kind::kSwitch: return "switch";
    case Event::Kind::kBigJump: return "big_jump";
    case Event::Kind::kTruncation: return "truncation";
    case Event::Kind::kFault: return "fault";
  }
  return "unknown";
}

HybridSample step(const HybridSample& from, double dt, const ModelSpec& model,
                  const StepControl& ctrl, const StepNoise& noise, StepStats* stats) {
  StepStats local;
  StepStats& st = stats ? *stats : local;
  if (dt < 0.0 || !std::isfinite(dt)) throw std::invalid_argument("step: bad dt");
  const double t = from.t;
  const int i = from.regime;
  const int n = model.n_modes;

  // explicit part: state + diffusion increment + jumps - compensator drift
  GalerkinState base = from.state;
  if (!noise.extra_drift.empty()) {
    for (int j = 0; j < n; ++j) base[j] += dt * noise.extra_drift[j];
  }
  if (model.wiener_enabled && !noise.dW.empty()) {
    std::vector<double> mult = model.diffusion(t, from.state, i);
    for (int j = 0; j < n; ++j) base[j] += mult[j] * noise.dW[j] * model.inv_sqrt_hw[j];
  }
  for (const JumpEvent& ev : noise.small) {
    std::vector<double> h = model.small_jump(ev.t, from.state, i, ev.z);
    for (int j = 0; j < n; ++j) base[j] += h[j];
  }
  if (model.levy.small.enabled && dt > 0.0 && !model.comp_nodes.empty()) {
    if (model.small_jump_linear_in_z) {
      // H linear in z: compensator is the first moment times H(.,.,.,1)
      double m1 = model.levy.small_mean(model.levy.eps_trunc);
      if (m1 != 0.0) {
        std::vector<double> h1 = model.small_jump(t, from.state, i, 1.0);
        for (int j = 0; j < n; ++j) base[j] -= dt * m1 * h1[j];
      }
    } else {
      for (const auto& node : model.comp_nodes) {
        std::vector<double> h = model.small_jump(t, from.state, i, node.z);
        for (int j = 0; j < n; ++j) base[j] -= dt * node.w * h[j];
      }
    }
  }

  HybridSample out;
  out.t = t + dt;
  out.regime = i;

  if (dt == 0.0) {
    out.state = base;
    if (!all_finite(out.state)) {
      st.fault = true;
      st.fault_detail = "non-finite state";
    }
    return out;
  }

  // damped fixed-point iteration for Y = base + dt A(t+dt, Y, i)
  const double damping = 0.5;
  GalerkinState y = base;
  bool converged = false;
  for (int iter = 0; iter < ctrl.implicit_max_iters; ++iter) {
    std::vector<double> a = model.drift(out.t, y, i);
    double res2 = 0.0;
    bool finite = true;
    for (int j = 0; j < n; ++j) {
      double g = base[j] + dt * a[j];
      double d = g - y[j];
      res2 += model.h_weight[j] * d * d;
      if (!std::isfinite(g)) finite = false;
    }
    st.iterations = iter + 1;
    if (!finite) break;
    if (std::sqrt(res2) <= ctrl.implicit_tol) {
      for (int j = 0; j < n; ++j) y[j] = base[j] + dt * a[j];
      converged = true;
      break;
    }
    for (int j = 0; j < n; ++j) y[j] += damping * (base[j] + dt * a[j] - y[j]);
  }

  if (!converged) {
    if (ctrl.taming_fallback) {
      // explicit tamed step: A / (1 + dt |A|_H) at the left endpoint
      std::vector<double> a = model.drift(t, from.state, i);
      double na = 0.0;
      for (int j = 0; j < n; ++j) na += model.h_weight[j] * a[j] * a[j];
      double denom = 1.0 + dt * std::sqrt(na);
      y = base;
      for (int j = 0; j < n; ++j) y[j] += dt * a[j] / denom;
      st.tamed = true;
    } else {
      st.fault = true;
      st.fault_detail = "implicit iteration stalled";
    }
  }

  out.state = std::move(y);
  if (!all_finite(out.state) || model.h_norm(out.state) > kNormCap) {
    st.fault = true;
    if (st.fault_detail.empty()) st.fault_detail = "non-finite or exploding state";
  }
  return out;
}

namespace {

struct Candidate {
  double t;
  double r;
};

}  // namespace

TrajectoryResult run_trajectory(const GalerkinState& x0, int i0, double t_end,
                                const ModelSpec& model, const StepControl& ctrl,
                                const TrajectoryOptions& opts, uint64_t seed,
                                uint32_t stream_id) {
  validate_model(model);
  if (static_cast<int>(x0.size()) != model.n_modes) {
    throw std::invalid_argument("run_trajectory: x0 has wrong mode count");
  }
  if (t_end < 0.0) throw std::invalid_argument("run_trajectory: t_end must be nonnegative");
  if (model.rates.enabled() && (i0 < 1 || i0 > model.rates.num_regimes)) {
    throw std::invalid_argument("run_trajectory: initial regime out of range");
  }

  TrajectoryResult result;
  result.stream_id = stream_id;
  TrajectoryStreams streams(seed, stream_id);

  // pre-generate the whole noise record: it is a pure function of
  // (seed, stream_id) plus the model's noise configuration
  std::vector<Candidate> candidates;
  if (model.rates.enabled()) {
    double t = 0.0;
    while (true) {
      t += streams.regime.next_exponential(model.rates.bound_L);
      if (t >= t_end) break;
      candidates.push_back({t, streams.regime.next_double() * model.rates.bound_L});
    }
  }
  NoiseConfig ncfg{model.n_modes, model.levy};
  SmallJumpWindow smalls = small_jump_increments(ncfg, 0.0, t_end, streams.small_jump);
  std::vector<JumpEvent> larges = large_jump_events(ncfg, 0.0, t_end, streams.large_jump);

  // grid: uniform refinement plus every event and observation time
  std::vector<double> grid;
  int n_uniform = std::max(1, static_cast<int>(std::ceil(t_end / ctrl.dt_max - 1e-12)));
  grid.reserve(static_cast<std::size_t>(n_uniform) + candidates.size() + larges.size() +
               opts.obs_times.size() + 2);
  for (int k = 0; k <= n_uniform; ++k) {
    grid.push_back(t_end * static_cast<double>(k) / static_cast<double>(n_uniform));
  }
  for (const auto& c : candidates) grid.push_back(c.t);
  for (const auto& e : larges) grid.push_back(e.t);
  for (double t : opts.obs_times) {
    if (t < 0.0 || t > t_end) {
      throw std::invalid_argument("run_trajectory: observation time outside [0, t_end]");
    }
    grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  HybridSample cur{0.0, x0, i0};
  std::size_t next_candidate = 0, next_large = 0, next_small = 0, next_obs = 0;

  std::vector<double> obs_sorted = opts.obs_times;
  std::sort(obs_sorted.begin(), obs_sorted.end());

  auto record_obs = [&](double t) {
    while (next_obs < obs_sorted.size() && obs_sorted[next_obs] == t) {
      result.samples.push_back(cur);
      ++next_obs;
    }
  };

  if (opts.dense) result.dense.push_back(cur);
  record_obs(0.0);

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    double t1 = grid[k + 1];
    double dt = t1 - grid[k];

    StepNoise noise;
    std::vector<double> dw;
    if (model.wiener_enabled) {
      dw = wiener_increment(ncfg, dt, streams.wiener);
      noise.dW = dw;
    }
    std::size_t small_begin = next_small;
    while (next_small < smalls.events.size() && smalls.events[next_small].t < t1) ++next_small;
    noise.small = std::span<const JumpEvent>(smalls.events.data() + small_begin,
                                             next_small - small_begin);

    StepStats st;
    HybridSample next = step(cur, dt, model, ctrl, noise, &st);
    result.max_implicit_iters = std::max(result.max_implicit_iters, st.iterations);
    if (st.tamed) ++result.tamed_steps;
    if (st.fault) {
      result.fault = true;
      result.events.push_back({t1, Event::Kind::kFault, st.fault_detail});
      return result;
    }
    cur = next;

    bool had_event = false;
    if (opts.dense) result.dense.push_back(cur);  // left limit at t1

    while (next_large < larges.size() && larges[next_large].t == t1) {
      const JumpEvent& ev = larges[next_large];
      std::vector<double> jump = model.large_jump(t1, cur.state, cur.regime, ev.z);
      for (int j = 0; j < model.n_modes; ++j) cur.state[j] += jump[j];
      GalerkinState jv(jump.begin(), jump.end());
      result.events.push_back({t1, Event::Kind::kBigJump,
                               "z=" + std::to_string(ev.z) +
                                   " |J|_H=" + std::to_string(model.h_norm(jv))});
      had_event = true;
      ++next_large;
    }
    while (next_candidate < candidates.size() && candidates[next_candidate].t == t1) {
      const Candidate& c = candidates[next_candidate];
      IntervalLayout layout = build_intervals(cur.state, cur.regime, model.rates);
      int disp = evaluate_gamma(layout, c.r, model.rates.bound_L);
      if (disp != 0) {
        int target = cur.regime + disp;
        if (target < 1 || target > model.rates.num_regimes) {
          int clamped = std::clamp(target, 1, model.rates.num_regimes);
          result.events.push_back({t1, Event::Kind::kTruncation,
                                   std::to_string(cur.regime) + "->" + std::to_string(target) +
                                       " clamped to " + std::to_string(clamped)});
          ++result.truncations;
          target = clamped;
        } else {
          result.events.push_back({t1, Event::Kind::kSwitch,
                                   std::to_string(cur.regime) + "->" + std::to_string(target)});
        }
        cur.regime = target;
        had_event = true;
      }
      ++next_candidate;
    }
    if (!all_finite(cur.state)) {
      result.fault = true;
      result.events.push_back({t1, Event::Kind::kFault, "non-finite state after jump"});
      return result;
    }
    if (opts.dense && had_event) result.dense.push_back(cur);  // post-event value
    record_obs(t1);
  }
  return result;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

EnsembleResult run_ensemble(const GalerkinState& x0, int i0, double t_end,
                            const ModelSpec& model, const StepControl& ctrl,
                            const EnsembleOptions& opts, uint64_t seed) {
  EnsembleResult out;
  out.trajectories.resize(static_cast<std::size_t>(std::max(0, opts.n_traj)));
  TrajectoryOptions topts{opts.obs_times, opts.dense};
  parallel_for(opts.n_traj, opts.workers, [&](int idx) {
    uint32_t stream = opts.stream_offset + static_cast<uint32_t>(idx);
    GalerkinState x = x0;
    int regime = i0;
    if (opts.initial) {
      auto init = opts.initial(stream);
      x = std::move(init.first);
      regime = init.second;
    }
    try {
      out.trajectories[static_cast<std::size_t>(idx)] =
          run_trajectory(x, regime, t_end, model, ctrl, topts, seed, stream);
    } catch (const std::exception& ex) {
      TrajectoryResult bad;
      bad.stream_id = stream;
      bad.fault = true;
      bad.events.push_back({0.0, Event::Kind::kFault, ex.what()});
      out.trajectories[static_cast<std::size_t>(idx)] = std::move(bad);
    }
  });
  for (const auto& tr : out.trajectories) {
    if (tr.fault) ++out.faults;
    out.truncations += tr.truncations;
  }
  return out;
}

EnsembleSummary summarize(const EnsembleResult& ens, const ModelSpec& model) {
  EnsembleSummary sum;
  if (ens.trajectories.empty()) return sum;
  const TrajectoryResult* ref = nullptr;
  for (const auto& tr : ens.trajectories) {
    if (!tr.fault) {
      ref = &tr;
      break;
    }
  }
  if (!ref) return sum;
  std::size_t n_times = ref->samples.size();
  sum.times.resize(n_times);
  for (std::size_t s = 0; s < n_times; ++s) sum.times[s] = ref->samples[s].t;
  sum.n_valid.assign(n_times, 0);
  sum.mode_mean.assign(n_times, std::vector<double>(model.n_modes, 0.0));
  sum.mode_var.assign(n_times, std::vector<double>(model.n_modes, 0.0));
  sum.h2_mean.assign(n_times, 0.0);
  sum.h2_se.assign(n_times, 0.0);

  std::vector<double> column;
  column.reserve(ens.trajectories.size());
  for (std::size_t s = 0; s < n_times; ++s) {
    for (int j = 0; j < model.n_modes; ++j) {
      column.clear();
      for (const auto& tr : ens.trajectories) {
        if (tr.fault || tr.samples.size() != n_times) continue;
        column.push_back(tr.samples[s].state[j]);
      }
      MeanVar mv = mean_var(column);
      sum.mode_mean[s][j] = mv.mean;
      sum.mode_var[s][j] = mv.var;
      sum.n_valid[s] = static_cast<int>(mv.n);
    }
    column.clear();
    for (const auto& tr : ens.trajectories) {
      if (tr.fault || tr.samples.size() != n_times) continue;
      column.push_back(model.h_norm2(tr.samples[s].state));
    }
    MeanVar mv = mean_var(column);
    sum.h2_mean[s] = mv.mean;
    sum.h2_se[s] = mv.se();
  }
  return sum;
}

}  // namespace rsspde
