#include "rsspde/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "rsspde/checker.hpp"
#include "rsspde/coupling.hpp"
#include "rsspde/csv.hpp"
#include "rsspde/ergodics.hpp"
#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kSchema = 1;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::vector<double> uniform_obs(double t_end, int n_obs) {
  std::vector<double> out;
  for (int k = 1; k <= n_obs; ++k) out.push_back(t_end * k / n_obs);
  return out;
}

struct ArtifactSink {
  const RunConfig& cfg;
  std::vector<std::string> files;

  explicit ArtifactSink(const RunConfig& c) : cfg(c) {
    std::filesystem::create_directories(cfg.out_dir);
  }

  CsvWriter open(const std::string& name, const std::vector<std::string>& header) {
    files.push_back(name);
    return CsvWriter(join_path(cfg.out_dir, name), header);
  }

  RunOutcome finish(int exit_code, const std::string& summary) {
    std::string resolved = resolved_config_text(cfg);
    write_text_file(join_path(cfg.out_dir, "config.resolved.ini"), resolved);
    files.push_back("config.resolved.ini");
    write_text_file(join_path(cfg.out_dir, "summary.txt"), summary);
    files.push_back("summary.txt");

    std::string manifest;
    manifest += std::string("version = ") + kVersion + "\n";
    manifest += "schema = " + std::to_string(kSchema) + "\n";
    manifest += std::string("experiment = ") + experiment_name(cfg.experiment) + "\n";
    manifest += "seed = " + std::to_string(cfg.seed) + "\n";
    manifest += "workers = " + std::to_string(cfg.workers) + "\n";
    manifest += "exit_code = " + std::to_string(exit_code) + "\n";
    std::vector<std::string> sorted = files;
    sorted.push_back("manifest.txt");
    std::sort(sorted.begin(), sorted.end());
    for (const std::string& f : sorted) manifest += "file = " + f + "\n";
    write_text_file(join_path(cfg.out_dir, "manifest.txt"), manifest);
    files.push_back("manifest.txt");

    RunOutcome out;
    out.exit_code = exit_code;
    out.files = files;
    out.summary = summary;
    return out;
  }
};

std::function<double(const HybridSample&)> pick_observable(const RunConfig& cfg,
                                                           const ModelSpec& model) {
  const ErgoAvgParams& p = cfg.ergoavg;
  if (p.observable == "mode") return obs_mode_clipped(p.obs_mode, p.clip);
  if (p.observable == "regime") return obs_regime_indicator(p.obs_regime);
  return obs_h2_clipped(model, p.clip);
}

RunOutcome run_simulate(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  EnsembleOptions opts;
  opts.n_traj = cfg.simulate.n_traj;
  opts.workers = cfg.workers;
  opts.obs_times = cfg.simulate.obs_times.empty()
                       ? uniform_obs(cfg.simulate.t_end, cfg.simulate.n_obs)
                       : cfg.simulate.obs_times;
  opts.dense = cfg.simulate.dense;
  double t_end = cfg.simulate.t_end;
  for (double t : opts.obs_times) t_end = std::max(t_end, t);

  EnsembleResult ens = run_ensemble(x0, cfg.i0, t_end, model, cfg.step, opts, cfg.seed);

  std::vector<std::string> head = {"trajectory_id", "t", "regime"};
  for (int j = 0; j < model.n_modes; ++j) head.push_back("mode_" + std::to_string(j));
  head.push_back("H_norm");
  head.push_back("V_norm");
  CsvWriter paths = sink.open("paths.csv", head);
  CsvWriter events = sink.open("events.csv", {"trajectory_id", "t", "kind", "detail"});
  CsvWriter summary = sink.open(
      "summary.csv", {"t", "n_valid", "h2_mean", "h2_se", "mode0_mean", "mode0_var"});

  int n_events = 0;
  for (std::size_t i = 0; i < ens.trajectories.size(); ++i) {
    const TrajectoryResult& tr = ens.trajectories[i];
    for (const HybridSample& s : tr.samples) {
      std::vector<Cell> row = {cell(static_cast<int64_t>(i)), cell(s.t), cell(s.regime)};
      for (int j = 0; j < model.n_modes; ++j) row.push_back(cell(s.state[j]));
      row.push_back(cell(model.h_norm(s.state)));
      row.push_back(cell(model.v_norm(s.state)));
      paths.row(row);
    }
    for (const Event& ev : tr.events) {
      events.row({cell(static_cast<int64_t>(i)), cell(ev.t),
                  cell(std::string(event_kind_name(ev.kind))), cell(ev.detail)});
      ++n_events;
    }
  }
  EnsembleSummary sm = summarize(ens, model);
  for (std::size_t k = 0; k < sm.times.size(); ++k) {
    summary.row({cell(sm.times[k]), cell(sm.n_valid[k]), cell(sm.h2_mean[k]), cell(sm.h2_se[k]),
                 cell(sm.mode_mean[k].empty() ? 0.0 : sm.mode_mean[k][0]),
                 cell(sm.mode_var[k].empty() ? 0.0 : sm.mode_var[k][0])});
  }
  paths.close();
  events.close();
  summary.close();

  int exit_code = (ens.faults > 0 || ens.truncations > 0) ? 1 : 0;
  std::string text = "simulate: " + std::to_string(opts.n_traj) + " trajectories to t = " +
                     format_g17(t_end) + "\nevents = " + std::to_string(n_events) +
                     "\nfaults = " + std::to_string(ens.faults) +
                     "\ntruncations = " + std::to_string(ens.truncations) + "\n";
  if (!sm.times.empty()) {
    text += "final E|X|_H^2 = " + format_g17(sm.h2_mean.back()) + " (se " +
            format_g17(sm.h2_se.back()) + ")\n";
  }
  return sink.finish(exit_code, text);
}

RunOutcome run_check(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);

  CheckOptions opts;
  opts.n_samples = cfg.check.n_samples;
  opts.radius = cfg.check.radius;
  opts.n_levels = cfg.check.n_levels;
  opts.sup_levels = cfg.check.sup_levels;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;

  CheckReport report = check_all(model, lyapunov_weight(cfg), opts);

  CsvWriter margins = sink.open(
      "margins.csv", {"condition", "pass", "skipped", "samples", "min_margin", "witness_t",
                      "witness_regime", "witness_lhs", "witness_rhs", "note", "detail"});
  for (const ConditionReport& c : report.conditions) {
    margins.row({cell(c.name), cell(c.pass), cell(c.skipped), cell(c.samples),
                 cell(c.min_margin), cell(c.worst.t), cell(c.worst.regime), cell(c.worst.lhs),
                 cell(c.worst.rhs), cell(c.worst.note), cell(c.detail)});
  }
  margins.close();

  int exit_code = report.pass() ? 0 : 1;
  return sink.finish(exit_code, report.summary());
}

RunOutcome run_lyapunov(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  LyapunovSpec spec;
  if (model.rates.enabled()) spec.f = lyapunov_weight(cfg);

  EnsembleOptions opts;
  opts.n_traj = cfg.lyapunov.n_traj;
  opts.workers = cfg.workers;
  opts.obs_times = uniform_obs(cfg.lyapunov.t_end, cfg.lyapunov.n_obs);
  opts.dense = true;
  EnsembleResult ens =
      run_ensemble(x0, cfg.i0, cfg.lyapunov.t_end, model, cfg.step, opts, cfg.seed);

  CsvWriter residuals = sink.open("residuals.csv", {"time", "mean_residual", "se", "n", "z"});
  std::vector<ResidualSeries> series(ens.trajectories.size());
  parallel_for(static_cast<int>(ens.trajectories.size()), cfg.workers, [&](int i) {
    if (!ens.trajectories[static_cast<std::size_t>(i)].fault) {
      series[static_cast<std::size_t>(i)] = drift_martingale_residual(
          ens.trajectories[static_cast<std::size_t>(i)], model, spec);
    }
  });
  double worst_z = 0.0;
  for (double t : opts.obs_times) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (ens.trajectories[i].fault || series[i].t.empty()) continue;
      vals.push_back(residual_at(series[i], t));
    }
    MeanVar mv = mean_var(vals);
    double se = mv.se();
    double z = se > 0.0 ? mv.mean / se : 0.0;
    worst_z = std::max(worst_z, std::abs(z));
    residuals.row({cell(t), cell(mv.mean), cell(se), cell(static_cast<int64_t>(vals.size())),
                   cell(z)});
  }
  residuals.close();

  CsvWriter occupation = sink.open("occupation.csv", {"level", "fraction"});
  OccupationProfile occ =
      occupation_profile(ens, model, cfg.lyapunov.levels, cfg.lyapunov.burn_in);
  for (std::size_t i = 0; i < occ.levels.size(); ++i) {
    occupation.row({cell(occ.levels[i]), cell(occ.fraction[i])});
  }
  occupation.close();

  CsvWriter dissipativity = sink.open("dissipativity.csv", {"level", "sup_av"});
  std::vector<double> sup = dissipativity_profile(model, spec, cfg.lyapunov.levels,
                                                  cfg.lyapunov.n_samples, cfg.seed, cfg.workers);
  for (std::size_t i = 0; i < sup.size(); ++i) {
    dissipativity.row({cell(cfg.lyapunov.levels[i]), cell(sup[i])});
  }
  dissipativity.close();

  int exit_code = (ens.faults > 0 || ens.truncations > 0) ? 1 : 0;
  std::string text = "lyapunov: " + std::to_string(opts.n_traj) + " dense trajectories to t = " +
                     format_g17(cfg.lyapunov.t_end) + "\nfaults = " + std::to_string(ens.faults) +
                     "\nworst |mean residual| / se = " + format_g17(worst_z) + "\n";
  for (std::size_t i = 0; i < sup.size(); ++i) {
    text += "sup AV over level " + std::to_string(cfg.lyapunov.levels[i]) + " = " +
            format_g17(sup[i]) + "\n";
  }
  return sink.finish(exit_code, text);
}

RunOutcome run_periodic(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  PeriodicityOptions opts;
  opts.phases = cfg.periodic.phases;
  if (opts.phases.empty()) opts.phases = {0.0, model.period / 2.0};
  opts.k_min = cfg.periodic.k_min;
  opts.k_max = cfg.periodic.k_max;
  opts.n_perms = cfg.periodic.n_perms;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;

  std::vector<double> obs;
  for (int k = opts.k_min; k <= opts.k_max; ++k) {
    for (double s : opts.phases) obs.push_back(s + k * model.period);
  }
  std::sort(obs.begin(), obs.end());
  obs.erase(std::unique(obs.begin(), obs.end()), obs.end());
  double t_end = obs.back();

  EnsembleOptions eopts;
  eopts.n_traj = cfg.periodic.n_traj;
  eopts.workers = cfg.workers;
  eopts.obs_times = obs;
  EnsembleResult ens = run_ensemble(x0, cfg.i0, t_end, model, cfg.step, eopts, cfg.seed);

  std::vector<PhaseComparison> cmp = periodicity_test(ens, model, opts);

  CsvWriter distances = sink.open(
      "distances.csv", {"phase_a", "k_a", "phase_b", "k_b", "cross", "energy_stat", "energy_p",
                        "tv_stat", "tv_p", "n_a", "n_b"});
  double same_min_p = 1.0;
  double cross_max_p = 0.0;
  bool any_cross = false;
  for (const PhaseComparison& c : cmp) {
    distances.row({cell(c.phase_a), cell(c.k_a), cell(c.phase_b), cell(c.k_b), cell(c.cross),
                   cell(c.energy.stat), cell(c.energy.p_value), cell(c.tv.stat),
                   cell(c.tv.p_value), cell(c.energy.n_a), cell(c.energy.n_b)});
    if (c.cross) {
      any_cross = true;
      cross_max_p = std::max(cross_max_p, c.energy.p_value);
    } else {
      same_min_p = std::min(same_min_p, c.energy.p_value);
    }
  }
  distances.close();

  int exit_code = (ens.faults > 0 || ens.truncations > 0) ? 1 : 0;
  std::string text = "periodic: " + std::to_string(eopts.n_traj) + " trajectories, " +
                     std::to_string(cmp.size()) + " comparisons\nfaults = " +
                     std::to_string(ens.faults) +
                     "\nsame-phase min energy p = " + format_g17(same_min_p) + "\n";
  if (any_cross) text += "cross-phase max energy p = " + format_g17(cross_max_p) + "\n";
  return sink.finish(exit_code, text);
}

RunOutcome run_ergoavg(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  ErgodicAverageOptions opts;
  opts.phase = cfg.ergoavg.phase;
  opts.n_terms = cfg.ergoavg.n_terms;
  opts.checkpoints = cfg.ergoavg.checkpoints;
  opts.n_replicas = cfg.ergoavg.n_replicas;
  opts.burn_periods = cfg.ergoavg.burn_periods;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  opts.ctrl = cfg.step;

  ErgodicAverageReport rep =
      ergodic_average_test(model, x0, cfg.i0, pick_observable(cfg, model), opts);

  CsvWriter averages = sink.open("averages.csv", {"replica", "checkpoint", "average"});
  for (std::size_t r = 0; r < rep.averages.size(); ++r) {
    for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
      averages.row({cell(static_cast<int64_t>(r)), cell(rep.checkpoints[c]),
                    cell(rep.averages[r][c])});
    }
  }
  averages.close();

  CsvWriter spread = sink.open(
      "spread.csv", {"checkpoint", "across_mean", "across_var", "across_se", "n_replicas"});
  for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
    spread.row({cell(rep.checkpoints[c]), cell(rep.across_mean[c]), cell(rep.across_var[c]),
                cell(rep.across_se[c]), cell(static_cast<int64_t>(rep.averages.size()))});
  }
  spread.close();

  std::string text = "ergoavg: observable " + cfg.ergoavg.observable + ", " +
                     std::to_string(opts.n_replicas) + " replicas\n";
  for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
    text += "n = " + std::to_string(rep.checkpoints[c]) + ": mean " +
            format_g17(rep.across_mean[c]) + ", var " + format_g17(rep.across_var[c]) + "\n";
  }
  return sink.finish(0, text);
}

RunOutcome run_couple(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  CouplingConfig ccfg;
  ccfg.eps = cfg.couple.eps;
  ccfg.n_stop = cfg.couple.n_stop;
  ccfg.t_end = cfg.couple.t_end;
  ccfg.ctrl = cfg.step;
  CouplingDerived derived = validate_coupling(model, ccfg);
  double ktilde =
      model.constants.ktilde_n ? model.constants.ktilde_n(ccfg.n_stop) : model.constants.K;

  CsvWriter pairs = sink.open(
      "pairs.csv", {"separation", "pair", "coupled", "tau", "log_r", "r", "fault"});
  CsvWriter survival = sink.open(
      "survival.csv", {"separation", "time", "survival", "se", "envelope"});
  CsvWriter girsanov = sink.open("girsanov.csv", {"separation", "n", "mean_r", "se_r"});

  int faults = 0;
  std::string text = "couple: eps = " + format_g17(ccfg.eps) +
                     ", holder exponent = " + format_g17(derived.alpha_prime) + "\n";
  for (std::size_t si = 0; si < cfg.couple.separations.size(); ++si) {
    double sep = cfg.couple.separations[si];
    GalerkinState y0 = x0;
    y0[0] += sep * model.inv_sqrt_hw[0];

    int n = cfg.couple.n_pairs;
    std::vector<CoupledPairResult> results(static_cast<std::size_t>(n));
    parallel_for(n, cfg.workers, [&](int p) {
      uint32_t stream = static_cast<uint32_t>(si * static_cast<std::size_t>(n) +
                                              static_cast<std::size_t>(p));
      results[static_cast<std::size_t>(p)] =
          run_coupled_pair(x0, y0, cfg.i0, model, ccfg, cfg.seed, stream);
    });

    std::vector<double> rs;
    for (int p = 0; p < n; ++p) {
      const CoupledPairResult& res = results[static_cast<std::size_t>(p)];
      if (res.fault) ++faults;
      pairs.row({cell(sep), cell(p), cell(res.coupled), cell(res.tau), cell(res.log_r),
                 cell(res.r), cell(res.fault)});
      if (!res.fault) rs.push_back(res.r);
    }
    MeanVar mv = mean_var(rs);
    girsanov.row({cell(sep), cell(static_cast<int64_t>(rs.size())), cell(mv.mean),
                  cell(mv.se())});
    text += "sep " + format_g17(sep) + ": E[R] = " + format_g17(mv.mean) + " (se " +
            format_g17(mv.se()) + "), coupled " +
            std::to_string(std::count_if(results.begin(), results.end(),
                                         [](const CoupledPairResult& r) { return r.coupled; })) +
            "/" + std::to_string(n) + "\n";

    for (int q = 1; q <= cfg.couple.n_survival_times; ++q) {
      double t = ccfg.t_end * q / cfg.couple.n_survival_times;
      int alive = 0;
      for (const CoupledPairResult& res : results) {
        if (res.tau > t) ++alive;
      }
      double frac = static_cast<double>(alive) / n;
      double se = std::sqrt(std::max(0.0, frac * (1.0 - frac) / n));
      double env = coupling_tail_envelope(t, ktilde, ccfg.eps, derived.alpha_prime, sep);
      survival.row({cell(sep), cell(t), cell(frac), cell(se), cell(env)});
    }
  }
  pairs.close();
  survival.close();
  girsanov.close();

  text = "couple: faults = " + std::to_string(faults) + "\n" + text;
  return sink.finish(faults > 0 ? 1 : 0, text);
}

RunOutcome run_steer(const RunConfig& cfg) {
  ArtifactSink sink(cfg);
  ModelSpec model = build_model(cfg);
  GalerkinState x0 = initial_state(cfg, model);

  ControlProbeConfig pcfg;
  pcfg.target.assign(static_cast<std::size_t>(model.n_modes), 0.0);
  if (static_cast<int>(cfg.steer.target.size()) > model.n_modes) {
    throw ConfigError("[experiment] target lists more coefficients than the model has modes");
  }
  std::copy(cfg.steer.target.begin(), cfg.steer.target.end(), pcfg.target.begin());
  pcfg.t1 = cfg.steer.t1;
  pcfg.t_end = cfg.steer.t_end;
  pcfg.m_factor = cfg.steer.m_factor;
  pcfg.radius = cfg.steer.radius;
  pcfg.eps_reg = cfg.steer.eps_reg;
  pcfg.n_level = cfg.steer.n_level;
  pcfg.delta = cfg.steer.delta;
  pcfg.ctrl = cfg.step;
  control_margin(model, pcfg);

  CsvWriter steer = sink.open(
      "steer.csv", {"run", "miss", "success", "cutoff_applied", "decay_ok", "decay_margin",
                    "steered_gap", "fault"});
  int n = cfg.steer.n_runs;
  std::vector<ControlProbeResult> results(static_cast<std::size_t>(n));
  parallel_for(n, cfg.workers, [&](int r) {
    results[static_cast<std::size_t>(r)] =
        control_probe(x0, cfg.i0, model, pcfg, cfg.seed, static_cast<uint32_t>(r));
  });
  int successes = 0;
  int faults = 0;
  bool decay_all = true;
  for (int r = 0; r < n; ++r) {
    const ControlProbeResult& res = results[static_cast<std::size_t>(r)];
    if (res.success) ++successes;
    if (res.fault) ++faults;
    decay_all = decay_all && res.decay_ok;
    steer.row({cell(r), cell(res.miss), cell(res.success), cell(res.cutoff_applied),
               cell(res.decay_ok), cell(res.decay_margin), cell(res.steered_gap),
               cell(res.fault)});
  }
  steer.close();

  std::string text = "steer: success " + std::to_string(successes) + "/" + std::to_string(n) +
                     " at delta = " + format_g17(pcfg.delta) + "\nfaults = " +
                     std::to_string(faults) + "\ndecay bound held on every run = " +
                     (decay_all ? "yes" : "no") + "\n";

  if (cfg.steer.sweep) {
    CsvWriter sweep = sink.open("sweep.csv", {"m_multiplier", "m_factor", "miss", "success"});
    for (int mult : {1, 2, 4}) {
      ControlProbeConfig swept = pcfg;
      swept.m_factor = pcfg.m_factor * mult;
      ControlProbeResult res = control_probe(x0, cfg.i0, model, swept, cfg.seed, 0);
      sweep.row({cell(mult), cell(swept.m_factor), cell(res.miss), cell(res.success)});
      text += "M x" + std::to_string(mult) + ": miss = " + format_g17(res.miss) + "\n";
    }
    sweep.close();
  }
  return sink.finish(faults > 0 ? 1 : 0, text);
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kSimulate: return run_simulate(cfg);
    case ExperimentKind::kCheck: return run_check(cfg);
    case ExperimentKind::kLyapunov: return run_lyapunov(cfg);
    case ExperimentKind::kPeriodic: return run_periodic(cfg);
    case ExperimentKind::kErgoAvg: return run_ergoavg(cfg);
    case ExperimentKind::kCouple: return run_couple(cfg);
    case ExperimentKind::kSteer: return run_steer(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace rsspde
