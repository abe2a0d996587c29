// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  Every tolerance is pinned here; each criterion is checked
// against an oracle that does not reuse the code path under test.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rsspde/checker.hpp"
#include "rsspde/config.hpp"
#include "rsspde/coupling.hpp"
#include "rsspde/ergodics.hpp"
#include "rsspde/models.hpp"
#include "rsspde/noise.hpp"
#include "rsspde/numerics.hpp"
#include "rsspde/regime.hpp"
#include "rsspde/rng.hpp"
#include "rsspde/runner.hpp"
#include "rsspde/spde.hpp"

namespace {

using namespace rsspde;

// ---------------------------------------------------------------------------
// chi-square survival function via the regularized incomplete gamma function
// (series for small x, Lentz continued fraction otherwise).

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_sf(double stat, int dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. switching statistics: production chain vs the exact continuous-time
//    Markov chain law, plus an independently simulated oracle chain that must
//    clear the same gates (calibrating the tolerances themselves).

struct ChainTrace {
  std::map<int, int> visits;
  std::map<int, double> hold_total;
  std::map<std::pair<int, int>, int> transitions;
  std::map<int, std::vector<double>> holds;
};

ChainTrace run_production_chain(const RateMatrix& q, int i0, int n_events, uint64_t seed,
                                uint32_t stream) {
  ChainTrace tr;
  auto path = [](double) { return GalerkinState{0.0}; };
  Rng rng(seed, stream, Channel::kRegime);
  double t = 0.0;
  int i = i0;
  for (int k = 0; k < n_events; ++k) {
    SwitchSample s = next_switch(path, i, q, t, 1e18, rng);
    if (!std::isfinite(s.time)) throw std::runtime_error("chain stalled");
    double hold = s.time - t;
    tr.visits[i] += 1;
    tr.hold_total[i] += hold;
    tr.transitions[{i, s.regime}] += 1;
    tr.holds[i].push_back(hold);
    t = s.time;
    i = s.regime;
  }
  return tr;
}

ChainTrace run_oracle_chain(const std::vector<std::vector<double>>& q, int i0, int n_events,
                            uint64_t seed) {
  ChainTrace tr;
  std::mt19937_64 gen(seed);
  const int s_max = int(q.size());
  int i = i0;
  for (int k = 0; k < n_events; ++k) {
    double qi = 0.0;
    for (int j = 1; j <= s_max; ++j) qi += q[i - 1][j - 1];
    std::exponential_distribution<double> expo(qi);
    double hold = expo(gen);
    std::vector<double> row(q[i - 1]);
    std::discrete_distribution<int> pick(row.begin(), row.end());
    int j = pick(gen) + 1;
    tr.visits[i] += 1;
    tr.hold_total[i] += hold;
    tr.transitions[{i, j}] += 1;
    tr.holds[i].push_back(hold);
    i = j;
  }
  return tr;
}

// |q_hat - q| <= 3 sqrt(q_i q_ij / n_i) for every positive rate, and a
// 20-bin equal-probability chi-square on each state's holding times at 1%.
bool chain_gates(const ChainTrace& tr, const std::vector<std::vector<double>>& q, double& worst_z,
                 double& min_p, std::string& why) {
  const int s_max = int(q.size());
  for (int i = 1; i <= s_max; ++i) {
    auto it = tr.visits.find(i);
    if (it == tr.visits.end() || it->second < 500) {
      why = "state " + std::to_string(i) + " undersampled";
      return false;
    }
    const int ni = it->second;
    const double ti = tr.hold_total.at(i);
    double qi = 0.0;
    for (int j = 1; j <= s_max; ++j) qi += q[i - 1][j - 1];
    for (int j = 1; j <= s_max; ++j) {
      const double qij = q[i - 1][j - 1];
      if (qij <= 0.0) {
        if (tr.transitions.count({i, j})) {
          why = "forbidden transition " + std::to_string(i) + "->" + std::to_string(j);
          return false;
        }
        continue;
      }
      auto tt = tr.transitions.find({i, j});
      const double k_ij = tt == tr.transitions.end() ? 0.0 : double(tt->second);
      const double q_hat = k_ij / ti;
      const double se = std::sqrt(qi * qij / double(ni));
      const double z = std::fabs(q_hat - qij) / se;
      worst_z = std::max(worst_z, z);
      if (z > 3.0) {
        why = "rate " + std::to_string(i) + "->" + std::to_string(j) + " off by " + fmt(z) +
              " s.e.";
        return false;
      }
    }
    const int kbins = 20;
    std::vector<int> counts(kbins, 0);
    for (double h : tr.holds.at(i)) {
      double u = 1.0 - std::exp(-qi * h);
      int b = std::min(kbins - 1, int(u * kbins));
      counts[b] += 1;
    }
    const double expect = double(ni) / kbins;
    double stat = 0.0;
    for (int b = 0; b < kbins; ++b) {
      double d = counts[b] - expect;
      stat += d * d / expect;
    }
    const double p = chi2_sf(stat, kbins - 1);
    min_p = std::min(min_p, p);
    if (p < 0.01) {
      why = "holding-time chi-square at state " + std::to_string(i) + ": p = " + fmt(p);
      return false;
    }
  }
  return true;
}

std::vector<std::vector<double>> rates_as_table(const RateMatrix& q, int s_max) {
  GalerkinState x{0.0};
  std::vector<std::vector<double>> out(s_max, std::vector<double>(s_max, 0.0));
  for (int i = 1; i <= s_max; ++i)
    for (int j = 1; j <= s_max; ++j)
      if (i != j) out[i - 1][j - 1] = q.rates(x, i, j);
  return out;
}

bool criterion_switching(std::string& detail) {
  const uint64_t seed = 1001;
  bool ok = true;
  double worst_z = 0.0, min_p = 1.0;
  std::string why;

  const std::vector<std::vector<double>> q2 = {{0.0, 0.7}, {1.3, 0.0}};
  RateMatrix qm2 = rate_matrix_table(q2);
  ChainTrace prod2 = run_production_chain(qm2, 1, 100000, seed, 1);
  ok = ok && chain_gates(prod2, q2, worst_z, min_p, why);

  RateMatrix qm5 = rate_matrix_banded(1, 1.0, 0.5, 5);
  const std::vector<std::vector<double>> q5 = rates_as_table(qm5, 5);
  if (ok) {
    ChainTrace prod5 = run_production_chain(qm5, 3, 100000, seed, 2);
    ok = ok && chain_gates(prod5, q5, worst_z, min_p, why);
  }

  // the oracle chain must clear the identical gates: if it cannot, the gates
  // themselves are miscalibrated and the criterion must not pass
  if (ok) {
    ChainTrace orac2 = run_oracle_chain(q2, 1, 100000, seed + 17);
    ok = ok && chain_gates(orac2, q2, worst_z, min_p, why);
  }
  if (ok) {
    ChainTrace orac5 = run_oracle_chain(q5, 3, 100000, seed + 18);
    ok = ok && chain_gates(orac5, q5, worst_z, min_p, why);
  }

  detail = ok ? "worst rate deviation " + fmt(worst_z) + " s.e., min holding-time p " + fmt(min_p)
              : why;
  return ok;
}

// ---------------------------------------------------------------------------
// 2. integrator fidelity on the linear model: terminal moments against the
//    exact transition law, then a bias-order sweep in dt.

bool criterion_integrator(std::string& detail) {
  const uint64_t seed = 1002;
  std::ostringstream why;

  LinearModelParams lp;
  lp.n_modes = 2;
  lp.lambda0 = 1.0;
  lp.lambda_pow = 1.0;  // lambda_j = j
  lp.sigma0 = 0.3;
  ModelSpec model = build_linear_model(lp);
  GalerkinState x0 = {1.5, -0.8};

  StepControl ctrl;
  ctrl.dt_max = 1e-3;
  EnsembleOptions opts;
  opts.n_traj = 10000;
  opts.obs_times = {1.0};
  EnsembleResult ens = run_ensemble(x0, 1, 1.0, model, ctrl, opts, seed);
  if (ens.faults > 0) {
    detail = "integration faults";
    return false;
  }
  EnsembleSummary sum = summarize(ens, model);
  double worst_zm = 0.0, worst_zv = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double lam = double(j + 1);
    const double m_exact = x0[j] * linear_mean_factor(lam, 1.0);
    const double v_exact = linear_transition_var(lam, 0.3, 1.0);
    const double m_hat = sum.mode_mean[0][j];
    const double v_hat = sum.mode_var[0][j];
    const double se_m = std::sqrt(v_hat / opts.n_traj);
    const double se_v = v_exact * std::sqrt(2.0 / (opts.n_traj - 1.0));
    worst_zm = std::max(worst_zm, std::fabs(m_hat - m_exact) / se_m);
    worst_zv = std::max(worst_zv, std::fabs(v_hat - v_exact) / se_v);
  }
  if (worst_zm > 3.0 || worst_zv > 3.0) {
    detail = "terminal moments off: mean z " + fmt(worst_zm) + ", var z " + fmt(worst_zv);
    return false;
  }

  // bias order: small noise so the time-discretization error dominates
  LinearModelParams bp;
  bp.n_modes = 1;
  bp.lambda0 = 1.0;
  bp.sigma0 = 0.015;
  ModelSpec bias_model = build_linear_model(bp);
  GalerkinState bx0 = {5.0};
  const double exact = 5.0 * linear_mean_factor(1.0, 1.0);
  const std::vector<double> dts = {4e-3, 2e-3, 1e-3};
  std::vector<double> log_dt, log_bias, biases, ses;
  for (double dt : dts) {
    StepControl c2;
    c2.dt_max = dt;
    EnsembleOptions o2;
    o2.n_traj = 10000;
    o2.obs_times = {1.0};
    EnsembleResult e2 = run_ensemble(bx0, 1, 1.0, bias_model, c2, o2, seed + 1);
    EnsembleSummary s2 = summarize(e2, bias_model);
    const double b = std::fabs(s2.mode_mean[0][0] - exact);
    biases.push_back(b);
    ses.push_back(std::sqrt(s2.mode_var[0][0] / o2.n_traj));
    log_dt.push_back(std::log(dt));
    log_bias.push_back(std::log(b));
  }
  // the measured bias must be signal, not Monte Carlo noise
  for (size_t k = 0; k < biases.size(); ++k)
    if (biases[k] < 5.0 * ses[k]) {
      detail = "bias at dt=" + fmt(dts[k]) + " not resolved above noise";
      return false;
    }
  if (!(biases[0] > biases[1] && biases[1] > biases[2])) {
    detail = "bias not decreasing under dt halving: " + fmt(biases[0]) + ", " + fmt(biases[1]) +
             ", " + fmt(biases[2]);
    return false;
  }
  auto [icpt, slope] = fit_line(log_dt, log_bias);  // returns (intercept, slope)
  (void)icpt;
  if (slope < 0.4 || slope > 1.6) {
    detail = "bias order slope " + fmt(slope) + " outside [0.4, 1.6] (biases " + fmt(biases[0]) +
             ", " + fmt(biases[1]) + ", " + fmt(biases[2]) + ")";
    return false;
  }
  detail = "moment z <= " + fmt(std::max(worst_zm, worst_zv)) + ", bias slope " + fmt(slope);
  return true;
}

// ---------------------------------------------------------------------------
// 3. per-step energy dissipation of the noise-free porous-media flow against
//    the model's declared coercivity constants.

PorousMediaParams acceptance_pme_params() {
  PorousMediaParams pp;
  pp.n_modes = 6;
  pp.n_grid = 12;
  pp.gamma_frac = 1.0;
  pp.r_exponent = 3.0;
  pp.s_decay = 0.9;
  pp.kappa0 = 1.0;
  pp.kappa_amp = 0.2;
  pp.g0 = 0.05;
  pp.g_amp = 0.1;
  pp.g_reg = 0.05;
  pp.bprime0 = 0.5;
  pp.bprime_amp = 0.1;
  pp.period = 1.0;
  return pp;
}

bool criterion_step_dissipation(std::string& detail) {
  const uint64_t seed = 1003;
  ModelSpec model = build_porous_media_model(acceptance_pme_params());
  const double theta = model.constants.theta;
  const double alpha = model.constants.alpha;
  const double c = model.constants.c;
  const double c_sup = model.constants.C_sup;

  StepControl ctrl;
  ctrl.dt_max = 1e-3;
  const double dt = 1e-3;
  int violations = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (int ic = 0; ic < 20; ++ic) {
    // smooth random profiles: mode amplitudes decay like 1/j so the stiff
    // cubic drift stays inside the fixed-point solver's contraction range
    Rng rng(seed, uint32_t(ic), Channel::kInit);
    GalerkinState x(model.n_modes);
    for (int j = 0; j < model.n_modes; ++j) x[j] = 0.8 * rng.next_gaussian() / double(j + 1);
    HybridSample s{0.0, x, 1};
    for (int k = 0; k < 1000; ++k) {
      StepStats st;
      HybridSample nx = step(s, dt, model, ctrl, StepNoise{}, &st);
      if (st.fault) {
        detail = "integration fault at ic " + std::to_string(ic);
        return false;
      }
      const double lhs = model.h_norm2(nx.state) - model.h_norm2(s.state);
      const double v = model.v_norm(nx.state);
      const double rhs =
          (c_sup - theta * std::pow(v, alpha) + c * model.h_norm2(nx.state)) * dt + 1e-8;
      worst_gap = std::min(worst_gap, rhs - lhs);
      if (lhs > rhs) ++violations;
      s = nx;
    }
  }
  detail = "0 violations over 20x1000 steps, tightest margin " + fmt(worst_gap) +
           " (theta=" + fmt(theta) + ", alpha=" + fmt(alpha) + ", c=" + fmt(c) +
           ", C_sup=" + fmt(c_sup) + ")";
  if (violations > 0)
    detail = std::to_string(violations) + " per-step dissipation violations";
  return violations == 0;
}

// ---------------------------------------------------------------------------
// 4. assumption suite on two healthy presets plus three deliberately broken
//    variants that must fail with a reproducible witness.

bool all_margins_positive(const CheckReport& rep, std::string& why) {
  for (const auto& c : rep.conditions) {
    if (c.skipped) continue;
    if (!c.pass || c.min_margin <= 0.0) {
      why = c.name + " margin " + fmt(c.min_margin);
      return false;
    }
  }
  return true;
}

bool criterion_assumptions(std::string& detail) {
  const uint64_t seed = 1004;
  CheckOptions opts;
  opts.n_samples = 10000;
  opts.radius = 5.0;
  opts.seed = seed;

  ModelSpec banded_model = build_porous_media_model(acceptance_pme_params());
  banded_model.rates = rate_matrix_banded(1, 1.0, 0.5, 5);
  ModelSpec decay_model = build_porous_media_model(acceptance_pme_params());
  decay_model.rates = rate_matrix_decay(1.0, 0.5, 1.5, 20);

  std::string why;
  CheckReport rep_b = check_all(banded_model, lyapunov_f_banded(), opts);
  if (!rep_b.pass() || !all_margins_positive(rep_b, why)) {
    detail = "banded preset: " + why;
    return false;
  }
  CheckReport rep_d = check_all(decay_model, lyapunov_f_decay(1.0), opts);
  if (!rep_d.pass() || !all_margins_positive(rep_d, why)) {
    detail = "decay preset: " + why;
    return false;
  }

  // broken variant A: coercivity constant inflated to 10 * kappa_max
  ModelSpec inflated = build_porous_media_model(acceptance_pme_params());
  inflated.rates = banded_model.rates;
  inflated.constants.theta = 10.0 * acceptance_pme_params().kappa_max();
  CheckReport r1a = check_A1(inflated, opts);
  CheckReport r1b = check_A1(inflated, opts);
  bool broke1 = !r1a.pass();
  bool witness1 = false;
  for (size_t k = 0; k < r1a.conditions.size(); ++k) {
    const auto& ca = r1a.conditions[k];
    const auto& cb = r1b.conditions[k];
    if (!ca.pass) {
      witness1 = ca.min_margin < 0.0 && ca.min_margin == cb.min_margin &&
                 ca.worst.t == cb.worst.t && ca.worst.x == cb.worst.x &&
                 ca.worst.lhs > ca.worst.rhs && !ca.worst.x.empty();
      break;
    }
  }
  if (!broke1 || !witness1) {
    detail = "inflated coercivity constant not caught with a stable witness";
    return false;
  }

  // broken variant B: first diffusion mode masked to zero
  ModelSpec masked = build_porous_media_model(acceptance_pme_params());
  masked.rates = banded_model.rates;
  auto base_diff = masked.diffusion;
  masked.diffusion = [base_diff](double t, const GalerkinState& x, int i) {
    std::vector<double> v = base_diff(t, x, i);
    v[0] = 0.0;
    return v;
  };
  CheckReport r2a = check_A2(masked, opts);
  CheckReport r2b = check_A2(masked, opts);
  bool broke2 = !r2a.pass();
  bool witness2 = false;
  for (size_t k = 0; k < r2a.conditions.size(); ++k) {
    const auto& ca = r2a.conditions[k];
    if (!ca.pass) {
      witness2 = ca.min_margin == r2b.conditions[k].min_margin;
      break;
    }
  }
  if (!broke2 || !witness2) {
    detail = "masked diffusion not caught with a stable witness";
    return false;
  }

  // broken variant C: two disconnected regime blocks
  ModelSpec discon = build_porous_media_model(acceptance_pme_params());
  discon.rates = rate_matrix_table({{0.0, 1.0, 0.0, 0.0},
                                    {1.0, 0.0, 0.0, 0.0},
                                    {0.0, 0.0, 0.0, 1.0},
                                    {0.0, 0.0, 1.0, 0.0}});
  auto f_id = [](int i) { return double(i); };
  CheckReport r3a = check_Q_and_D(discon, f_id, opts);
  CheckReport r3b = check_Q_and_D(discon, f_id, opts);
  bool broke3 = !r3a.pass();
  bool witness3 = false;
  for (size_t k = 0; k < r3a.conditions.size(); ++k) {
    const auto& ca = r3a.conditions[k];
    if (!ca.pass) {
      witness3 = ca.detail == r3b.conditions[k].detail;
      break;
    }
  }
  if (!broke3 || !witness3) {
    detail = "disconnected rates not caught with a stable witness";
    return false;
  }

  detail = "both presets pass with positive margins; all three broken variants fail reproducibly";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Lyapunov drift: scalar closed form, large-level dissipativity trend,
//    and the ensemble martingale residual.

bool criterion_lyapunov(std::string& detail) {
  const uint64_t seed = 1005;

  // scalar model with switching and both jump parts: hand closed form
  LinearModelParams lp;
  lp.n_modes = 1;
  lp.lambda0 = 1.5;
  lp.sigma0 = 0.4;
  ModelSpec model = build_linear_model(lp);
  model.rates = rate_matrix_table({{0.0, 0.7}, {1.3, 0.0}});
  LevyMeasure levy;
  levy.small.enabled = true;
  levy.small.alpha = 0.5;
  levy.small.scale = 1.0;
  levy.eps_trunc = 1e-2;
  levy.large.enabled = true;
  levy.large.rate = 0.8;
  levy.large.z_max = 2.0;
  JumpCoefParams jumps;
  jumps.choice = JumpCoefParams::Choice::kAdditive;
  jumps.c_H = 0.3;
  jumps.c_J = 0.2;
  jumps.mode_k = 1;
  jumps.z_cap = 2.0;
  attach_jump_coefs(model, jumps, levy);
  LyapunovSpec spec;
  spec.f = [](int i) { return double(i) * double(i); };

  const double x1 = 2.0;
  const double got = generator_apply_V(0.0, {x1}, 1, model, spec, /*truncated_small=*/false);
  // independent arithmetic: drift + diffusion + small jumps + large jumps + switching
  const double m2_small = 2.0 * 1.0 / (2.0 - 0.5);          // second moment of the small marks
  const double ez_large = (1.0 + 2.0) / 2.0;                // uniform marks on [1, 2]
  const double ez2_large = (8.0 - 1.0) / (3.0 * (2.0 - 1.0));
  const double expected = 2.0 * (-1.5 * x1) * x1 + 0.4 * 0.4 + m2_small * 0.3 * 0.3 +
                          0.8 * (0.2 * 0.2 * ez2_large + 2.0 * x1 * 0.2 * ez_large) +
                          (4.0 - 1.0) * 0.7;
  if (std::fabs(got - expected) > 1e-10) {
    detail = "scalar generator value " + fmt(got) + " != closed form " + fmt(expected);
    return false;
  }

  // porous-media dissipativity trend over growing levels
  ModelSpec pme = build_porous_media_model(acceptance_pme_params());
  pme.rates = rate_matrix_banded(1, 1.0, 0.5, 5);
  LyapunovSpec pme_spec;
  pme_spec.f = lyapunov_f_banded();
  std::vector<double> sup_av =
      dissipativity_profile(pme, pme_spec, {10, 20, 40}, 10000, seed, 0);
  if (!(sup_av[0] < 0.0 && sup_av[1] < sup_av[0] && sup_av[2] < sup_av[1])) {
    detail = "dissipativity trend not negative-decreasing: " + fmt(sup_av[0]) + ", " +
             fmt(sup_av[1]) + ", " + fmt(sup_av[2]);
    return false;
  }

  // ensemble martingale residual on the switching linear model
  LinearModelParams dp;
  dp.n_modes = 2;
  dp.lambda0 = 1.0;
  dp.lambda_pow = 1.0;
  dp.sigma0 = 0.3;
  ModelSpec dmodel = build_linear_model(dp);
  dmodel.rates = rate_matrix_banded(1, 1.0, 0.5, 3);
  LyapunovSpec dspec;
  dspec.f = lyapunov_f_banded();
  const std::vector<double> obs = {0.25, 0.5, 0.75, 1.0};
  const int n_traj = 4000;
  StepControl ctrl;
  ctrl.dt_max = 1e-3;
  TrajectoryOptions topt;
  topt.obs_times = obs;
  topt.dense = true;
  std::vector<std::vector<double>> res(obs.size());
  GalerkinState x0 = {1.2, -0.6};
  for (int i = 0; i < n_traj; ++i) {
    TrajectoryResult tr = run_trajectory(x0, 1, 1.0, dmodel, ctrl, topt, seed + 2, uint32_t(i));
    if (tr.fault) {
      detail = "trajectory fault in the residual ensemble";
      return false;
    }
    ResidualSeries series = drift_martingale_residual(tr, dmodel, dspec);
    for (size_t k = 0; k < obs.size(); ++k) res[k].push_back(residual_at(series, obs[k]));
  }
  double worst_z = 0.0;
  for (size_t k = 0; k < obs.size(); ++k) {
    MeanVar mv = mean_var(res[k]);
    worst_z = std::max(worst_z, std::fabs(mv.mean) / mv.se());
  }
  if (worst_z > 3.0) {
    detail = "martingale residual mean off by " + fmt(worst_z) + " s.e.";
    return false;
  }
  detail = "closed form to 1e-10; trend " + fmt(sup_av[0]) + " > " + fmt(sup_av[1]) + " > " +
           fmt(sup_av[2]) + "; residual z <= " + fmt(worst_z);
  return true;
}

// ---------------------------------------------------------------------------
// 6. periodicity of the law under sinusoidal forcing: same-phase cells must
//    look identical, opposite phases must separate.

bool criterion_periodicity(std::string& detail) {
  const uint64_t seed = 1006;
  PorousMediaParams pp = acceptance_pme_params();
  pp.g0 = 0.05;
  pp.g_amp = 0.3;
  pp.g_reg = 0.0;
  pp.bprime0 = 0.4;
  ModelSpec model = build_porous_media_model(pp);

  PeriodicityOptions popt;
  popt.phases = {0.0, 0.5};
  popt.k_min = 10;
  popt.k_max = 14;
  popt.n_perms = 199;
  popt.seed = seed;

  std::vector<double> obs;
  for (double s : popt.phases)
    for (int k = popt.k_min; k <= popt.k_max; ++k) obs.push_back(s + k * model.period);
  std::sort(obs.begin(), obs.end());

  StepControl ctrl;
  ctrl.dt_max = 2e-3;
  EnsembleOptions eopt;
  eopt.n_traj = 4000;
  eopt.obs_times = obs;
  GalerkinState x0 = {0.8, -0.4, 0.2, 0.0, 0.0, 0.0};
  EnsembleResult ens = run_ensemble(x0, 1, obs.back(), model, ctrl, eopt, seed);
  if (ens.faults > 0) {
    detail = "integration faults";
    return false;
  }

  std::vector<PhaseComparison> rows = periodicity_test(ens, model, popt);
  int n_same = 0, n_cross = 0;
  double min_same_p = 1.0, max_cross_p = 0.0;
  for (const auto& row : rows) {
    if (row.cross) {
      ++n_cross;
      max_cross_p = std::max(max_cross_p, row.energy.p_value);
    } else {
      ++n_same;
      min_same_p = std::min(min_same_p, row.energy.p_value);
    }
  }
  if (n_same != 20 || n_cross < 1) {
    detail = "unexpected comparison layout: " + std::to_string(n_same) + " same, " +
             std::to_string(n_cross) + " cross";
    return false;
  }
  if (min_same_p <= 0.01) {
    detail = "same-phase cells separated: min p " + fmt(min_same_p);
    return false;
  }
  if (max_cross_p >= 0.01) {
    detail = "opposite phases not separated: max p " + fmt(max_cross_p);
    return false;
  }
  detail = "20 same-phase comparisons min p " + fmt(min_same_p) + "; cross control max p " +
           fmt(max_cross_p);
  return true;
}

// ---------------------------------------------------------------------------
// 7. ergodic averaging: stationary moment on the time-homogeneous linear
//    model, replica-spread shrinkage on the switching porous-media model.

bool criterion_ergodic_average(std::string& detail) {
  const uint64_t seed = 1007;

  LinearModelParams lp;
  lp.n_modes = 1;
  lp.lambda0 = 1.0;
  lp.sigma0 = 0.5;
  ModelSpec model = build_linear_model(lp);
  auto phi = [](const HybridSample& s) {
    double v = s.state[0] * s.state[0];
    return std::min(v, 1.25);
  };
  ErgodicAverageOptions opts;
  opts.phase = 0.0;
  opts.n_terms = 200;
  opts.checkpoints = {200};
  opts.n_replicas = 24;
  opts.burn_periods = 5;
  opts.seed = seed;
  opts.ctrl.dt_max = 1e-3;
  ErgodicAverageReport rep = ergodic_average_test(model, {0.0}, 1, phi, opts);
  const double target = 0.5 * 0.5 / (2.0 * 1.0);  // sigma^2 / (2 lambda)
  const double z = std::fabs(rep.across_mean[0] - target) / rep.across_se[0];
  if (z > 3.0) {
    detail = "stationary moment off by " + fmt(z) + " s.e. (got " + fmt(rep.across_mean[0]) +
             ", want " + fmt(target) + ")";
    return false;
  }

  PorousMediaParams pp = acceptance_pme_params();
  pp.g_amp = 0.15;
  ModelSpec pme = build_porous_media_model(pp);
  pme.rates = rate_matrix_banded(1, 1.0, 0.5, 3);
  ErgodicAverageOptions popt;
  popt.phase = 0.0;
  popt.n_terms = 200;
  popt.checkpoints = {50, 200};
  popt.n_replicas = 32;
  popt.burn_periods = 5;
  popt.seed = seed + 1;
  popt.ctrl.dt_max = 2e-3;
  ErgodicAverageReport prep =
      ergodic_average_test(pme, {0.5, -0.25, 0.1, 0.0, 0.0, 0.0}, 1,
                           obs_h2_clipped(pme, 25.0), popt);
  const double v50 = prep.across_var[0];
  const double v200 = prep.across_var[1];
  if (!(v200 > 0.0 && v50 > 0.0 && v200 < 0.5 * v50)) {
    detail = "replica spread did not shrink: var(50) " + fmt(v50) + ", var(200) " + fmt(v200);
    return false;
  }
  detail = "stationary moment z " + fmt(z) + "; replica variance " + fmt(v50) + " -> " +
           fmt(v200);
  return true;
}

// ---------------------------------------------------------------------------
// 8. coupling: unit density mean, separation-time tail under the declared
//    envelope, and the modulus-of-continuity slope.

bool criterion_coupling(std::string& detail) {
  const uint64_t seed = 1008;

  LinearModelParams lp;
  lp.n_modes = 4;
  lp.lambda0 = 2.0;
  lp.sigma0 = 0.5;
  ModelSpec model = build_linear_model(lp);
  CouplingConfig cfg;
  cfg.eps = 0.7;
  cfg.n_stop = 100;
  cfg.t_end = 0.5;
  cfg.ctrl.dt_max = 1e-3;
  validate_coupling(model, cfg);

  GalerkinState x = {1.0, -0.5, 0.25, 0.0};
  GalerkinState y = x;
  y[0] += 0.25;
  const int n_pairs = 10000;
  std::vector<double> rs(n_pairs);
  for (int p = 0; p < n_pairs; ++p) {
    CoupledPairResult res = run_coupled_pair(x, y, 1, model, cfg, seed, uint32_t(p));
    if (res.fault) {
      detail = "coupled pair fault at " + std::to_string(p);
      return false;
    }
    rs[p] = res.r;
  }
  MeanVar mv = mean_var(rs);
  const double z = std::fabs(mv.mean - 1.0) / mv.se();
  if (z > 3.0) {
    detail = "density mean " + fmt(mv.mean) + " off unit by " + fmt(z) + " s.e.";
    return false;
  }

  // separation-time tail on the porous-media pair
  PorousMediaParams pp = acceptance_pme_params();
  pp.g0 = 0.0;
  pp.g_amp = 0.0;
  pp.g_reg = 0.0;
  ModelSpec pme = build_porous_media_model(pp);
  CouplingConfig pcfg;
  pcfg.eps = 0.25;
  pcfg.n_stop = 100;
  pcfg.t_end = 6.0;
  pcfg.ctrl.dt_max = 2e-3;
  CouplingDerived derived = validate_coupling(pme, pcfg);
  const double ktilde = pme.constants.ktilde_n ? pme.constants.ktilde_n(pcfg.n_stop)
                                               : pme.constants.K;
  GalerkinState px(6, 0.0);
  for (int j = 0; j < 6; ++j) px[j] = 0.4 * ((j % 2 == 0) ? 1.0 : -1.0) / double(j + 1);
  const std::vector<double> seps = {0.5, 0.25, 0.125};
  const int n_surv = 800;
  double worst_head = std::numeric_limits<double>::infinity();
  uint32_t stream = 0;
  for (size_t si = 0; si < seps.size(); ++si) {
    GalerkinState py = px;
    py[0] += seps[si] * pme.inv_sqrt_hw[0];
    std::vector<double> taus(n_surv);
    for (int p = 0; p < n_surv; ++p) {
      CoupledPairResult res = run_coupled_pair(px, py, 1, pme, pcfg, seed + 3, stream++);
      if (res.fault) {
        detail = "porous-media pair fault";
        return false;
      }
      taus[p] = res.tau;
    }
    for (int q = 1; q <= 8; ++q) {
      const double t = pcfg.t_end * q / 8.0;
      int alive = 0;
      for (double tau : taus)
        if (tau > t) ++alive;
      const double p_hat = double(alive) / n_surv;
      const double env = coupling_tail_envelope(t, ktilde, pcfg.eps, derived.alpha_prime,
                                                seps[si]);
      const double se = std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / n_surv);
      worst_head = std::min(worst_head, env + 3.0 * se - p_hat);
      if (p_hat > env + 3.0 * se) {
        detail = "tail above envelope at sep " + fmt(seps[si]) + ", t " + fmt(t) + ": " +
                 fmt(p_hat) + " > " + fmt(env) + " + 3 s.e.";
        return false;
      }
    }
  }

  // modulus-of-continuity slope on the linear model
  GalerkinState base = {1.0, -0.5, 0.25, 0.0};
  std::vector<std::pair<GalerkinState, GalerkinState>> pairs;
  for (double s : {0.5, 0.25, 0.125}) {
    GalerkinState b = base;
    b[0] += s;
    pairs.push_back({base, b});
  }
  auto f = [](const HybridSample& s) { return std::clamp(s.state[0], -10.0, 10.0); };
  HolderProbeResult probe = holder_probe(model, f, 1, pairs, cfg, 512, seed + 4, 0);
  const double floor = 0.8 * probe.slope_floor;
  if (!probe.conclusive || probe.slope < floor) {
    detail = "continuity slope " + fmt(probe.slope) + " below floor " + fmt(floor) +
             (probe.conclusive ? "" : " (inconclusive)");
    return false;
  }
  detail = "density z " + fmt(z) + "; tail min headroom " + fmt(worst_head) + "; slope " +
           fmt(probe.slope) + " >= " + fmt(floor);
  return true;
}

// ---------------------------------------------------------------------------
// 9. control probe: decay bound on the steered path, success frequency of the
//    stochastic stage, and miss monotone in the steering strength.

bool criterion_control(std::string& detail) {
  const uint64_t seed = 1009;
  LinearModelParams lp;
  lp.n_modes = 4;
  lp.lambda0 = 1.0;
  // Tuned fixture (recorded sweep). Two deterministic error sources bound the
  // open-loop scheme away from the target: the steered path's equilibrium
  // offset |target|/(1+gain), and the gain deficit from the regularized
  // feedback factor b_n/(b_n + eps_reg), which leaves an offset near
  // |target| * (1 + gain*(1-fac))/(1+gain). On top sits the terminal noise
  // integral (H-norm rms ~ sigma * sqrt(2*(1-e^{-2(T-t1)}))), which the
  // control cannot cancel. Sweep: (sigma, eps_reg, M) = (0.1, 1e-2, 6) ->
  // success 0.21; (0.04, 1e-2, 6) -> 0.05; (0.04, 1e-3, 16) keeps the
  // deterministic offset ~0.037 and noise rms ~0.049 under delta = 0.1.
  lp.sigma0 = 0.04;
  ModelSpec model = build_linear_model(lp);

  ControlProbeConfig cfg;
  cfg.target = {0.5, 0.25, 0.0, 0.0};
  cfg.t1 = 0.3;
  cfg.t_end = 1.0;
  cfg.m_factor = 16.0;
  cfg.radius = 5.0;
  cfg.eps_reg = 1e-3;
  cfg.n_level = 4;
  cfg.delta = 0.1;
  cfg.ctrl.dt_max = 1e-3;
  control_margin(model, cfg);  // throws when the tuning is inadmissible

  GalerkinState x0 = {1.0, -0.5, 0.25, 0.0};
  const int n_runs = 200;
  int successes = 0;
  double worst_decay = std::numeric_limits<double>::infinity();
  std::vector<double> miss1(n_runs), miss2(n_runs), miss4(n_runs);
  for (int r = 0; r < n_runs; ++r) {
    ControlProbeResult res = control_probe(x0, 1, model, cfg, seed, uint32_t(r));
    if (res.fault) {
      detail = "control probe fault at run " + std::to_string(r);
      return false;
    }
    if (!res.decay_ok) {
      detail = "steered decay bound violated at run " + std::to_string(r);
      return false;
    }
    worst_decay = std::min(worst_decay, res.decay_margin);
    if (res.success) ++successes;
    miss1[r] = res.miss;

    ControlProbeConfig c2 = cfg;
    c2.m_factor = 32.0;
    miss2[r] = control_probe(x0, 1, model, c2, seed, uint32_t(r)).miss;
    ControlProbeConfig c4 = cfg;
    c4.m_factor = 64.0;
    miss4[r] = control_probe(x0, 1, model, c4, seed, uint32_t(r)).miss;
  }
  const double rate = double(successes) / n_runs;
  if (rate < 0.9) {
    detail = "success frequency " + fmt(rate) + " below 0.9";
    return false;
  }
  const double m1 = mean_var(miss1).mean;
  const double m2 = mean_var(miss2).mean;
  const double m4 = mean_var(miss4).mean;
  if (!(m1 > m2 && m2 > m4)) {
    detail = "mean miss not monotone in the steering strength: " + fmt(m1) + ", " + fmt(m2) +
             ", " + fmt(m4);
    return false;
  }
  detail = "success " + fmt(rate) + "; decay margin >= " + fmt(worst_decay) + "; miss " +
           fmt(m1) + " > " + fmt(m2) + " > " + fmt(m4);
  return true;
}

// ---------------------------------------------------------------------------
// 10. reproducibility: byte-identical CSV artifacts across re-runs and across
//     worker counts.

bool csvs_match(const std::string& dir_a, const std::string& dir_b,
                const std::vector<std::string>& names, std::string& why) {
  for (const auto& name : names) {
    std::string a = read_bytes(dir_a + "/" + name);
    std::string b = read_bytes(dir_b + "/" + name);
    if (a != b) {
      why = name + " differs between " + dir_a + " and " + dir_b;
      return false;
    }
    if (a.rfind("<missing:", 0) == 0) {
      why = name + " missing in " + dir_a;
      return false;
    }
  }
  return true;
}

bool criterion_reproducibility(std::string& detail) {
  const std::string base_ini =
      "[run]\n"
      "seed = 99\n"
      "x0 = 1.0, -0.5\n"
      "[model]\n"
      "kind = linear\n"
      "n_modes = 2\n"
      "lambda0 = 1.0\n"
      "lambda_pow = 1.0\n"
      "sigma0 = 0.3\n"
      "[rates]\n"
      "preset = banded\n"
      "s_max = 3\n"
      "band_m = 1\n"
      "rate_m = 1.0\n"
      "drift_gap = 0.5\n"
      "[step]\n"
      "dt_max = 1e-3\n";
  const std::string sim_ini = base_ini +
                              "[experiment]\n"
                              "kind = simulate\n"
                              "n_traj = 8\n"
                              "t_end = 0.5\n"
                              "n_obs = 5\n";
  const std::string lyap_ini = base_ini +
                               "[experiment]\n"
                               "kind = lyapunov\n"
                               "n_traj = 16\n"
                               "t_end = 0.5\n"
                               "n_obs = 4\n"
                               "levels = 5, 10\n"
                               "n_samples = 500\n"
                               "burn_in = 0.1\n";
  std::string why;

  RunConfig cfg = load_config_text(sim_ini);
  cfg.out_dir = "acc10/sim_a";
  run_experiment(cfg);
  cfg.out_dir = "acc10/sim_b";
  run_experiment(cfg);
  if (!csvs_match("acc10/sim_a", "acc10/sim_b", {"paths.csv", "events.csv", "summary.csv"},
                  why)) {
    detail = "re-run not byte-identical: " + why;
    return false;
  }

  cfg.out_dir = "acc10/sim_w1";
  cfg.workers = 1;
  run_experiment(cfg);
  cfg.out_dir = "acc10/sim_w4";
  cfg.workers = 4;
  run_experiment(cfg);
  if (!csvs_match("acc10/sim_w1", "acc10/sim_w4", {"paths.csv", "events.csv", "summary.csv"},
                  why)) {
    detail = "worker count leaked into outputs: " + why;
    return false;
  }

  RunConfig lyap = load_config_text(lyap_ini);
  lyap.out_dir = "acc10/lyap_w1";
  lyap.workers = 1;
  run_experiment(lyap);
  lyap.out_dir = "acc10/lyap_w3";
  lyap.workers = 3;
  run_experiment(lyap);
  if (!csvs_match("acc10/lyap_w1", "acc10/lyap_w3",
                  {"residuals.csv", "occupation.csv", "dissipativity.csv"}, why)) {
    detail = "ensemble reductions depend on workers: " + why;
    return false;
  }
  detail = "CSV bodies byte-identical across re-runs and worker counts";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Criterion criteria[] = {
      {"switching statistics", criterion_switching},
      {"integrator fidelity", criterion_integrator},
      {"per-step dissipation", criterion_step_dissipation},
      {"assumption suite", criterion_assumptions},
      {"lyapunov drift", criterion_lyapunov},
      {"periodic law", criterion_periodicity},
      {"ergodic averaging", criterion_ergodic_average},
      {"coupling", criterion_coupling},
      {"control probe", criterion_control},
      {"reproducibility", criterion_reproducibility},
  };
  // optional arguments restrict the run to the listed criterion numbers
  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));
  int failures = 0;
  int idx = 0;
  for (const auto& c : criteria) {
    ++idx;
    if (!only.empty() && std::find(only.begin(), only.end(), idx) == only.end()) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++failures;
    std::printf("[%2d] %s  %s%s%s\n", idx, pass ? "PASS" : "FAIL", c.name,
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/10 criteria passed\n", 10 - failures);
  return failures;
}
