#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsspde/ergodics.hpp"
#include "rsspde/models.hpp"
#include "rsspde/numerics.hpp"

using namespace rsspde;

namespace {

ModelSpec ou(double lambda, double sigma, int n_modes = 1) {
  LinearModelParams p;
  p.n_modes = n_modes;
  p.lambda0 = lambda;
  p.sigma0 = sigma;
  return build_linear_model(p);
}

}  // namespace

TEST_CASE("generator on the quadratic function matches the closed form") {
  ModelSpec m = ou(1.5, 0.4);
  LyapunovSpec spec;
  GalerkinState x = {2.0};
  // 2 <A, x> + |B|^2 = -2 lambda x^2 + sigma^2
  double expect = -2.0 * 1.5 * 4.0 + 0.16;
  CHECK(generator_apply_V(0.0, x, 1, m, spec) == doctest::Approx(expect).epsilon(1e-10));

  // add switching: sum_j q_ij (f(j) - f(i))
  ModelSpec ms = ou(1.5, 0.4);
  ms.rates = rate_matrix_table({{0.0, 0.7}, {1.3, 0.0}});
  LyapunovSpec fs;
  fs.f = [](int i) { return static_cast<double>(i * i); };
  double with_switch = generator_apply_V(0.0, x, 1, ms, fs);
  CHECK(with_switch == doctest::Approx(expect + 0.7 * (4.0 - 1.0)).epsilon(1e-10));

  // add linear-in-z small jumps: + m2 |H(., 1)|^2 with the full or truncated mass
  ModelSpec mj = ou(1.5, 0.4);
  LevyMeasure levy;
  levy.small.enabled = true;
  levy.small.alpha = 0.5;
  levy.small.scale = 1.0;
  levy.eps_trunc = 1e-2;
  JumpCoefParams jumps;
  jumps.choice = JumpCoefParams::Choice::kAdditive;
  jumps.c_H = 0.3;
  attach_jump_coefs(mj, jumps, levy);
  double full = generator_apply_V(0.0, x, 1, mj, spec, false);
  double trunc = generator_apply_V(0.0, x, 1, mj, spec, true);
  CHECK(full == doctest::Approx(expect + mj.levy.small_second_moment() * 0.09).epsilon(1e-10));
  CHECK(trunc ==
        doctest::Approx(expect + mj.levy.small_second_moment_above(1e-2) * 0.09).epsilon(1e-10));
  CHECK(full > trunc);
}

TEST_CASE("residual lookup uses the last node at or before the query") {
  ResidualSeries s;
  s.t = {0.0, 0.5, 1.0};
  s.residual = {0.0, 1.0, 2.0};
  CHECK(residual_at(s, 0.0) == 0.0);
  CHECK(residual_at(s, 0.75) == 1.0);
  CHECK(residual_at(s, 0.5) == 1.0);
  CHECK(residual_at(s, 5.0) == 2.0);
}

TEST_CASE("deterministic path has a vanishing drift residual") {
  ModelSpec m = ou(1.0, 0.0);
  TrajectoryOptions opts;
  opts.dense = true;
  StepControl ctrl;
  ctrl.dt_max = 1e-3;
  TrajectoryResult tr = run_trajectory({1.0}, 1, 1.0, m, ctrl, opts, 1, 0);
  REQUIRE(!tr.fault);
  LyapunovSpec spec;
  ResidualSeries s = drift_martingale_residual(tr, m, spec);
  REQUIRE(!s.residual.empty());
  // pure time-discretization bias, O(dt)
  CHECK(std::abs(s.residual.back()) < 5e-3);
}

TEST_CASE("ensemble drift residuals are mean-zero at observation times") {
  ModelSpec m = ou(1.0, 0.5);
  EnsembleOptions opts;
  opts.n_traj = 400;
  opts.dense = true;
  opts.obs_times = {0.5, 1.0};
  StepControl ctrl;
  ctrl.dt_max = 1e-3;
  EnsembleResult ens = run_ensemble({1.0}, 1, 1.0, m, ctrl, opts, 77);
  REQUIRE(ens.faults == 0);

  LyapunovSpec spec;
  for (double t : {0.5, 1.0}) {
    std::vector<double> vals;
    for (const TrajectoryResult& tr : ens.trajectories) {
      ResidualSeries s = drift_martingale_residual(tr, m, spec);
      vals.push_back(residual_at(s, t));
    }
    MeanVar mv = mean_var(vals);
    CHECK(std::abs(mv.mean) < 3.0 * mv.se() + 5e-3);
  }
}

TEST_CASE("occupation profile pools dense segments above each level") {
  ModelSpec m = ou(1.0, 0.0);
  EnsembleResult ens;
  TrajectoryResult tr;
  HybridSample a;
  a.t = 0.0;
  a.state = {0.0};
  a.regime = 1;
  HybridSample b;
  b.t = 1.0;
  b.state = {3.0};
  b.regime = 1;
  HybridSample c;
  c.t = 2.0;
  c.state = {3.0};
  c.regime = 1;
  tr.dense = {a, b, c};
  ens.trajectories.push_back(tr);

  OccupationProfile prof = occupation_profile(ens, m, {1, 10}, 0.0);
  REQUIRE(prof.levels.size() == 2);
  // left nodes: depth 0+1=1 on [0,1), depth 3+1=4 on [1,2); strict > level
  CHECK(prof.fraction[0] == doctest::Approx(0.5));
  CHECK(prof.fraction[1] == doctest::Approx(0.0));
}

TEST_CASE("dissipativity profile is negative and decreasing for the linear model") {
  ModelSpec m = ou(1.0, 0.3, 4);
  LyapunovSpec spec;
  std::vector<double> sup = dissipativity_profile(m, spec, {10, 20, 40}, 4000, 5);
  REQUIRE(sup.size() == 3);
  CHECK(sup[0] < 0.0);
  CHECK(sup[1] < sup[0]);
  CHECK(sup[2] < sup[1]);
}

TEST_CASE("feature projection keeps at most four coordinates plus the norm") {
  ModelSpec m6 = ou(1.0, 0.1, 6);
  GalerkinState x = {1, 2, 3, 4, 5, 6};
  std::vector<double> f = phase_features(m6, x);
  REQUIRE(f.size() == 5);
  CHECK(f[0] == 1.0);
  CHECK(f[3] == 4.0);
  CHECK(f[4] == doctest::Approx(m6.h_norm(x)));

  ModelSpec m2 = ou(1.0, 0.1, 2);
  GalerkinState y = {1, 2};
  CHECK(phase_features(m2, y).size() == 3);
}

TEST_CASE("energy permutation test separates what should separate") {
  std::vector<std::vector<double>> a, b, c;
  Rng rng(9, 0, Channel::kProbe);
  for (int i = 0; i < 80; ++i) {
    double u = rng.next_gaussian();
    double v = rng.next_gaussian();
    a.push_back({u, v});
    b.push_back({u, v});  // identical sample sets
    c.push_back({u + 8.0, v});
  }
  TwoSampleResult same = energy_permutation_test(a, b, 199, 3);
  CHECK(std::abs(same.stat) < 1e-12);
  CHECK(same.p_value > 0.9);

  TwoSampleResult far = energy_permutation_test(a, c, 199, 3);
  CHECK(far.stat > 0.0);
  CHECK(far.p_value == doctest::Approx(1.0 / 200.0));

  // deterministic under the same seed
  TwoSampleResult again = energy_permutation_test(a, c, 199, 3);
  CHECK(again.p_value == far.p_value);
  CHECK(again.stat == far.stat);
}

TEST_CASE("total-variation permutation test on regime labels") {
  std::vector<int> a(60, 1), b(60, 2);
  TwoSampleResult far = tv_permutation_test(a, b, 2, 199, 11);
  CHECK(far.stat == doctest::Approx(1.0));
  CHECK(far.p_value == doctest::Approx(1.0 / 200.0));

  TwoSampleResult same = tv_permutation_test(a, a, 2, 199, 11);
  CHECK(same.stat == doctest::Approx(0.0));
  CHECK(same.p_value > 0.9);
}

TEST_CASE("time averages tighten across replicas as the horizon grows") {
  ModelSpec m = ou(1.0, 0.5);
  ErgodicAverageOptions opts;
  opts.n_terms = 40;
  opts.checkpoints = {10, 40};
  opts.n_replicas = 24;
  opts.burn_periods = 3;
  opts.seed = 21;
  opts.ctrl.dt_max = 2e-3;
  ErgodicAverageReport rep =
      ergodic_average_test(m, {1.0}, 1, obs_h2_clipped(m, 50.0), opts);
  REQUIRE(rep.checkpoints.size() == 2);
  REQUIRE(rep.averages.size() == 24);
  CHECK(rep.across_var[1] < rep.across_var[0]);
  // stationary second moment sigma^2 / (2 lambda) = 0.125
  CHECK(std::abs(rep.across_mean[1] - 0.125) < 5.0 * rep.across_se[1] + 0.01);
}

TEST_CASE("periodicity comparisons cover same-phase pairs and the cross control") {
  ModelSpec m = ou(1.0, 0.4, 2);
  PeriodicityOptions opts;
  opts.phases = {0.0, 0.5};
  opts.k_min = 10;
  opts.k_max = 14;
  opts.n_perms = 99;
  opts.seed = 2;

  std::vector<double> obs;
  for (int k = 10; k <= 14; ++k) {
    obs.push_back(0.0 + k * m.period);
    obs.push_back(0.5 + k * m.period);
  }
  EnsembleOptions eopts;
  eopts.n_traj = 12;
  eopts.obs_times = obs;
  StepControl ctrl;
  ctrl.dt_max = 5e-3;
  EnsembleResult ens = run_ensemble({1.0, 0.0}, 1, obs.back(), m, ctrl, eopts, 31);
  REQUIRE(ens.faults == 0);

  std::vector<PhaseComparison> cmp = periodicity_test(ens, m, opts);
  int same = 0, cross = 0;
  for (const PhaseComparison& c : cmp) {
    if (c.cross) {
      ++cross;
      CHECK(c.phase_a != c.phase_b);
    } else {
      ++same;
      CHECK(c.phase_a == c.phase_b);
      CHECK(c.k_a < c.k_b);
    }
    CHECK(c.energy.n_a >= 2);
    CHECK(c.energy.n_b >= 2);
  }
  CHECK(same == 20);  // C(5,2) per phase, two phases
  CHECK(cross >= 1);
}
