#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsspde/checker.hpp"
#include "rsspde/models.hpp"

using namespace rsspde;

namespace {

ModelSpec pme_banded() {
  PorousMediaParams p;
  p.n_modes = 8;
  p.g_amp = 0.1;
  ModelSpec m = build_porous_media_model(p);
  m.rates = rate_matrix_banded(1, 1.0, 0.5, 5);
  return m;
}

CheckOptions fast_opts() {
  CheckOptions o;
  o.n_samples = 3000;
  o.seed = 12;
  return o;
}

}  // namespace

TEST_CASE("healthy models pass every structural condition") {
  ModelSpec pme = pme_banded();
  CheckReport rep = check_all(pme, lyapunov_f_banded(), fast_opts());
  for (const ConditionReport& c : rep.conditions) {
    INFO(c.name, ": ", c.detail);
    CHECK(c.pass);
    if (!c.skipped) CHECK(c.min_margin >= 0.0);
  }
  CHECK(rep.pass());

  LinearModelParams lp;
  lp.n_modes = 4;
  ModelSpec ou = build_linear_model(lp);
  CheckReport rep2 = check_all(ou, nullptr, fast_opts());
  CHECK(rep2.pass());
  bool any_skipped = false;
  for (const ConditionReport& c : rep2.conditions) any_skipped |= c.skipped;
  CHECK(any_skipped);  // switching conditions are skipped without a rate matrix
}

TEST_CASE("an inflated coercivity constant is caught with a stable witness") {
  ModelSpec bad = pme_banded();
  bad.constants.theta *= 3.0;
  CheckReport rep = check_A1(bad, fast_opts());
  CHECK(!rep.pass());

  double margin1 = 0.0;
  bool found = false;
  for (const ConditionReport& c : rep.conditions) {
    if (!c.pass) {
      found = true;
      margin1 = c.min_margin;
      CHECK(c.min_margin < 0.0);
      CHECK(c.worst.lhs > c.worst.rhs);
      CHECK(!c.worst.x.empty());
    }
  }
  REQUIRE(found);

  // same seed, same witness: the failure is reproducible
  CheckReport rep2 = check_A1(bad, fast_opts());
  for (const ConditionReport& c : rep2.conditions) {
    if (!c.pass) CHECK(c.min_margin == margin1);
  }
}

TEST_CASE("a masked diffusion mode breaks the nondegeneracy floor") {
  ModelSpec bad = pme_banded();
  auto inner = bad.diffusion;
  bad.diffusion = [inner](double t, const GalerkinState& x, int i) {
    std::vector<double> b = inner(t, x, i);
    b[0] = 0.0;
    return b;
  };
  CheckReport rep = check_A2(bad, fast_opts());
  CHECK(!rep.pass());
}

TEST_CASE("a disconnected rate table fails the switching conditions") {
  ModelSpec bad = pme_banded();
  bad.rates = rate_matrix_table({{0.0, 1.0, 0.0, 0.0},
                                 {1.0, 0.0, 0.0, 0.0},
                                 {0.0, 0.0, 0.0, 1.0},
                                 {0.0, 0.0, 1.0, 0.0}});
  CheckReport rep = check_Q_and_D(bad, lyapunov_f_banded(), fast_opts());
  CHECK(!rep.pass());
}

TEST_CASE("linear-in-z jump energy matches the closed form") {
  LinearModelParams lp;
  lp.n_modes = 4;
  ModelSpec m = build_linear_model(lp);
  LevyMeasure levy;
  levy.small.enabled = true;
  levy.small.alpha = 0.5;
  levy.small.scale = 1.0;
  levy.eps_trunc = 1e-3;
  JumpCoefParams jumps;
  jumps.choice = JumpCoefParams::Choice::kAdditive;
  jumps.c_H = 0.3;
  attach_jump_coefs(m, jumps, levy);

  GalerkinState x = {1.0, 0.0, 0.0, 0.0};
  double e = small_jump_energy(m, 0.0, x, 1);
  // int |z|^2 nu(dz) * c_H^2 with the full measure: (4/3) * 0.09
  CHECK(e == doctest::Approx(4.0 / 3.0 * 0.09).epsilon(1e-10));

  double ediff = small_jump_energy_diff(m, 0.0, x, x, 1);
  CHECK(ediff == doctest::Approx(0.0));
}

TEST_CASE("random probe states respect the radius and model size") {
  LinearModelParams lp;
  lp.n_modes = 6;
  ModelSpec m = build_linear_model(lp);
  Rng rng(3, 0, Channel::kProbe);
  for (int k = 0; k < 200; ++k) {
    GalerkinState x = random_state(rng, m, 2.5);
    REQUIRE(x.size() == 6);
    CHECK(m.h_norm(x) <= 2.5 + 1e-9);
  }
}
