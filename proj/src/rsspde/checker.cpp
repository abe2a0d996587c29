#include "rsspde/checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rsspde/numerics.hpp"

namespace rsspde {

namespace {

constexpr double kTol = 1e-10;  // roundoff allowance on margins
constexpr double kVarpi = 3.0;  // drift-regularity probe exponent (> 2)

double l2_norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

int sample_regime(Rng& rng, const ModelSpec& model) {
  const int s = model.rates.enabled() ? model.rates.num_regimes : 1;
  int i = 1 + static_cast<int>(rng.next_double() * s);
  return std::min(i, s);
}

struct Draw {
  std::vector<double> t;
  std::vector<int> regime;
  std::vector<GalerkinState> x;
  std::vector<GalerkinState> y;
};

Draw draw_inputs(const ModelSpec& model, const CheckOptions& opts, double radius, int count,
                 bool pairs, uint32_t stream) {
  Rng rng(opts.seed, stream, Channel::kProbe);
  Draw d;
  d.t.reserve(count);
  d.regime.reserve(count);
  d.x.reserve(count);
  if (pairs) d.y.reserve(count);
  for (int k = 0; k < count; ++k) {
    d.t.push_back(rng.next_double() * model.period);
    d.regime.push_back(sample_regime(rng, model));
    d.x.push_back(random_state(rng, model, radius));
    if (pairs) {
      GalerkinState y;
      if (rng.next_double() < 0.25) {
        // nearby pair: local behavior of the monotonicity inequalities
        y = d.x.back();
        GalerkinState p = random_state(rng, model, 1e-3 * radius);
        for (int j = 0; j < model.n_modes; ++j) y[j] += p[j];
        const double nrm = model.h_norm(y);
        if (nrm > radius) {
          for (double& v : y) v *= radius / nrm;
        }
      } else {
        y = random_state(rng, model, radius);
      }
      d.y.push_back(std::move(y));
    }
  }
  return d;
}

// reduce per-sample margins to a report, keeping the worst sample as witness
ConditionReport reduce_condition(std::string name, const Draw& d,
                                 const std::vector<double>& margin,
                                 const std::vector<double>& lhs, const std::vector<double>& rhs,
                                 const std::vector<std::string>* notes = nullptr) {
  ConditionReport rep;
  rep.name = std::move(name);
  rep.samples = static_cast<int>(margin.size());
  int worst = 0;
  for (int k = 1; k < rep.samples; ++k) {
    if (margin[k] < margin[worst]) worst = k;
  }
  rep.min_margin = rep.samples ? margin[worst] : 0.0;
  rep.pass = rep.min_margin >= -kTol;
  if (rep.samples) {
    rep.worst.t = d.t[worst];
    rep.worst.regime = d.regime[worst];
    rep.worst.x = d.x[worst];
    if (!d.y.empty()) rep.worst.y = d.y[worst];
    rep.worst.lhs = lhs[worst];
    rep.worst.rhs = rhs[worst];
    if (notes) rep.worst.note = (*notes)[worst];
  }
  return rep;
}

double vstar_of(const ModelSpec& model, const GalerkinState& a) {
  return model.vstar_norm ? model.vstar_norm(a) : model.h_norm(a);
}

double diffusion_l2_diff(const ModelSpec& model, double t, const GalerkinState& x,
                         const GalerkinState& y, int i) {
  if (!model.wiener_enabled || !model.diffusion) return 0.0;
  std::vector<double> mx = model.diffusion(t, x, i);
  std::vector<double> my = model.diffusion(t, y, i);
  double s = 0.0;
  for (int j = 0; j < model.n_modes; ++j) {
    const double d = mx[j] - my[j];
    s += d * d;
  }
  return s;
}

}  // namespace

GalerkinState random_state(Rng& rng, const ModelSpec& model, double radius) {
  const int n = model.n_modes;
  GalerkinState x(n, 0.0);
  const double u = rng.next_double();
  if (rng.next_double() < 0.2) {
    int j = std::min(static_cast<int>(rng.next_double() * n), n - 1);
    const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
    x[j] = sign * radius * u * model.inv_sqrt_hw[j];
    return x;
  }
  std::vector<double> g(n);
  double norm2 = 0.0;
  for (int j = 0; j < n; ++j) {
    g[j] = rng.next_gaussian();
    norm2 += g[j] * g[j];
  }
  if (norm2 == 0.0) return x;
  const double scale = radius * u / std::sqrt(norm2);
  for (int j = 0; j < n; ++j) x[j] = scale * g[j] * model.inv_sqrt_hw[j];
  return x;
}

double small_jump_energy(const ModelSpec& model, double t, const GalerkinState& x, int regime) {
  if (!model.levy.small.enabled || !model.small_jump) return 0.0;
  if (model.small_jump_linear_in_z) {
    const GalerkinState h1 = model.small_jump(t, x, regime, 1.0);
    return model.h_norm2(h1) * model.levy.small_second_moment();
  }
  return model.levy.small_integrate(
      [&](double z) { return model.h_norm2(model.small_jump(t, x, regime, z)); }, 1e-8);
}

double small_jump_energy_diff(const ModelSpec& model, double t, const GalerkinState& x,
                              const GalerkinState& y, int regime) {
  if (!model.levy.small.enabled || !model.small_jump) return 0.0;
  const int n = model.n_modes;
  auto diff_norm2 = [&](double z) {
    GalerkinState hx = model.small_jump(t, x, regime, z);
    const GalerkinState hy = model.small_jump(t, y, regime, z);
    for (int j = 0; j < n; ++j) hx[j] -= hy[j];
    return model.h_norm2(hx);
  };
  if (model.small_jump_linear_in_z) {
    return diff_norm2(1.0) * model.levy.small_second_moment();
  }
  return model.levy.small_integrate(diff_norm2, 1e-8);
}

bool CheckReport::pass() const {
  for (const auto& c : conditions) {
    if (!c.skipped && !c.pass) return false;
  }
  return true;
}

void CheckReport::append(CheckReport other) {
  for (auto& c : other.conditions) conditions.push_back(std::move(c));
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  for (const auto& c : conditions) {
    if (c.skipped) {
      os << "[SKIP] " << c.name << "  " << c.detail << "\n";
      continue;
    }
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  min margin " << c.min_margin
       << " over " << c.samples << " samples";
    if (!c.pass) {
      os << "  witness: t=" << c.worst.t << " i=" << c.worst.regime
         << " lhs=" << c.worst.lhs << " rhs=" << c.worst.rhs;
      if (!c.worst.note.empty()) os << " (" << c.worst.note << ")";
    }
    if (c.pass && !c.detail.empty()) os << "  " << c.detail;
    os << "\n";
  }
  return os.str();
}

CheckReport check_A1(const ModelSpec& model, const CheckOptions& opts) {
  validate_model(model);
  const AssumptionConstants& k = model.constants;
  const int n = model.n_modes;
  CheckReport report;

  const Draw d = draw_inputs(model, opts, opts.radius, opts.n_samples, true, 11);
  const int count = static_cast<int>(d.t.size());

  std::vector<double> m_lm1(count), l_lm1(count), r_lm1(count);
  std::vector<double> m_c(count), l_c(count), r_c(count);
  std::vector<double> m_g1(count), l_g1(count), r_g1(count);
  std::vector<double> m_g2(count), l_g2(count), r_g2(count);
  std::vector<double> m_gb(count), l_gb(count), r_gb(count);
  std::vector<double> m_gr(count), l_gr(count), r_gr(count);

  parallel_for(count, opts.workers, [&](int s) {
    const double t = d.t[s];
    const int i = d.regime[s];
    const GalerkinState& x = d.x[s];
    const GalerkinState& y = d.y[s];

    GalerkinState ax = model.drift(t, x, i);
    const GalerkinState ay = model.drift(t, y, i);
    const double vx = model.v_norm(x);
    const double hx2 = model.h_norm2(x);
    const double hx = std::sqrt(hx2);

    // local monotonicity with the declared global K
    {
      GalerkinState da = ax, dx = x;
      for (int j = 0; j < n; ++j) {
        da[j] -= ay[j];
        dx[j] -= y[j];
      }
      const double d2 = model.h_norm2(dx);
      const double lhs = 2.0 * model.duality(da, dx) + diffusion_l2_diff(model, t, x, y, i) +
                         small_jump_energy_diff(model, t, x, y, i);
      const double rhs = (k.K + k.rho_const) * d2;
      l_lm1[s] = lhs;
      r_lm1[s] = rhs;
      m_lm1[s] = rhs - lhs;
    }

    double b2 = 0.0;
    if (model.wiener_enabled && model.diffusion) b2 = l2_norm2(model.diffusion(t, x, i));
    const double es = small_jump_energy(model, t, x, i);

    // coercivity
    {
      const double lhs = 2.0 * model.duality(ax, x) + b2 + es;
      const double rhs = k.C_sup - k.theta * std::pow(vx, k.alpha) + k.c * hx2;
      l_c[s] = lhs;
      r_c[s] = rhs;
      m_c[s] = rhs - lhs;
    }
    // drift growth in the dual norm
    {
      const double q = k.alpha / (k.alpha - 1.0);
      const double lhs = std::pow(vstar_of(model, ax), q);
      const double rhs =
          (k.C_sup + k.c * std::pow(vx, k.alpha)) * (1.0 + std::pow(hx, k.beta));
      l_g1[s] = lhs;
      r_g1[s] = rhs;
      m_g1[s] = rhs - lhs;
    }
    // diffusion + small-jump growth
    {
      const double lhs = b2 + es;
      const double rhs = k.C_sup + k.gamma_growth * std::pow(vx, k.alpha) + k.c * hx2;
      l_g2[s] = lhs;
      r_g2[s] = rhs;
      m_g2[s] = rhs - lhs;
    }
    // higher small-jump moment
    {
      const double p = k.beta + 2.0;
      double lhs = 0.0;
      if (model.levy.small.enabled && model.small_jump) {
        if (model.small_jump_linear_in_z) {
          lhs = std::pow(model.h_norm(model.small_jump(t, x, i, 1.0)), p) *
                model.levy.small_abs_moment(p);
        } else {
          lhs = model.levy.small_integrate(
              [&](double z) { return std::pow(model.h_norm(model.small_jump(t, x, i, z)), p); },
              1e-8);
        }
      }
      const double rhs = std::pow(k.C_sup, 0.5 * p) + k.c * std::pow(hx, p);
      l_gb[s] = lhs;
      r_gb[s] = rhs;
      m_gb[s] = rhs - lhs;
    }
    // rho growth
    {
      const double lhs = k.rho_const;
      const double rhs = k.c * (1.0 + std::pow(vx, k.alpha)) * (1.0 + std::pow(hx, k.beta));
      l_gr[s] = lhs;
      r_gr[s] = rhs;
      m_gr[s] = rhs - lhs;
    }
  });

  report.conditions.push_back(reduce_condition("LM1", d, m_lm1, l_lm1, r_lm1));
  report.conditions.push_back(reduce_condition("C", d, m_c, l_c, r_c));
  report.conditions.push_back(reduce_condition("G1", d, m_g1, l_g1, r_g1));
  report.conditions.push_back(reduce_condition("G2", d, m_g2, l_g2, r_g2));
  report.conditions.push_back(reduce_condition("Gbeta", d, m_gb, l_gb, r_gb));
  report.conditions.push_back(reduce_condition("Grho", d, m_gr, l_gr, r_gr));

  // hemicontinuity: increments of theta -> <A(x + theta y), v> shrink under
  // grid refinement (modulus-of-continuity probe)
  {
    const int n_hc = std::max(64, opts.n_samples / 20);
    const Draw dh = draw_inputs(model, opts, opts.radius, n_hc, true, 12);
    Rng vr(opts.seed, 13, Channel::kProbe);
    std::vector<GalerkinState> dirs(n_hc);
    for (int s = 0; s < n_hc; ++s) dirs[s] = random_state(vr, model, 1.0);
    std::vector<double> margin(n_hc), lhs(n_hc), rhs(n_hc);
    parallel_for(n_hc, opts.workers, [&](int s) {
      auto phi = [&](double th) {
        GalerkinState z = dh.x[s];
        for (int j = 0; j < n; ++j) z[j] += th * dh.y[s][j];
        return model.duality(model.drift(dh.t[s], z, dh.regime[s]), dirs[s]);
      };
      double coarse = 0.0, fine = 0.0, scale = 0.0;
      double prev = phi(0.0);
      scale = std::abs(prev);
      for (int m = 1; m <= 8; ++m) {
        const double cur = phi(m / 8.0);
        coarse = std::max(coarse, std::abs(cur - prev));
        scale = std::max(scale, std::abs(cur));
        prev = cur;
      }
      prev = phi(0.0);
      for (int m = 1; m <= 16; ++m) {
        const double cur = phi(m / 16.0);
        fine = std::max(fine, std::abs(cur - prev));
        prev = cur;
      }
      lhs[s] = fine;
      rhs[s] = std::max(0.75 * coarse, 1e-9 * (1.0 + scale));
      margin[s] = rhs[s] - lhs[s];
    });
    ConditionReport rep = reduce_condition("HC", dh, margin, lhs, rhs);
    rep.detail = "refinement halves the increment bound";
    report.conditions.push_back(std::move(rep));
  }
  return report;
}

CheckReport check_A2(const ModelSpec& model, const CheckOptions& opts) {
  validate_model(model);
  const AssumptionConstants& k = model.constants;
  CheckReport report;

  if (!model.wiener_enabled || !model.diffusion) {
    ConditionReport rep;
    rep.name = "LipB/N/LM2";
    rep.skipped = true;
    rep.detail = "no Wiener diffusion configured";
    report.conditions.push_back(std::move(rep));
    return report;
  }
  if (!(k.lambda_exp >= 2.0) || !(k.lambda_exp > k.alpha - 2.0)) {
    ConditionReport rep;
    rep.name = "LM2-exponent-range";
    rep.pass = false;
    rep.min_margin = std::min(k.lambda_exp - 2.0, k.lambda_exp - (k.alpha - 2.0));
    rep.detail = "lambda must lie in [2,inf) and exceed alpha - 2";
    report.conditions.push_back(std::move(rep));
    return report;
  }
  if (!k.bn_multiplier || !k.delta_n || !k.ktilde_n) {
    ConditionReport rep;
    rep.name = "LipB/N/LM2";
    rep.pass = false;
    rep.detail = "model does not declare nondegeneracy floors";
    report.conditions.push_back(std::move(rep));
    return report;
  }

  const int n = model.n_modes;
  const int per_level = std::max(1, opts.n_samples);
  for (int level = 1; level <= opts.n_levels; ++level) {
    const Draw d = draw_inputs(model, opts, static_cast<double>(level), per_level, true,
                               static_cast<uint32_t>(100 + level));
    const int count = static_cast<int>(d.t.size());
    const std::vector<double> bn = k.bn_multiplier(level);
    const double delta = k.delta_n(level);
    const double ktilde = k.ktilde_n(level);

    double bn_floor = std::numeric_limits<double>::infinity();
    for (double b : bn) bn_floor = std::min(bn_floor, b);

    std::vector<double> m_lip(count), l_lip(count), r_lip(count);
    std::vector<double> m_n(count), l_n(count), r_n(count);
    std::vector<double> m_lm2(count), l_lm2(count), r_lm2(count);
    std::vector<std::string> notes_n(count);

    parallel_for(count, opts.workers, [&](int s) {
      const double t = d.t[s];
      const int i = d.regime[s];
      const GalerkinState& x = d.x[s];
      const GalerkinState& y = d.y[s];

      GalerkinState dx = x;
      for (int j = 0; j < n; ++j) dx[j] -= y[j];
      const double dh = model.h_norm(dx);
      const double db = std::sqrt(diffusion_l2_diff(model, t, x, y, i));

      l_lip[s] = db;
      r_lip[s] = k.lip_B * dh;
      m_lip[s] = r_lip[s] - l_lip[s];

      const std::vector<double> mult = model.diffusion(t, x, i);
      int worst_mode = 0;
      double floor_margin = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        const double mj = mult[j] - bn[j];
        if (mj < floor_margin) {
          floor_margin = mj;
          worst_mode = j;
        }
      }
      l_n[s] = mult[worst_mode];
      r_n[s] = bn[worst_mode];
      m_n[s] = floor_margin;
      notes_n[s] = "mode " + std::to_string(worst_mode + 1);

      GalerkinState da = model.drift(t, x, i);
      const GalerkinState ay = model.drift(t, y, i);
      for (int j = 0; j < n; ++j) da[j] -= ay[j];
      double bninv2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double hat = dx[j] / model.inv_sqrt_hw[j];
        bninv2 += hat * hat / (bn[j] * bn[j]);
      }
      const double lhs = 2.0 * model.duality(da, dx) + db * db +
                         small_jump_energy_diff(model, t, x, y, i);
      const double rhs = -delta * std::pow(std::sqrt(bninv2), k.lambda_exp) *
                             std::pow(dh, k.alpha - k.lambda_exp) +
                         ktilde * dh * dh;
      l_lm2[s] = lhs;
      r_lm2[s] = rhs;
      m_lm2[s] = rhs - lhs;
    });

    const std::string suffix = "-n" + std::to_string(level);
    {
      ConditionReport rep = reduce_condition("LipB" + suffix, d, m_lip, l_lip, r_lip);
      report.conditions.push_back(std::move(rep));
    }
    {
      ConditionReport rep = reduce_condition("N" + suffix, d, m_n, l_n, r_n, &notes_n);
      if (!(bn_floor > 0.0) || !(delta > 0.0)) {
        rep.pass = false;
        rep.worst.note = "declared floor or delta not positive";
      }
      report.conditions.push_back(std::move(rep));
    }
    {
      ConditionReport rep = reduce_condition("LM2" + suffix, d, m_lm2, l_lm2, r_lm2);
      std::ostringstream os;
      os << "delta=" << delta << " ktilde=" << ktilde;
      rep.detail = os.str();
      report.conditions.push_back(std::move(rep));
    }
  }
  return report;
}

CheckReport check_Q_and_D(const ModelSpec& model, const std::function<double(int)>& lyap_f,
                          const CheckOptions& opts) {
  validate_model(model);
  CheckReport report;
  const int n = model.n_modes;
  Rng rng(opts.seed, 31, Channel::kProbe);

  std::vector<GalerkinState> probes;
  probes.push_back(GalerkinState(n, 0.0));
  for (int i = 0; i < 3; ++i) probes.push_back(random_state(rng, model, opts.radius));

  if (!model.rates.enabled()) {
    ConditionReport rep;
    rep.name = "Q0/Q1/Q2";
    rep.skipped = true;
    rep.detail = "no switching configured";
    report.conditions.push_back(std::move(rep));
  } else {
    const RateMatrix& q = model.rates;
    const int s_max = q.num_regimes;

    // row-sum bound
    {
      ConditionReport rep;
      rep.name = "Q0-row-sum";
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& x : probes) {
        for (int i = 1; i <= s_max; ++i) {
          CompensatedSum row;
          for (int j = 1; j <= s_max; ++j) {
            if (j != i) row.add(q.rates(x, i, j));
          }
          const double rs = row.value();
          rep.samples++;
          if (rs > worst) {
            worst = rs;
            rep.worst.x = x;
            rep.worst.regime = i;
            rep.worst.lhs = rs;
            rep.worst.rhs = q.bound_L;
          }
        }
      }
      rep.min_margin = q.bound_L - worst;
      rep.pass = std::isfinite(worst) && rep.min_margin >= -kTol * std::max(1.0, q.bound_L);
      report.conditions.push_back(std::move(rep));
    }

    // irreducibility: strong connectivity of the positive-rate digraph
    {
      ConditionReport rep;
      rep.name = "Q1-irreducible";
      rep.min_margin = 1.0;
      for (const auto& x : probes) {
        std::vector<std::vector<int>> fwd(s_max + 1), bwd(s_max + 1);
        for (int i = 1; i <= s_max; ++i) {
          for (int j = 1; j <= s_max; ++j) {
            if (j != i && q.rates(x, i, j) > 0.0) {
              fwd[i].push_back(j);
              bwd[j].push_back(i);
            }
          }
        }
        auto reach = [s_max](const std::vector<std::vector<int>>& adj) {
          std::vector<char> seen(s_max + 1, 0);
          std::vector<int> stack{1};
          seen[1] = 1;
          while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
              if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
              }
            }
          }
          return seen;
        };
        const auto f = reach(fwd);
        const auto b = reach(bwd);
        for (int j = 2; j <= s_max; ++j) {
          if (!f[j] || !b[j]) {
            rep.pass = false;
            rep.min_margin = -1.0;
            rep.worst.x = x;
            rep.worst.regime = j;
            rep.worst.note = f[j] ? ("no path " + std::to_string(j) + " -> 1")
                                  : ("no path 1 -> " + std::to_string(j));
            break;
          }
        }
        rep.samples++;
        if (!rep.pass) break;
      }
      report.conditions.push_back(std::move(rep));
    }

    if (!lyap_f) {
      ConditionReport rep;
      rep.name = "Q2";
      rep.skipped = true;
      rep.detail = "no candidate f supplied";
      report.conditions.push_back(std::move(rep));
    } else {
      // f positive, increasing, divergent (trend to s_max)
      {
        ConditionReport rep;
        rep.name = "Q2-f-increasing";
        rep.samples = s_max;
        double min_diff = std::numeric_limits<double>::infinity();
        for (int i = 1; i < s_max; ++i) {
          min_diff = std::min(min_diff, lyap_f(i + 1) - lyap_f(i));
        }
        const bool positive = lyap_f(1) > 0.0;
        const bool divergent = lyap_f(s_max) > lyap_f(std::max(1, s_max / 2));
        rep.min_margin = min_diff;
        rep.pass = positive && divergent && min_diff > 0.0;
        if (!positive) rep.worst.note = "f(1) <= 0";
        if (!divergent) rep.worst.note = "no growth trend to s_max";
        report.conditions.push_back(std::move(rep));
      }
      // regime-chain drift sum_j (f(j)-f(i)) q_ij: bounded above, tail to -inf
      std::vector<double> qdrift(s_max + 1, -std::numeric_limits<double>::infinity());
      for (int i = 1; i <= s_max; ++i) {
        for (const auto& x : probes) {
          CompensatedSum acc;
          for (int j = 1; j <= s_max; ++j) {
            if (j != i) acc.add((lyap_f(j) - lyap_f(i)) * q.rates(x, i, j));
          }
          qdrift[i] = std::max(qdrift[i], acc.value());
        }
      }
      {
        ConditionReport rep;
        rep.name = "Q2-drift-bounded";
        rep.samples = s_max * static_cast<int>(probes.size());
        double sup = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= s_max; ++i) sup = std::max(sup, qdrift[i]);
        rep.pass = std::isfinite(sup);
        rep.min_margin = rep.pass ? 1.0 : -1.0;
        std::ostringstream os;
        os << "sup over regimes = " << sup;
        rep.detail = os.str();
        report.conditions.push_back(std::move(rep));
      }
      {
        ConditionReport rep;
        rep.name = "Q2-drift-tail";
        const int start = std::max(1, s_max / 2);
        double margin = std::numeric_limits<double>::infinity();
        for (int i = start; i < s_max; ++i) {
          margin = std::min(margin, qdrift[i] - qdrift[i + 1]);
        }
        margin = std::min(margin, -qdrift[s_max]);
        rep.samples = s_max - start + 1;
        rep.min_margin = margin;
        rep.pass = margin > 0.0;
        std::ostringstream os;
        os << "drift at s_max = " << qdrift[s_max];
        rep.detail = os.str();
        report.conditions.push_back(std::move(rep));
      }
    }
  }

  // drift-regularity probe: finite int_0^period |A(s,v,i)|_H^varpi ds on
  // sampled truncated states.  This exercises only the integrability half of
  // the closure condition; density itself is not falsifiable by sampling.
  {
    ConditionReport rep;
    rep.name = "D-integrability";
    std::ostringstream os;
    os << "varpi=" << kVarpi << ":";
    bool ok = true;
    for (int idx = 0; idx < 5; ++idx) {
      const GalerkinState v = idx < static_cast<int>(probes.size())
                                  ? probes[idx]
                                  : random_state(rng, model, opts.radius);
      const int i = 1 + idx % std::max(1, model.rates.enabled() ? model.rates.num_regimes : 1);
      const double integral = adaptive_simpson(
          [&](double s) { return std::pow(model.h_norm(model.drift(s, v, i)), kVarpi); }, 0.0,
          model.period, 1e-6);
      ok = ok && std::isfinite(integral);
      os << " " << integral;
      rep.samples++;
    }
    rep.pass = ok;
    rep.min_margin = ok ? 1.0 : -1.0;
    rep.detail = os.str();
    report.conditions.push_back(std::move(rep));
  }

  // large-|v| dissipativity: sup over {|v|_V > n} of
  // -theta |v|_V^alpha + c |v|_H^2 + int_{|z|>=1} (|J|^2 + 2<v,J>) nu(dz)
  // must decrease without bound along the level ladder.
  {
    ConditionReport rep;
    rep.name = "dissipativity-sup";
    const AssumptionConstants& k = model.constants;
    const int m_samp = std::max(200, opts.n_samples / 50);
    std::vector<double> sups;
    Rng sr(opts.seed, 37, Channel::kProbe);
    for (int level : opts.sup_levels) {
      double sup = -std::numeric_limits<double>::infinity();
      for (int sidx = 0; sidx < m_samp; ++sidx) {
        const double t = sr.next_double() * model.period;
        const int i = sample_regime(sr, model);
        GalerkinState dir = random_state(sr, model, 1.0);
        const double vn = model.v_norm(dir);
        if (!(vn > 0.0)) continue;
        const double target = level * (1.0 + sr.next_double());
        for (double& c : dir) c *= target / vn;
        double val = -k.theta * std::pow(target, k.alpha) + k.c * model.h_norm2(dir);
        if (model.levy.large.enabled && model.large_jump) {
          val += model.levy.large_integrate([&](double z) {
            const GalerkinState jvec = model.large_jump(t, dir, i, z);
            return model.h_norm2(jvec) + 2.0 * model.h_inner(dir, jvec);
          });
        }
        sup = std::max(sup, val);
        rep.samples++;
      }
      sups.push_back(sup);
    }
    double margin = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l + 1 < sups.size(); ++l) margin = std::min(margin, sups[l] - sups[l + 1]);
    if (!sups.empty()) margin = std::min(margin, -sups.back());
    rep.min_margin = margin;
    rep.pass = margin > 0.0;
    std::ostringstream os;
    os << "sups:";
    for (double s : sups) os << " " << s;
    rep.detail = os.str();
    report.conditions.push_back(std::move(rep));
  }
  return report;
}

CheckReport check_all(const ModelSpec& model, const std::function<double(int)>& lyap_f,
                      const CheckOptions& opts) {
  CheckReport report = check_A1(model, opts);
  report.append(check_A2(model, opts));
  report.append(check_Q_and_D(model, lyap_f, opts));
  return report;
}

}  // namespace rsspde
