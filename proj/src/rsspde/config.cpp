#include "rsspde/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rsspde {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == ',') parts.push_back("");
  return parts;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

double parse_number(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) fail("empty number for " + where);
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) fail("cannot parse '" + v + "' as a number for " + where);
  return x;
}

int64_t parse_integer(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) fail("empty integer for " + where);
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) fail("cannot parse '" + v + "' as an integer for " + where);
  return static_cast<int64_t>(x);
}

bool parse_boolean(const std::string& raw, const std::string& where) {
  const std::string v = lower(trim(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail("cannot parse '" + raw + "' as a boolean for " + where);
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(xs[i]);
  }
  return out;
}

std::string fmt_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

IniFile IniFile::parse_text(const std::string& text) {
  IniFile ini;
  std::string section;
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("line " + std::to_string(line_no) + ": unterminated section");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail("line " + std::to_string(line_no) + ": empty section name");
      ini.section_lines.emplace(section, line_no);
      ini.sections[section];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail("line " + std::to_string(line_no) + ": expected key = value, got '" + line + "'");
    }
    if (section.empty()) {
      fail("line " + std::to_string(line_no) + ": key outside any [section]");
    }
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(line_no) + ": empty key");
    auto& sec = ini.sections[section];
    auto it = sec.find(key);
    if (it != sec.end()) {
      fail("duplicate key '" + key + "' in [" + section + "] (lines " +
           std::to_string(it->second.line) + " and " + std::to_string(line_no) + ")");
    }
    sec.emplace(key, Entry{value, line_no, false});
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

const IniFile::Entry* IniFile::find(const std::string& section, const std::string& key) const {
  auto sec = sections.find(section);
  if (sec == sections.end()) return nullptr;
  auto it = sec->second.find(key);
  if (it == sec->second.end()) return nullptr;
  return &it->second;
}

void IniFile::reject_unused() const {
  std::string complaints;
  for (const auto& [sec, entries] : sections) {
    for (const auto& [key, entry] : entries) {
      if (!entry.used) {
        if (!complaints.empty()) complaints += "; ";
        complaints +=
            "unknown key '" + key + "' in [" + sec + "] (line " + std::to_string(entry.line) + ")";
      }
    }
  }
  if (!complaints.empty()) fail(complaints);
}

bool ConfigReader::has(const std::string& sec, const std::string& key) const {
  return ini_.find(sec, key) != nullptr;
}

std::string ConfigReader::text(const std::string& sec, const std::string& key,
                               const std::string& dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  return e->value;
}

std::string ConfigReader::require_text(const std::string& sec, const std::string& key) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) fail("missing required key '" + key + "' in [" + sec + "]");
  e->used = true;
  return e->value;
}

double ConfigReader::number(const std::string& sec, const std::string& key, double dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  return parse_number(e->value, "[" + sec + "] " + key + " (line " + std::to_string(e->line) + ")");
}

double ConfigReader::require_number(const std::string& sec, const std::string& key) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) fail("missing required key '" + key + "' in [" + sec + "]");
  e->used = true;
  return parse_number(e->value, "[" + sec + "] " + key + " (line " + std::to_string(e->line) + ")");
}

int64_t ConfigReader::integer(const std::string& sec, const std::string& key,
                              int64_t dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  return parse_integer(e->value,
                       "[" + sec + "] " + key + " (line " + std::to_string(e->line) + ")");
}

bool ConfigReader::boolean(const std::string& sec, const std::string& key, bool dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  return parse_boolean(e->value,
                       "[" + sec + "] " + key + " (line " + std::to_string(e->line) + ")");
}

std::vector<double> ConfigReader::number_list(const std::string& sec, const std::string& key,
                                              const std::vector<double>& dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  std::vector<double> out;
  for (const std::string& part : split_list(e->value)) {
    if (part.empty()) fail("empty element in list [" + sec + "] " + key);
    out.push_back(parse_number(part, "[" + sec + "] " + key));
  }
  return out;
}

std::vector<int> ConfigReader::integer_list(const std::string& sec, const std::string& key,
                                            const std::vector<int>& dflt) const {
  const IniFile::Entry* e = ini_.find(sec, key);
  if (!e) return dflt;
  e->used = true;
  std::vector<int> out;
  for (const std::string& part : split_list(e->value)) {
    if (part.empty()) fail("empty element in list [" + sec + "] " + key);
    out.push_back(static_cast<int>(parse_integer(part, "[" + sec + "] " + key)));
  }
  return out;
}

const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kSimulate: return "simulate";
    case ExperimentKind::kCheck: return "check";
    case ExperimentKind::kLyapunov: return "lyapunov";
    case ExperimentKind::kPeriodic: return "periodic";
    case ExperimentKind::kErgoAvg: return "ergoavg";
    case ExperimentKind::kCouple: return "couple";
    case ExperimentKind::kSteer: return "steer";
  }
  return "unknown";
}

namespace {

ExperimentKind parse_experiment(const std::string& name) {
  const std::string v = lower(trim(name));
  if (v == "simulate") return ExperimentKind::kSimulate;
  if (v == "check") return ExperimentKind::kCheck;
  if (v == "lyapunov") return ExperimentKind::kLyapunov;
  if (v == "periodic") return ExperimentKind::kPeriodic;
  if (v == "ergoavg") return ExperimentKind::kErgoAvg;
  if (v == "couple") return ExperimentKind::kCouple;
  if (v == "steer") return ExperimentKind::kSteer;
  fail("unknown experiment kind '" + name +
       "' (expected simulate|check|lyapunov|periodic|ergoavg|couple|steer)");
}

RunConfig assemble(const IniFile& ini) {
  ConfigReader r(ini);
  RunConfig cfg;

  // [run]
  {
    double seed = r.number("run", "seed", 1.0);
    if (seed < 0.0) fail("[run] seed must be nonnegative");
    cfg.seed = static_cast<uint64_t>(seed);
    cfg.workers = static_cast<int>(r.integer("run", "workers", 0));
    cfg.out_dir = r.text("run", "out_dir", "out");
    cfg.x0 = r.number_list("run", "x0", {});
    cfg.i0 = static_cast<int>(r.integer("run", "i0", 1));
  }

  // [model]
  {
    std::string kind = lower(trim(r.require_text("model", "kind")));
    if (kind == "linear") {
      cfg.model_kind = ModelKind::kLinear;
      cfg.linear.n_modes = static_cast<int>(r.integer("model", "n_modes", cfg.linear.n_modes));
      cfg.linear.lambda0 = r.number("model", "lambda0", cfg.linear.lambda0);
      cfg.linear.lambda_pow = r.number("model", "lambda_pow", cfg.linear.lambda_pow);
      cfg.linear.sigma0 = r.number("model", "sigma0", cfg.linear.sigma0);
      cfg.linear.sigma_pow = r.number("model", "sigma_pow", cfg.linear.sigma_pow);
      cfg.linear.period = r.number("model", "period", cfg.linear.period);
    } else if (kind == "pme") {
      cfg.model_kind = ModelKind::kPorousMedia;
      cfg.pme.n_modes = static_cast<int>(r.integer("model", "n_modes", cfg.pme.n_modes));
      cfg.pme.n_grid = static_cast<int>(r.integer("model", "n_grid", cfg.pme.n_grid));
      cfg.pme.gamma_frac = r.number("model", "gamma", cfg.pme.gamma_frac);
      cfg.pme.r_exponent = r.number("model", "r_exponent", cfg.pme.r_exponent);
      cfg.pme.s_decay = r.number("model", "s_decay", cfg.pme.s_decay);
      cfg.pme.kappa0 = r.number("model", "kappa0", cfg.pme.kappa0);
      cfg.pme.kappa_amp = r.number("model", "kappa_amp", cfg.pme.kappa_amp);
      cfg.pme.g0 = r.number("model", "g0", cfg.pme.g0);
      cfg.pme.g_amp = r.number("model", "g_amp", cfg.pme.g_amp);
      cfg.pme.g_reg = r.number("model", "g_reg", cfg.pme.g_reg);
      cfg.pme.bprime0 = r.number("model", "bprime0", cfg.pme.bprime0);
      cfg.pme.bprime_amp = r.number("model", "bprime_amp", cfg.pme.bprime_amp);
      cfg.pme.period = r.number("model", "period", cfg.pme.period);
    } else {
      fail("unknown model kind '" + kind + "' (expected linear|pme)");
    }
    cfg.lambda_exp_override = r.number("model", "lambda_exp", 0.0);
  }

  // [rates]
  {
    std::string preset = lower(trim(r.text("rates", "preset", "off")));
    if (preset == "off") {
      cfg.rates.preset = RatePreset::kOff;
    } else if (preset == "banded") {
      cfg.rates.preset = RatePreset::kBanded;
      cfg.rates.s_max = static_cast<int>(r.integer("rates", "s_max", 5));
      cfg.rates.band_m = static_cast<int>(r.integer("rates", "band_m", 1));
      cfg.rates.rate_m = r.number("rates", "rate_m", 1.0);
      cfg.rates.drift_gap = r.number("rates", "drift_gap", 0.5);
    } else if (preset == "decay") {
      cfg.rates.preset = RatePreset::kDecay;
      cfg.rates.s_max = static_cast<int>(r.integer("rates", "s_max", 20));
      cfg.rates.delta = r.number("rates", "delta", 1.0);
      cfg.rates.lo = r.number("rates", "lo", 0.5);
      cfg.rates.hi = r.number("rates", "hi", 1.5);
    } else if (preset == "table") {
      cfg.rates.preset = RatePreset::kTable;
      cfg.rates.s_max = static_cast<int>(r.integer("rates", "s_max", 0));
      if (cfg.rates.s_max < 1) fail("[rates] table preset needs s_max >= 1");
      for (int i = 1; i <= cfg.rates.s_max; ++i) {
        std::string key = "row_" + std::to_string(i);
        std::vector<double> row = r.number_list("rates", key, {});
        if (static_cast<int>(row.size()) != cfg.rates.s_max) {
          fail("[rates] " + key + " must list exactly s_max = " +
               std::to_string(cfg.rates.s_max) + " entries");
        }
        cfg.rates.table.push_back(std::move(row));
      }
    } else {
      fail("unknown rates preset '" + preset + "' (expected off|banded|decay|table)");
    }
  }

  // [noise]
  {
    cfg.noise.wiener = r.boolean("noise", "wiener", true);
    cfg.noise.small_enabled = r.boolean("noise", "small_enabled", false);
    cfg.noise.small_alpha = r.number("noise", "small_alpha", cfg.noise.small_alpha);
    cfg.noise.small_scale = r.number("noise", "small_scale", cfg.noise.small_scale);
    cfg.noise.eps_trunc = r.number("noise", "eps_trunc", cfg.noise.eps_trunc);
    cfg.noise.large_enabled = r.boolean("noise", "large_enabled", false);
    cfg.noise.large_rate = r.number("noise", "large_rate", cfg.noise.large_rate);
    cfg.noise.z_max = r.number("noise", "z_max", cfg.noise.z_max);
  }

  // [jumps]
  {
    std::string coef = lower(trim(r.text("jumps", "coef", "off")));
    if (coef == "off") {
      cfg.jumps.choice = JumpCoefParams::Choice::kOff;
    } else if (coef == "additive") {
      cfg.jumps.choice = JumpCoefParams::Choice::kAdditive;
    } else if (coef == "damped") {
      cfg.jumps.choice = JumpCoefParams::Choice::kDamped;
    } else {
      fail("unknown jump coefficient '" + coef + "' (expected off|additive|damped)");
    }
    cfg.jumps.c_H = r.number("jumps", "c_h", cfg.jumps.c_H);
    cfg.jumps.c_J = r.number("jumps", "c_j", cfg.jumps.c_J);
    cfg.jumps.mode_k = static_cast<int>(r.integer("jumps", "mode_k", cfg.jumps.mode_k));
    cfg.jumps.z_cap = r.number("jumps", "z_cap", cfg.jumps.z_cap);
    if ((cfg.noise.small_enabled || cfg.noise.large_enabled) &&
        cfg.jumps.choice == JumpCoefParams::Choice::kOff) {
      fail("[noise] enables a jump measure but [jumps] coef = off declares no coefficient");
    }
    if (!cfg.noise.small_enabled && !cfg.noise.large_enabled &&
        cfg.jumps.choice != JumpCoefParams::Choice::kOff) {
      fail("[jumps] declares a coefficient but [noise] enables no jump measure");
    }
  }

  // [step]
  {
    cfg.step.dt_max = r.number("step", "dt_max", cfg.step.dt_max);
    cfg.step.implicit_tol = r.number("step", "implicit_tol", cfg.step.implicit_tol);
    cfg.step.implicit_max_iters =
        static_cast<int>(r.integer("step", "implicit_max_iters", cfg.step.implicit_max_iters));
    cfg.step.taming_fallback = r.boolean("step", "taming", cfg.step.taming_fallback);
    if (cfg.step.dt_max <= 0.0) fail("[step] dt_max must be positive");
  }

  // [experiment]
  {
    cfg.experiment = parse_experiment(r.require_text("experiment", "kind"));
    switch (cfg.experiment) {
      case ExperimentKind::kSimulate: {
        cfg.simulate.n_traj = static_cast<int>(r.integer("experiment", "n_traj", 1));
        cfg.simulate.t_end = r.number("experiment", "t_end", 1.0);
        cfg.simulate.n_obs = static_cast<int>(r.integer("experiment", "n_obs", 10));
        cfg.simulate.obs_times = r.number_list("experiment", "obs_times", {});
        cfg.simulate.dense = r.boolean("experiment", "dense", false);
        break;
      }
      case ExperimentKind::kCheck: {
        cfg.check.n_samples = static_cast<int>(r.integer("experiment", "n_samples", 10000));
        cfg.check.radius = r.number("experiment", "radius", 5.0);
        cfg.check.n_levels = static_cast<int>(r.integer("experiment", "n_levels", 4));
        cfg.check.sup_levels = r.integer_list("experiment", "sup_levels", {10, 20, 40});
        break;
      }
      case ExperimentKind::kLyapunov: {
        cfg.lyapunov.n_traj = static_cast<int>(r.integer("experiment", "n_traj", 100));
        cfg.lyapunov.t_end = r.number("experiment", "t_end", 2.0);
        cfg.lyapunov.n_obs = static_cast<int>(r.integer("experiment", "n_obs", 8));
        cfg.lyapunov.levels = r.integer_list("experiment", "levels", {10, 20, 40});
        cfg.lyapunov.burn_in = r.number("experiment", "burn_in", 0.0);
        cfg.lyapunov.n_samples = static_cast<int>(r.integer("experiment", "n_samples", 10000));
        break;
      }
      case ExperimentKind::kPeriodic: {
        cfg.periodic.n_traj = static_cast<int>(r.integer("experiment", "n_traj", 4000));
        cfg.periodic.phases = r.number_list("experiment", "phases", {});
        cfg.periodic.k_min = static_cast<int>(r.integer("experiment", "k_min", 10));
        cfg.periodic.k_max = static_cast<int>(r.integer("experiment", "k_max", 14));
        cfg.periodic.n_perms = static_cast<int>(r.integer("experiment", "n_perms", 999));
        break;
      }
      case ExperimentKind::kErgoAvg: {
        cfg.ergoavg.n_replicas = static_cast<int>(r.integer("experiment", "n_replicas", 100));
        cfg.ergoavg.n_terms = static_cast<int>(r.integer("experiment", "n_terms", 200));
        cfg.ergoavg.checkpoints = r.integer_list("experiment", "checkpoints", {50, 200});
        cfg.ergoavg.phase = r.number("experiment", "phase", 0.0);
        cfg.ergoavg.burn_periods = static_cast<int>(r.integer("experiment", "burn_periods", 10));
        cfg.ergoavg.observable = lower(trim(r.text("experiment", "observable", "h2")));
        cfg.ergoavg.clip = r.number("experiment", "clip", 100.0);
        cfg.ergoavg.obs_mode = static_cast<int>(r.integer("experiment", "obs_mode", 1));
        cfg.ergoavg.obs_regime = static_cast<int>(r.integer("experiment", "obs_regime", 1));
        if (cfg.ergoavg.observable != "h2" && cfg.ergoavg.observable != "mode" &&
            cfg.ergoavg.observable != "regime") {
          fail("[experiment] observable must be h2|mode|regime");
        }
        break;
      }
      case ExperimentKind::kCouple: {
        cfg.couple.n_pairs = static_cast<int>(r.integer("experiment", "n_pairs", 1000));
        cfg.couple.eps = r.number("experiment", "eps", 0.5);
        cfg.couple.n_stop = static_cast<int>(r.integer("experiment", "n_stop", 100));
        cfg.couple.t_end = r.number("experiment", "t_end", 1.0);
        cfg.couple.separations =
            r.number_list("experiment", "separations", {0.5, 0.25, 0.125});
        cfg.couple.n_survival_times =
            static_cast<int>(r.integer("experiment", "n_survival_times", 10));
        break;
      }
      case ExperimentKind::kSteer: {
        cfg.steer.target = r.number_list("experiment", "target", {});
        cfg.steer.t1 = r.number("experiment", "t1", 0.3);
        cfg.steer.t_end = r.number("experiment", "t_end", 1.0);
        cfg.steer.m_factor = r.number("experiment", "m_factor", 6.0);
        cfg.steer.radius = r.number("experiment", "radius", 5.0);
        cfg.steer.eps_reg = r.number("experiment", "eps_reg", 1e-2);
        cfg.steer.n_level = static_cast<int>(r.integer("experiment", "n_level", 4));
        cfg.steer.delta = r.number("experiment", "delta", 0.1);
        cfg.steer.n_runs = static_cast<int>(r.integer("experiment", "n_runs", 200));
        cfg.steer.sweep = r.boolean("experiment", "sweep", true);
        break;
      }
    }
  }

  ini.reject_unused();

  // environment overrides
  if (const char* env = std::getenv("RSSPDE_SEED")) {
    cfg.seed = static_cast<uint64_t>(parse_integer(env, "RSSPDE_SEED"));
  }
  if (const char* env = std::getenv("RSSPDE_WORKERS")) {
    cfg.workers = static_cast<int>(parse_integer(env, "RSSPDE_WORKERS"));
  }
  return cfg;
}

}  // namespace

RunConfig load_config_text(const std::string& text) { return assemble(IniFile::parse_text(text)); }

RunConfig load_config_file(const std::string& path) { return assemble(IniFile::parse_file(path)); }

ModelSpec build_model(const RunConfig& cfg) {
  ModelSpec model;
  if (cfg.model_kind == ModelKind::kLinear) {
    model = build_linear_model(cfg.linear);
  } else {
    model = build_porous_media_model(cfg.pme);
  }
  model.wiener_enabled = cfg.noise.wiener;

  switch (cfg.rates.preset) {
    case RatePreset::kOff: break;
    case RatePreset::kBanded:
      model.rates = rate_matrix_banded(cfg.rates.band_m, cfg.rates.rate_m, cfg.rates.drift_gap,
                                       cfg.rates.s_max);
      break;
    case RatePreset::kDecay:
      model.rates = rate_matrix_decay(cfg.rates.delta, cfg.rates.lo, cfg.rates.hi,
                                      cfg.rates.s_max);
      break;
    case RatePreset::kTable:
      model.rates = rate_matrix_table(cfg.rates.table);
      break;
  }

  if (cfg.jumps.choice != JumpCoefParams::Choice::kOff) {
    LevyMeasure levy;
    levy.small.enabled = cfg.noise.small_enabled;
    levy.small.alpha = cfg.noise.small_alpha;
    levy.small.scale = cfg.noise.small_scale;
    levy.large.enabled = cfg.noise.large_enabled;
    levy.large.rate = cfg.noise.large_rate;
    levy.large.z_max = cfg.noise.z_max;
    levy.eps_trunc = cfg.noise.eps_trunc;
    attach_jump_coefs(model, cfg.jumps, levy);
  }

  if (cfg.lambda_exp_override != 0.0) {
    double lam = cfg.lambda_exp_override;
    double alpha = model.constants.alpha;
    if (lam < 2.0 || lam <= alpha - 2.0) {
      fail("lambda_exp = " + fmt_double(lam) +
           " is outside the admissible range: the nondegenerate local-monotonicity exponent "
           "must satisfy lambda >= 2 and lambda > alpha - 2 (here alpha = " +
           fmt_double(alpha) + ")");
    }
    model.constants.lambda_exp = lam;
  }
  return model;
}

std::function<double(int)> lyapunov_weight(const RunConfig& cfg) {
  switch (cfg.rates.preset) {
    case RatePreset::kBanded: return lyapunov_f_banded();
    case RatePreset::kDecay: return lyapunov_f_decay(cfg.rates.delta);
    case RatePreset::kOff:
    case RatePreset::kTable: break;
  }
  return [](int i) { return static_cast<double>(i); };
}

GalerkinState initial_state(const RunConfig& cfg, const ModelSpec& model) {
  if (static_cast<int>(cfg.x0.size()) > model.n_modes) {
    fail("[run] x0 lists " + std::to_string(cfg.x0.size()) + " coefficients but the model has " +
         std::to_string(model.n_modes) + " modes");
  }
  GalerkinState x(static_cast<std::size_t>(model.n_modes), 0.0);
  std::copy(cfg.x0.begin(), cfg.x0.end(), x.begin());
  return x;
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::string out;
  auto line = [&](const std::string& s) { out += s + "\n"; };

  line("[run]");
  line("seed = " + std::to_string(cfg.seed));
  line("workers = " + std::to_string(cfg.workers));
  line("out_dir = " + cfg.out_dir);
  if (!cfg.x0.empty()) line("x0 = " + fmt_list(cfg.x0));
  line("i0 = " + std::to_string(cfg.i0));
  line("");

  line("[model]");
  if (cfg.model_kind == ModelKind::kLinear) {
    line("kind = linear");
    line("n_modes = " + std::to_string(cfg.linear.n_modes));
    line("lambda0 = " + fmt_double(cfg.linear.lambda0));
    line("lambda_pow = " + fmt_double(cfg.linear.lambda_pow));
    line("sigma0 = " + fmt_double(cfg.linear.sigma0));
    line("sigma_pow = " + fmt_double(cfg.linear.sigma_pow));
    line("period = " + fmt_double(cfg.linear.period));
  } else {
    line("kind = pme");
    line("n_modes = " + std::to_string(cfg.pme.n_modes));
    line("n_grid = " + std::to_string(cfg.pme.n_grid));
    line("gamma = " + fmt_double(cfg.pme.gamma_frac));
    line("r_exponent = " + fmt_double(cfg.pme.r_exponent));
    line("s_decay = " + fmt_double(cfg.pme.s_decay));
    line("kappa0 = " + fmt_double(cfg.pme.kappa0));
    line("kappa_amp = " + fmt_double(cfg.pme.kappa_amp));
    line("g0 = " + fmt_double(cfg.pme.g0));
    line("g_amp = " + fmt_double(cfg.pme.g_amp));
    line("g_reg = " + fmt_double(cfg.pme.g_reg));
    line("bprime0 = " + fmt_double(cfg.pme.bprime0));
    line("bprime_amp = " + fmt_double(cfg.pme.bprime_amp));
    line("period = " + fmt_double(cfg.pme.period));
  }
  if (cfg.lambda_exp_override != 0.0) {
    line("lambda_exp = " + fmt_double(cfg.lambda_exp_override));
  }
  line("");

  line("[rates]");
  switch (cfg.rates.preset) {
    case RatePreset::kOff:
      line("preset = off");
      break;
    case RatePreset::kBanded:
      line("preset = banded");
      line("s_max = " + std::to_string(cfg.rates.s_max));
      line("band_m = " + std::to_string(cfg.rates.band_m));
      line("rate_m = " + fmt_double(cfg.rates.rate_m));
      line("drift_gap = " + fmt_double(cfg.rates.drift_gap));
      break;
    case RatePreset::kDecay:
      line("preset = decay");
      line("s_max = " + std::to_string(cfg.rates.s_max));
      line("delta = " + fmt_double(cfg.rates.delta));
      line("lo = " + fmt_double(cfg.rates.lo));
      line("hi = " + fmt_double(cfg.rates.hi));
      break;
    case RatePreset::kTable:
      line("preset = table");
      line("s_max = " + std::to_string(cfg.rates.s_max));
      for (int i = 1; i <= cfg.rates.s_max; ++i) {
        line("row_" + std::to_string(i) + " = " +
             fmt_list(cfg.rates.table[static_cast<std::size_t>(i - 1)]));
      }
      break;
  }
  line("");

  line("[noise]");
  line(std::string("wiener = ") + (cfg.noise.wiener ? "true" : "false"));
  line(std::string("small_enabled = ") + (cfg.noise.small_enabled ? "true" : "false"));
  line("small_alpha = " + fmt_double(cfg.noise.small_alpha));
  line("small_scale = " + fmt_double(cfg.noise.small_scale));
  line("eps_trunc = " + fmt_double(cfg.noise.eps_trunc));
  line(std::string("large_enabled = ") + (cfg.noise.large_enabled ? "true" : "false"));
  line("large_rate = " + fmt_double(cfg.noise.large_rate));
  line("z_max = " + fmt_double(cfg.noise.z_max));
  line("");

  line("[jumps]");
  switch (cfg.jumps.choice) {
    case JumpCoefParams::Choice::kOff: line("coef = off"); break;
    case JumpCoefParams::Choice::kAdditive: line("coef = additive"); break;
    case JumpCoefParams::Choice::kDamped: line("coef = damped"); break;
  }
  if (cfg.jumps.choice != JumpCoefParams::Choice::kOff) {
    line("c_h = " + fmt_double(cfg.jumps.c_H));
    line("c_j = " + fmt_double(cfg.jumps.c_J));
    line("mode_k = " + std::to_string(cfg.jumps.mode_k));
    line("z_cap = " + fmt_double(cfg.jumps.z_cap));
  }
  line("");

  line("[step]");
  line("dt_max = " + fmt_double(cfg.step.dt_max));
  line("implicit_tol = " + fmt_double(cfg.step.implicit_tol));
  line("implicit_max_iters = " + std::to_string(cfg.step.implicit_max_iters));
  line(std::string("taming = ") + (cfg.step.taming_fallback ? "true" : "false"));
  line("");

  line("[experiment]");
  line(std::string("kind = ") + experiment_name(cfg.experiment));
  switch (cfg.experiment) {
    case ExperimentKind::kSimulate:
      line("n_traj = " + std::to_string(cfg.simulate.n_traj));
      line("t_end = " + fmt_double(cfg.simulate.t_end));
      if (!cfg.simulate.obs_times.empty()) {
        line("obs_times = " + fmt_list(cfg.simulate.obs_times));
      } else {
        line("n_obs = " + std::to_string(cfg.simulate.n_obs));
      }
      line(std::string("dense = ") + (cfg.simulate.dense ? "true" : "false"));
      break;
    case ExperimentKind::kCheck:
      line("n_samples = " + std::to_string(cfg.check.n_samples));
      line("radius = " + fmt_double(cfg.check.radius));
      line("n_levels = " + std::to_string(cfg.check.n_levels));
      line("sup_levels = " + fmt_list(cfg.check.sup_levels));
      break;
    case ExperimentKind::kLyapunov:
      line("n_traj = " + std::to_string(cfg.lyapunov.n_traj));
      line("t_end = " + fmt_double(cfg.lyapunov.t_end));
      line("n_obs = " + std::to_string(cfg.lyapunov.n_obs));
      line("levels = " + fmt_list(cfg.lyapunov.levels));
      line("burn_in = " + fmt_double(cfg.lyapunov.burn_in));
      line("n_samples = " + std::to_string(cfg.lyapunov.n_samples));
      break;
    case ExperimentKind::kPeriodic:
      line("n_traj = " + std::to_string(cfg.periodic.n_traj));
      if (!cfg.periodic.phases.empty()) line("phases = " + fmt_list(cfg.periodic.phases));
      line("k_min = " + std::to_string(cfg.periodic.k_min));
      line("k_max = " + std::to_string(cfg.periodic.k_max));
      line("n_perms = " + std::to_string(cfg.periodic.n_perms));
      break;
    case ExperimentKind::kErgoAvg:
      line("n_replicas = " + std::to_string(cfg.ergoavg.n_replicas));
      line("n_terms = " + std::to_string(cfg.ergoavg.n_terms));
      line("checkpoints = " + fmt_list(cfg.ergoavg.checkpoints));
      line("phase = " + fmt_double(cfg.ergoavg.phase));
      line("burn_periods = " + std::to_string(cfg.ergoavg.burn_periods));
      line("observable = " + cfg.ergoavg.observable);
      line("clip = " + fmt_double(cfg.ergoavg.clip));
      line("obs_mode = " + std::to_string(cfg.ergoavg.obs_mode));
      line("obs_regime = " + std::to_string(cfg.ergoavg.obs_regime));
      break;
    case ExperimentKind::kCouple:
      line("n_pairs = " + std::to_string(cfg.couple.n_pairs));
      line("eps = " + fmt_double(cfg.couple.eps));
      line("n_stop = " + std::to_string(cfg.couple.n_stop));
      line("t_end = " + fmt_double(cfg.couple.t_end));
      line("separations = " + fmt_list(cfg.couple.separations));
      line("n_survival_times = " + std::to_string(cfg.couple.n_survival_times));
      break;
    case ExperimentKind::kSteer:
      if (!cfg.steer.target.empty()) line("target = " + fmt_list(cfg.steer.target));
      line("t1 = " + fmt_double(cfg.steer.t1));
      line("t_end = " + fmt_double(cfg.steer.t_end));
      line("m_factor = " + fmt_double(cfg.steer.m_factor));
      line("radius = " + fmt_double(cfg.steer.radius));
      line("eps_reg = " + fmt_double(cfg.steer.eps_reg));
      line("n_level = " + std::to_string(cfg.steer.n_level));
      line("delta = " + fmt_double(cfg.steer.delta));
      line("n_runs = " + std::to_string(cfg.steer.n_runs));
      line(std::string("sweep = ") + (cfg.steer.sweep ? "true" : "false"));
      break;
  }
  return out;
}

}  // namespace rsspde
