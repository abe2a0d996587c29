#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsspde/models.hpp"
#include "rsspde/spde.hpp"

namespace rsspde {

// Configuration / CLI errors carry line and key diagnostics and map to exit
// code 2 (as opposed to runtime faults, which map to exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Sectioned key-value file:  [section] / key = value / # comment.
// Section and key names are case-insensitive and stored lowercase.
struct IniFile {
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::map<std::string, int> section_lines;

  static IniFile parse_text(const std::string& text);
  static IniFile parse_file(const std::string& path);

  const Entry* find(const std::string& section, const std::string& key) const;
  // throws ConfigError listing every never-read key with its line number
  void reject_unused() const;
};

// Typed access to one IniFile; reads mark keys as used.
class ConfigReader {
 public:
  explicit ConfigReader(const IniFile& ini) : ini_(ini) {}

  bool has(const std::string& sec, const std::string& key) const;
  std::string text(const std::string& sec, const std::string& key, const std::string& dflt) const;
  std::string require_text(const std::string& sec, const std::string& key) const;
  double number(const std::string& sec, const std::string& key, double dflt) const;
  double require_number(const std::string& sec, const std::string& key) const;
  int64_t integer(const std::string& sec, const std::string& key, int64_t dflt) const;
  bool boolean(const std::string& sec, const std::string& key, bool dflt) const;
  std::vector<double> number_list(const std::string& sec, const std::string& key,
                                  const std::vector<double>& dflt) const;
  std::vector<int> integer_list(const std::string& sec, const std::string& key,
                                const std::vector<int>& dflt) const;

 private:
  const IniFile& ini_;
};

enum class ModelKind { kLinear, kPorousMedia };
enum class RatePreset { kOff, kBanded, kDecay, kTable };
enum class ExperimentKind { kSimulate, kCheck, kLyapunov, kPeriodic, kErgoAvg, kCouple, kSteer };

const char* experiment_name(ExperimentKind k);

struct RatesConfig {
  RatePreset preset = RatePreset::kOff;
  int s_max = 0;
  // banded
  int band_m = 1;
  double rate_m = 1.0;
  double drift_gap = 0.5;
  // decay
  double delta = 1.0;
  double lo = 0.5;
  double hi = 1.5;
  // table rows (s_max x s_max, diagonal ignored)
  std::vector<std::vector<double>> table;
};

struct NoiseSettings {
  bool wiener = true;
  bool small_enabled = false;
  double small_alpha = 0.5;
  double small_scale = 1.0;
  double eps_trunc = 1e-3;
  bool large_enabled = false;
  double large_rate = 0.0;
  double z_max = 2.0;
};

struct SimulateParams {
  int n_traj = 1;
  double t_end = 1.0;
  int n_obs = 10;
  std::vector<double> obs_times;  // overrides n_obs when nonempty
  bool dense = false;
};

struct CheckParams {
  int n_samples = 10000;
  double radius = 5.0;
  int n_levels = 4;
  std::vector<int> sup_levels = {10, 20, 40};
};

struct LyapunovParams {
  int n_traj = 100;
  double t_end = 2.0;
  int n_obs = 8;
  std::vector<int> levels = {10, 20, 40};
  double burn_in = 0.0;
  int n_samples = 10000;  // for the dissipativity profile
};

struct PeriodicParams {
  int n_traj = 4000;
  std::vector<double> phases;  // defaults to {0, period/2}
  int k_min = 10;
  int k_max = 14;
  int n_perms = 999;
};

struct ErgoAvgParams {
  int n_replicas = 100;
  int n_terms = 200;
  std::vector<int> checkpoints = {50, 200};
  double phase = 0.0;
  int burn_periods = 10;
  std::string observable = "h2";  // h2 | mode | regime
  double clip = 100.0;
  int obs_mode = 1;
  int obs_regime = 1;
};

struct CoupleParams {
  int n_pairs = 1000;
  double eps = 0.5;
  int n_stop = 100;
  double t_end = 1.0;
  std::vector<double> separations = {0.5, 0.25, 0.125};
  int n_survival_times = 10;
};

struct SteerParams {
  std::vector<double> target;
  double t1 = 0.3;
  double t_end = 1.0;
  double m_factor = 6.0;
  double radius = 5.0;
  double eps_reg = 1e-2;
  int n_level = 4;
  double delta = 0.1;
  int n_runs = 200;
  bool sweep = true;  // also run {M, 2M, 4M} on the first noise record
};

struct RunConfig {
  uint64_t seed = 1;
  int workers = 0;
  std::string out_dir = "out";
  std::vector<double> x0;  // padded with zeros to n_modes
  int i0 = 1;

  ModelKind model_kind = ModelKind::kLinear;
  LinearModelParams linear;
  PorousMediaParams pme;
  double lambda_exp_override = 0.0;  // 0 = keep the model's declared exponent

  RatesConfig rates;
  NoiseSettings noise;
  JumpCoefParams jumps;
  StepControl step;

  ExperimentKind experiment = ExperimentKind::kSimulate;
  SimulateParams simulate;
  CheckParams check;
  LyapunovParams lyapunov;
  PeriodicParams periodic;
  ErgoAvgParams ergoavg;
  CoupleParams couple;
  SteerParams steer;
};

// Parse + validate; applies RSSPDE_SEED / RSSPDE_WORKERS overrides; rejects
// unknown keys.  All failures throw ConfigError.
RunConfig load_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Model assembly: preset + rates + noise + jump coefficients, with the
// lambda_exp override validated against the admissible range.
ModelSpec build_model(const RunConfig& cfg);

// Regime Lyapunov weight matching the rate preset.
std::function<double(int)> lyapunov_weight(const RunConfig& cfg);

// Initial condition padded to the model size.
GalerkinState initial_state(const RunConfig& cfg, const ModelSpec& model);

// Canonical dump; parseable by load_config_text and reproduces this config.
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace rsspde
