#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gfa.hpp"
#include "recovery.hpp"

namespace sparselab {

// Flat, typed experiment configuration. Loads from a key = value file;
// individual keys can be overridden afterwards (CLI flags do that).
struct ExperimentConfig {
  long n = 2000;
  double delta = 0.5;
  double sigma0_2 = 0.01;
  double epsilon = 0.1;
  double amp_variance = 1.0;
  Algorithm algorithm = Algorithm::OAMP;
  std::string denoiser = "df(mmse_bg)";  // soft | mmse_bg | df(soft) | df(mmse_bg)
  double kappa = 1.5;                    // soft threshold lambda = kappa * tau
  DfScale df_scale = DfScale::Unit;
  TauSource tau_source = TauSource::SE;
  int T = 10;
  int trials = 1;
  std::uint64_t seed = 1;
  long mc_samples = 200000;
  int quad_order = 61;
  bool run_gfa = true;
  bool run_se = true;
  int workers = 0;  // 0: SPARSELAB_WORKERS env or hardware concurrency
  double threshold_max_rel_gap_se = -1.0;  // <0: no acceptance threshold
  std::string out_csv;
  std::string out_json;

  static ExperimentConfig load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  void validate() const;

  Prior prior() const { return Prior(epsilon, amp_variance); }
  // delta after M = round(delta*n), used everywhere downstream
  double delta_actual() const;

  // Canonical serialization (sorted keys) and its FNV-1a hash.
  std::map<std::string, std::string> to_map() const;
  std::string canonical() const;
  std::string hash() const;

  bool denoiser_is_df() const;
  std::string base_denoiser_name() const;  // strips df(...)
  DenoiserFactory base_factory() const;    // raw family, tau -> eta_hat
  DenoiserFactory schedule_factory() const;  // as the algorithm applies it
  GfaScheduleFactory gfa_factory() const;
};

}  // namespace sparselab
