#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "state_evolution.hpp"

namespace sparselab {

// One row of the comparison table; one row per (t, source).
struct ReportRow {
  int t;
  std::string source;  // EMP | SE | GFA
  double mse;
  double stderr_;
  double tau2;
  std::string extra;
};

struct ComparisonReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<std::pair<int, std::string>> failed_trials;  // (index, what)
  std::optional<OrderParameters> gfa;
  std::optional<SeTrace> se;
  double max_rel_gap_se = -1.0;  // max_t |emp - se|/se, -1 when unavailable
  double wall_time_ms = 0.0;
  bool passed = true;  // false only when a declared threshold fails

  std::string csv() const;   // deterministic body, no timestamps
  std::string json() const;
  void write(const std::string& csv_path, const std::string& json_path) const;
};

ComparisonReport run_experiment(const ExperimentConfig& config);

// Independent run_experiment per value of the swept axis
// (delta | epsilon | sigma0_2 | kappa), with derived sub-seeds.
struct SweepResult {
  std::vector<ComparisonReport> reports;
  std::string summary_csv;  // final-iteration mse per value
  bool passed = true;
};

SweepResult sweep(const ExperimentConfig& config, const std::string& axis,
                  const std::vector<double>& values);

// Divergence-free residual grid for df(soft) and df(mmse_bg).
struct DfVerification {
  struct Entry {
    std::string denoiser;
    double tau, epsilon, residual;
  };
  std::vector<Entry> entries;
  double max_abs_residual = 0.0;
  bool passed = false;  // max residual <= 1e-10
  std::string json() const;
};

DfVerification verify_df_grid(const ExperimentConfig& config,
                              const std::vector<double>& taus = {0.1, 0.5, 1.0, 2.0},
                              const std::vector<double>& epsilons = {0.05, 0.1, 0.3});

std::string lemma2_report_json(const Lemma2Report& rep);

}  // namespace sparselab
