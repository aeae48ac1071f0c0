#include "harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rng.hpp"

namespace sparselab {

namespace {

using nlohmann::json;

// Substream ids for the master seed: trials are 1.., the rest fixed.
enum : std::uint64_t { kStreamGfa = 1ull << 40, kStreamSweep = 1ull << 41 };

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("SPARSELAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

json matrix_to_json(const Mat& M) {
  json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  std::vector<double> data;
  data.reserve(M.size());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index k = 0; k < M.cols(); ++k) data.push_back(M(i, k));
  j["data"] = data;  // row-major
  return j;
}

json vector_to_json(const Vec& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json order_parameters_to_json(const OrderParameters& p) {
  json j;
  j["horizon"] = p.horizon;
  j["ex2"] = p.ex2;
  j["m"] = vector_to_json(p.m);
  j["m_stderr"] = vector_to_json(p.m_stderr);
  j["C"] = matrix_to_json(p.C);
  j["C_stderr"] = matrix_to_json(p.C_stderr);
  j["G"] = matrix_to_json(p.G);
  j["G_stderr"] = matrix_to_json(p.G_stderr);
  j["D"] = matrix_to_json(p.D);
  j["R"] = matrix_to_json(p.R);
  j["Gamma"] = matrix_to_json(p.Gamma);
  j["k_hat"] = vector_to_json(p.k_hat);
  j["mse"] = vector_to_json(p.mse);
  j["mse_direct"] = vector_to_json(p.mse_direct);
  j["mse_stderr"] = vector_to_json(p.mse_stderr);
  j["tau"] = p.tau;
  return j;
}

struct TrialSummary {
  std::vector<double> mse, overlap, tau2_emp;
};

}  // namespace

std::string ComparisonReport::csv() const {
  std::string out = "t,source,mse,stderr,tau2,extra\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + r.source + "," + fmt_g(r.mse) + "," +
           fmt_g(r.stderr_) + "," + fmt_g(r.tau2) + "," + r.extra + "\n";
  }
  return out;
}

std::string ComparisonReport::json() const {
  nlohmann::json j;
  j["config"] = config.to_map();
  j["config_hash"] = config.hash();
  j["trial_seeds"] = trial_seeds;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& [idx, what] : failed_trials)
    fails.push_back({{"trial", idx}, {"error", what}});
  j["failed_trials"] = fails;
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows)
    jrows.push_back({{"t", r.t},
                     {"source", r.source},
                     {"mse", r.mse},
                     {"stderr", r.stderr_},
                     {"tau2", r.tau2},
                     {"extra", r.extra}});
  j["rows"] = jrows;
  if (gfa) j["gfa"] = order_parameters_to_json(*gfa);
  if (se) {
    j["se"] = {{"sigma2", se->sigma2}, {"tau2", se->tau2}};
  }
  j["max_rel_gap_se"] = max_rel_gap_se;
  j["passed"] = passed;
  j["wall_time_ms"] = wall_time_ms;
  return j.dump(2);
}

void ComparisonReport::write(const std::string& csv_path,
                             const std::string& json_path) const {
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    if (!os) fail(ErrorCode::Io, "report: cannot open " + csv_path);
    os << csv();
  }
  if (!json_path.empty()) {
    std::ofstream os(json_path);
    if (!os) fail(ErrorCode::Io, "report: cannot open " + json_path);
    os << json();
  }
}

ComparisonReport run_experiment(const ExperimentConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  ComparisonReport rep;
  rep.config = config;

  const Prior prior = config.prior();
  const double delta = config.delta_actual();
  const int T = config.T;
  const QuadratureRule rule = QuadratureRule::gauss_hermite(config.quad_order);

  if (config.run_se)
    rep.se = se_run(prior, delta, config.sigma0_2, config.schedule_factory(),
                    T, rule);
  if (config.run_gfa && T > 0) {
    GfaOptions gopts;
    gopts.samples = config.mc_samples;
    gopts.seed = substream_seed(config.seed, kStreamGfa);
    rep.gfa = gfa_run(prior, delta, config.sigma0_2, config.gfa_factory(), T,
                      gopts);
  }

  // tau_t^2 schedule for building the per-iteration denoisers.
  std::vector<double> tau2(static_cast<std::size_t>(T), 0.0);
  if (T > 0) {
    if (config.tau_source == TauSource::GFA) {
      if (!rep.gfa)
        fail(ErrorCode::Config, "run_experiment: tau_source=gfa needs run_gfa=1");
      for (int t = 0; t < T; ++t) tau2[t] = rep.gfa->tau[t] * rep.gfa->tau[t];
    } else if (config.tau_source == TauSource::SE ||
               config.algorithm != Algorithm::OAMP) {
      if (!rep.se)
        fail(ErrorCode::Config, "run_experiment: tau_source=se needs run_se=1");
      for (int t = 0; t < T; ++t) tau2[t] = rep.se->tau2[t];
    }
  }

  std::vector<Denoiser> fixed_schedule;
  if (config.algorithm != Algorithm::OAMP) {
    const DenoiserFactory factory = config.schedule_factory();
    for (int t = 0; t < T; ++t)
      fixed_schedule.push_back(factory(std::sqrt(tau2[t])));
  }

  // Trials: independent substreams of the master seed, merged by index.
  const int trials = config.trials;
  rep.trial_seeds.resize(trials);
  for (int i = 0; i < trials; ++i)
    rep.trial_seeds[i] = substream_seed(config.seed, 1 + static_cast<std::uint64_t>(i));

  std::vector<TrialSummary> results(trials);
  std::vector<std::string> errors(trials);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= trials) return;
      try {
        const ProblemInstance inst =
            generate_instance(config.n, config.delta, config.sigma0_2, prior,
                              rep.trial_seeds[i]);
        TrajectoryRecord traj;
        switch (config.algorithm) {
          case Algorithm::IST:
            traj = run_ist(inst, fixed_schedule, T);
            break;
          case Algorithm::AMP:
            traj = run_amp(inst, fixed_schedule, T);
            break;
          case Algorithm::OAMP: {
            OampOptions opts;
            opts.tau_source = config.tau_source;
            opts.tau2 = tau2;
            opts.scale = config.df_scale;
            traj = run_oamp(inst, prior, config.base_factory(), opts, T);
            break;
          }
        }
        results[i] = {traj.mse, traj.overlap, traj.tau2_emp};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int nworkers = std::min(resolve_workers(config.workers), trials);
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int ok = 0;
  std::vector<double> mse_mean(T + 1, 0.0), mse_m2(T + 1, 0.0);
  std::vector<double> ov_mean(T + 1, 0.0), tau2_mean(T + 1, 0.0);
  for (int i = 0; i < trials; ++i) {
    if (!errors[i].empty()) {
      rep.failed_trials.emplace_back(i, "trial seed " +
                                            std::to_string(rep.trial_seeds[i]) +
                                            ": " + errors[i]);
      continue;
    }
    ++ok;
    for (int t = 0; t <= T; ++t) {
      mse_mean[t] += results[i].mse[t];
      mse_m2[t] += results[i].mse[t] * results[i].mse[t];
      ov_mean[t] += results[i].overlap[t];
      tau2_mean[t] += results[i].tau2_emp[t];
    }
  }
  if (ok == 0)
    fail(ErrorCode::Numeric, "run_experiment: every trial failed (" +
                                 (trials > 0 ? rep.failed_trials[0].second : "") + ")");
  for (int t = 0; t <= T; ++t) {
    mse_mean[t] /= ok;
    ov_mean[t] /= ok;
    tau2_mean[t] /= ok;
    const double var = std::max(mse_m2[t] / ok - mse_mean[t] * mse_mean[t], 0.0);
    // trial-to-trial stderr, never within-trial
    mse_m2[t] = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
  }

  double max_gap = -1.0;
  for (int t = 0; t <= T; ++t) {
    rep.rows.push_back({t, "EMP", mse_mean[t], mse_m2[t], tau2_mean[t],
                        "overlap=" + fmt_g(ov_mean[t])});
    if (rep.se) {
      rep.rows.push_back({t, "SE", rep.se->sigma2[t], 0.0, rep.se->tau2[t], ""});
      if (rep.se->sigma2[t] > 0.0)
        max_gap = std::max(max_gap, std::abs(mse_mean[t] - rep.se->sigma2[t]) /
                                        rep.se->sigma2[t]);
    }
    if (rep.gfa)
      rep.rows.push_back({t, "GFA", rep.gfa->mse(t), rep.gfa->mse_stderr(t),
                          rep.gfa->R(t, t), ""});
  }
  rep.max_rel_gap_se = max_gap;
  if (config.threshold_max_rel_gap_se >= 0.0)
    rep.passed = max_gap >= 0.0 && max_gap <= config.threshold_max_rel_gap_se &&
                 rep.failed_trials.empty();

  rep.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t_start)
          .count();
  rep.write(config.out_csv, config.out_json);
  return rep;
}

namespace {

std::string with_suffix(const std::string& path, const std::string& suffix) {
  if (path.empty()) return path;
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || path.find('/', dot) != std::string::npos)
    return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace

SweepResult sweep(const ExperimentConfig& config, const std::string& axis,
                  const std::vector<double>& values) {
  if (axis != "delta" && axis != "epsilon" && axis != "sigma0_2" && axis != "kappa")
    fail(ErrorCode::Config,
         "sweep: axis must be delta|epsilon|sigma0_2|kappa, got '" + axis + "'");
  if (values.empty()) fail(ErrorCode::Config, "sweep: no values given");

  SweepResult result;
  std::string summary = "axis,value,mse_emp,mse_se,mse_gfa\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig sub = config;
    sub.set(axis, fmt_g(values[i]));
    sub.seed = substream_seed(config.seed, kStreamSweep + i);
    sub.out_csv = with_suffix(config.out_csv, "_" + axis + std::to_string(i));
    sub.out_json = with_suffix(config.out_json, "_" + axis + std::to_string(i));
    std::string emp = "nan", se_v = "nan", gfa_v = "nan";
    try {
      ComparisonReport rep = run_experiment(sub);
      for (const auto& r : rep.rows) {
        if (r.t != sub.T) continue;
        if (r.source == "EMP") emp = fmt_g(r.mse);
        if (r.source == "SE") se_v = fmt_g(r.mse);
        if (r.source == "GFA") gfa_v = fmt_g(r.mse);
      }
      result.passed = result.passed && rep.passed;
      result.reports.push_back(std::move(rep));
    } catch (const std::exception& e) {
      // per-point failures are isolated
      ComparisonReport failed;
      failed.config = sub;
      failed.passed = false;
      failed.failed_trials.emplace_back(-1, e.what());
      result.reports.push_back(std::move(failed));
      result.passed = false;
    }
    summary += axis + "," + fmt_g(values[i]) + "," + emp + "," + se_v + "," +
               gfa_v + "\n";
  }
  result.summary_csv = summary;
  return result;
}

DfVerification verify_df_grid(const ExperimentConfig& config,
                              const std::vector<double>& taus,
                              const std::vector<double>& epsilons) {
  const QuadratureRule rule = QuadratureRule::gauss_hermite(config.quad_order);
  DfVerification out;
  for (const double eps : epsilons) {
    const Prior prior(eps, config.amp_variance);
    for (const double tau : taus) {
      const Denoiser soft = Denoiser::soft_threshold(config.kappa * tau);
      const Denoiser mmse = Denoiser::mmse_bg(prior, tau * tau);
      for (const auto& [name, base] :
           {std::pair<std::string, const Denoiser&>{"df(soft)", soft},
            {"df(mmse_bg)", mmse}}) {
        const Denoiser df = df_transform(base, prior, tau, config.df_scale, rule);
        const double res = check_divergence_free(df, prior, tau, rule);
        out.entries.push_back({name, tau, eps, res});
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(res));
      }
    }
  }
  out.passed = out.max_abs_residual <= 1e-10;
  return out;
}

std::string DfVerification::json() const {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries)
    rows.push_back({{"denoiser", e.denoiser},
                    {"tau", e.tau},
                    {"epsilon", e.epsilon},
                    {"residual", e.residual}});
  j["entries"] = rows;
  j["max_abs_residual"] = max_abs_residual;
  j["passed"] = passed;
  return j.dump(2);
}

std::string lemma2_report_json(const Lemma2Report& rep) {
  nlohmann::json j;
  j["max_abs_G"] = rep.max_abs_G;
  j["max_abs_G_over_stderr"] = rep.max_abs_G_over_stderr;
  j["k_hat"] = std::vector<double>(rep.k_hat_values.data(),
                                   rep.k_hat_values.data() + rep.k_hat_values.size());
  j["max_k_hat_dev"] = rep.max_k_hat_dev;
  j["R_minus_D_norm"] = rep.R_minus_D_norm;
  j["R_minus_D_bound"] = rep.R_minus_D_bound;
  j["order_parameters"] = order_parameters_to_json(rep.params);
  j["passed"] = rep.max_abs_G_over_stderr <= 4.0 && rep.max_k_hat_dev <= 1e-10 &&
                rep.R_minus_D_norm <= rep.R_minus_D_bound;
  return j.dump(2);
}

}  // namespace sparselab
