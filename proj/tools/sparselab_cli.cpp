// Command-line front end; talks to the core exclusively through the C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparselab.h"

namespace {

struct ConfigDeleter {
  void operator()(sl_config* c) const { sl_config_free(c); }
};
struct ReportDeleter {
  void operator()(sl_report* r) const { sl_report_free(r); }
};
using ConfigPtr = std::unique_ptr<sl_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<sl_report, ReportDeleter>;

[[noreturn]] void die(const std::string& what) {
  std::fprintf(stderr, "error: %s: %s\n", what.c_str(), sl_last_error());
  std::exit(1);
}

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file,
                    "experiment config file (key = value lines)");
    app->add_option("--set", sets, "override a config field, KEY=VALUE")
        ->type_name("KEY=VALUE");
  }

  ConfigPtr build() const {
    ConfigPtr cfg(sl_config_create());
    if (!config_file.empty() &&
        sl_config_load(cfg.get(), config_file.c_str()) != SL_OK)
      die("loading " + config_file);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n",
                     kv.c_str());
        std::exit(1);
      }
      if (sl_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                        kv.substr(eq + 1).c_str()) != SL_OK)
        die("setting " + kv);
    }
    return cfg;
  }
};

// Print CSV to stdout unless the config routes it to a file already.
int emit(const sl_report* rep, const sl_config* cfg, bool json_default) {
  const char* out_csv = sl_config_get(const_cast<sl_config*>(cfg), "out_csv");
  const bool csv_to_file = out_csv && *out_csv;
  if (json_default) {
    if (const char* j = sl_report_json(rep)) std::printf("%s\n", j);
  } else if (!csv_to_file) {
    if (const char* c = sl_report_csv(rep)) std::fputs(c, stdout);
  }
  return sl_report_passed(rep) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparselab: iterative sparse recovery (IST/AMP/OAMP) versus "
               "state evolution and the exact order-parameter recursion"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, se_opts, gfa_opts, vdf_opts, vl2_opts,
      inst_opts;

  auto* run_cmd = app.add_subcommand(
      "run", "run matched finite-N trials + SE + order-parameter recursion");
  run_opts.attach(run_cmd);

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run an experiment per value of one axis");
  sweep_opts.attach(sweep_cmd);
  std::string axis;
  std::vector<double> values;
  sweep_cmd->add_option("--axis", axis, "delta|epsilon|sigma0_2|kappa")
      ->required();
  sweep_cmd->add_option("--values", values, "axis values")
      ->required()
      ->delimiter(',');

  auto* se_cmd =
      app.add_subcommand("se", "state-evolution trace only");
  se_opts.attach(se_cmd);

  auto* gfa_cmd = app.add_subcommand(
      "gfa", "order-parameter recursion only (single-site Monte Carlo)");
  gfa_opts.attach(gfa_cmd);

  auto* vdf_cmd = app.add_subcommand(
      "verify-df", "divergence-free residuals over a tau x epsilon grid");
  vdf_opts.attach(vdf_cmd);

  auto* vl2_cmd = app.add_subcommand(
      "verify-lemma2",
      "check G = 0, k_hat = 1 and R = D for a divergence-free schedule");
  vl2_opts.attach(vl2_cmd);

  auto* inst_cmd =
      app.add_subcommand("instance", "binary problem-instance dump/inspect");
  inst_opts.attach(inst_cmd);
  std::string dump_path, info_path;
  inst_cmd->add_option("--dump", dump_path, "generate and dump to this path");
  inst_cmd->add_option("--info", info_path, "print the header of a dump");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    ConfigPtr cfg = run_opts.build();
    sl_report* rep = nullptr;
    if (sl_run_experiment(cfg.get(), &rep) != SL_OK) die("run");
    ReportPtr guard(rep);
    return emit(rep, cfg.get(), false);
  }

  if (sweep_cmd->parsed()) {
    ConfigPtr cfg = sweep_opts.build();
    sl_report* rep = nullptr;
    if (sl_sweep(cfg.get(), axis.c_str(), values.data(), values.size(),
                 &rep) != SL_OK)
      die("sweep");
    ReportPtr guard(rep);
    if (const char* c = sl_report_csv(rep)) std::fputs(c, stdout);
    return sl_report_passed(rep) ? 0 : 2;
  }

  if (se_cmd->parsed()) {
    ConfigPtr cfg = se_opts.build();
    sl_report* rep = nullptr;
    if (sl_se_run(cfg.get(), &rep) != SL_OK) die("se");
    ReportPtr guard(rep);
    if (const char* c = sl_report_csv(rep)) std::fputs(c, stdout);
    return 0;
  }

  if (gfa_cmd->parsed()) {
    ConfigPtr cfg = gfa_opts.build();
    sl_report* rep = nullptr;
    if (sl_gfa_run(cfg.get(), &rep) != SL_OK) die("gfa");
    ReportPtr guard(rep);
    const char* out_json = sl_config_get(cfg.get(), "out_json");
    if (out_json && *out_json &&
        sl_report_write(rep, "", out_json) != SL_OK)
      die("writing gfa json");
    if (const char* c = sl_report_csv(rep)) std::fputs(c, stdout);
    return 0;
  }

  if (vdf_cmd->parsed()) {
    ConfigPtr cfg = vdf_opts.build();
    sl_report* rep = nullptr;
    if (sl_verify_df(cfg.get(), &rep) != SL_OK) die("verify-df");
    ReportPtr guard(rep);
    return emit(rep, cfg.get(), true);
  }

  if (vl2_cmd->parsed()) {
    ConfigPtr cfg = vl2_opts.build();
    sl_report* rep = nullptr;
    if (sl_verify_lemma2(cfg.get(), &rep) != SL_OK) die("verify-lemma2");
    ReportPtr guard(rep);
    return emit(rep, cfg.get(), true);
  }

  if (inst_cmd->parsed()) {
    ConfigPtr cfg = inst_opts.build();
    if (!dump_path.empty()) {
      if (sl_instance_dump(cfg.get(), dump_path.c_str()) != SL_OK)
        die("instance dump");
      std::printf("wrote %s\n", dump_path.c_str());
    }
    if (!info_path.empty()) {
      uint64_t m = 0, n = 0, seed = 0;
      double sigma0_2 = 0.0;
      if (sl_instance_info(info_path.c_str(), &m, &n, &seed, &sigma0_2) != SL_OK)
        die("instance info");
      std::printf("M=%llu N=%llu seed=%llu sigma0_2=%g\n",
                  (unsigned long long)m, (unsigned long long)n,
                  (unsigned long long)seed, sigma0_2);
    }
    if (dump_path.empty() && info_path.empty()) {
      std::fprintf(stderr, "instance: need --dump and/or --info\n");
      return 1;
    }
    return 0;
  }

  return 0;
}
