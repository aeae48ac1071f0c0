#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sparselab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::Config, "config: field '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::Config, "config: field '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  fail(ErrorCode::Config, "config: field '" + key + "' expects a boolean, got '" + v + "'");
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config: " << path << ":" << lineno << ": expected key = value";
      fail(ErrorCode::Config, msg.str());
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& v) {
  if (key == "n") n = parse_long(key, v);
  else if (key == "delta") delta = parse_double(key, v);
  else if (key == "sigma0_2") sigma0_2 = parse_double(key, v);
  else if (key == "epsilon") epsilon = parse_double(key, v);
  else if (key == "amp_variance") amp_variance = parse_double(key, v);
  else if (key == "algorithm") {
    if (v == "ist") algorithm = Algorithm::IST;
    else if (v == "amp") algorithm = Algorithm::AMP;
    else if (v == "oamp") algorithm = Algorithm::OAMP;
    else fail(ErrorCode::Config, "config: field 'algorithm' must be ist|amp|oamp, got '" + v + "'");
  } else if (key == "denoiser") {
    if (v != "soft" && v != "mmse_bg" && v != "df(soft)" && v != "df(mmse_bg)")
      fail(ErrorCode::Config,
           "config: field 'denoiser' must be soft|mmse_bg|df(soft)|df(mmse_bg), got '" + v + "'");
    denoiser = v;
  } else if (key == "kappa") kappa = parse_double(key, v);
  else if (key == "df_scale") {
    if (v == "unit") df_scale = DfScale::Unit;
    else if (v == "normalized") df_scale = DfScale::Normalized;
    else fail(ErrorCode::Config, "config: field 'df_scale' must be unit|normalized, got '" + v + "'");
  } else if (key == "tau_source") {
    if (v == "se") tau_source = TauSource::SE;
    else if (v == "gfa") tau_source = TauSource::GFA;
    else if (v == "empirical") tau_source = TauSource::Empirical;
    else fail(ErrorCode::Config, "config: field 'tau_source' must be se|gfa|empirical, got '" + v + "'");
  } else if (key == "T") T = static_cast<int>(parse_long(key, v));
  else if (key == "trials") trials = static_cast<int>(parse_long(key, v));
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, v));
  else if (key == "mc_samples") mc_samples = parse_long(key, v);
  else if (key == "quad_order") quad_order = static_cast<int>(parse_long(key, v));
  else if (key == "run_gfa") run_gfa = parse_bool(key, v);
  else if (key == "run_se") run_se = parse_bool(key, v);
  else if (key == "workers") workers = static_cast<int>(parse_long(key, v));
  else if (key == "threshold_max_rel_gap_se") threshold_max_rel_gap_se = parse_double(key, v);
  else if (key == "out_csv") out_csv = v;
  else if (key == "out_json") out_json = v;
  else fail(ErrorCode::Config, "config: unknown field '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto m = to_map();
  const auto it = m.find(key);
  if (it == m.end()) fail(ErrorCode::Config, "config: unknown field '" + key + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  if (n < 1) fail(ErrorCode::Config, "config: field 'n' must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0))
    fail(ErrorCode::Config, "config: field 'delta' must be in (0,1]");
  if (sigma0_2 < 0.0) fail(ErrorCode::Config, "config: field 'sigma0_2' must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    fail(ErrorCode::Config, "config: field 'epsilon' must be in (0,1]");
  if (amp_variance < 0.0)
    fail(ErrorCode::Config, "config: field 'amp_variance' must be >= 0");
  if (!(kappa > 0.0)) fail(ErrorCode::Config, "config: field 'kappa' must be > 0");
  if (T < 0) fail(ErrorCode::Config, "config: field 'T' must be >= 0");
  if (trials < 1) fail(ErrorCode::Config, "config: field 'trials' must be >= 1");
  if (mc_samples < 1000)
    fail(ErrorCode::Config, "config: field 'mc_samples' must be >= 1000");
  if (quad_order < 1) fail(ErrorCode::Config, "config: field 'quad_order' must be >= 1");
  if (workers < 0) fail(ErrorCode::Config, "config: field 'workers' must be >= 0");
  if (std::floor(delta * n + 0.5) < 1.0)
    fail(ErrorCode::Config, "config: fields 'n' and 'delta' give zero measurements");
}

double ExperimentConfig::delta_actual() const {
  const double m = std::floor(delta * static_cast<double>(n) + 0.5);
  return m / static_cast<double>(n);
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["n"] = std::to_string(n);
  m["delta"] = fmt(delta);
  m["sigma0_2"] = fmt(sigma0_2);
  m["epsilon"] = fmt(epsilon);
  m["amp_variance"] = fmt(amp_variance);
  m["algorithm"] = algorithm == Algorithm::IST   ? "ist"
                   : algorithm == Algorithm::AMP ? "amp"
                                                 : "oamp";
  m["denoiser"] = denoiser;
  m["kappa"] = fmt(kappa);
  m["df_scale"] = df_scale == DfScale::Unit ? "unit" : "normalized";
  m["tau_source"] = tau_source == TauSource::SE    ? "se"
                    : tau_source == TauSource::GFA ? "gfa"
                                                   : "empirical";
  m["T"] = std::to_string(T);
  m["trials"] = std::to_string(trials);
  m["seed"] = std::to_string(seed);
  m["mc_samples"] = std::to_string(mc_samples);
  m["quad_order"] = std::to_string(quad_order);
  m["run_gfa"] = run_gfa ? "1" : "0";
  m["run_se"] = run_se ? "1" : "0";
  m["workers"] = std::to_string(workers);
  m["threshold_max_rel_gap_se"] = fmt(threshold_max_rel_gap_se);
  m["out_csv"] = out_csv;
  m["out_json"] = out_json;
  return m;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) os << k << "=" << v << "\n";
  return os.str();
}

std::string ExperimentConfig::hash() const {
  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

bool ExperimentConfig::denoiser_is_df() const {
  return denoiser.rfind("df(", 0) == 0;
}

std::string ExperimentConfig::base_denoiser_name() const {
  if (denoiser_is_df()) return denoiser.substr(3, denoiser.size() - 4);
  return denoiser;
}

DenoiserFactory ExperimentConfig::base_factory() const {
  const std::string base = base_denoiser_name();
  if (base == "soft") return soft_factory(kappa);
  if (base == "mmse_bg") return mmse_factory(prior());
  fail(ErrorCode::Config, "config: unsupported denoiser '" + denoiser + "'");
}

DenoiserFactory ExperimentConfig::schedule_factory() const {
  DenoiserFactory base = base_factory();
  if (denoiser_is_df()) return df_factory(base, prior(), df_scale);
  return base;
}

GfaScheduleFactory ExperimentConfig::gfa_factory() const {
  DenoiserFactory f = schedule_factory();
  return [f](int, double tau) { return f(tau); };
}

}  // namespace sparselab
