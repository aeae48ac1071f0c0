#include "recovery.hpp"

#include <cmath>
#include <sstream>

namespace sparselab {

namespace {

void record_state(TrajectoryRecord& rec, const ProblemInstance& inst,
                  const Vector& x, const Vector& z) {
  const double n = static_cast<double>(inst.n());
  const double m = static_cast<double>(inst.m());
  rec.mse.push_back((inst.x0 - x).squaredNorm() / n);
  rec.overlap.push_back(x.dot(inst.x0) / n);
  rec.second_moment.push_back(x.squaredNorm() / n);
  rec.tau2_emp.push_back(z.squaredNorm() / m);
  rec.iterates.push_back(x);
}

void check_divergence(const TrajectoryRecord& rec, int t) {
  const double mse = rec.mse.back();
  if (!std::isfinite(mse) || (rec.mse.front() > 0.0 && mse > 1e3 * rec.mse.front())) {
    std::ostringstream msg;
    msg << "iteration diverged at t=" << t << " (mse=" << mse << ")";
    fail(ErrorCode::Diverged, msg.str());
  }
}

void check_schedule(const std::vector<Denoiser>& schedule, int T,
                    const char* who) {
  if (static_cast<int>(schedule.size()) < T)
    fail(ErrorCode::InvalidArgument,
         std::string(who) + ": schedule shorter than T");
}

Vector apply(const Denoiser& eta, const Vector& u) {
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = eta(u(i));
  return out;
}

double mean_deriv(const Denoiser& eta, const Vector& u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) acc += eta.deriv(u(i));
  return acc / static_cast<double>(u.size());
}

}  // namespace

TrajectoryRecord run_ist(const ProblemInstance& inst,
                         const std::vector<Denoiser>& schedule, int T) {
  if (T < 0) fail(ErrorCode::InvalidArgument, "run_ist: T must be >= 0");
  check_schedule(schedule, T, "run_ist");
  TrajectoryRecord rec;
  rec.algorithm = Algorithm::IST;
  rec.schedule.assign(schedule.begin(), schedule.begin() + T);

  Vector x = Vector::Zero(inst.n());
  Vector z = inst.y - inst.A * x;
  record_state(rec, inst, x, z);
  for (int t = 0; t < T; ++t) {
    const Vector u = inst.A.transpose() * z + x;
    x = apply(schedule[t], u);
    z = inst.y - inst.A * x;
    record_state(rec, inst, x, z);
    check_divergence(rec, t + 1);
  }
  return rec;
}

TrajectoryRecord run_amp(const ProblemInstance& inst,
                         const std::vector<Denoiser>& schedule, int T) {
  if (T < 0) fail(ErrorCode::InvalidArgument, "run_amp: T must be >= 0");
  check_schedule(schedule, T, "run_amp");
  TrajectoryRecord rec;
  rec.algorithm = Algorithm::AMP;
  rec.schedule.assign(schedule.begin(), schedule.begin() + T);

  Vector x = Vector::Zero(inst.n());
  Vector z = inst.y;  // z^(0) = y, no Onsager term at t = 0
  record_state(rec, inst, x, z);
  for (int t = 0; t < T; ++t) {
    const Vector u = inst.A.transpose() * z + x;
    const double b = mean_deriv(schedule[t], u);
    rec.onsager.push_back(b);
    x = apply(schedule[t], u);
    z = inst.y - inst.A * x + (b / inst.delta) * z;
    record_state(rec, inst, x, z);
    check_divergence(rec, t + 1);
  }
  return rec;
}

TrajectoryRecord run_oamp(const ProblemInstance& inst, const Prior& prior,
                          const DenoiserFactory& base_factory,
                          const OampOptions& opts, int T) {
  if (T < 0) fail(ErrorCode::InvalidArgument, "run_oamp: T must be >= 0");
  if (opts.tau_source != TauSource::Empirical &&
      static_cast<int>(opts.tau2.size()) < T)
    fail(ErrorCode::InvalidArgument,
         "run_oamp: tau schedule shorter than T for non-empirical source");
  TrajectoryRecord rec;
  rec.algorithm = Algorithm::OAMP;

  Vector x = Vector::Zero(inst.n());
  Vector z = inst.y - inst.A * x;
  record_state(rec, inst, x, z);
  for (int t = 0; t < T; ++t) {
    const double tau = opts.tau_source == TauSource::Empirical
                           ? std::sqrt(rec.tau2_emp.back())
                           : std::sqrt(opts.tau2[t]);
    const Denoiser eta =
        df_transform(base_factory(tau), prior, tau, opts.scale);
    rec.schedule.push_back(eta);
    const Vector u = inst.A.transpose() * z + x;
    x = apply(eta, u);
    z = inst.y - inst.A * x;
    record_state(rec, inst, x, z);
    check_divergence(rec, t + 1);
  }
  return rec;
}

std::vector<std::pair<double, double>> error_recursion_view(
    const ProblemInstance& inst, const TrajectoryRecord& traj) {
  const double n = static_cast<double>(inst.n());
  const int T = static_cast<int>(traj.iterates.size()) - 1;
  std::vector<std::pair<double, double>> out;
  out.reserve(T + 1);
  Vector q = -inst.x0;  // q^(0) = x^(0) - x0 with x^(0) = 0
  const Vector wn = inst.A.transpose() * inst.omega;
  for (int t = 0; t <= T; ++t) {
    const Vector h = q - inst.A.transpose() * (inst.A * q) + wn;
    out.emplace_back(h.squaredNorm() / n, q.squaredNorm() / n);
    if (t < T) q = apply(traj.schedule[t], inst.x0 + h) - inst.x0;
  }
  return out;
}

}  // namespace sparselab
