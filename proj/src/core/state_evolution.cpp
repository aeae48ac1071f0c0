#include "state_evolution.hpp"

#include <algorithm>
#include <cmath>

namespace sparselab {

std::pair<double, double> se_step(double sigma2_t, double delta,
                                  double sigma0_2, const Prior& prior,
                                  const DenoiserFactory& factory,
                                  const QuadratureRule& rule) {
  if (sigma2_t < 0.0)
    fail(ErrorCode::InvalidArgument, "se_step: sigma2_t must be >= 0");
  const double tau2 = sigma0_2 + sigma2_t / delta;
  const double tau = std::sqrt(tau2);
  const Denoiser eta = factory(tau);
  const double sigma2_next = joint_expectation(
      [&](double x0, double u) {
        const double e = x0 - eta(u);
        return e * e;
      },
      prior, tau, rule);
  return {sigma2_next, tau2};
}

SeTrace se_run(const Prior& prior, double delta, double sigma0_2,
               const DenoiserFactory& factory, int T,
               const QuadratureRule& rule) {
  if (T < 0) fail(ErrorCode::InvalidArgument, "se_run: T must be >= 0");
  SeTrace trace;
  trace.sigma2.reserve(T + 1);
  trace.tau2.reserve(T + 1);
  double sigma2 = prior.second_moment();
  trace.sigma2.push_back(sigma2);
  trace.tau2.push_back(sigma0_2 + sigma2 / delta);
  for (int t = 0; t < T; ++t) {
    auto [next, tau2] = se_step(sigma2, delta, sigma0_2, prior, factory, rule);
    trace.tau2.back() = tau2;  // same value, recorded for clarity
    sigma2 = next;
    trace.sigma2.push_back(sigma2);
    trace.tau2.push_back(sigma0_2 + sigma2 / delta);
  }
  return trace;
}

SeFixedPoint se_fixed_point(const Prior& prior, double delta, double sigma0_2,
                            const DenoiserFactory& factory, double tol,
                            int max_iter, const QuadratureRule& rule) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "se_fixed_point: tol must be > 0");
  double sigma2 = prior.second_moment();
  for (int it = 1; it <= max_iter; ++it) {
    auto [next, tau2] = se_step(sigma2, delta, sigma0_2, prior, factory, rule);
    (void)tau2;
    const double diff = std::abs(next - sigma2);
    sigma2 = next;
    if (!std::isfinite(sigma2)) return {sigma2, it, false};
    if (diff < tol * std::max(sigma2, 1.0)) return {sigma2, it, true};
  }
  return {sigma2, max_iter, false};
}

namespace {
// Denoiser parameters need a strictly positive tau; the floor only matters
// in degenerate all-zero-signal settings where the denoiser is never probed
// away from the origin.
double tau_floor(double tau) { return std::max(tau, 1e-9); }
}  // namespace

DenoiserFactory soft_factory(double kappa) {
  return [kappa](double tau) {
    return Denoiser::soft_threshold(kappa * tau_floor(tau));
  };
}

DenoiserFactory mmse_factory(const Prior& prior) {
  return [prior](double tau) {
    const double t = tau_floor(tau);
    return Denoiser::mmse_bg(prior, t * t);
  };
}

DenoiserFactory df_factory(const DenoiserFactory& base, const Prior& prior,
                           DfScale scale) {
  return [base, prior, scale](double tau) {
    return df_transform(base(tau), prior, tau_floor(tau), scale);
  };
}

}  // namespace sparselab
