#pragma once

#include <functional>
#include <vector>

#include "denoiser.hpp"

namespace sparselab {

// Maps the current effective noise level tau to the denoiser used at that
// iteration (e.g. soft threshold with lambda = kappa*tau, mmse_bg at tau^2,
// or a divergence-free wrap of either).
using DenoiserFactory = std::function<Denoiser(double tau)>;

// Scalar recursion tau_t^2 = sigma0^2 + sigma_t^2/delta,
// sigma_{t+1}^2 = E[(x0 - eta_t(x0 + tau_t z))^2].
struct SeTrace {
  std::vector<double> sigma2;  // length T+1, sigma2[0] = E[x0^2]
  std::vector<double> tau2;    // length T+1, tau2[t] = sigma0^2 + sigma2[t]/delta
};

std::pair<double, double> se_step(double sigma2_t, double delta,
                                  double sigma0_2, const Prior& prior,
                                  const DenoiserFactory& factory,
                                  const QuadratureRule& rule = default_rule());

SeTrace se_run(const Prior& prior, double delta, double sigma0_2,
               const DenoiserFactory& factory, int T,
               const QuadratureRule& rule = default_rule());

struct SeFixedPoint {
  double sigma2_star;
  int iterations;
  bool converged;
};

SeFixedPoint se_fixed_point(const Prior& prior, double delta, double sigma0_2,
                            const DenoiserFactory& factory, double tol = 1e-12,
                            int max_iter = 10000,
                            const QuadratureRule& rule = default_rule());

// Common factories.
DenoiserFactory soft_factory(double kappa);
DenoiserFactory mmse_factory(const Prior& prior);
DenoiserFactory df_factory(const DenoiserFactory& base, const Prior& prior,
                           DfScale scale = DfScale::Unit);

}  // namespace sparselab
