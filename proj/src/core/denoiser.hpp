#pragma once

#include <memory>
#include <string>

#include "prior.hpp"
#include "quadrature.hpp"

namespace sparselab {

// How a divergence-free wrapper scales eta_hat(u) - alpha*u.
enum class DfScale {
  Unit,        // scale = 1
  Normalized,  // scale = 1/(1-alpha), keeps signal gain near unity
};

// Scalar threshold function eta with a derivative available everywhere
// except a measure-zero kink set (where the derivative is taken as 0).
// Immutable value type; cheap to copy.
class Denoiser {
 public:
  enum class Kind { Linear, SoftThreshold, MmseBG, DivergenceFree };

  static Denoiser linear(double slope);
  static Denoiser soft_threshold(double lambda);
  static Denoiser mmse_bg(const Prior& prior, double tau2);

  double operator()(double u) const;
  double deriv(double u) const;

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  double scale() const { return scale_; }
  const Denoiser& base() const;
  std::string name() const;

 private:
  friend Denoiser df_transform(const Denoiser&, const Prior&, double, DfScale,
                               const QuadratureRule&);
  Denoiser() = default;

  Kind kind_ = Kind::Linear;
  double slope_ = 0.0;                    // Linear
  double lambda_ = 0.0;                   // SoftThreshold
  Prior prior_;                           // MmseBG
  double tau2_ = 0.0;                     // MmseBG
  std::shared_ptr<const Denoiser> base_;  // DivergenceFree
  double alpha_ = 0.0;                    // DivergenceFree
  double scale_ = 1.0;                    // DivergenceFree
};

// Posterior mean E[x0 | x0 + tau z = u] under the BG prior, with its
// closed-form derivative.
double mmse_denoiser_bg(double u, const Prior& prior, double tau2);
double mmse_denoiser_bg_deriv(double u, const Prior& prior, double tau2);

// Wrap a base denoiser into a divergence-free one at the construction point
// (prior, tau): eta(u) = scale * (eta_hat(u) - alpha*u) with
// alpha = E[eta_hat'(x0 + tau z)].
Denoiser df_transform(const Denoiser& base, const Prior& prior, double tau,
                      DfScale scale = DfScale::Unit,
                      const QuadratureRule& rule = default_rule());

// Residual E[eta'(x0 + tau z)]; zero (to quadrature accuracy) iff eta is
// divergence-free at this (prior, tau).
double check_divergence_free(const Denoiser& spec, const Prior& prior,
                             double tau,
                             const QuadratureRule& rule = default_rule());

}  // namespace sparselab
