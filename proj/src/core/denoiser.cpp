#include "denoiser.hpp"

#include <cmath>

namespace sparselab {

namespace {

// Posterior probability that x0 came from the slab, given u = x0 + tau*z.
// Computed through the log-odds for stability at large |u|.
double slab_responsibility(double u, const Prior& prior, double tau2) {
  if (prior.epsilon >= 1.0) return 1.0;
  const double v = prior.amp_variance;
  if (v == 0.0) return prior.epsilon;
  const double s_slab = v + tau2;
  double logit = std::log(prior.epsilon / (1.0 - prior.epsilon)) +
                 0.5 * std::log(tau2 / s_slab) +
                 0.5 * u * u * (1.0 / tau2 - 1.0 / s_slab);
  if (logit > 700.0) return 1.0;
  if (logit < -700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-logit));
}

}  // namespace

double mmse_denoiser_bg(double u, const Prior& prior, double tau2) {
  if (!(tau2 > 0.0))
    fail(ErrorCode::InvalidArgument, "mmse_denoiser_bg: tau2 must be > 0");
  const double v = prior.amp_variance;
  const double wiener = v / (v + tau2);
  return slab_responsibility(u, prior, tau2) * wiener * u;
}

double mmse_denoiser_bg_deriv(double u, const Prior& prior, double tau2) {
  if (!(tau2 > 0.0))
    fail(ErrorCode::InvalidArgument, "mmse_denoiser_bg: tau2 must be > 0");
  const double v = prior.amp_variance;
  const double wiener = v / (v + tau2);
  const double pi = slab_responsibility(u, prior, tau2);
  // d pi/du = pi (1-pi) u v / (tau2 (v+tau2))
  return pi * wiener + pi * (1.0 - pi) * u * u * wiener * wiener / tau2;
}

Denoiser Denoiser::linear(double slope) {
  Denoiser d;
  d.kind_ = Kind::Linear;
  d.slope_ = slope;
  return d;
}

Denoiser Denoiser::soft_threshold(double lambda) {
  if (!(lambda > 0.0))
    fail(ErrorCode::InvalidArgument, "soft_threshold: lambda must be > 0");
  Denoiser d;
  d.kind_ = Kind::SoftThreshold;
  d.lambda_ = lambda;
  return d;
}

Denoiser Denoiser::mmse_bg(const Prior& prior, double tau2) {
  if (!(tau2 > 0.0))
    fail(ErrorCode::InvalidArgument, "mmse_bg: tau2 must be > 0");
  Denoiser d;
  d.kind_ = Kind::MmseBG;
  d.prior_ = prior;
  d.tau2_ = tau2;
  return d;
}

double Denoiser::operator()(double u) const {
  switch (kind_) {
    case Kind::Linear:
      return slope_ * u;
    case Kind::SoftThreshold: {
      const double mag = std::abs(u) - lambda_;
      return mag > 0.0 ? std::copysign(mag, u) : 0.0;
    }
    case Kind::MmseBG:
      return mmse_denoiser_bg(u, prior_, tau2_);
    case Kind::DivergenceFree:
      return scale_ * ((*base_)(u)-alpha_ * u);
  }
  return 0.0;
}

double Denoiser::deriv(double u) const {
  switch (kind_) {
    case Kind::Linear:
      return slope_;
    case Kind::SoftThreshold:
      // kinks at |u| == lambda get derivative 0 (measure-zero choice)
      return std::abs(u) > lambda_ ? 1.0 : 0.0;
    case Kind::MmseBG:
      return mmse_denoiser_bg_deriv(u, prior_, tau2_);
    case Kind::DivergenceFree:
      return scale_ * (base_->deriv(u) - alpha_);
  }
  return 0.0;
}

const Denoiser& Denoiser::base() const {
  if (!base_) fail(ErrorCode::InvalidArgument, "Denoiser: no base denoiser");
  return *base_;
}

std::string Denoiser::name() const {
  switch (kind_) {
    case Kind::Linear:
      return "linear";
    case Kind::SoftThreshold:
      return "soft";
    case Kind::MmseBG:
      return "mmse_bg";
    case Kind::DivergenceFree:
      return "df(" + base_->name() + ")";
  }
  return "?";
}

Denoiser df_transform(const Denoiser& base, const Prior& prior, double tau,
                      DfScale scale, const QuadratureRule& rule) {
  const double alpha = gaussian_expectation(
      [&](double u) { return base.deriv(u); }, prior, tau, rule);
  double s = 1.0;
  if (scale == DfScale::Normalized) {
    if (std::abs(1.0 - alpha) < 1e-8)
      fail(ErrorCode::Numeric,
           "df_transform: normalization 1/(1-alpha) is singular, alpha ~ 1");
    s = 1.0 / (1.0 - alpha);
  }
  Denoiser d;
  d.kind_ = Denoiser::Kind::DivergenceFree;
  d.base_ = std::make_shared<const Denoiser>(base);
  d.alpha_ = alpha;
  d.scale_ = s;
  return d;
}

double check_divergence_free(const Denoiser& spec, const Prior& prior,
                             double tau, const QuadratureRule& rule) {
  return gaussian_expectation([&](double u) { return spec.deriv(u); }, prior,
                              tau, rule);
}

}  // namespace sparselab
