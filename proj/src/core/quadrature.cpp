#include "quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace sparselab {

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1)
    fail(ErrorCode::InvalidArgument, "gauss_hermite: order must be >= 1");

  // Jacobi matrix of the (physicists') Hermite polynomials: zero diagonal,
  // off-diagonal sqrt(k/2).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order > 1 ? order - 1 : 0);
  for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(0.5 * k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::Numeric, "gauss_hermite: eigen decomposition failed");

  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  double wsum = 0.0;
  for (int i = 0; i < order; ++i) {
    // Map physicists' nodes x to probabilists' z = sqrt(2) x, so the rule
    // integrates against N(0,1) directly.
    rule.nodes[i] = std::sqrt(2.0) * es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
    wsum += rule.weights[i];
  }
  for (auto& w : rule.weights) w /= wsum;
  return rule;
}

const QuadratureRule& default_rule() {
  static const QuadratureRule rule = QuadratureRule::gauss_hermite(61);
  return rule;
}

namespace {

constexpr double kTailRange = 12.0;  // +-12 sigma, tail mass ~ 1e-32

double eval_weighted(const std::function<double(double)>& f, double s,
                     double x) {
  const double val =
      f(s * x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (!std::isfinite(val)) {
    std::ostringstream msg;
    msg << "gaussian_expectation: non-finite integrand at node u=" << s * x;
    fail(ErrorCode::Numeric, msg.str());
  }
  return val;
}

double adapt(const std::function<double(double)>& f, double s, double a,
             double b, double fa, double fm, double fb, double whole,
             double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = eval_weighted(f, s, lm), frm = eval_weighted(f, s, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adapt(f, s, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, s, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// One-dimensional Gaussian expectation E_{u ~ N(0, s^2)}[f(u)] by adaptive
// Simpson on the weighted integrand. Plain Gauss-Hermite cannot resolve the
// narrow responsibility transitions of the mmse denoiser (or step-function
// derivatives) once the noise scale is small, so the rule only seeds the
// initial panelization and each panel is refined to a pinned tolerance.
double expect_scaled(const std::function<double(double)>& f, double s,
                     const QuadratureRule& rule) {
  const int panels = std::max(16, (rule.order / 4) & ~1);
  const double h = 2.0 * kTailRange / panels;
  const double tol = 1e-13;  // absolute, per unit Gaussian mass
  double acc = 0.0;
  double fa = eval_weighted(f, s, -kTailRange);
  for (int p = 0; p < panels; ++p) {
    const double a = -kTailRange + p * h;
    const double b = a + h;
    const double m = 0.5 * (a + b);
    const double fm = eval_weighted(f, s, m);
    const double fb = eval_weighted(f, s, b);
    const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
    acc += adapt(f, s, a, b, fa, fm, fb, whole, tol * h / (2.0 * kTailRange),
                 48);
    fa = fb;
  }
  return acc;
}

}  // namespace

double gaussian_expectation(const std::function<double(double)>& f,
                            const Prior& prior, double tau,
                            const QuadratureRule& rule) {
  prior.validate();
  if (tau < 0.0)
    fail(ErrorCode::InvalidArgument, "gaussian_expectation: tau must be >= 0");
  const double s_spike = tau;
  const double s_slab = std::sqrt(prior.amp_variance + tau * tau);
  double acc = 0.0;
  if (prior.epsilon < 1.0) {
    if (s_spike == 0.0) {
      const double v = f(0.0);
      if (!std::isfinite(v))
        fail(ErrorCode::Numeric, "gaussian_expectation: non-finite f(0)");
      acc += (1.0 - prior.epsilon) * v;
    } else {
      acc += (1.0 - prior.epsilon) * expect_scaled(f, s_spike, rule);
    }
  }
  acc += prior.epsilon * expect_scaled(f, s_slab, rule);
  return acc;
}

double joint_expectation(const std::function<double(double, double)>& g,
                         const Prior& prior, double tau,
                         const QuadratureRule& rule) {
  prior.validate();
  if (tau < 0.0)
    fail(ErrorCode::InvalidArgument, "joint_expectation: tau must be >= 0");
  const double sd_slab = std::sqrt(prior.amp_variance);
  const std::size_t q = rule.nodes.size();

  auto inner = [&](double x0) {
    if (tau == 0.0) return g(x0, x0);
    double acc = 0.0;
    for (std::size_t j = 0; j < q; ++j)
      acc += rule.weights[j] * g(x0, x0 + tau * rule.nodes[j]);
    return acc;
  };

  double acc = 0.0;
  if (prior.epsilon < 1.0) acc += (1.0 - prior.epsilon) * inner(0.0);
  for (std::size_t i = 0; i < q; ++i)
    acc += prior.epsilon * rule.weights[i] * inner(sd_slab * rule.nodes[i]);
  if (!std::isfinite(acc))
    fail(ErrorCode::Numeric, "joint_expectation: non-finite result");
  return acc;
}

}  // namespace sparselab
