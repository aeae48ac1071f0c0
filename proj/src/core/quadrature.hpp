#pragma once

#include <functional>
#include <vector>

#include "prior.hpp"

namespace sparselab {

// Quadrature rule for expectations against the standard Gaussian measure:
// E[f(z)] ~= sum_i weights[i] * f(nodes[i]), weights normalized to sum 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  // Gauss-Hermite rule mapped to N(0,1), built via Golub-Welsch.
  static QuadratureRule gauss_hermite(int order);
};

// Default rule used throughout (exact for polynomials up to degree 121).
const QuadratureRule& default_rule();

// E_{x0,z}[f(x0 + tau z)] for a BG prior. The argument is a two-component
// Gaussian scale mixture: N(0, tau^2) w.p. 1-eps, N(0, amp_var + tau^2)
// w.p. eps, so a single one-dimensional rule per component suffices.
double gaussian_expectation(const std::function<double(double)>& f,
                            const Prior& prior, double tau,
                            const QuadratureRule& rule = default_rule());

// Joint expectation E_{x0,z}[g(x0, x0 + tau z)]; needed by the state
// evolution step where the integrand couples x0 and the noisy observation.
double joint_expectation(const std::function<double(double, double)>& g,
                         const Prior& prior, double tau,
                         const QuadratureRule& rule = default_rule());

}  // namespace sparselab
