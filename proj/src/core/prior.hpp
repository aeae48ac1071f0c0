#pragma once

#include "errors.hpp"

namespace sparselab {

// Bernoulli-Gaussian signal prior: x0 = 0 with probability 1-epsilon,
// x0 ~ N(0, amp_variance) with probability epsilon.
struct Prior {
  double epsilon = 0.1;
  double amp_variance = 1.0;

  Prior() = default;
  Prior(double eps, double var = 1.0) : epsilon(eps), amp_variance(var) {
    validate();
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      fail(ErrorCode::InvalidArgument, "Prior: epsilon must be in (0,1]");
    if (!(amp_variance >= 0.0))
      fail(ErrorCode::InvalidArgument, "Prior: amp_variance must be >= 0");
  }

  double second_moment() const { return epsilon * amp_variance; }
};

}  // namespace sparselab
