#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "prior.hpp"

namespace sparselab {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// One realization of y = A x0 + omega with i.i.d. N(0, 1/M) entries in A,
// BG signal and N(0, sigma0^2) noise. Immutable after generation.
struct ProblemInstance {
  Matrix A;       // M x N
  Vector x0;      // N
  Vector omega;   // M
  Vector y;       // M, always computed as A*x0 + omega
  double delta;   // actual M/N after rounding
  double sigma0_2;
  std::uint64_t seed;

  Eigen::Index m() const { return A.rows(); }
  Eigen::Index n() const { return A.cols(); }
};

ProblemInstance generate_instance(Eigen::Index n, double delta,
                                  double sigma0_2, const Prior& prior,
                                  std::uint64_t seed);

// tr(I - W A) / N, the per-component de-correlation residual.
double decorrelation_residual(const Eigen::Ref<const Matrix>& W,
                              const Eigen::Ref<const Matrix>& A);

// Binary dump/load. Header: magic "SLIN", u32 version, u64 M, u64 N,
// u64 seed, f64 sigma0_2; payload little-endian f64: A row-major, x0,
// omega, y.
void dump_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace sparselab
