#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "denoiser.hpp"
#include "rng.hpp"

namespace sparselab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Builds eta_t given the iteration index and the current effective noise
// level tau_t (= sqrt of the field covariance diagonal at that step).
using GfaScheduleFactory = std::function<Denoiser(int t, double tau)>;

// Order-parameter state of the effective single-site process.
struct OrderParameters {
  int horizon = 0;  // T
  Vec m;            // overlaps, length T+1
  Mat C;            // correlations, (T+1)x(T+1), symmetric, C(0,.) = 0
  Mat G;            // estimated response, strictly lower triangular
  Vec m_stderr;
  Mat C_stderr;
  Mat G_stderr;
  // Derived from the final (m, C, G) state:
  Mat D, R, Gamma;
  Vec k_hat;        // determinants |Lambda_[s]|, s = 0..T
  Vec mse;          // E[x0^2] - 2 m(s) + C(s,s)
  Vec mse_direct;   // batch mean of (x0 - x^(s))^2 with stderr
  Vec mse_stderr;
  std::vector<double> tau;  // tau_t used to build eta_t, length T
  std::vector<Denoiser> schedule;
  double ex2 = 0.0;
};

Mat build_D(const Vec& m, const Mat& C, double delta, double sigma0_2,
            double ex2);

// R = (I + G^T/delta)^-1 D (I + G/delta)^-1, Gamma = (I + G/delta)^-1 G/delta.
// G must be strictly lower triangular, which makes I + G/delta unit
// triangular and the inverses always defined.
std::pair<Mat, Mat> build_R_Gamma(const Mat& G, const Mat& D, double delta);

// Lambda_[s]: row s is all ones; row s' != s is delta_{s',s''} + G(s'',s')/delta.
Mat lambda_matrix(const Mat& G, int s, double delta);
double k_hat(const Mat& G, int s, double delta);

// One batch of the effective single-site process out to horizon t+1, where
// t+1 = R.rows(): trajectories x^(0..t+1) plus the pathwise sensitivity
// recursion for the response function.
struct SingleSiteStats {
  Vec m, m_stderr;
  Mat C, C_stderr;
  Mat G, G_stderr;  // strictly lower triangular by construction
  Vec mse, mse_stderr;
};

SingleSiteStats single_site_mc(const Prior& prior,
                               const std::vector<Denoiser>& denoisers,
                               const Vec& k_hat_vec, const Mat& R,
                               const Mat& Gamma, long samples,
                               std::uint64_t seed,
                               const Vec* theta = nullptr);

struct GfaOptions {
  long samples = 200000;
  std::uint64_t seed = 1;
  // When true the recursion feeds back G = 0 (the Lemma 2 conclusion for
  // divergence-free schedules) while still estimating G from the batch;
  // used by the lemma verification so that k_hat and Gamma are exact.
  bool assume_divergence_free = false;
};

OrderParameters gfa_run(const Prior& prior, double delta, double sigma0_2,
                        const GfaScheduleFactory& factory, int T,
                        const GfaOptions& opts);

struct Lemma2Report {
  double max_abs_G = 0.0;
  double max_abs_G_over_stderr = 0.0;
  Vec k_hat_values;
  double max_k_hat_dev = 0.0;     // max |k_hat - 1|
  double R_minus_D_norm = 0.0;    // from the *estimated* G
  double R_minus_D_bound = 0.0;   // first-order propagation of 4-sigma G noise
  OrderParameters params;
};

// Runs gfa_run with the df-wrapped schedule and checks Lemma 2 numerically.
Lemma2Report verify_lemma2(const Prior& prior, double delta, double sigma0_2,
                           const GfaScheduleFactory& base_factory, int T,
                           const GfaOptions& opts,
                           DfScale scale = DfScale::Unit);

}  // namespace sparselab
