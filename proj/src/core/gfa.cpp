#include "gfa.hpp"

#include <cmath>
#include <sstream>

namespace sparselab {

Mat build_D(const Vec& m, const Mat& C, double delta, double sigma0_2,
            double ex2) {
  const Eigen::Index k = m.size();
  if (C.rows() != k || C.cols() != k)
    fail(ErrorCode::InvalidArgument, "build_D: m and C dimensions mismatch");
  Mat D(k, k);
  for (Eigen::Index s = 0; s < k; ++s)
    for (Eigen::Index sp = 0; sp < k; ++sp)
      D(s, sp) = sigma0_2 + (ex2 - m(s) - m(sp) + C(s, sp)) / delta;
  return D;
}

namespace {

void require_strictly_lower(const Mat& G, const char* who) {
  for (Eigen::Index s = 0; s < G.rows(); ++s)
    for (Eigen::Index sp = s; sp < G.cols(); ++sp)
      if (G(s, sp) != 0.0)
        fail(ErrorCode::InvalidArgument,
             std::string(who) + ": G must be strictly lower triangular");
}

}  // namespace

std::pair<Mat, Mat> build_R_Gamma(const Mat& G, const Mat& D, double delta) {
  require_strictly_lower(G, "build_R_Gamma");
  const Eigen::Index k = G.rows();
  const Mat B = Mat::Identity(k, k) + G / delta;  // unit lower triangular
  const Mat Binv = B.triangularView<Eigen::Lower>().solve(Mat::Identity(k, k));
  // R = B^{-1} D B^{-T}: the congruence must act with the lower-triangular
  // factor on the left so that the top-left block of R depends only on
  // already-known order parameters (causality). Finite-N field statistics
  // of IST (Var(u^(1) - k_hat x0), Cov with the first field) single out this
  // orientation; the opposite one mixes future responses into past fields.
  Mat R = Binv * D * Binv.transpose();
  R = 0.5 * (R + R.transpose()).eval();  // kill roundoff asymmetry
  const Mat Gamma = Binv * (G / delta);
  return {R, Gamma};
}

Mat lambda_matrix(const Mat& G, int s, double delta) {
  if (s < 0 || s >= G.rows())
    fail(ErrorCode::InvalidArgument, "lambda_matrix: s out of range");
  Mat L(s + 1, s + 1);
  for (int sp = 0; sp <= s; ++sp) {
    for (int spp = 0; spp <= s; ++spp) {
      if (sp == s) {
        L(sp, spp) = 1.0;
      } else {
        L(sp, spp) = (sp == spp ? 1.0 : 0.0) + G(spp, sp) / delta;
      }
    }
  }
  return L;
}

double k_hat(const Mat& G, int s, double delta) {
  const Mat L = lambda_matrix(G, s, delta);
  if (L.rows() == 1) return L(0, 0);
  return L.partialPivLu().determinant();
}

namespace {

// Symmetric factor of R for sampling v ~ N(0, R); Cholesky with diagonal
// jitter, eigen-decomposition fallback for numerically semi-definite R.
Mat covariance_factor(const Mat& R) {
  const Eigen::Index k = R.rows();
  Eigen::LLT<Mat> llt(R);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = 1e-12 * R.trace() / static_cast<double>(k);
  Eigen::LLT<Mat> llt2(R + jitter * Mat::Identity(k, k));
  if (llt2.info() == Eigen::Success) return llt2.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> es(R);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::Numeric, "single_site_mc: eigen factorization of R failed");
  const double min_eig = es.eigenvalues().minCoeff();
  // Small negative eigenvalues are expected when R is assembled from
  // batch-estimated order parameters (append-only rows from different
  // batches); clamp those, but refuse a grossly indefinite covariance.
  if (min_eig < -0.05 * R.trace()) {
    std::ostringstream msg;
    msg << "single_site_mc: covariance R is not PSD (min eigenvalue "
        << min_eig << ", trace " << R.trace() << ")";
    fail(ErrorCode::Numeric, msg.str());
  }
  Vec sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sq.asDiagonal();
}

struct Accumulator {
  Vec sum, sum2;
  Mat msum, msum2;
  explicit Accumulator(Eigen::Index k)
      : sum(Vec::Zero(k)), sum2(Vec::Zero(k)), msum(Mat::Zero(k, k)),
        msum2(Mat::Zero(k, k)) {}
};

}  // namespace

SingleSiteStats single_site_mc(const Prior& prior,
                               const std::vector<Denoiser>& denoisers,
                               const Vec& k_hat_vec, const Mat& R,
                               const Mat& Gamma, long samples,
                               std::uint64_t seed, const Vec* theta) {
  const int t1 = static_cast<int>(R.rows());  // number of field components
  if (t1 < 1 || static_cast<int>(denoisers.size()) < t1 ||
      k_hat_vec.size() < t1 || Gamma.rows() != t1)
    fail(ErrorCode::InvalidArgument, "single_site_mc: inconsistent horizons");
  if (samples < 1000)
    fail(ErrorCode::InvalidArgument, "single_site_mc: need at least 1e3 samples");
  const int len = t1 + 1;  // trajectory indices 0..t1

  const Mat L = covariance_factor(R);
  const double slab_sd = std::sqrt(prior.amp_variance);

  Vec m_sum = Vec::Zero(len), m_sum2 = Vec::Zero(len);
  Vec e_sum = Vec::Zero(len), e_sum2 = Vec::Zero(len);
  Mat c_sum = Mat::Zero(len, len), c_sum2 = Mat::Zero(len, len);
  Mat g_sum = Mat::Zero(len, len), g_sum2 = Mat::Zero(len, len);

  Rng rng(seed);
  Vec g(t1), v(t1), x(len);
  Mat J(len, len);
  for (long it = 0; it < samples; ++it) {
    const double u = rng.uniform();
    const double gauss = rng.gaussian();
    const double x0 = (u < prior.epsilon) ? slab_sd * gauss : 0.0;
    for (int i = 0; i < t1; ++i) g(i) = rng.gaussian();
    v.noalias() = L * g;

    x.setZero();
    J.setZero();
    for (int s = 0; s < t1; ++s) {
      double arg = x0 * k_hat_vec(s) + v(s);
      for (int sp = 0; sp <= s; ++sp) arg += Gamma(s, sp) * x(sp);
      if (theta) arg += (*theta)(s);
      const Denoiser& eta = denoisers[s];
      x(s + 1) = eta(arg);
      const double d = eta.deriv(arg);
      for (int sp = 0; sp <= s; ++sp) {
        double chain = (s == sp) ? 1.0 : 0.0;
        for (int spp = sp + 1; spp <= s; ++spp)
          chain += Gamma(s, spp) * J(spp, sp);
        J(s + 1, sp) = d * chain;
      }
    }

    for (int s = 0; s < len; ++s) {
      const double mv = x0 * x(s);
      m_sum(s) += mv;
      m_sum2(s) += mv * mv;
      const double ev = (x0 - x(s)) * (x0 - x(s));
      e_sum(s) += ev;
      e_sum2(s) += ev * ev;
      for (int sp = 0; sp <= s; ++sp) {
        const double cv = x(s) * x(sp);
        c_sum(s, sp) += cv;
        c_sum2(s, sp) += cv * cv;
        if (sp < s) {
          const double jv = J(s, sp);
          g_sum(s, sp) += jv;
          g_sum2(s, sp) += jv * jv;
        }
      }
    }
  }

  const double S = static_cast<double>(samples);
  auto finish = [S](double sum, double sum2, double& mean, double& se) {
    mean = sum / S;
    const double var = std::max(sum2 / S - mean * mean, 0.0);
    se = std::sqrt(var / S);
  };

  SingleSiteStats out;
  out.m.resize(len);
  out.m_stderr.resize(len);
  out.mse.resize(len);
  out.mse_stderr.resize(len);
  out.C = Mat::Zero(len, len);
  out.C_stderr = Mat::Zero(len, len);
  out.G = Mat::Zero(len, len);
  out.G_stderr = Mat::Zero(len, len);
  for (int s = 0; s < len; ++s) {
    finish(m_sum(s), m_sum2(s), out.m(s), out.m_stderr(s));
    finish(e_sum(s), e_sum2(s), out.mse(s), out.mse_stderr(s));
    for (int sp = 0; sp <= s; ++sp) {
      finish(c_sum(s, sp), c_sum2(s, sp), out.C(s, sp), out.C_stderr(s, sp));
      out.C(sp, s) = out.C(s, sp);
      out.C_stderr(sp, s) = out.C_stderr(s, sp);
      if (sp < s)
        finish(g_sum(s, sp), g_sum2(s, sp), out.G(s, sp), out.G_stderr(s, sp));
    }
  }
  return out;
}

namespace {

Mat grow(const Mat& M, Eigen::Index k) {
  Mat out = Mat::Zero(k + 1, k + 1);
  out.topLeftCorner(k, k) = M;
  return out;
}

Vec grow(const Vec& v, Eigen::Index k) {
  Vec out = Vec::Zero(k + 1);
  out.head(k) = v;
  return out;
}

}  // namespace

OrderParameters gfa_run(const Prior& prior, double delta, double sigma0_2,
                        const GfaScheduleFactory& factory, int T,
                        const GfaOptions& opts) {
  prior.validate();
  if (T < 0) fail(ErrorCode::InvalidArgument, "gfa_run: T must be >= 0");
  if (!(delta > 0.0 && delta <= 1.0))
    fail(ErrorCode::InvalidArgument, "gfa_run: delta must be in (0,1]");

  OrderParameters p;
  p.horizon = T;
  p.ex2 = prior.second_moment();
  // x^(0) = 0 initial law: m^(0) = 0, C and G start as 1x1 zeros.
  p.m = Vec::Zero(1);
  p.C = Mat::Zero(1, 1);
  p.G = Mat::Zero(1, 1);
  p.m_stderr = Vec::Zero(1);
  p.C_stderr = Mat::Zero(1, 1);
  p.G_stderr = Mat::Zero(1, 1);
  p.mse_direct = Vec::Zero(1);
  p.mse_stderr = Vec::Zero(1);
  p.mse_direct(0) = p.ex2;

  for (int t = 0; t < T; ++t) {
    const Eigen::Index k = t + 1;
    const Mat G_fb =
        opts.assume_divergence_free ? Mat::Zero(k, k) : Mat(p.G);
    const Mat D = build_D(p.m, p.C, delta, sigma0_2, p.ex2);
    auto [R, Gamma] = build_R_Gamma(G_fb, D, delta);
    Vec kh(k);
    for (int s = 0; s < k; ++s) kh(s) = k_hat(G_fb, s, delta);

    const double tau_t = std::sqrt(std::max(R(t, t), 0.0));
    p.tau.push_back(tau_t);
    p.schedule.push_back(factory(t, tau_t));

    const SingleSiteStats stats =
        single_site_mc(prior, p.schedule, kh, R, Gamma, opts.samples,
                       substream_seed(opts.seed, static_cast<std::uint64_t>(t)));

    // Append only the new row/column; earlier entries keep the estimates
    // from the horizon at which they first appeared.
    p.m = grow(p.m, k);
    p.m_stderr = grow(p.m_stderr, k);
    p.C = grow(p.C, k);
    p.C_stderr = grow(p.C_stderr, k);
    p.G = grow(p.G, k);
    p.G_stderr = grow(p.G_stderr, k);
    p.mse_direct = grow(p.mse_direct, k);
    p.mse_stderr = grow(p.mse_stderr, k);

    p.m(k) = stats.m(k);
    p.m_stderr(k) = stats.m_stderr(k);
    p.mse_direct(k) = stats.mse(k);
    p.mse_stderr(k) = stats.mse_stderr(k);
    for (Eigen::Index sp = 0; sp <= k; ++sp) {
      p.C(k, sp) = stats.C(k, sp);
      p.C(sp, k) = stats.C(k, sp);
      p.C_stderr(k, sp) = stats.C_stderr(k, sp);
      p.C_stderr(sp, k) = stats.C_stderr(k, sp);
      if (sp < k) {
        p.G(k, sp) = stats.G(k, sp);
        p.G_stderr(k, sp) = stats.G_stderr(k, sp);
      }
    }
  }

  // Derived matrices from the final state.
  const Mat G_fb = opts.assume_divergence_free
                       ? Mat::Zero(T + 1, T + 1)
                       : Mat(p.G);
  p.D = build_D(p.m, p.C, delta, sigma0_2, p.ex2);
  std::tie(p.R, p.Gamma) = build_R_Gamma(G_fb, p.D, delta);
  p.k_hat.resize(T + 1);
  for (int s = 0; s <= T; ++s) p.k_hat(s) = k_hat(G_fb, s, delta);
  p.mse.resize(T + 1);
  for (int s = 0; s <= T; ++s)
    p.mse(s) = p.ex2 - 2.0 * p.m(s) + p.C(s, s);
  return p;
}

Lemma2Report verify_lemma2(const Prior& prior, double delta, double sigma0_2,
                           const GfaScheduleFactory& base_factory, int T,
                           const GfaOptions& opts, DfScale scale) {
  GfaOptions o = opts;
  o.assume_divergence_free = true;
  GfaScheduleFactory df = [&](int t, double tau) {
    return df_transform(base_factory(t, tau), prior, tau, scale);
  };
  Lemma2Report rep;
  rep.params = gfa_run(prior, delta, sigma0_2, df, T, o);
  const OrderParameters& p = rep.params;

  for (Eigen::Index s = 0; s < p.G.rows(); ++s)
    for (Eigen::Index sp = 0; sp < s; ++sp) {
      rep.max_abs_G = std::max(rep.max_abs_G, std::abs(p.G(s, sp)));
      if (p.G_stderr(s, sp) > 0.0)
        rep.max_abs_G_over_stderr =
            std::max(rep.max_abs_G_over_stderr,
                     std::abs(p.G(s, sp)) / p.G_stderr(s, sp));
    }
  rep.k_hat_values = p.k_hat;
  rep.max_k_hat_dev = (p.k_hat.array() - 1.0).abs().maxCoeff();

  // R rebuilt from the estimated (noisy) G versus D; the bound propagates
  // a 4-sigma worst case through the first-order expansion
  // R - D ~ -(G D + D G^T)/delta.
  auto [R_est, Gamma_est] = build_R_Gamma(p.G, p.D, delta);
  (void)Gamma_est;
  rep.R_minus_D_norm = (R_est - p.D).array().abs().maxCoeff();
  const Mat Gb = 4.0 * p.G_stderr + p.G.cwiseAbs();
  const Mat bound =
      (Gb * p.D.cwiseAbs() + p.D.cwiseAbs() * Gb.transpose()) / delta;
  rep.R_minus_D_bound = 1.5 * bound.array().abs().maxCoeff();
  return rep;
}

}  // namespace sparselab
