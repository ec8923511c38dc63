#include "deformgp/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace deformgp {

void CovarianceParams::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("CovarianceParams: sigma2 must be positive");
  if (!(tau2 >= 0.0)) throw std::invalid_argument("CovarianceParams: tau2 must be nonnegative");
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw std::invalid_argument("CovarianceParams: alpha must lie in (0, 2]");
}

Eigen::Vector3d CovarianceParams::to_unconstrained() const {
  validate();
  const double a = std::min(alpha, 2.0 - 1e-12);
  return {std::log(sigma2), std::log(std::max(tau2, 1e-300)), std::log(a / (2.0 - a))};
}

CovarianceParams CovarianceParams::from_unconstrained(const Eigen::Vector3d& u) {
  CovarianceParams p;
  p.sigma2 = std::exp(u[0]);
  p.tau2 = std::exp(u[1]);
  p.alpha = 2.0 / (1.0 + std::exp(-u[2]));
  return p;
}

double powered_exponential(double h, const CovarianceParams& p) {
  p.validate();
  if (h < 0.0) throw std::invalid_argument("powered_exponential: negative distance");
  if (h == 0.0) return p.sigma2 + p.tau2;
  return p.sigma2 * std::exp(-std::pow(h, p.alpha));
}

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& dist, const CovarianceParams& p) {
  p.validate();
  const Eigen::Index n = dist.rows();
  if (dist.cols() != n) throw std::invalid_argument("covariance_matrix: distance matrix must be square");
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = p.sigma2 + p.tau2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = dist(i, j);
      if (h < 0.0) throw std::invalid_argument("covariance_matrix: negative distance");
      const double v = h == 0.0 ? p.sigma2 + p.tau2
                                : p.sigma2 * std::exp(-std::pow(h, p.alpha));
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

SampleMoments sample_moments(const Eigen::MatrixXd& data, bool detrend) {
  const Eigen::Index T = data.rows(), n = data.cols();
  if (T < 2) throw std::invalid_argument("sample_moments: need at least two time points");
  Eigen::MatrixXd y = data;
  if (detrend) {
    // remove per-station linear trend in the time index
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(T, 0, double(T - 1));
    const double tbar = t.mean();
    const double stt = (t.array() - tbar).square().sum();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ybar = y.col(j).mean();
      const double b = ((t.array() - tbar) * (y.col(j).array() - ybar)).sum() / stt;
      y.col(j) -= b * (t.array() - tbar).matrix();
    }
  }
  SampleMoments m;
  m.T = static_cast<int>(T);
  m.mu_hat = y.colwise().mean();
  Eigen::MatrixXd c = y.rowwise() - m.mu_hat.transpose();
  m.V = c.transpose() * c / double(T);
  return m;
}

SampleMoments sample_moments_pairwise(const Eigen::MatrixXd& data) {
  const Eigen::Index T = data.rows(), n = data.cols();
  SampleMoments m;
  m.mu_hat.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    int c = 0;
    for (Eigen::Index t = 0; t < T; ++t)
      if (std::isfinite(data(t, j))) { s += data(t, j); ++c; }
    if (c < 2) throw std::invalid_argument("sample_moments_pairwise: station with fewer than two observations");
    m.mu_hat[j] = s / c;
  }
  m.V.resize(n, n);
  std::vector<int> joint_counts;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double s = 0.0;
      int c = 0;
      for (Eigen::Index t = 0; t < T; ++t) {
        if (std::isfinite(data(t, i)) && std::isfinite(data(t, j))) {
          s += (data(t, i) - m.mu_hat[i]) * (data(t, j) - m.mu_hat[j]);
          ++c;
        }
      }
      if (c < 2) throw std::invalid_argument("sample_moments_pairwise: pair with fewer than two joint observations");
      m.V(i, j) = m.V(j, i) = s / c;
      joint_counts.push_back(c);
    }
  }
  std::nth_element(joint_counts.begin(), joint_counts.begin() + joint_counts.size() / 2,
                   joint_counts.end());
  m.T = joint_counts[joint_counts.size() / 2];
  return m;
}

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& sigma, bool* jittered) {
  if (jittered) *jittered = false;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-8 * sigma.diagonal().mean();
  Eigen::MatrixXd s2 = sigma;
  s2.diagonal().array() += jitter;
  llt.compute(s2);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cholesky_with_jitter: matrix not positive definite after jitter");
  if (jittered) *jittered = true;
  return llt;
}

double gp_loglik(const Eigen::MatrixXd& sigma, const SampleMoments& m) {
  const Eigen::Index n = sigma.rows();
  if (m.V.rows() != n) throw std::invalid_argument("gp_loglik: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt = cholesky_with_jitter(sigma);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace = llt.solve(m.V).trace();
  const double T = m.T;
  return -0.5 * (T - 1.0) * (double(n) * std::log(2.0 * M_PI) + logdet) - 0.5 * T * trace;
}

Eigen::MatrixXd gp_loglik_sigma_gradient(const Eigen::MatrixXd& sigma,
                                         const SampleMoments& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt = cholesky_with_jitter(sigma);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  const Eigen::MatrixXd sinv = llt.solve(identity);
  const double T = m.T;
  Eigen::MatrixXd g = -0.5 * (T - 1.0) * sinv + 0.5 * T * sinv * m.V * sinv;
  return 0.5 * (g + g.transpose());
}

} // namespace deformgp
