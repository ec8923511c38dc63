#ifndef DEFORMGP_COVARIANCE_HPP
#define DEFORMGP_COVARIANCE_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace deformgp {

// Powered exponential parameters: gamma(h) = sigma2 * exp(-h^alpha) for
// h > 0 and sigma2 + tau2 at h = 0, with 0 < alpha <= 2.
struct CovarianceParams {
  double sigma2 = 1.0;
  double tau2 = 0.1;
  double alpha = 1.0;

  void validate() const;

  // unconstrained scale: (log sigma2, log tau2, log(alpha/(2-alpha)))
  Eigen::Vector3d to_unconstrained() const;
  static CovarianceParams from_unconstrained(const Eigen::Vector3d& u);
};

double powered_exponential(double h, const CovarianceParams& p);

// Sigma from a matrix of pairwise D-space distances.
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& dist, const CovarianceParams& p);

// Empirical second moments feeding the Gaussian likelihood.
struct SampleMoments {
  Eigen::MatrixXd V; // n x n, V = T^-1 sum_t (y_t - mu)(y_t - mu)'
  int T = 0;
  Eigen::VectorXd mu_hat;

  Eigen::Index n() const { return V.rows(); }
};

// Moments from a T x n data matrix; columns are de-meaned first. When
// detrend is set a per-column linear time trend is removed as well.
SampleMoments sample_moments(const Eigen::MatrixXd& data, bool detrend = false);

// As above but tolerating NaN gaps: means per column over observed values,
// V entries from jointly observed rows, T the median joint count.
SampleMoments sample_moments_pairwise(const Eigen::MatrixXd& data);

// Cholesky with a single jitter retry (1e-8 * mean diagonal); throws
// std::runtime_error when the matrix is still not positive definite.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& sigma,
                                                 bool* jittered = nullptr);

// log L = -((T-1)/2) log|2 pi Sigma| - (T/2) tr(Sigma^-1 V)
double gp_loglik(const Eigen::MatrixXd& sigma, const SampleMoments& m);

// d logL / d Sigma = -((T-1)/2) Sigma^-1 + (T/2) Sigma^-1 V Sigma^-1
Eigen::MatrixXd gp_loglik_sigma_gradient(const Eigen::MatrixXd& sigma,
                                         const SampleMoments& m);

} // namespace deformgp

#endif
