#ifndef DEFORMGP_MATHUTIL_HPP
#define DEFORMGP_MATHUTIL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>

namespace deformgp {

// ---- univariate Gaussian ----

double norm_pdf(double z);
double norm_cdf(double z);

// Inverse standard normal cdf (Wichura's AS241, double precision).
// p in (0,1); p <= 0 or p >= 1 returns -inf/+inf.
double norm_quantile(double p);

// ---- bivariate Gaussian ----

// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
// Gauss-Legendre quadrature of the angular form of Plackett's identity;
// absolute error below 1e-9 for |rho| <= 0.999.
double bvn_cdf(double h, double k, double rho);

// Standard bivariate normal density at (x, y) with correlation rho.
double bvn_pdf(double x, double y, double rho);

// ---- generalized Pareto ----

// cdf of GPD(psi, xi) at y >= 0; xi = 0 handled as the exponential limit.
double gpd_cdf(double y, double psi, double xi);

// quantile: inverse of gpd_cdf on q in [0, 1).
double gpd_quantile(double q, double psi, double xi);

// ---- deterministic RNG ----

// mt19937_64 with inverse-cdf Gaussian draws, so sequences are identical
// across platforms for a given seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform();                    // U(0,1), open interval
  double normal();                     // N(0,1)
  Eigen::VectorXd normal_vector(Eigen::Index n);

  // independent substream for event index k (splitmix-style mixing)
  static Rng substream(std::uint64_t seed, std::uint64_t k);

private:
  std::mt19937_64 eng_;
};

// ---- 1-D minimization ----

// Brent's method on [a, b]; returns argmin, writes minimum value if fmin.
double brent_minimize(const std::function<double(double)>& f, double a,
                      double b, double tol, double* fmin = nullptr,
                      int max_iter = 200);

// ---- finite differences (test oracles and Hessian assembly) ----

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double hscale = 1e-5);

// central differences of an analytic gradient; result is symmetrized
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g,
                            const Eigen::VectorXd& x, double hscale = 1e-4);

} // namespace deformgp

#endif
