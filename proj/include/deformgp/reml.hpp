#ifndef DEFORMGP_REML_HPP
#define DEFORMGP_REML_HPP

#include <string>
#include <vector>

#include "deformgp/objective.hpp"

namespace deformgp {

struct InnerOptions {
  int max_iter = 200;
  double grad_tol = 1e-6; // on |grad|_inf relative to 1 + |l_p|
  double hess_step = 1e-4;
};

struct InnerResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd H; // negative Hessian of the penalized objective at beta
  double value = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  bool converged = false;
};

// Newton maximization of a penalized objective; the Hessian comes from
// central differences of the analytic gradient. Non-convergence returns the
// best iterate with converged = false.
InnerResult inner_fit(const PenalizedObjective& po, const Eigen::VectorXd& beta0,
                      const InnerOptions& opts = {});

struct RemlValue {
  double criterion = 0.0;
  double lp = 0.0;          // penalized log-likelihood at beta_hat
  double log_s_plus = 0.0;  // log of the product of positive eigenvalues of S_lambda
  double log_h = 0.0;       // log |H|
  int Mp = 0;               // zero eigenvalues of S_lambda
  bool h_floored = false;   // some H eigenvalues hit the 1e-12 floor
};

// l(lambda) = l_p(beta_l) + 0.5 log|S_lambda|_+ - 0.5 log|H| + Mp/2 log(2 pi)
RemlValue reml_criterion(const PenalizedObjective& po, const InnerResult& inner);

struct OuterOptions {
  InnerOptions inner;
  double log10_lambda_lo = -8.0;
  double log10_lambda_hi = 10.0;
  int max_iter = 100;
  double grad_tol = 1e-3;  // on d l(lambda) / d log lambda
  double fd_step = 1e-3;   // log-lambda finite-difference step
  bool allow_nondifferentiable = false;
};

struct FitDiagnostics {
  int outer_iters = 0;
  int inner_steps_total = 0;
  bool inner_converged = true;
  bool outer_converged = true;
  bool hit_lambda_bound = false;
  std::vector<std::string> notes;
};

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd lambda;
  Eigen::MatrixXd H;
  double reml = 0.0;
  double loglik = 0.0; // data log-likelihood at beta
  double aic = 0.0;
  double edf = 0.0;
  int Mp = 0;
  int parameter_count = 0; // dim(beta) + dim(lambda)
  bool converged = false;
  FitDiagnostics diagnostics;
};

// Nested optimization: quasi-Newton over log lambda with finite-difference
// gradients, warm-starting the inner Newton fit; multi-start when the first
// run ends on a lambda bound. With no penalty blocks only the inner fit runs.
FitResult outer_optimize(const Objective& obj, const std::vector<PenaltyBlock>& blocks,
                         const Eigen::VectorXd& beta0, const OuterOptions& opts = {});

// edf = tr(H^-1 H0) with H0 the unpenalized negative Hessian at beta_hat;
// aic = -2 l(beta_hat) + 2 edf
void compute_aic(const Objective& obj, FitResult& fit, const InnerOptions& opts = {});

} // namespace deformgp

#endif
