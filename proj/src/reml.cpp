#include "deformgp/reml.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "deformgp/mathutil.hpp"

namespace deformgp {

namespace {

Eigen::MatrixXd negative_hessian(const PenalizedObjective& po, const Eigen::VectorXd& beta,
                                 double step) {
  auto g = [&](const Eigen::VectorXd& b) { return po.gradient(b); };
  return -fd_jacobian(g, beta, step);
}

// solve (H + ridge I) d = g with growing ridge until positive definite
Eigen::VectorXd ascent_direction(Eigen::MatrixXd H, const Eigen::VectorXd& g) {
  double ridge = 0.0;
  const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(g);
      if (d.allFinite() && g.dot(d) > 0.0) return d;
    }
    ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 10.0;
    H.diagonal().array() += ridge;
  }
  return g / scale; // last resort: gradient step
}

} // namespace

InnerResult inner_fit(const PenalizedObjective& po, const Eigen::VectorXd& beta0,
                      const InnerOptions& opts) {
  if (beta0.size() != po.dim()) throw std::invalid_argument("inner_fit: beta0 length mismatch");
  InnerResult res;
  res.beta = beta0;
  double f = po.value(res.beta);
  if (!std::isfinite(f))
    throw std::invalid_argument("inner_fit: objective not finite at the starting point");

  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd g = po.gradient(res.beta);
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= opts.grad_tol * (1.0 + std::fabs(f))) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd H = negative_hessian(po, res.beta, opts.hess_step);
    const Eigen::VectorXd d = ascent_direction(H, g);

    // backtracking line search (Armijo)
    double t = 1.0;
    const double slope = g.dot(d);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd cand = res.beta + t * d;
      const double fc = po.value(cand);
      if (std::isfinite(fc) && fc >= f + 1e-4 * t * slope) {
        res.beta = cand;
        f = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    ++res.steps;
    if (!moved) break; // no progress possible at working precision
  }
  res.value = f;
  res.H = negative_hessian(po, res.beta, opts.hess_step);
  if (!res.converged) {
    const Eigen::VectorXd g = po.gradient(res.beta);
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    res.converged = res.grad_norm <= opts.grad_tol * (1.0 + std::fabs(f));
  }
  return res;
}

RemlValue reml_criterion(const PenalizedObjective& po, const InnerResult& inner) {
  RemlValue out;
  out.lp = inner.value;

  const Eigen::MatrixXd S = po.s_lambda();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double mx = ev.cwiseAbs().maxCoeff();
  out.Mp = 0;
  out.log_s_plus = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (mx <= 0.0 || ev[i] < 1e-10 * mx)
      ++out.Mp;
    else
      out.log_s_plus += std::log(ev[i]);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(inner.H, Eigen::EigenvaluesOnly);
  out.log_h = 0.0;
  for (Eigen::Index i = 0; i < eh.eigenvalues().size(); ++i) {
    double v = eh.eigenvalues()[i];
    if (v < 1e-12) {
      v = 1e-12;
      out.h_floored = true;
    }
    out.log_h += std::log(v);
  }

  out.criterion = out.lp + 0.5 * out.log_s_plus - 0.5 * out.log_h +
                  0.5 * out.Mp * std::log(2.0 * M_PI);
  return out;
}

namespace {

struct OuterEval {
  RemlValue reml;
  InnerResult inner;
};

class OuterProblem {
public:
  OuterProblem(const Objective& obj, const std::vector<PenaltyBlock>& blocks,
               const OuterOptions& opts)
      : obj_(obj), blocks_(blocks), opts_(opts) {}

  // t = natural-log lambda vector
  OuterEval evaluate(const Eigen::VectorXd& t, const Eigen::VectorXd& warm) {
    Eigen::VectorXd lambda = t.array().exp();
    PenalizedObjective po(obj_, blocks_, lambda);
    OuterEval ev;
    ev.inner = inner_fit(po, warm, opts_.inner);
    ev.reml = reml_criterion(po, ev.inner);
    total_steps_ += ev.inner.steps;
    all_inner_converged_ = all_inner_converged_ && ev.inner.converged;
    return ev;
  }

  int total_steps() const { return total_steps_; }
  bool all_inner_converged() const { return all_inner_converged_; }

private:
  const Objective& obj_;
  const std::vector<PenaltyBlock>& blocks_;
  const OuterOptions& opts_;
  int total_steps_ = 0;
  bool all_inner_converged_ = true;
};

} // namespace

FitResult outer_optimize(const Objective& obj, const std::vector<PenaltyBlock>& blocks,
                         const Eigen::VectorXd& beta0, const OuterOptions& opts) {
  if (!obj.differentiable() && !opts.allow_nondifferentiable)
    throw std::invalid_argument(
        "outer_optimize: objective is not differentiable (strict fold penalty); "
        "REML smoothing-parameter estimation would be invalid");

  FitResult fit;
  const Eigen::Index nb = static_cast<Eigen::Index>(blocks.size());

  if (nb == 0) {
    PenalizedObjective po(obj, {}, Eigen::VectorXd());
    InnerResult inner = inner_fit(po, beta0, opts.inner);
    const RemlValue rv = reml_criterion(po, inner);
    fit.beta = inner.beta;
    fit.lambda = Eigen::VectorXd();
    fit.H = inner.H;
    fit.reml = rv.criterion;
    fit.loglik = obj.data_value(inner.beta);
    fit.Mp = rv.Mp;
    fit.converged = inner.converged;
    fit.parameter_count = static_cast<int>(obj.dim());
    fit.diagnostics.inner_steps_total = inner.steps;
    fit.diagnostics.inner_converged = inner.converged;
    if (rv.h_floored) fit.diagnostics.notes.push_back("log|H| eigenvalues floored at 1e-12");
    compute_aic(obj, fit, opts.inner);
    return fit;
  }

  const double lo = opts.log10_lambda_lo * std::log(10.0);
  const double hi = opts.log10_lambda_hi * std::log(10.0);
  auto clamp = [&](Eigen::VectorXd t) {
    return t.cwiseMax(lo).cwiseMin(hi).eval();
  };

  OuterProblem prob(obj, blocks, opts);

  // quasi-Newton (BFGS) over log lambda with finite-difference gradients,
  // projected onto the box; multi-start if a run finishes on a bound
  struct RunResult {
    Eigen::VectorXd t;
    OuterEval ev;
    bool at_bound = false;
    bool converged = false;
    int iters = 0;
  };

  auto run_from = [&](const Eigen::VectorXd& t_init, const Eigen::VectorXd& warm_init) {
    RunResult rr;
    Eigen::VectorXd t = clamp(t_init);
    Eigen::VectorXd warm = warm_init;
    OuterEval cur = prob.evaluate(t, warm);
    warm = cur.inner.beta;

    Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(nb, nb);
    Eigen::VectorXd g_prev, t_prev;

    auto fd_grad = [&](const Eigen::VectorXd& tt, const Eigen::VectorXd& w) {
      Eigen::VectorXd g(nb);
      for (Eigen::Index i = 0; i < nb; ++i) {
        Eigen::VectorXd tp = tt, tm = tt;
        tp[i] += opts.fd_step;
        tm[i] -= opts.fd_step;
        const double fp = prob.evaluate(clamp(tp), w).reml.criterion;
        const double fm = prob.evaluate(clamp(tm), w).reml.criterion;
        g[i] = (fp - fm) / (clamp(tp)[i] - clamp(tm)[i]);
      }
      return g;
    };

    int it = 0;
    for (; it < opts.max_iter; ++it) {
      Eigen::VectorXd g = fd_grad(t, warm);
      // project gradient at active bounds
      for (Eigen::Index i = 0; i < nb; ++i) {
        if (t[i] <= lo + 1e-12 && g[i] < 0) g[i] = 0;
        if (t[i] >= hi - 1e-12 && g[i] > 0) g[i] = 0;
      }
      if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
        rr.converged = true;
        break;
      }
      if (g_prev.size() > 0) {
        // BFGS in minimization convention on -criterion: y = g_prev - g
        const Eigen::VectorXd s = t - t_prev;
        const Eigen::VectorXd y = g_prev - g;
        const double sy = s.dot(y);
        if (sy > 1e-12) {
          const Eigen::VectorXd By = Binv * y;
          Binv += ((sy + y.dot(By)) / (sy * sy)) * (s * s.transpose()) -
                  (By * s.transpose() + s * By.transpose()) / sy;
        }
      }
      Eigen::VectorXd d = Binv * g;
      if (!d.allFinite() || d.dot(g) <= 0.0) {
        d = g;
        Binv.setIdentity();
      }
      // cap the step so one iteration cannot jump across the whole box
      const double dmax = d.lpNorm<Eigen::Infinity>();
      if (dmax > 4.0) d *= 4.0 / dmax;

      g_prev = g;
      t_prev = t;
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::VectorXd tc = clamp(t + step * d);
        if ((tc - t).lpNorm<Eigen::Infinity>() < 1e-12) break;
        OuterEval ev = prob.evaluate(tc, warm);
        if (std::isfinite(ev.reml.criterion) &&
            ev.reml.criterion > cur.reml.criterion + 1e-10) {
          t = tc;
          cur = ev;
          warm = ev.inner.beta;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        rr.converged = true; // no ascent available beyond tolerance
        break;
      }
    }
    rr.t = t;
    rr.ev = cur;
    rr.iters = it;
    rr.at_bound = (t.array() <= lo + 1e-9).any() || (t.array() >= hi - 1e-9).any();
    return rr;
  };

  RunResult best = run_from(Eigen::VectorXd::Zero(nb), beta0);
  int outer_iters = best.iters;
  if (best.at_bound) {
    for (double start : {-2.0, 2.0}) {
      RunResult alt = run_from(Eigen::VectorXd::Constant(nb, start * std::log(10.0)),
                               best.ev.inner.beta);
      outer_iters += alt.iters;
      if (alt.ev.reml.criterion > best.ev.reml.criterion) best = alt;
    }
  }

  fit.beta = best.ev.inner.beta;
  fit.lambda = best.t.array().exp();
  fit.H = best.ev.inner.H;
  fit.reml = best.ev.reml.criterion;
  fit.loglik = obj.data_value(fit.beta);
  fit.Mp = best.ev.reml.Mp;
  fit.converged = best.converged && best.ev.inner.converged;
  fit.parameter_count = static_cast<int>(obj.dim()) + static_cast<int>(nb);
  fit.diagnostics.outer_iters = outer_iters;
  fit.diagnostics.inner_steps_total = prob.total_steps();
  fit.diagnostics.inner_converged = prob.all_inner_converged();
  fit.diagnostics.outer_converged = best.converged;
  fit.diagnostics.hit_lambda_bound = best.at_bound;
  if (best.ev.reml.h_floored)
    fit.diagnostics.notes.push_back("log|H| eigenvalues floored at 1e-12");
  compute_aic(obj, fit, opts.inner);
  return fit;
}

void compute_aic(const Objective& obj, FitResult& fit, const InnerOptions& opts) {
  auto g0 = [&](const Eigen::VectorXd& b) { return obj.data_gradient(b); };
  const Eigen::MatrixXd H0 = -fd_jacobian(g0, fit.beta, opts.hess_step);
  // edf = tr(H^-1 H0); solve through an LDLT of H for stability
  Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.H);
  double edf;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    edf = ldlt.solve(H0).trace();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.H);
    Eigen::VectorXd inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i)
      inv[i] = inv[i] > 1e-12 ? 1.0 / inv[i] : 0.0;
    edf = (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * H0).trace();
    fit.diagnostics.notes.push_back("edf computed from a pseudo-inverse of H");
  }
  fit.edf = edf;
  fit.aic = -2.0 * fit.loglik + 2.0 * edf;
}

} // namespace deformgp
