#include "deformgp/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace deformgp {

PenalizedObjective::PenalizedObjective(const Objective& base,
                                       std::vector<PenaltyBlock> blocks,
                                       Eigen::VectorXd lambda)
    : base_(&base), blocks_(std::move(blocks)), lambda_(std::move(lambda)) {
  if (static_cast<Eigen::Index>(blocks_.size()) != lambda_.size())
    throw std::invalid_argument("PenalizedObjective: one lambda per penalty block");
  for (const auto& b : blocks_) {
    if (b.offset < 0 || b.offset + b.S.rows() > base.dim() || b.S.rows() != b.S.cols())
      throw std::invalid_argument("PenalizedObjective: penalty block out of range");
  }
  if ((lambda_.array() < 0.0).any())
    throw std::invalid_argument("PenalizedObjective: lambda must be nonnegative");
}

double PenalizedObjective::penalty_quadform(const Eigen::VectorXd& beta) const {
  double q = 0.0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    const Eigen::VectorXd seg = beta.segment(blk.offset, blk.S.rows());
    q += lambda_[static_cast<Eigen::Index>(b)] * seg.dot(blk.S * seg);
  }
  return q;
}

double PenalizedObjective::value(const Eigen::VectorXd& beta) const {
  return base_->value(beta) - 0.5 * penalty_quadform(beta);
}

Eigen::VectorXd PenalizedObjective::gradient(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd g = base_->gradient(beta);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    g.segment(blk.offset, blk.S.rows()) -=
        lambda_[static_cast<Eigen::Index>(b)] * (blk.S * beta.segment(blk.offset, blk.S.rows()));
  }
  return g;
}

Eigen::MatrixXd PenalizedObjective::s_lambda() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(base_->dim(), base_->dim());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    S.block(blk.offset, blk.offset, blk.S.rows(), blk.S.cols()) +=
        lambda_[static_cast<Eigen::Index>(b)] * blk.S;
  }
  return S;
}

WarpObjective::WarpObjective(const WarpModel& model, const Eigen::MatrixXd& station_pts,
                             const SampleMoments& moments)
    : model_(&model), design_(model.design_at(station_pts)), moments_(moments) {
  if (station_pts.rows() != moments.n())
    throw std::invalid_argument("WarpObjective: station count mismatch with moments");
  if (station_pts.rows() < 2)
    throw std::invalid_argument("WarpObjective: need at least two stations");
}

void WarpObjective::set_fold_penalty(const Tiling& tiling, const FoldPenaltyConfig& config) {
  if (model_->family != WarpFamily::deformation)
    throw std::logic_error("fold penalty applies to spatial deformation models only");
  fold_config_ = config;
  tile_design_ = model_->design_at(tiling.vertex_matrix());
  tile_index_ = tiling.vertex_indices();
}

Eigen::VectorXd WarpObjective::tiling_areas(const Eigen::VectorXd& beta) const {
  if (!fold_config_) throw std::logic_error("WarpObjective: no tiling attached");
  const Eigen::MatrixXd w = model_->warp_points(beta, tile_design_);
  Eigen::VectorXd areas(static_cast<Eigen::Index>(tile_index_.size()));
  for (std::size_t l = 0; l < tile_index_.size(); ++l) {
    areas[static_cast<Eigen::Index>(l)] =
        clockwise_area(w.row(tile_index_[l][0]), w.row(tile_index_[l][1]),
                       w.row(tile_index_[l][2]));
  }
  return areas;
}

int WarpObjective::tiling_fold_count(const Eigen::VectorXd& beta) const {
  return fold_count(tiling_areas(beta));
}

double WarpObjective::fold_value(const Eigen::VectorXd& beta) const {
  if (!fold_config_) return 0.0;
  return fold_penalty_term(*fold_config_, tiling_areas(beta)).value;
}

double WarpObjective::data_value(const Eigen::VectorXd& beta) const {
  const Eigen::MatrixXd w = model_->warp_points(beta, design_);
  const Eigen::MatrixXd dist = pairwise_distances(w);
  const Eigen::MatrixXd sigma = covariance_matrix(dist, model_->covariance(beta));
  return gp_loglik(sigma, moments_);
}

double WarpObjective::value(const Eigen::VectorXd& beta) const {
  return data_value(beta) - fold_value(beta);
}

bool WarpObjective::differentiable() const {
  return !(fold_config_ && fold_config_->kind == FoldPenaltyKind::strict);
}

Eigen::VectorXd WarpObjective::data_gradient(const Eigen::VectorXd& beta) const {
  const Eigen::Index n = design_.pts.rows();
  const Eigen::Index p = model_->dim();
  const Eigen::Index qq = model_->q();
  const CovarianceParams cp = model_->covariance(beta);

  const Eigen::MatrixXd w = model_->warp_points(beta, design_);
  const Eigen::MatrixXd dist = pairwise_distances(w);
  const Eigen::MatrixXd sigma = covariance_matrix(dist, cp);
  const Eigen::MatrixXd G = gp_loglik_sigma_gradient(sigma, moments_);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);

  // covariance parameters (last three, unconstrained scale)
  const double dalpha_da = cp.alpha * (2.0 - cp.alpha) / 2.0;
  double g_ls2 = 0.0, g_lt2 = 0.0, g_a = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    g_ls2 += G(i, i) * cp.sigma2;
    g_lt2 += G(i, i) * cp.tau2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = dist(i, j);
      if (h <= 0.0) {
        g_ls2 += 2.0 * G(i, j) * cp.sigma2;
        g_lt2 += 2.0 * G(i, j) * cp.tau2;
        continue;
      }
      const double c = sigma(i, j); // sigma2 * exp(-h^alpha)
      g_ls2 += 2.0 * G(i, j) * c;
      g_a += 2.0 * G(i, j) * c * (-std::pow(h, cp.alpha) * std::log(h)) * dalpha_da;
    }
  }
  grad[p - 3] = g_ls2;
  grad[p - 2] = g_lt2;
  grad[p - 1] = g_a;

  // warp coefficients: dl/dbeta = J' r with r the per-(point, coordinate)
  // weights from d sigma_ij / d h_ij chained through the distances
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = dist(i, j);
      if (h <= 0.0) continue;
      const double dsig_dh = -cp.alpha * std::pow(h, cp.alpha - 1.0) * sigma(i, j);
      B(i, j) = B(j, i) = 2.0 * G(i, j) * dsig_dh / h;
    }
  const Eigen::VectorXd rowsum = B.rowwise().sum();
  const Eigen::MatrixXd bw = B * w;
  Eigen::VectorXd r(n * qq);
  for (Eigen::Index i = 0; i < n; ++i)
    r.segment(i * qq, qq) = rowsum[i] * w.row(i).transpose() - bw.row(i).transpose();
  const Eigen::MatrixXd J = model_->warp_jacobian(beta, design_);
  grad += J.transpose() * r;
  return grad;
}

Eigen::VectorXd WarpObjective::fold_gradient(const Eigen::VectorXd& beta) const {
  if (!fold_config_ || fold_config_->kind == FoldPenaltyKind::strict)
    return Eigen::VectorXd::Zero(model_->dim());
  const Eigen::VectorXd areas = tiling_areas(beta);
  Eigen::VectorXd dh;
  if (fold_config_->kind == FoldPenaltyKind::near) {
    dh = penalty_h2_gradient(areas, fold_config_->epsilon);
  } else {
    dh = Eigen::VectorXd::Zero(areas.size());
    for (Eigen::Index l = 0; l < areas.size(); ++l)
      if (areas[l] > 0.0 && areas[l] < fold_config_->epsilon)
        dh[l] = -1.0 / (areas[l] * areas[l]);
  }
  const Eigen::MatrixXd w = model_->warp_points(beta, tile_design_);
  const Eigen::Index qq = model_->q();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(w.rows() * qq);
  for (std::size_t l = 0; l < tile_index_.size(); ++l) {
    const double c = fold_config_->delta * dh[static_cast<Eigen::Index>(l)];
    if (c == 0.0) continue;
    const int ia = tile_index_[l][0], ib = tile_index_[l][1], ic = tile_index_[l][2];
    const auto a = w.row(ia), b = w.row(ib), cc = w.row(ic);
    // d(clockwise area)/d(vertex coordinates)
    s[ia * qq + 0] += c * (cc[1] - b[1]) / 2.0;
    s[ia * qq + 1] += c * (b[0] - cc[0]) / 2.0;
    s[ib * qq + 0] += c * (a[1] - cc[1]) / 2.0;
    s[ib * qq + 1] += c * (cc[0] - a[0]) / 2.0;
    s[ic * qq + 0] += c * (b[1] - a[1]) / 2.0;
    s[ic * qq + 1] += c * (a[0] - b[0]) / 2.0;
  }
  const Eigen::MatrixXd Jt = model_->warp_jacobian(beta, tile_design_);
  return Jt.transpose() * s;
}

Eigen::VectorXd WarpObjective::gradient(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd g = data_gradient(beta);
  if (fold_config_) g -= fold_gradient(beta);
  return g;
}

double penalized_loglik_p0(const WarpObjective& obj, const std::vector<PenaltyBlock>& blocks,
                           const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta) {
  PenalizedObjective po(obj, blocks, lambda);
  return obj.data_value(beta) - 0.5 * po.penalty_quadform(beta);
}

double penalized_loglik_p1(const WarpObjective& obj, const std::vector<PenaltyBlock>& blocks,
                           const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta) {
  if (!obj.has_fold_penalty())
    throw std::logic_error("penalized_loglik_p1: objective has no fold penalty attached");
  PenalizedObjective po(obj, blocks, lambda);
  return po.value(beta);
}

} // namespace deformgp
