#include "deformgp/warp.hpp"

#include <cmath>
#include <stdexcept>

namespace deformgp {

Eigen::Index WarpModel::n_warp_params() const {
  switch (family) {
    case WarpFamily::anisotropic: return 2;
    case WarpFamily::deformation: return joint->size();
    case WarpFamily::dimension_expansion: {
      Eigen::Index k = 0;
      for (const auto& b : added) k += b.size();
      return k + 1; // + log phi
    }
  }
  return 0;
}

Eigen::Index WarpModel::q() const {
  switch (family) {
    case WarpFamily::anisotropic: return 2;
    case WarpFamily::deformation: return 2;
    case WarpFamily::dimension_expansion: return 2 + static_cast<Eigen::Index>(added.size());
  }
  return 2;
}

CovarianceParams WarpModel::covariance(const Eigen::VectorXd& beta) const {
  if (beta.size() != dim()) throw std::invalid_argument("WarpModel: beta length mismatch");
  return CovarianceParams::from_unconstrained(beta.tail<3>());
}

void WarpModel::set_covariance(Eigen::VectorXd& beta, const CovarianceParams& p) const {
  beta.tail<3>() = p.to_unconstrained();
}

WarpDesign WarpModel::design_at(const Eigen::MatrixXd& pts) const {
  if (pts.cols() != 2) throw std::invalid_argument("WarpModel: points must be m x 2");
  WarpDesign d;
  d.pts = pts;
  if (family == WarpFamily::deformation) d.stacked = joint->evaluate_stacked(pts);
  if (family == WarpFamily::dimension_expansion)
    for (const auto& b : added) d.added.push_back(b.evaluate(pts));
  return d;
}

Eigen::MatrixXd WarpModel::warp_points(const Eigen::VectorXd& beta, const WarpDesign& d) const {
  if (beta.size() != dim()) throw std::invalid_argument("WarpModel: beta length mismatch");
  const Eigen::Index m = d.pts.rows();
  Eigen::MatrixXd w(m, q());
  switch (family) {
    case WarpFamily::anisotropic: {
      const double phi1 = std::exp(beta[0]), phi2 = std::exp(beta[1]);
      w.col(0) = d.pts.col(0) / phi1;
      w.col(1) = d.pts.col(1) / phi2;
      break;
    }
    case WarpFamily::deformation: {
      const Eigen::VectorXd g = d.stacked * beta.head(joint->size());
      w.col(0) = g.head(m);
      w.col(1) = g.tail(m);
      break;
    }
    case WarpFamily::dimension_expansion: {
      const Eigen::Index r = static_cast<Eigen::Index>(added.size());
      Eigen::Index off = 0;
      for (Eigen::Index dix = 0; dix < r; ++dix) {
        const Eigen::Index k = added[static_cast<std::size_t>(dix)].size();
        w.col(2 + dix) = d.added[static_cast<std::size_t>(dix)] * beta.segment(off, k);
        off += k;
      }
      const double phi = std::exp(beta[off]);
      w.col(0) = d.pts.col(0) / phi;
      w.col(1) = d.pts.col(1) / phi;
      break;
    }
  }
  return w;
}

Eigen::MatrixXd WarpModel::warp_points(const Eigen::VectorXd& beta, const Eigen::MatrixXd& pts) const {
  return warp_points(beta, design_at(pts));
}

Eigen::MatrixXd WarpModel::warp_jacobian(const Eigen::VectorXd& beta, const WarpDesign& d) const {
  const Eigen::Index m = d.pts.rows();
  const Eigen::Index p = dim();
  const Eigen::Index qq = q();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m * qq, p);
  switch (family) {
    case WarpFamily::anisotropic: {
      const double phi1 = std::exp(beta[0]), phi2 = std::exp(beta[1]);
      for (Eigen::Index i = 0; i < m; ++i) {
        J(i * 2 + 0, 0) = -d.pts(i, 0) / phi1;
        J(i * 2 + 1, 1) = -d.pts(i, 1) / phi2;
      }
      break;
    }
    case WarpFamily::deformation: {
      const Eigen::Index k = joint->size();
      for (Eigen::Index i = 0; i < m; ++i) {
        J.block(i * 2 + 0, 0, 1, k) = d.stacked.row(i);
        J.block(i * 2 + 1, 0, 1, k) = d.stacked.row(m + i);
      }
      break;
    }
    case WarpFamily::dimension_expansion: {
      const Eigen::Index r = static_cast<Eigen::Index>(added.size());
      Eigen::Index off = 0;
      for (Eigen::Index dix = 0; dix < r; ++dix) {
        const Eigen::Index k = added[static_cast<std::size_t>(dix)].size();
        for (Eigen::Index i = 0; i < m; ++i)
          J.block(i * qq + 2 + dix, off, 1, k) = d.added[static_cast<std::size_t>(dix)].row(i);
        off += k;
      }
      const double phi = std::exp(beta[off]);
      for (Eigen::Index i = 0; i < m; ++i) {
        J(i * qq + 0, off) = -d.pts(i, 0) / phi;
        J(i * qq + 1, off) = -d.pts(i, 1) / phi;
      }
      break;
    }
  }
  return J;
}

bool WarpModel::extrapolates(const Eigen::MatrixXd& pts) const {
  if (family == WarpFamily::deformation)
    return joint->b1.outside_support(pts) || joint->b2.outside_support(pts);
  if (family == WarpFamily::dimension_expansion) {
    for (const auto& b : added)
      if (b.outside_support(pts)) return true;
  }
  return false;
}

std::vector<WarpModel::Block> WarpModel::penalty_blocks() const {
  std::vector<Block> blocks;
  if (family == WarpFamily::deformation) {
    blocks.push_back({0, joint->penalty1});
    blocks.push_back({0, joint->penalty2});
  } else if (family == WarpFamily::dimension_expansion) {
    Eigen::Index off = 0;
    for (const auto& b : added) {
      blocks.push_back({off, b.penalty});
      off += b.size();
    }
  }
  return blocks;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& coords) {
  const Eigen::Index m = coords.rows();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double h = (coords.row(i) - coords.row(j)).norm();
      dist(i, j) = h;
      dist(j, i) = h;
    }
  return dist;
}

WarpModel make_anisotropic() {
  WarpModel w;
  w.family = WarpFamily::anisotropic;
  return w;
}

WarpModel make_deformation(const Eigen::MatrixXd& station_pts, int rank) {
  WarpModel w;
  w.family = WarpFamily::deformation;
  BasisRealization b1 = build_tprs(station_pts, rank);
  BasisRealization b2 = build_tprs(station_pts, rank);
  w.joint = apply_deformation_constraints(b1, b2);
  return w;
}

WarpModel make_dimension_expansion(const Eigen::MatrixXd& station_pts, int rank,
                                   int r, bool shrink) {
  if (r < 1) throw std::invalid_argument("make_dimension_expansion: r must be at least 1");
  WarpModel w;
  w.family = WarpFamily::dimension_expansion;
  for (int d = 0; d < r; ++d) {
    BasisRealization b = build_tprs(station_pts, rank);
    w.added.push_back(shrink ? apply_shrinkage(b) : b);
  }
  return w;
}

} // namespace deformgp
