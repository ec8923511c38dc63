#ifndef DEFORMGP_WARP_HPP
#define DEFORMGP_WARP_HPP

#include <optional>
#include <vector>

#include "deformgp/basis.hpp"
#include "deformgp/covariance.hpp"

namespace deformgp {

enum class WarpFamily { anisotropic, deformation, dimension_expansion };

// Design-matrix rows of the warp bases at a fixed point set, cached so
// objective evaluations are matrix products in beta.
struct WarpDesign {
  Eigen::MatrixXd pts;                // m x 2 raw coordinates
  Eigen::MatrixXd stacked;            // deformation: 2m x (K1+K2-3)
  std::vector<Eigen::MatrixXd> added; // dimension expansion: per-dim m x K
};

// The G-space -> D-space mapping for one model family, linear in the basis
// coefficients. The optimization vector beta is laid out as
//   anisotropic:        [log phi1, log phi2 | theta]
//   deformation:        [joint coefficients | theta]
//   dimension expansion:[beta_1 .. beta_r | log phi | theta]
// with theta = unconstrained covariance parameters, always the last 3.
class WarpModel {
public:
  WarpFamily family = WarpFamily::anisotropic;
  std::optional<JointDeformationBasis> joint; // deformation
  std::vector<BasisRealization> added;        // dimension expansion, r >= 1

  Eigen::Index n_warp_params() const;
  Eigen::Index dim() const { return n_warp_params() + 3; }
  Eigen::Index q() const; // D-space dimension

  CovarianceParams covariance(const Eigen::VectorXd& beta) const;
  void set_covariance(Eigen::VectorXd& beta, const CovarianceParams& p) const;

  WarpDesign design_at(const Eigen::MatrixXd& pts) const;

  // m x q warped coordinates
  Eigen::MatrixXd warp_points(const Eigen::VectorXd& beta, const WarpDesign& d) const;
  Eigen::MatrixXd warp_points(const Eigen::VectorXd& beta, const Eigen::MatrixXd& pts) const;

  // (m q) x dim() derivative of warped coordinates with respect to beta,
  // rows blocked per point (point i occupies rows [i q, (i+1) q))
  Eigen::MatrixXd warp_jacobian(const Eigen::VectorXd& beta, const WarpDesign& d) const;

  // true if any point falls outside every basis' training bounding box;
  // extrapolation is permitted, callers may warn
  bool extrapolates(const Eigen::MatrixXd& pts) const;

  // penalty blocks over the beta layout (offset + matrix), one per smoothing
  // parameter; empty for the anisotropic family
  struct Block {
    Eigen::Index offset;
    Eigen::MatrixXd S;
  };
  std::vector<Block> penalty_blocks() const;
};

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& coords);

WarpModel make_anisotropic();
WarpModel make_deformation(const Eigen::MatrixXd& station_pts, int rank);
// shrink = true applies the null-space shrinkage so large lambda drives the
// added dimensions to zero
WarpModel make_dimension_expansion(const Eigen::MatrixXd& station_pts, int rank,
                                   int r, bool shrink = true);

} // namespace deformgp

#endif
