#ifndef DEFORMGP_BASIS_HPP
#define DEFORMGP_BASIS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace deformgp {

enum class BasisKind { thin_plate_2d, cubic_1d };

struct BasisSpec {
  BasisKind kind = BasisKind::thin_plate_2d;
  int rank = 12;                    // total basis dimension K
  std::vector<std::string> inputs;  // coordinate/covariate column names
  bool shrinkage = false;           // full-rank penalty (null space shrunk)
  bool deformation_constraints = false;
};

// Standardization applied to inputs before basis construction; stored so
// prediction uses the same transform.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale; // unit-sd scaling, 1 where the column is constant

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  static Standardizer fit(const Eigen::MatrixXd& x);
};

// A realized basis: design at training points, roughness penalty, and enough
// state to evaluate design rows at new points.
//
// Column layout puts penalized directions first and the polynomial/null
// block last, so the penalty is block diagonal [S_pen, 0].
class BasisRealization {
public:
  BasisKind kind = BasisKind::thin_plate_2d;
  Eigen::MatrixXd design;  // n x K
  Eigen::MatrixXd penalty; // K x K, symmetric PSD
  int null_dim = 0;        // zero eigenvalues of the penalty
  Standardizer std_;

  // thin plate state: standardized training points and the eigenbasis map
  // M = U_K Z so a new row is [eta_vec(x)' M, 1, x1, x2]
  Eigen::MatrixXd tp_points; // n x 2 (standardized)
  Eigen::MatrixXd tp_map;    // n x (K-3)

  // cubic regression spline state (standardized scale)
  Eigen::VectorXd cr_knots;   // K knots
  Eigen::MatrixXd cr_curv;    // (K-2) x K map from knot values to interior 2nd derivs

  Eigen::Index size() const { return design.cols(); }

  // design rows at arbitrary new points (columns match `inputs` order)
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& points) const;

  // true when any point lies outside the training bounding box
  bool outside_support(const Eigen::MatrixXd& points) const;

  // cubic design rows on already-standardized values (linear beyond the
  // boundary knots, matching the natural spline)
  Eigen::MatrixXd evaluate_raw_cubic(const Eigen::MatrixXd& xs) const;
};

// Thin plate regression spline of total rank K (penalized part K-3 plus the
// affine null space), from the truncated eigendecomposition of the radial
// matrix E_ij = eta(|x_i - x_j|), eta(r) = r^2 log r.
BasisRealization build_tprs(const Eigen::MatrixXd& points, int rank);

// Cubic regression spline with K knots at data quantiles and integrated
// squared second derivative penalty; null space is {1, x}.
BasisRealization build_cubic_1d(const Eigen::VectorXd& values, int rank);

// Replace zero penalty eigenvalues with factor * (smallest nonzero
// eigenvalue) so lambda -> infinity shrinks the whole function to zero.
BasisRealization apply_shrinkage(const BasisRealization& b, double factor = 1e-1);

// Reparameterization of a stacked coefficient vector onto the null space of
// a full-row-rank constraint matrix C (beta = N theta with C N = 0).
Eigen::MatrixXd constraint_null_space(const Eigen::MatrixXd& C);

// Joint realization of a deformation pair (g1, g2) on shared points, with
// the translation and rotation invariances removed: sum_i g_d(x_i) = 0 for
// d = 1,2 and sum_i [x_i1 g2(x_i) - x_i2 g1(x_i)] = 0.
struct JointDeformationBasis {
  BasisRealization b1, b2;
  Eigen::MatrixXd null_map; // (K1+K2) x (K1+K2-3), maps theta -> (beta1, beta2)
  Eigen::MatrixXd design;   // n x (K1+K2-3), rows give (g1(x_i), g2(x_i)) halves
  Eigen::MatrixXd penalty1; // constrained-space penalty of S1
  Eigen::MatrixXd penalty2;

  Eigen::Index size() const { return null_map.cols(); }

  // stacked [rows for g1 ; rows for g2] at m new points: (2m) x size()
  Eigen::MatrixXd evaluate_stacked(const Eigen::MatrixXd& points) const;
};

JointDeformationBasis apply_deformation_constraints(const BasisRealization& b1,
                                                    const BasisRealization& b2);

// null_dim recomputed from eigenvalues below 1e-10 * max eigenvalue
int penalty_null_dim(const Eigen::MatrixXd& S);

} // namespace deformgp

#endif
