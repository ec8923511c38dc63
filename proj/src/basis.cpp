#include "deformgp/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace deformgp {

namespace {

double tps_eta(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

Eigen::MatrixXd radial_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd e(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      e(i, j) = tps_eta((a.row(i) - b.row(j)).norm());
  return e;
}

} // namespace

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size())
    throw std::invalid_argument("Standardizer: column count mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  Eigen::MatrixXd c = x.rowwise() - s.mean.transpose();
  s.scale = (c.array().square().colwise().sum() / std::max<double>(1.0, double(x.rows() - 1)))
                .sqrt()
                .matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (s.scale[j] <= 0.0) s.scale[j] = 1.0;
  return s;
}

int penalty_null_dim(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double mx = es.eigenvalues().cwiseAbs().maxCoeff();
  if (mx <= 0.0) return static_cast<int>(S.rows());
  return static_cast<int>((es.eigenvalues().array() < 1e-10 * mx).count());
}

BasisRealization build_tprs(const Eigen::MatrixXd& points, int rank) {
  const Eigen::Index n = points.rows();
  if (points.cols() != 2) throw std::invalid_argument("build_tprs: points must be n x 2");
  if (rank < 4) throw std::invalid_argument("build_tprs: rank must be at least 4");
  if (n <= rank) throw std::invalid_argument("build_tprs: rank must be smaller than n");

  BasisRealization b;
  b.kind = BasisKind::thin_plate_2d;
  b.std_ = Standardizer::fit(points);
  const Eigen::MatrixXd xs = b.std_.apply(points);

  // collinearity would make the affine block T rank deficient
  Eigen::MatrixXd T(n, 3);
  T.col(0).setOnes();
  T.col(1) = xs.col(0);
  T.col(2) = xs.col(1);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> tqr(T);
  if (tqr.rank() < 3) throw std::invalid_argument("build_tprs: points are collinear");

  const Eigen::MatrixXd E = radial_matrix(xs, xs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(E);
  if (es.info() != Eigen::Success) throw std::runtime_error("build_tprs: eigendecomposition failed");

  // retain the `rank` eigenvectors of largest magnitude
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    return std::fabs(es.eigenvalues()[a]) > std::fabs(es.eigenvalues()[c]);
  });
  Eigen::MatrixXd Uk(n, rank);
  Eigen::VectorXd dk(rank);
  for (int j = 0; j < rank; ++j) {
    Uk.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    dk[j] = es.eigenvalues()[order[static_cast<std::size_t>(j)]];
  }

  // absorb T' U_k delta = 0 so the penalized block is orthogonal to the
  // affine null space; Z spans the null space of (T' U_k)
  const Eigen::MatrixXd A = T.transpose() * Uk; // 3 x K
  Eigen::MatrixXd Z = constraint_null_space(A); // K x (K-3)

  b.tp_points = xs;
  b.tp_map = Uk * Z; // n x (K-3)

  const int kp = rank - 3;
  b.design.resize(n, rank);
  b.design.leftCols(kp) = Uk * dk.asDiagonal() * Z; // = E * tp_map
  b.design.rightCols(3) = T;

  // penalty on the constrained subspace: Z' D Z = (U_k Z)' E (U_k Z),
  // positive definite because eta is conditionally PD given T'delta = 0
  Eigen::MatrixXd Sp = Z.transpose() * dk.asDiagonal() * Z;
  Sp = 0.5 * (Sp + Sp.transpose());
  b.penalty = Eigen::MatrixXd::Zero(rank, rank);
  b.penalty.topLeftCorner(kp, kp) = Sp;
  b.null_dim = penalty_null_dim(b.penalty);
  return b;
}

BasisRealization build_cubic_1d(const Eigen::VectorXd& values, int rank) {
  const Eigen::Index n = values.size();
  if (rank < 2) throw std::invalid_argument("build_cubic_1d: rank must be at least 2");
  if (n <= rank) throw std::invalid_argument("build_cubic_1d: rank must be smaller than n");

  BasisRealization b;
  b.kind = BasisKind::cubic_1d;
  b.std_ = Standardizer::fit(values);
  const Eigen::VectorXd xs = b.std_.apply(values);

  // knots at quantiles of the (standardized) data
  Eigen::VectorXd sorted = xs;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  Eigen::VectorXd knots(rank);
  for (int k = 0; k < rank; ++k) {
    const double q = double(k) / double(rank - 1);
    const double pos = q * double(n - 1);
    const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, n - 1);
    knots[k] = sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
  }
  for (int k = 0; k + 1 < rank; ++k)
    if (!(knots[k + 1] > knots[k]))
      throw std::invalid_argument("build_cubic_1d: too few distinct values for knot placement");
  b.cr_knots = knots;

  // value/second-derivative representation: interior curvatures are
  // delta = B^{-1} D beta, natural boundary conditions delta_1 = delta_K = 0
  const int K = rank;
  if (K > 2) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K - 2, K - 2);
    for (int i = 0; i < K - 2; ++i) {
      const double h0 = knots[i + 1] - knots[i];
      const double h1 = knots[i + 2] - knots[i + 1];
      D(i, i) = 1.0 / h0;
      D(i, i + 1) = -1.0 / h0 - 1.0 / h1;
      D(i, i + 2) = 1.0 / h1;
      B(i, i) = (h0 + h1) / 3.0;
      if (i + 1 < K - 2) {
        B(i, i + 1) = h1 / 6.0;
        B(i + 1, i) = h1 / 6.0;
      }
    }
    const Eigen::MatrixXd Binv = B.llt().solve(Eigen::MatrixXd::Identity(K - 2, K - 2));
    b.cr_curv = Binv * D;
    Eigen::MatrixXd S = D.transpose() * Binv * D;
    b.penalty = 0.5 * (S + S.transpose());
  } else {
    b.cr_curv.resize(0, K);
    b.penalty = Eigen::MatrixXd::Zero(K, K);
  }
  b.null_dim = penalty_null_dim(b.penalty);

  Eigen::MatrixXd pts(n, 1);
  pts.col(0) = xs;
  b.design = b.evaluate_raw_cubic(pts);
  return b;
}

// defined out of line so build_cubic_1d can reuse evaluate()'s machinery on
// already-standardized values
Eigen::MatrixXd BasisRealization::evaluate(const Eigen::MatrixXd& points) const {
  const Eigen::MatrixXd xs = std_.apply(points);
  if (kind == BasisKind::thin_plate_2d) {
    const Eigen::Index m = xs.rows();
    const int K = static_cast<int>(design.cols());
    Eigen::MatrixXd rows(m, K);
    rows.leftCols(K - 3) = radial_matrix(xs, tp_points) * tp_map;
    rows.col(K - 3).setOnes();
    rows.col(K - 2) = xs.col(0);
    rows.col(K - 1) = xs.col(1);
    return rows;
  }
  return evaluate_raw_cubic(xs);
}

bool BasisRealization::outside_support(const Eigen::MatrixXd& points) const {
  const Eigen::MatrixXd xs = std_.apply(points);
  if (kind == BasisKind::thin_plate_2d) {
    const Eigen::RowVectorXd lo = tp_points.colwise().minCoeff();
    const Eigen::RowVectorXd hi = tp_points.colwise().maxCoeff();
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
      if ((xs.row(i).array() < lo.array()).any() || (xs.row(i).array() > hi.array()).any())
        return true;
    return false;
  }
  return xs.minCoeff() < cr_knots[0] || xs.maxCoeff() > cr_knots[cr_knots.size() - 1];
}

Eigen::MatrixXd BasisRealization::evaluate_raw_cubic(const Eigen::MatrixXd& xs) const {
  const int K = static_cast<int>(cr_knots.size());
  const Eigen::Index m = xs.rows();
  // full curvature map including the zero natural boundary rows
  Eigen::MatrixXd curv_full = Eigen::MatrixXd::Zero(K, K);
  if (cr_curv.rows() > 0) curv_full.block(1, 0, K - 2, K) = cr_curv;

  auto deriv_row = [&](int j, bool at_left) {
    // f'(k_j) from the interval [k_j, k_{j+1}] (at_left) or f'(k_{j+1})
    const double h = cr_knots[j + 1] - cr_knots[j];
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(K);
    r[j] -= 1.0 / h;
    r[j + 1] += 1.0 / h;
    if (at_left)
      r -= (h / 3.0) * curv_full.row(j) + (h / 6.0) * curv_full.row(j + 1);
    else
      r += (h / 6.0) * curv_full.row(j) + (h / 3.0) * curv_full.row(j + 1);
    return r;
  };

  Eigen::MatrixXd rows(m, K);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = xs(i, 0);
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(K);
    if (x <= cr_knots[0]) {
      r[0] = 1.0;
      r += (x - cr_knots[0]) * deriv_row(0, true);
    } else if (x >= cr_knots[K - 1]) {
      r[K - 1] = 1.0;
      r += (x - cr_knots[K - 1]) * deriv_row(K - 2, false);
    } else {
      int j = 0;
      while (j + 2 < K && x > cr_knots[j + 1]) ++j;
      const double h = cr_knots[j + 1] - cr_knots[j];
      const double am = (cr_knots[j + 1] - x) / h;
      const double ap = (x - cr_knots[j]) / h;
      const double cm = (am * am * am - am) * h * h / 6.0;
      const double cp = (ap * ap * ap - ap) * h * h / 6.0;
      r[j] += am;
      r[j + 1] += ap;
      r += cm * curv_full.row(j) + cp * curv_full.row(j + 1);
    }
    rows.row(i) = r;
  }
  return rows;
}

BasisRealization apply_shrinkage(const BasisRealization& b, double factor) {
  if (b.null_dim == 0) return b;
  BasisRealization out = b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.penalty);
  Eigen::VectorXd ev = es.eigenvalues();
  const double mx = ev.cwiseAbs().maxCoeff();
  double min_nonzero = mx;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-10 * mx) min_nonzero = std::min(min_nonzero, ev[i]);
  const double fill = factor * min_nonzero;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] < 1e-10 * mx) ev[i] = fill;
  Eigen::MatrixXd S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  out.penalty = 0.5 * (S + S.transpose());
  out.null_dim = 0;
  return out;
}

Eigen::MatrixXd constraint_null_space(const Eigen::MatrixXd& C) {
  // columns (r+1)..p of Q from the full QR of C' span null(C)
  const Eigen::Index p = C.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  if (qr.rank() < C.rows())
    throw std::invalid_argument("constraint_null_space: constraint matrix is rank deficient");
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
  return Q.rightCols(p - C.rows());
}

JointDeformationBasis apply_deformation_constraints(const BasisRealization& b1,
                                                    const BasisRealization& b2) {
  if (b1.design.rows() != b2.design.rows())
    throw std::invalid_argument("apply_deformation_constraints: realizations built on different points");
  if (b1.kind != BasisKind::thin_plate_2d || b2.kind != BasisKind::thin_plate_2d)
    throw std::invalid_argument("apply_deformation_constraints: deformation outputs need 2-d bases");
  const Eigen::Index n = b1.design.rows();
  const Eigen::Index k1 = b1.design.cols(), k2 = b2.design.cols();

  // translation of each output and one net rotation about the centroid,
  // measured against the (standardized) training coordinates
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, k1 + k2);
  C.block(0, 0, 1, k1) = b1.design.colwise().sum();
  C.block(1, k1, 1, k2) = b2.design.colwise().sum();
  const Eigen::VectorXd x1 = b1.tp_points.col(0), x2 = b1.tp_points.col(1);
  C.block(2, 0, 1, k1) = -(x2.transpose() * b1.design);
  C.block(2, k1, 1, k2) = x1.transpose() * b2.design;

  JointDeformationBasis j;
  j.b1 = b1;
  j.b2 = b2;
  j.null_map = constraint_null_space(C);

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(2 * n, k1 + k2);
  stacked.block(0, 0, n, k1) = b1.design;
  stacked.block(n, k1, n, k2) = b2.design;
  j.design = stacked * j.null_map;

  Eigen::MatrixXd S1 = Eigen::MatrixXd::Zero(k1 + k2, k1 + k2);
  S1.topLeftCorner(k1, k1) = b1.penalty;
  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(k1 + k2, k1 + k2);
  S2.bottomRightCorner(k2, k2) = b2.penalty;
  j.penalty1 = j.null_map.transpose() * S1 * j.null_map;
  j.penalty2 = j.null_map.transpose() * S2 * j.null_map;
  j.penalty1 = 0.5 * (j.penalty1 + j.penalty1.transpose());
  j.penalty2 = 0.5 * (j.penalty2 + j.penalty2.transpose());
  return j;
}

Eigen::MatrixXd JointDeformationBasis::evaluate_stacked(const Eigen::MatrixXd& points) const {
  const Eigen::Index m = points.rows();
  const Eigen::Index k1 = b1.design.cols(), k2 = b2.design.cols();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(2 * m, k1 + k2);
  stacked.block(0, 0, m, k1) = b1.evaluate(points);
  stacked.block(m, k1, m, k2) = b2.evaluate(points);
  return stacked * null_map;
}

} // namespace deformgp
