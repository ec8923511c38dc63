#include <doctest.h>

#include <cmath>

#include "deformgp/basis.hpp"
#include "deformgp/mathutil.hpp"
#include "support/oracles.hpp"

using namespace deformgp;

namespace {

Eigen::MatrixXd random_points(int n, Rng& rng, double spread = 1.0) {
  Eigen::MatrixXd p(n, 2);
  for (int i = 0; i < n; ++i) {
    p(i, 0) = spread * rng.normal();
    p(i, 1) = spread * rng.normal();
  }
  return p;
}

double tps_eta(double r) { return r > 0 ? r * r * std::log(r) : 0.0; }

} // namespace

TEST_CASE("tprs construction and null space") {
  Rng rng(1001);
  const Eigen::MatrixXd pts = random_points(30, rng);
  const BasisRealization b = build_tprs(pts, 12);
  CHECK(b.size() == 12);
  CHECK(b.null_dim == 3);
  CHECK(b.design.rows() == 30);

  SUBCASE("penalty is symmetric PSD") {
    CHECK((b.penalty - b.penalty.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Rng r2(5);
    const double mx = b.penalty.cwiseAbs().maxCoeff();
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd x = r2.normal_vector(b.size());
      CHECK(x.dot(b.penalty * x) >= -1e-10 * mx * x.squaredNorm());
    }
  }

  SUBCASE("design has full column rank") {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b.design);
    CHECK(qr.rank() == b.size());
  }

  SUBCASE("evaluator reproduces the stored design at training points") {
    const Eigen::MatrixXd rows = b.evaluate(pts);
    CHECK((rows - b.design).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(build_tprs(random_points(12, rng), 12), std::invalid_argument);
    Eigen::MatrixXd line(20, 2);
    for (int i = 0; i < 20; ++i) line.row(i) << double(i), 2.0 * i + 1.0;
    CHECK_THROWS_AS(build_tprs(line, 8), std::invalid_argument);
  }
}

TEST_CASE("tprs penalized fit limits") {
  Rng rng(77);
  const Eigen::MatrixXd pts = random_points(40, rng);
  const BasisRealization b = build_tprs(pts, 10);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i)
    y[i] = std::sin(pts(i, 0)) + 0.3 * pts(i, 1) * pts(i, 1) + 0.05 * rng.normal();

  SUBCASE("lambda -> infinity reproduces the least-squares plane") {
    const Eigen::VectorXd beta = oracle::penalized_ls(b.design, y, b.penalty, 1e10);
    const Eigen::VectorXd fitted = b.design * beta;
    Eigen::MatrixXd plane(40, 3);
    plane.col(0).setOnes();
    plane.col(1) = pts.col(0);
    plane.col(2) = pts.col(1);
    const Eigen::VectorXd pf =
        plane * (plane.transpose() * plane).ldlt().solve(plane.transpose() * y);
    CHECK((fitted - pf).cwiseAbs().maxCoeff() <= 1e-5);
  }

  SUBCASE("lambda = 0 equals unpenalized least squares") {
    const Eigen::VectorXd beta = oracle::penalized_ls(b.design, y, b.penalty, 0.0);
    const Eigen::VectorXd direct =
        (b.design.transpose() * b.design).ldlt().solve(b.design.transpose() * y);
    CHECK((beta - direct).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("rank-K tprs beats the K-knot subset thin plate spline on average") {
  // fit error comparison over random smooth targets; knots by farthest-point
  Rng rng(2024);
  const int n = 60, K = 10;
  const Eigen::MatrixXd pts = random_points(n, rng);
  const BasisRealization b = build_tprs(pts, K);

  // greedy farthest-point subset of the data as knots
  std::vector<int> knot_idx{0};
  while (static_cast<int>(knot_idx.size()) < K) {
    int far = -1;
    double best = -1;
    for (int i = 0; i < n; ++i) {
      double dmin = 1e300;
      for (int k : knot_idx) dmin = std::min(dmin, (pts.row(i) - pts.row(k)).norm());
      if (dmin > best) {
        best = dmin;
        far = i;
      }
    }
    knot_idx.push_back(far);
  }
  // K radial columns + affine, with the 3 polynomial side conditions absorbed
  Eigen::MatrixXd R(n, K), Tk(K, 3), Tn(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k) R(i, k) = tps_eta((pts.row(i) - pts.row(knot_idx[k])).norm());
  for (int k = 0; k < K; ++k) Tk.row(k) << 1.0, pts(knot_idx[k], 0), pts(knot_idx[k], 1);
  for (int i = 0; i < n; ++i) Tn.row(i) << 1.0, pts(i, 0), pts(i, 1);
  const Eigen::MatrixXd Z = constraint_null_space(Tk.transpose()); // K x (K-3)
  Eigen::MatrixXd knot_design(n, K);
  knot_design.leftCols(K - 3) = R * Z;
  knot_design.rightCols(3) = Tn;

  double err_tprs = 0, err_knot = 0;
  for (int rep = 0; rep < 20; ++rep) {
    // random smooth target: low-frequency cosine mixture
    Eigen::VectorXd y(n);
    const double a1 = rng.normal(), a2 = rng.normal(), a3 = rng.normal();
    const double w1 = 0.5 + 0.5 * rng.uniform(), w2 = 0.5 + 0.5 * rng.uniform();
    for (int i = 0; i < n; ++i)
      y[i] = a1 * std::cos(w1 * pts(i, 0)) + a2 * std::sin(w2 * pts(i, 1)) +
             a3 * pts(i, 0) * pts(i, 1) * 0.2;
    auto rss = [&](const Eigen::MatrixXd& X) {
      const Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
      return (y - X * c).norm();
    };
    err_tprs += rss(b.design);
    err_knot += rss(knot_design);
  }
  CHECK(err_tprs <= err_knot * 1.0001);
}

TEST_CASE("cubic regression spline basis") {
  Rng rng(31);
  Eigen::VectorXd v(50);
  for (int i = 0; i < 50; ++i) v[i] = 2.0 * rng.uniform() - 0.3;

  SUBCASE("null dim 2 and PSD penalty") {
    const BasisRealization b = build_cubic_1d(v, 8);
    CHECK(b.size() == 8);
    CHECK(b.null_dim == 2);
    CHECK((b.penalty - b.penalty.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.penalty, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  }

  SUBCASE("K = 2 spans constant plus linear with a zero penalty") {
    const BasisRealization b = build_cubic_1d(v, 2);
    CHECK(b.penalty.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.null_dim == 2);
    // fitting a linear target is exact
    Eigen::VectorXd y = 2.5 * v.array() - 0.7;
    const Eigen::VectorXd c = b.design.colPivHouseholderQr().solve(y);
    CHECK((b.design * c - y).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("lambda -> infinity equals simple linear regression") {
    const BasisRealization b = build_cubic_1d(v, 8);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = std::sin(2.0 * v[i]) + 0.1 * rng.normal();
    const Eigen::VectorXd beta = oracle::penalized_ls(b.design, y, b.penalty, 1e10);
    Eigen::MatrixXd lin(50, 2);
    lin.col(0).setOnes();
    lin.col(1) = v;
    const Eigen::VectorXd lf = lin * (lin.transpose() * lin).ldlt().solve(lin.transpose() * y);
    CHECK((b.design * beta - lf).cwiseAbs().maxCoeff() <= 1e-5);
  }

  SUBCASE("interpolation matches the natural cubic spline oracle") {
    const int K = 7;
    const BasisRealization b = build_cubic_1d(v, K);
    // coefficients are knot values; pick an arbitrary smooth set of values
    Eigen::VectorXd knot_vals(K);
    for (int k = 0; k < K; ++k) knot_vals[k] = std::cos(1.7 * b.cr_knots[k]);
    oracle::NaturalCubicInterp interp(b.cr_knots, knot_vals);
    // evaluate on a grid inside the knot range (standardized scale)
    for (double t = b.cr_knots[0]; t <= b.cr_knots[K - 1]; t += 0.05) {
      Eigen::MatrixXd one(1, 1);
      one(0, 0) = t * b.std_.scale[0] + b.std_.mean[0]; // back to raw scale
      const double val = (b.evaluate(one) * knot_vals)(0);
      CHECK(val == doctest::Approx(interp(t)).epsilon(1e-9));
    }
  }

  SUBCASE("too few distinct values is an error") {
    Eigen::VectorXd ties(30);
    for (int i = 0; i < 30; ++i) ties[i] = (i % 2) ? 1.0 : 0.0;
    CHECK_THROWS_AS(build_cubic_1d(ties, 6), std::invalid_argument);
  }
}

TEST_CASE("shrinkage removes the penalty null space") {
  Rng rng(55);
  const Eigen::MatrixXd pts = random_points(30, rng);
  const BasisRealization b = build_tprs(pts, 9);
  const BasisRealization s = apply_shrinkage(b);
  CHECK(s.null_dim == 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.penalty, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  SUBCASE("huge lambda drives the whole function to zero") {
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) y[i] = 1.0 + pts(i, 0) + 0.5 * rng.normal();
    const Eigen::VectorXd beta = oracle::penalized_ls(s.design, y, s.penalty, 1e10);
    CHECK((s.design * beta).cwiseAbs().maxCoeff() <= 1e-4);
  }

  SUBCASE("idempotent on a full-rank penalty") {
    const BasisRealization again = apply_shrinkage(s);
    CHECK((again.penalty - s.penalty).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("deformation constraints") {
  Rng rng(99);
  const Eigen::MatrixXd pts = random_points(25, rng);
  const BasisRealization b1 = build_tprs(pts, 10);
  const BasisRealization b2 = build_tprs(pts, 10);
  const JointDeformationBasis j = apply_deformation_constraints(b1, b2);

  SUBCASE("three columns fewer than the unconstrained stack") {
    CHECK(j.size() == b1.size() + b2.size() - 3);
    CHECK(j.design.rows() == 2 * 25);
  }

  SUBCASE("identity warp representable up to translation") {
    // least-squares fit of the constrained basis to the raw coordinates:
    // fitted distances must match the identity's distances exactly
    Eigen::VectorXd target(2 * 25);
    target.head(25) = pts.col(0);
    target.tail(25) = pts.col(1);
    const Eigen::VectorXd theta = j.design.colPivHouseholderQr().solve(target);
    const Eigen::VectorXd fitted = j.design * theta;
    for (int a = 0; a < 25; ++a)
      for (int c = a + 1; c < 25; ++c) {
        const double dx = fitted[a] - fitted[c];
        const double dy = fitted[25 + a] - fitted[25 + c];
        const double want = (pts.row(a) - pts.row(c)).norm();
        CHECK(std::hypot(dx, dy) == doctest::Approx(want).epsilon(1e-8));
      }
  }

  SUBCASE("non-trivial rotations of a solution violate the constraints") {
    Rng r2(3);
    const Eigen::VectorXd theta = r2.normal_vector(j.size());
    const Eigen::VectorXd g = j.design * theta; // satisfies constraints by construction
    const Eigen::VectorXd g1 = g.head(25), g2 = g.tail(25);
    const Eigen::VectorXd x1 = j.b1.tp_points.col(0), x2 = j.b1.tp_points.col(1);
    auto rotation_functional = [&](double phi) {
      const Eigen::VectorXd r1 = std::cos(phi) * g1 - std::sin(phi) * g2;
      const Eigen::VectorXd r2v = std::sin(phi) * g1 + std::cos(phi) * g2;
      return x1.dot(r2v) - x2.dot(r1);
    };
    CHECK(rotation_functional(0.0) == doctest::Approx(0.0).scale(1).epsilon(1e-8));
    // generic rotated copies leave the constrained space
    CHECK(std::fabs(rotation_functional(0.9)) > 1e-4);
    CHECK(std::fabs(rotation_functional(2.3)) > 1e-4);
  }

  SUBCASE("evaluate_stacked agrees with the training design") {
    const Eigen::MatrixXd rows = j.evaluate_stacked(pts);
    CHECK((rows - j.design).cwiseAbs().maxCoeff() <= 1e-9);
  }

  SUBCASE("constrained penalties are PSD") {
    for (const Eigen::MatrixXd& S : {j.penalty1, j.penalty2}) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }

  SUBCASE("mismatched point sets are rejected") {
    const BasisRealization other = build_tprs(random_points(20, rng), 10);
    CHECK_THROWS_AS(apply_deformation_constraints(b1, other), std::invalid_argument);
  }
}
