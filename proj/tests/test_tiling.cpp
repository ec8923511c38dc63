#include <doctest.h>

#include <cmath>

#include "deformgp/mathutil.hpp"
#include "deformgp/tiling.hpp"
#include "support/oracles.hpp"

using namespace deformgp;

TEST_CASE("clockwise area of the reference unit right triangles") {
  // unit right triangle in clockwise order, and the same triangle with the
  // third vertex reflected, which flips the orientation
  CHECK(clockwise_area({0, 0}, {0, 1}, {1, 0}) == doctest::Approx(0.5).epsilon(0));
  CHECK(clockwise_area({0, 0}, {0, 1}, {-1, 0}) == doctest::Approx(-0.5).epsilon(0));
  CHECK(clockwise_area({0, 0}, {1, 1}, {2, 2}) == 0.0);
}

TEST_CASE("clockwise area agrees with the shoelace oracle") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector2d a(rng.normal() * 3, rng.normal() * 3);
    Eigen::Vector2d b(rng.normal() * 3, rng.normal() * 3);
    Eigen::Vector2d c(rng.normal() * 3, rng.normal() * 3);
    CHECK(clockwise_area(a, b, c) ==
          doctest::Approx(oracle::shoelace_clockwise(a, b, c)).epsilon(1e-12));
  }
}

TEST_CASE("clockwise area properties") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector2d a(rng.normal(), rng.normal());
    Eigen::Vector2d b(rng.normal(), rng.normal());
    Eigen::Vector2d c(rng.normal(), rng.normal());
    const double w = clockwise_area(a, b, c);
    // antisymmetric under swapping any two vertices
    CHECK(clockwise_area(b, a, c) == doctest::Approx(-w).epsilon(1e-12));
    CHECK(clockwise_area(a, c, b) == doctest::Approx(-w).epsilon(1e-12));
    CHECK(clockwise_area(c, b, a) == doctest::Approx(-w).epsilon(1e-12));
    // translation invariance and quadratic scaling
    Eigen::Vector2d t(rng.normal(), rng.normal());
    CHECK(clockwise_area(a + t, b + t, c + t) == doctest::Approx(w).epsilon(1e-9));
    const double s = 1.0 + std::fabs(rng.normal());
    CHECK(clockwise_area(s * a, s * b, s * c) == doctest::Approx(s * s * w).epsilon(1e-9));
  }
}

TEST_CASE("clockwise area rejects non-finite input") {
  CHECK_THROWS_AS(clockwise_area({0, 0}, {1, std::nan("")}, {0, 1}), std::invalid_argument);
}

TEST_CASE("grid tilings") {
  SUBCASE("2x2 unit square gives two half-area triangles") {
    Tiling t = make_grid_tiling(0, 0, 1, 1, 2, 2);
    REQUIRE(t.size() == 2);
    for (const auto& tri : t.triangles)
      CHECK(clockwise_area(tri) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("3x3 unit square: 8 triangles covering unit area") {
    Tiling t = make_grid_tiling(0, 0, 1, 1, 3, 3);
    REQUIRE(t.size() == 8);
    double total = 0;
    for (const auto& tri : t.triangles) total += clockwise_area(tri);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("degenerate inputs rejected") {
    CHECK_THROWS_AS(make_grid_tiling(0, 0, 1, 1, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_tiling(0, 0, 0, 1, 3, 3), std::invalid_argument);
  }
}

TEST_CASE("fold_count on identity and reflection warps") {
  Tiling t = make_grid_tiling(0, 0, 1, 1, 4, 5);
  const Eigen::MatrixX2d v = t.vertex_matrix();
  CHECK(fold_count(t, v) == 0);
  Eigen::MatrixX2d reflected = v;
  reflected.col(0) *= -1.0;
  CHECK(fold_count(t, reflected) == static_cast<int>(t.size()));

  Eigen::MatrixX2d bad(3, 2);
  CHECK_THROWS_AS(fold_count(t, bad), std::invalid_argument);
}

TEST_CASE("an explicit corner fold is detected by the per-triangle oracle") {
  Tiling t = make_grid_tiling(0, 0, 1, 1, 5, 5);
  Eigen::MatrixX2d v = t.vertex_matrix();
  // fold the top-right corner back over its neighbors
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    if (v(i, 0) == 1.0 && v(i, 1) == 1.0) v.row(i) << 0.3, 0.3;
  const int count = fold_count(t, v);
  CHECK(count > 0);
  // cross-check against the oracle per triangle
  const auto idx = t.vertex_indices();
  int oracle_count = 0;
  for (const auto& tri : idx) {
    if (oracle::shoelace_clockwise(v.row(tri[0]), v.row(tri[1]), v.row(tri[2])) < 0)
      ++oracle_count;
  }
  CHECK(count == oracle_count);
}

TEST_CASE("penalty h1") {
  Eigen::VectorXd pos(3);
  pos << 1.0, 0.5, 2.0;
  CHECK(penalty_h1(pos) == 0.0);
  Eigen::VectorXd one_neg(3);
  one_neg << 1.0, -1e-9, 2.0;
  CHECK(penalty_h1(one_neg) == 1.0);
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  CHECK(penalty_h1(zeros) == 0.0); // zero is not negative
}

TEST_CASE("h1 matches fold_count semantics on random warps") {
  Tiling t = make_grid_tiling(0, 0, 1, 1, 4, 4);
  const Eigen::MatrixX2d v = t.vertex_matrix();
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixX2d w = v;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      w(i, 0) += 0.4 * rng.normal();
      w(i, 1) += 0.4 * rng.normal();
    }
    const Eigen::VectorXd areas = warped_areas(t, w);
    const int fc = fold_count(areas);
    CHECK(penalty_h1(areas) == (fc > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("penalty h2 value and smoothness") {
  SUBCASE("zero on all areas >= epsilon") {
    Eigen::VectorXd a(4);
    a << 1.0, 2.0, 1.0, 1.5;
    CHECK(penalty_h2(a, 1.0) == 0.0);
  }
  SUBCASE("single triangle at w = 0, eps = 1 equals (log 2)^2") {
    Eigen::VectorXd a(1);
    a << 0.0;
    const double expect = std::log(2.0) * std::log(2.0);
    CHECK(penalty_h2(a, 1.0) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("derivative vanishes at w = eps and matches finite differences") {
    const double eps = 0.7;
    for (double w : {-eps, 0.0, eps / 2, eps, 2 * eps}) {
      Eigen::VectorXd a(3);
      a << eps, w, eps; // others held at eps
      const Eigen::VectorXd g = penalty_h2_gradient(a, eps);
      auto f = [&](double wl) {
        Eigen::VectorXd b = a;
        b[1] = wl;
        return penalty_h2(b, eps);
      };
      const double h = 1e-6;
      const double fd = (f(w + h) - f(w - h)) / (2 * h);
      CHECK(g[1] == doctest::Approx(fd).epsilon(1e-5));
      // second difference stays bounded through the kink
      const double sd = (f(w + h) - 2 * f(w) + f(w - h)) / (h * h);
      CHECK(std::isfinite(sd));
    }
    Eigen::VectorXd at_eps(1);
    at_eps << eps;
    CHECK(penalty_h2_gradient(at_eps, eps)[0] == 0.0);
  }
  SUBCASE("non-increasing in each coordinate, zero on [eps, inf)") {
    const double eps = 0.5;
    double prev = std::numeric_limits<double>::infinity();
    for (double w = -3.0; w <= 3.0; w += 0.05) {
      Eigen::VectorXd a(1);
      a << w;
      const double v = penalty_h2(a, eps);
      CHECK(v <= prev + 1e-15);
      if (w >= eps) CHECK(v == 0.0);
      prev = v;
    }
  }
  SUBCASE("epsilon must be positive") {
    Eigen::VectorXd a(1);
    a << 1.0;
    CHECK_THROWS_AS(penalty_h2(a, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(penalty_h2(a, -1.0), std::invalid_argument);
  }
}

TEST_CASE("fold_penalty_term composes delta and h") {
  Eigen::VectorXd folded(2);
  folded << 0.5, -0.1;
  FoldPenaltyConfig strict{FoldPenaltyKind::strict, 1e6, 0.1};
  const auto sv = fold_penalty_term(strict, folded);
  CHECK(sv.value == doctest::Approx(1e6).epsilon(0));
  CHECK_FALSE(sv.differentiable);

  Eigen::VectorXd fine(2);
  fine << 1.0, 2.0;
  FoldPenaltyConfig near{FoldPenaltyKind::near, 1e6, 1.0};
  CHECK(fold_penalty_term(near, fine).value == 0.0);
  CHECK(fold_penalty_term(near, fine).differentiable);

  Eigen::VectorXd single(1);
  single << 0.0;
  const double expect = 1e6 * std::log(2.0) * std::log(2.0);
  CHECK(fold_penalty_term(near, single).value == doctest::Approx(expect).epsilon(1e-12));

  FoldPenaltyConfig bad{FoldPenaltyKind::near, -1.0, 1.0};
  CHECK_THROWS_AS(fold_penalty_term(bad, fine), std::invalid_argument);
}

TEST_CASE("inverse-area penalty is a barrier for nonpositive areas") {
  Eigen::VectorXd a(2);
  a << 0.05, 0.5;
  const double eps = 0.1;
  CHECK(penalty_inverse_area(a, eps) == doctest::Approx(1.0 / 0.05 - 10.0));
  a << -0.1, 0.5;
  CHECK(std::isinf(penalty_inverse_area(a, eps)));
}

TEST_CASE("tiling JSON round trip") {
  Tiling t = make_grid_tiling(-1, 2, 3, 5, 4, 3);
  const std::string js = t.to_json();
  Tiling back = Tiling::from_json(js);
  REQUIRE(back.size() == t.size());
  REQUIRE(back.grid.has_value());
  CHECK(back.grid->nx == 4);
  CHECK(back.grid->ny == 3);
  CHECK(back.grid->dx == doctest::Approx(t.grid->dx).epsilon(0));
  for (std::size_t l = 0; l < t.size(); ++l)
    for (int k = 0; k < 3; ++k)
      CHECK((back.triangles[l].v[k] - t.triangles[l].v[k]).norm() == 0.0);
}
