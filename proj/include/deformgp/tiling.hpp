#ifndef DEFORMGP_TILING_HPP
#define DEFORMGP_TILING_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace deformgp {

using Point2 = Eigen::Vector2d;

// Triangle with vertices stored in clockwise order; the reference
// configuration must have strictly positive clockwise area.
struct Triangle {
  std::array<Point2, 3> v;
};

struct GridSpec {
  double x0 = 0, y0 = 0, dx = 0, dy = 0;
  int nx = 0, ny = 0; // vertex counts per axis
};

// Triangular tiling of the study domain. Grid-derived tilings keep their
// grid spec so warped-grid geometry can be exported later.
struct Tiling {
  std::vector<Triangle> triangles;
  std::optional<GridSpec> grid;

  std::size_t size() const { return triangles.size(); }

  // all distinct vertices in a fixed order, plus per-triangle vertex indices
  // into that list (shared corners are deduplicated for grid tilings)
  Eigen::MatrixX2d vertex_matrix() const;
  std::vector<std::array<int, 3>> vertex_indices() const;

  std::string to_json() const;
  static Tiling from_json(const std::string& text);
};

enum class FoldPenaltyKind { strict, near, inverse_area };

struct FoldPenaltyConfig {
  FoldPenaltyKind kind = FoldPenaltyKind::near;
  double delta = 1e6;   // penalty weight
  double epsilon = 0.1; // area tolerance, same units as triangle area
};

struct FoldPenaltyValue {
  double value = 0.0;        // delta * h(areas)
  bool differentiable = true; // false for the strict indicator penalty
};

// Signed clockwise area of a (possibly warped) triangle, positive iff the
// reference clockwise orientation is preserved.
double clockwise_area(const Point2& v1, const Point2& v2, const Point2& v3);
double clockwise_area(const Triangle& t);

// Split an axis-aligned rectangle into 2*(nx-1)*(ny-1) clockwise triangles,
// cells cut along the lower-left to upper-right diagonal.
Tiling make_grid_tiling(double x0, double y0, double x1, double y1, int nx, int ny);

// Clockwise areas of each tiling triangle after mapping its vertices through
// a warp; warped rows follow vertex_matrix() order.
Eigen::VectorXd warped_areas(const Tiling& tiling, const Eigen::MatrixX2d& warped_vertices);

int fold_count(const Eigen::VectorXd& areas);
int fold_count(const Tiling& tiling, const Eigen::MatrixX2d& warped_vertices);

// h1: indicator that any area is negative (zero areas do not count as folds)
double penalty_h1(const Eigen::VectorXd& areas);

// h2: [log(1 + (1/eps) * sum_l max(eps - w_l, 0))]^2, zero iff all w_l >= eps
double penalty_h2(const Eigen::VectorXd& areas, double epsilon);

// dh2/dw_l; zero for w_l >= eps, and -> 0 as w_l -> eps from below
Eigen::VectorXd penalty_h2_gradient(const Eigen::VectorXd& areas, double epsilon);

// sum_l max(1/w_l - 1/eps, 0); +inf when any w_l <= 0
double penalty_inverse_area(const Eigen::VectorXd& areas, double epsilon);

FoldPenaltyValue fold_penalty_term(const FoldPenaltyConfig& config,
                                   const Eigen::VectorXd& areas);

} // namespace deformgp

#endif
