#include "deformgp/tiling.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace deformgp {

namespace {
void check_finite(const Point2& p, const char* who) {
  if (!p.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite coordinates");
}
} // namespace

double clockwise_area(const Point2& v1, const Point2& v2, const Point2& v3) {
  check_finite(v1, "clockwise_area");
  check_finite(v2, "clockwise_area");
  check_finite(v3, "clockwise_area");
  // (x21 x12 + x31 x22 + x11 x32 - x11 x22 - x21 x32 - x31 x12)/2 with
  // vertex i = (x_i1, x_i2); the negated shoelace formula, so triangles
  // keeping the reference clockwise ordering get positive area.
  return (v2.x() * v1.y() + v3.x() * v2.y() + v1.x() * v3.y() -
          v1.x() * v2.y() - v2.x() * v3.y() - v3.x() * v1.y()) / 2.0;
}

double clockwise_area(const Triangle& t) {
  return clockwise_area(t.v[0], t.v[1], t.v[2]);
}

Tiling make_grid_tiling(double x0, double y0, double x1, double y1, int nx, int ny) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("make_grid_tiling: nx and ny must be >= 2");
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("make_grid_tiling: degenerate rectangle");
  Tiling out;
  GridSpec g;
  g.x0 = x0; g.y0 = y0;
  g.dx = (x1 - x0) / (nx - 1);
  g.dy = (y1 - y0) / (ny - 1);
  g.nx = nx; g.ny = ny;
  out.grid = g;
  out.triangles.reserve(2 * (nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const Point2 ll(x0 + i * g.dx, y0 + j * g.dy);
      const Point2 lr(x0 + (i + 1) * g.dx, y0 + j * g.dy);
      const Point2 ul(x0 + i * g.dx, y0 + (j + 1) * g.dy);
      const Point2 ur(x0 + (i + 1) * g.dx, y0 + (j + 1) * g.dy);
      // both clockwise, split along the ll-ur diagonal
      out.triangles.push_back(Triangle{{ll, ul, ur}});
      out.triangles.push_back(Triangle{{ll, ur, lr}});
    }
  }
  for (const Triangle& t : out.triangles) {
    if (!(clockwise_area(t) > 0.0))
      throw std::invalid_argument("make_grid_tiling: non-clockwise reference triangle");
  }
  return out;
}

Eigen::MatrixX2d Tiling::vertex_matrix() const {
  std::map<std::pair<double, double>, int> seen;
  std::vector<Point2> verts;
  for (const Triangle& t : triangles) {
    for (const Point2& p : t.v) {
      auto key = std::make_pair(p.x(), p.y());
      if (seen.emplace(key, static_cast<int>(verts.size())).second) verts.push_back(p);
    }
  }
  Eigen::MatrixX2d m(static_cast<Eigen::Index>(verts.size()), 2);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = verts[static_cast<std::size_t>(i)];
  return m;
}

std::vector<std::array<int, 3>> Tiling::vertex_indices() const {
  std::map<std::pair<double, double>, int> seen;
  int next = 0;
  std::vector<std::array<int, 3>> idx(triangles.size());
  for (std::size_t l = 0; l < triangles.size(); ++l) {
    for (int k = 0; k < 3; ++k) {
      const Point2& p = triangles[l].v[static_cast<std::size_t>(k)];
      auto [it, inserted] = seen.emplace(std::make_pair(p.x(), p.y()), next);
      if (inserted) ++next;
      idx[l][static_cast<std::size_t>(k)] = it->second;
    }
  }
  return idx;
}

Eigen::VectorXd warped_areas(const Tiling& tiling, const Eigen::MatrixX2d& warped_vertices) {
  const auto idx = tiling.vertex_indices();
  int nv = 0;
  for (const auto& tri : idx)
    for (int k : tri) nv = std::max(nv, k + 1);
  if (warped_vertices.rows() != nv)
    throw std::invalid_argument("warped_areas: vertex count mismatch with tiling");
  Eigen::VectorXd areas(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t l = 0; l < idx.size(); ++l) {
    areas[static_cast<Eigen::Index>(l)] = clockwise_area(
        warped_vertices.row(idx[l][0]), warped_vertices.row(idx[l][1]),
        warped_vertices.row(idx[l][2]));
  }
  return areas;
}

int fold_count(const Eigen::VectorXd& areas) {
  if (!areas.allFinite()) throw std::invalid_argument("fold_count: non-finite areas");
  return static_cast<int>((areas.array() < 0.0).count());
}

int fold_count(const Tiling& tiling, const Eigen::MatrixX2d& warped_vertices) {
  return fold_count(warped_areas(tiling, warped_vertices));
}

double penalty_h1(const Eigen::VectorXd& areas) {
  return fold_count(areas) > 0 ? 1.0 : 0.0;
}

double penalty_h2(const Eigen::VectorXd& areas, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("penalty_h2: epsilon must be positive");
  if (!areas.allFinite()) throw std::invalid_argument("penalty_h2: non-finite areas");
  const double s = (epsilon - areas.array()).max(0.0).sum();
  const double lg = std::log1p(s / epsilon);
  return lg * lg;
}

Eigen::VectorXd penalty_h2_gradient(const Eigen::VectorXd& areas, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("penalty_h2_gradient: epsilon must be positive");
  const double s = (epsilon - areas.array()).max(0.0).sum();
  const double common = -2.0 * std::log1p(s / epsilon) / (epsilon + s);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(areas.size());
  for (Eigen::Index l = 0; l < areas.size(); ++l)
    if (areas[l] < epsilon) g[l] = common;
  return g;
}

double penalty_inverse_area(const Eigen::VectorXd& areas, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("penalty_inverse_area: epsilon must be positive");
  double s = 0.0;
  for (Eigen::Index l = 0; l < areas.size(); ++l) {
    if (areas[l] <= 0.0) return std::numeric_limits<double>::infinity();
    s += std::max(1.0 / areas[l] - 1.0 / epsilon, 0.0);
  }
  return s;
}

FoldPenaltyValue fold_penalty_term(const FoldPenaltyConfig& config,
                                   const Eigen::VectorXd& areas) {
  if (!(config.delta > 0.0))
    throw std::invalid_argument("fold_penalty_term: delta must be positive");
  FoldPenaltyValue out;
  switch (config.kind) {
    case FoldPenaltyKind::strict:
      out.value = config.delta * penalty_h1(areas);
      out.differentiable = false;
      break;
    case FoldPenaltyKind::near:
      out.value = config.delta * penalty_h2(areas, config.epsilon);
      break;
    case FoldPenaltyKind::inverse_area:
      out.value = config.delta * penalty_inverse_area(areas, config.epsilon);
      break;
  }
  return out;
}

std::string Tiling::to_json() const {
  nlohmann::json j;
  if (grid) {
    j["grid"] = {{"x0", grid->x0}, {"y0", grid->y0}, {"dx", grid->dx},
                 {"dy", grid->dy}, {"nx", grid->nx}, {"ny", grid->ny}};
  }
  nlohmann::json tris = nlohmann::json::array();
  for (const Triangle& t : triangles) {
    nlohmann::json tri = nlohmann::json::array();
    for (const Point2& p : t.v) tri.push_back({p.x(), p.y()});
    tris.push_back(tri);
  }
  j["triangles"] = tris;
  return j.dump();
}

Tiling Tiling::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Tiling out;
  if (j.contains("grid")) {
    GridSpec g;
    g.x0 = j["grid"]["x0"]; g.y0 = j["grid"]["y0"];
    g.dx = j["grid"]["dx"]; g.dy = j["grid"]["dy"];
    g.nx = j["grid"]["nx"]; g.ny = j["grid"]["ny"];
    out.grid = g;
  }
  for (const auto& tri : j.at("triangles")) {
    Triangle t;
    for (int k = 0; k < 3; ++k)
      t.v[static_cast<std::size_t>(k)] = Point2(tri[k][0], tri[k][1]);
    out.triangles.push_back(t);
  }
  if (out.triangles.empty()) throw std::invalid_argument("Tiling: empty triangle list");
  return out;
}

} // namespace deformgp
