#include "doctest.h"

#include <sstream>

#include "nlex/geometry.hpp"
#include "nlex/io.hpp"

using namespace nlex;

TEST_SUITE("geometry") {

TEST_CASE("unit circle weights sum to the circumference") {
  BoundaryMesh m = build_mesh(CurveSpec::circle(1.0), 128, GradingPolicy::uniform());
  CHECK(m.size() == 128);
  CHECK(std::abs(m.weights().sum() - 2.0 * kPi) <= 1e-10 * 2.0 * kPi);
  CHECK(std::abs(m.length() - 2.0 * kPi) <= 1e-12);
}

TEST_CASE("unit circle normals and curvature") {
  BoundaryMesh m = build_mesh(CurveSpec::circle(1.0), 128, GradingPolicy::uniform());
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Point& x = m.nodes()[i];
    CHECK(std::abs(x.norm() - 1.0) <= 1e-14);
    CHECK((m.normals()[i] - x).norm() <= 1e-13);
    CHECK(std::abs(m.curvature()[i] - 1.0) <= 1e-12);
    if ((x - Point(1, 0)).norm() < (m.nodes()[nearest] - Point(1, 0)).norm()) nearest = i;
  }
  // Gauss nodes never sit exactly on (1, 0); the nearest one is within half a panel.
  CHECK((m.normals()[nearest] - Point(1, 0)).norm() <= 2.0 * kPi / 8.0);
  CHECK(m.signed_area() > 0.0);
}

TEST_CASE("weights converge to the arc length on an ellipse") {
  BoundaryMesh a = build_mesh(CurveSpec::ellipse(1.0, 0.6), 256, GradingPolicy::uniform());
  BoundaryMesh b = build_mesh(CurveSpec::ellipse(1.0, 0.6), 512, GradingPolicy::uniform());
  CHECK(std::abs(a.weights().sum() - b.weights().sum()) <= 1e-10 * b.weights().sum());
  // Ramanujan's second approximation is accurate to ~1e-8 here.
  const double p = 1.0, q = 0.6, h = (p - q) * (p - q) / ((p + q) * (p + q));
  const double ram = kPi * (p + q) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
  CHECK(std::abs(b.weights().sum() - ram) <= 1e-7);
}

TEST_CASE("unit square vertices and vertex distances") {
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 256, GradingPolicy::dyadic(0.1));
  CHECK(m.vertices().size() == 4);
  CHECK(m.curve().corners().size() == 4);
  for (const Corner& c : m.curve().corners()) CHECK(std::abs(c.interior_angle - kPi / 2) <= 1e-12);
  CHECK(std::abs(m.weights().sum() - 4.0) <= 1e-12);
  CHECK(std::abs(m.signed_area() - 1.0) <= 1e-12);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.vertex_dist()[i] > 0.0);
    CHECK(std::abs(m.normals()[i].norm() - 1.0) <= 1e-14);
  }
  CHECK(dist_to_vertices(m, Point(0.5, 0.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dist_to_vertices(m, Point(1.0, 1.0)) == 0.0);
  // Node nearest the midpoint of the bottom side.
  std::size_t mid = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if ((m.nodes()[i] - Point(0.5, 0)).norm() < (m.nodes()[mid] - Point(0.5, 0)).norm()) mid = i;
  CHECK(std::abs(m.vertex_dist()[mid] - 0.5) <= (m.nodes()[mid] - Point(0.5, 0)).norm() + 1e-14);
}

TEST_CASE("smooth curves have no vertices") {
  BoundaryMesh m = build_mesh(CurveSpec::ellipse(1.0, 0.6), 128, GradingPolicy::uniform());
  CHECK(std::isinf(dist_to_vertices(m, Point(0, 0))));
  CHECK(m.curve().smooth());
}

TEST_CASE("dyadic grading halves panels toward each vertex") {
  const double gamma = 0.05;
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 1024, GradingPolicy::dyadic(gamma));
  const auto& P = m.panels();
  double smallest = kInf;
  for (const Panel& p : P) smallest = std::min(smallest, p.length);
  CHECK(smallest <= gamma / 4 + 1e-14);
  // Neighbouring panels never differ by more than a factor of two.
  for (std::size_t k = 0; k + 1 < P.size(); ++k) {
    if (P[k].piece != P[k + 1].piece) continue;
    const double r = P[k].length / P[k + 1].length;
    CHECK(r >= 0.5 - 1e-12);
    CHECK(r <= 2.0 + 1e-12);
  }
}

TEST_CASE("invalid curves are rejected") {
  // Clockwise square.
  CHECK_THROWS_AS(build_mesh(CurveSpec::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), 64), GeometryError);
  // Bow tie.
  CHECK_THROWS_AS(build_mesh(CurveSpec::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), 64), GeometryError);
  // Sides that do not close up.
  std::vector<SideSpec> open = {SideSpec::line({0, 0}, {1, 0}), SideSpec::line({1, 0}, {1, 1}),
                                SideSpec::line({1, 1}, {0, 0.5})};
  CHECK_THROWS_AS(build_mesh(CurveSpec::polygon(open), 64), GeometryError);
}

TEST_CASE("curvilinear polygon with an arc side") {
  // Half disc: a straight diameter closed by a counterclockwise semicircle.
  std::vector<SideSpec> s = {SideSpec::line({-1, 0}, {1, 0}), SideSpec::arc({1, 0}, {-1, 0}, 1.0)};
  BoundaryMesh m = build_mesh(CurveSpec::polygon(s), 512, GradingPolicy::dyadic(0.1));
  CHECK(std::abs(m.length() - (2.0 + kPi)) <= 1e-12);
  CHECK(std::abs(m.signed_area() - kPi / 2) <= 1e-10);
  CHECK(m.vertices().size() == 2);
}

TEST_CASE("mesh hash identifies the discretization") {
  BoundaryMesh a = build_mesh(CurveSpec::circle(1.0), 128, GradingPolicy::uniform());
  BoundaryMesh b = build_mesh(CurveSpec::circle(1.0), 128, GradingPolicy::uniform());
  BoundaryMesh c = build_mesh(CurveSpec::circle(1.0), 256, GradingPolicy::uniform());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("curve and grading JSON round trip") {
  CurveSpec e = CurveSpec::ellipse(1.0, 0.6, Point(0.25, -0.5));
  CurveSpec r = curve_from_json(curve_to_json(e));
  CHECK(r.kind == CurveSpec::Kind::ellipse);
  CHECK(r.a == 1.0);
  CHECK(r.b == 0.6);
  CHECK(r.center == e.center);
  CurveSpec sq = curve_from_json(Json{{"kind", "unit_square"}});
  CHECK(sq.sides.size() == 4);
  CHECK_THROWS_AS(curve_from_json(Json{{"kind", "triangle"}}), ConfigError);
  GradingPolicy g = grading_from_json(Json{{"kind", "dyadic"}, {"corner_levels", 2}}, 0.05);
  CHECK(g.kind == GradingPolicy::Kind::dyadic);
  CHECK(g.corner_levels == 2);
  CHECK(g.gamma == 0.05);
}

TEST_CASE("mesh CSV export") {
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 64, GradingPolicy::uniform());
  std::ostringstream s;
  write_mesh_csv(m, s);
  std::istringstream in(s.str());
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "x,y,nx,ny,w,vertex_dist");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == m.size());
}

}  // TEST_SUITE
