// Closed curves, curvilinear polygons and their panel discretizations.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "nlex/common.hpp"

namespace nlex {

enum class SideKind { line, arc, hermite };

// One side of a curvilinear polygon, parameterized over t in [0, 1].
struct SideSpec {
  SideKind kind = SideKind::line;
  Point start = Point::Zero();
  Point end = Point::Zero();
  // arc: tan(sweep / 4); positive bulge turns left (counterclockwise).
  double bulge = 0.0;
  // hermite: dp/dt at t = 0 and t = 1.
  Point tangent_start = Point::Zero();
  Point tangent_end = Point::Zero();

  static SideSpec line(Point a, Point b);
  static SideSpec arc(Point a, Point b, double bulge);
  static SideSpec hermite(Point a, Point b, Point ta, Point tb);
};

struct CurveSpec {
  enum class Kind { circle, ellipse, star, polygon };
  Kind kind = Kind::circle;
  Point center = Point::Zero();
  double radius = 1.0;     // circle, star
  double a = 1.0, b = 1.0; // ellipse semi-axes
  double amplitude = 0.0;  // star: r = R (1 + amplitude cos(lobes * theta))
  int lobes = 0;
  std::vector<SideSpec> sides;  // polygon

  static CurveSpec circle(double R, Point c = Point::Zero());
  static CurveSpec ellipse(double a, double b, Point c = Point::Zero());
  static CurveSpec star(double R, double amplitude, int lobes, Point c = Point::Zero());
  // Straight-sided polygon through the listed vertices (counterclockwise).
  static CurveSpec polygon(const std::vector<Point>& vertices);
  static CurveSpec polygon(std::vector<SideSpec> sides);
  static CurveSpec unit_square();
};

// A smooth parametric piece over t in [0, 1].
class Arc {
 public:
  enum class Kind { circle, ellipse, star, line, circular, hermite };

  static Arc from_side(const SideSpec& s);
  static Arc closed(const CurveSpec& spec);

  Kind kind() const { return kind_; }
  bool periodic() const { return kind_ == Kind::circle || kind_ == Kind::ellipse || kind_ == Kind::star; }

  Point point(double t) const;
  Point deriv(double t) const;
  Point deriv2(double t) const;
  // point(tb) - point(ta) without cancellation for close parameters.
  Point chord(double ta, double tb) const;
  double speed(double t) const { return deriv(t).norm(); }
  double curvature(double t) const;

  double length(double ta = 0.0, double tb = 1.0) const;
  double param_at_length(double s) const;

 private:
  Kind kind_ = Kind::line;
  Point c_ = Point::Zero();
  double r_ = 1.0, a_ = 1.0, b_ = 1.0, eps_ = 0.0;
  int lobes_ = 0;
  double theta0_ = 0.0, sweep_ = 2.0 * kPi;
  Point p0_ = Point::Zero(), p1_ = Point::Zero();
  Point h1_ = Point::Zero(), h2_ = Point::Zero(), h3_ = Point::Zero();
  double total_length_ = -1.0;
};

struct Corner {
  Point p;
  double interior_angle;  // in (0, 2 pi)
  bool is_vertex;         // interior angle differs from pi
};

// Validated closed curve: smooth (one periodic piece) or piecewise smooth.
class Curve {
 public:
  explicit Curve(const CurveSpec& spec);

  const CurveSpec& spec() const { return spec_; }
  const std::vector<Arc>& pieces() const { return pieces_; }
  // corners()[i] is the junction at the start of piece i (empty when smooth).
  const std::vector<Corner>& corners() const { return corners_; }
  std::vector<Point> vertices() const;
  bool smooth() const { return corners_.empty(); }
  double length() const;
  double signed_area() const;

 private:
  CurveSpec spec_;
  std::vector<Arc> pieces_;
  std::vector<Corner> corners_;
};

struct GradingPolicy {
  enum class Kind { uniform, dyadic };
  Kind kind = Kind::dyadic;
  // Smallest panel next to a side endpoint. 0 selects min(gamma/4, h/8) with h
  // the uniform panel length, floored at side * 2^-12.
  double cutoff = 0.0;
  // Extra geometric levels c/2, c/4, ... below the cutoff panel at each vertex.
  int corner_levels = 0;
  double gamma = 0.0;
  // Largest panel length. 0 derives it from the requested node count.
  double max_panel_length = 0.0;

  static GradingPolicy uniform(double max_len = 0.0);
  static GradingPolicy dyadic(double gamma, double max_len = 0.0);
};

struct Panel {
  int piece;
  double t0, t1;
  int first;      // index of the first node
  double length;  // arc length
};

// Immutable panel discretization with Gauss-Legendre nodes.
class BoundaryMesh {
 public:
  BoundaryMesh(std::shared_ptr<const Curve> curve, std::vector<Panel> panels);

  std::size_t size() const { return nodes_.size(); }
  const Curve& curve() const { return *curve_; }
  const std::shared_ptr<const Curve>& curve_ptr() const { return curve_; }
  const std::vector<Panel>& panels() const { return panels_; }

  const std::vector<Point>& nodes() const { return nodes_; }
  // Outward normals of the interior domain; the exterior uses the negation.
  const std::vector<Point>& normals() const { return normals_; }
  const Vec& weights() const { return weights_; }
  const Vec& curvature() const { return curvature_; }
  const Vec& vertex_dist() const { return vertex_dist_; }
  const Vec& arclength() const { return arclength_; }
  const std::vector<int>& panel_index() const { return panel_index_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  int piece_of(std::size_t i) const { return panels_[panel_index_[i]].piece; }
  double length() const { return length_; }
  double signed_area() const;
  std::uint64_t hash() const;

 private:
  std::shared_ptr<const Curve> curve_;
  std::vector<Panel> panels_;
  std::vector<Point> nodes_, normals_, vertices_;
  Vec weights_, curvature_, vertex_dist_, arclength_;
  std::vector<int> panel_index_;
  std::vector<double> params_;
  double length_ = 0.0;
};

BoundaryMesh build_mesh(const CurveSpec& spec, std::size_t n,
                        const GradingPolicy& grading = GradingPolicy{});

// +infinity when the mesh has no vertices.
double dist_to_vertices(const BoundaryMesh& mesh, const Point& x);

// Columns x, y, nx, ny, w, vertex_dist.
void write_mesh_csv(const BoundaryMesh& mesh, std::ostream& out);

}  // namespace nlex
