#include "nlex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nlex/quadrature.hpp"

namespace nlex {

namespace {

double cross(const Point& u, const Point& v) { return u.x() * v.y() - u.y() * v.x(); }

// Composite 16-point Gauss-Legendre of f over [a, b] with m sub-intervals.
template <class F>
double integrate(F&& f, double a, double b, int m = 32) {
  const PanelRule& r = panel_rule();
  double h = (b - a) / m, sum = 0.0;
  for (int s = 0; s < m; ++s) {
    double mid = a + (s + 0.5) * h;
    for (int k = 0; k < kPanelOrder; ++k) sum += r.w[k] * f(mid + 0.5 * h * r.x[k]);
  }
  return 0.5 * h * sum;
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  auto orient = [](const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); };
  double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

std::string fmt_point(const Point& p) {
  std::ostringstream os;
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

}  // namespace

SideSpec SideSpec::line(Point a, Point b) {
  SideSpec s;
  s.kind = SideKind::line;
  s.start = a;
  s.end = b;
  return s;
}

SideSpec SideSpec::arc(Point a, Point b, double bulge) {
  SideSpec s = line(a, b);
  s.kind = SideKind::arc;
  s.bulge = bulge;
  return s;
}

SideSpec SideSpec::hermite(Point a, Point b, Point ta, Point tb) {
  SideSpec s = line(a, b);
  s.kind = SideKind::hermite;
  s.tangent_start = ta;
  s.tangent_end = tb;
  return s;
}

CurveSpec CurveSpec::circle(double R, Point c) {
  CurveSpec s;
  s.kind = Kind::circle;
  s.radius = R;
  s.center = c;
  return s;
}

CurveSpec CurveSpec::ellipse(double a, double b, Point c) {
  CurveSpec s;
  s.kind = Kind::ellipse;
  s.a = a;
  s.b = b;
  s.center = c;
  return s;
}

CurveSpec CurveSpec::star(double R, double amplitude, int lobes, Point c) {
  CurveSpec s;
  s.kind = Kind::star;
  s.radius = R;
  s.amplitude = amplitude;
  s.lobes = lobes;
  s.center = c;
  return s;
}

CurveSpec CurveSpec::polygon(const std::vector<Point>& vertices) {
  std::vector<SideSpec> sides;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    sides.push_back(SideSpec::line(vertices[i], vertices[(i + 1) % vertices.size()]));
  return polygon(std::move(sides));
}

CurveSpec CurveSpec::polygon(std::vector<SideSpec> sides) {
  CurveSpec s;
  s.kind = Kind::polygon;
  s.sides = std::move(sides);
  return s;
}

CurveSpec CurveSpec::unit_square() {
  return polygon({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

// ---------------------------------------------------------------- Arc

Arc Arc::from_side(const SideSpec& s) {
  Arc a;
  a.p0_ = s.start;
  a.p1_ = s.end;
  switch (s.kind) {
    case SideKind::line:
      a.kind_ = Kind::line;
      break;
    case SideKind::arc: {
      if (s.bulge == 0.0) {
        a.kind_ = Kind::line;
        break;
      }
      a.kind_ = Kind::circular;
      Point d = s.end - s.start;
      double c = d.norm();
      Point left(-d.y() / c, d.x() / c);
      double beta = s.bulge;
      a.c_ = 0.5 * (s.start + s.end) + left * (0.25 * c * (1.0 - beta * beta) / beta);
      a.r_ = 0.25 * c * (1.0 + beta * beta) / std::abs(beta);
      Point q = s.start - a.c_;
      a.theta0_ = std::atan2(q.y(), q.x());
      a.sweep_ = 4.0 * std::atan(beta);
      break;
    }
    case SideKind::hermite:
      a.kind_ = Kind::hermite;
      a.h1_ = s.tangent_start;
      a.h2_ = 3.0 * (s.end - s.start) - 2.0 * s.tangent_start - s.tangent_end;
      a.h3_ = 2.0 * (s.start - s.end) + s.tangent_start + s.tangent_end;
      break;
  }
  return a;
}

Arc Arc::closed(const CurveSpec& spec) {
  Arc a;
  a.c_ = spec.center;
  a.theta0_ = 0.0;
  a.sweep_ = 2.0 * kPi;
  switch (spec.kind) {
    case CurveSpec::Kind::circle:
      a.kind_ = Kind::circle;
      a.r_ = spec.radius;
      break;
    case CurveSpec::Kind::ellipse:
      a.kind_ = Kind::ellipse;
      a.a_ = spec.a;
      a.b_ = spec.b;
      break;
    case CurveSpec::Kind::star:
      a.kind_ = Kind::star;
      a.r_ = spec.radius;
      a.eps_ = spec.amplitude;
      a.lobes_ = spec.lobes;
      break;
    default:
      throw GeometryError("Arc::closed: polygon spec has no single closed piece");
  }
  return a;
}

Point Arc::point(double t) const {
  double th = theta0_ + sweep_ * t;
  switch (kind_) {
    case Kind::circle:
    case Kind::circular:
      return c_ + r_ * Point(std::cos(th), std::sin(th));
    case Kind::ellipse:
      return c_ + Point(a_ * std::cos(th), b_ * std::sin(th));
    case Kind::star: {
      double rho = r_ * (1.0 + eps_ * std::cos(lobes_ * th));
      return c_ + rho * Point(std::cos(th), std::sin(th));
    }
    case Kind::line:
      return p0_ + t * (p1_ - p0_);
    case Kind::hermite:
      return p0_ + t * (h1_ + t * (h2_ + t * h3_));
  }
  return Point::Zero();
}

Point Arc::deriv(double t) const {
  double th = theta0_ + sweep_ * t, w = sweep_;
  switch (kind_) {
    case Kind::circle:
    case Kind::circular:
      return r_ * w * Point(-std::sin(th), std::cos(th));
    case Kind::ellipse:
      return w * Point(-a_ * std::sin(th), b_ * std::cos(th));
    case Kind::star: {
      double k = lobes_;
      double rho = r_ * (1.0 + eps_ * std::cos(k * th));
      double drho = -r_ * eps_ * k * std::sin(k * th);
      Point e(std::cos(th), std::sin(th)), f(-std::sin(th), std::cos(th));
      return w * (drho * e + rho * f);
    }
    case Kind::line:
      return p1_ - p0_;
    case Kind::hermite:
      return h1_ + t * (2.0 * h2_ + 3.0 * t * h3_);
  }
  return Point::Zero();
}

Point Arc::deriv2(double t) const {
  double th = theta0_ + sweep_ * t, w = sweep_;
  switch (kind_) {
    case Kind::circle:
    case Kind::circular:
      return -r_ * w * w * Point(std::cos(th), std::sin(th));
    case Kind::ellipse:
      return -w * w * Point(a_ * std::cos(th), b_ * std::sin(th));
    case Kind::star: {
      double k = lobes_;
      double rho = r_ * (1.0 + eps_ * std::cos(k * th));
      double drho = -r_ * eps_ * k * std::sin(k * th);
      double d2rho = -r_ * eps_ * k * k * std::cos(k * th);
      Point e(std::cos(th), std::sin(th)), f(-std::sin(th), std::cos(th));
      return w * w * ((d2rho - rho) * e + 2.0 * drho * f);
    }
    case Kind::line:
      return Point::Zero();
    case Kind::hermite:
      return 2.0 * h2_ + 6.0 * t * h3_;
  }
  return Point::Zero();
}

Point Arc::chord(double ta, double tb) const {
  double tha = theta0_ + sweep_ * ta, thb = theta0_ + sweep_ * tb;
  double m = 0.5 * (tha + thb), s = std::sin(0.5 * sweep_ * (tb - ta));
  // cos(thb) - cos(tha), sin(thb) - sin(tha)
  double dc = -2.0 * std::sin(m) * s, ds = 2.0 * std::cos(m) * s;
  switch (kind_) {
    case Kind::circle:
    case Kind::circular:
      return r_ * Point(dc, ds);
    case Kind::ellipse:
      return Point(a_ * dc, b_ * ds);
    case Kind::star: {
      double k = lobes_;
      double rho_b = r_ * (1.0 + eps_ * std::cos(k * thb));
      double drho = -2.0 * r_ * eps_ * std::sin(k * m) * std::sin(0.5 * k * sweep_ * (tb - ta));
      return Point(rho_b * dc + drho * std::cos(tha), rho_b * ds + drho * std::sin(tha));
    }
    case Kind::line:
      return (tb - ta) * (p1_ - p0_);
    case Kind::hermite: {
      double d = tb - ta;
      return d * (h1_ + (tb + ta) * h2_ + (tb * tb + tb * ta + ta * ta) * h3_);
    }
  }
  return Point::Zero();
}

double Arc::curvature(double t) const {
  Point d1 = deriv(t), d2 = deriv2(t);
  double sp = d1.norm();
  return cross(d1, d2) / (sp * sp * sp);
}

double Arc::length(double ta, double tb) const {
  switch (kind_) {
    case Kind::line:
      return (tb - ta) * (p1_ - p0_).norm();
    case Kind::circle:
    case Kind::circular:
      return (tb - ta) * r_ * std::abs(sweep_);
    default:
      return integrate([this](double t) { return speed(t); }, ta, tb);
  }
}

double Arc::param_at_length(double s) const {
  double total = length();
  if (kind_ == Kind::line || kind_ == Kind::circle || kind_ == Kind::circular) return s / total;
  double t = std::clamp(s / total, 0.0, 1.0);
  for (int it = 0; it < 60; ++it) {
    double f = length(0.0, t) - s;
    double dt = f / speed(t);
    t = std::clamp(t - dt, 0.0, 1.0);
    if (std::abs(dt) < 1e-15) break;
  }
  return t;
}

// -------------------------------------------------------------- Curve

Curve::Curve(const CurveSpec& spec) : spec_(spec) {
  using K = CurveSpec::Kind;
  if (spec.kind != K::polygon) {
    if (spec.kind == K::circle && !(spec.radius > 0))
      throw GeometryError("circle: radius must be positive");
    if (spec.kind == K::ellipse && !(spec.a > 0 && spec.b > 0))
      throw GeometryError("ellipse: semi-axes must be positive");
    if (spec.kind == K::star) {
      if (!(spec.radius > 0)) throw GeometryError("star: radius must be positive");
      if (!(spec.amplitude >= 0 && spec.amplitude < 1))
        throw GeometryError("star: amplitude must lie in [0, 1) for a simple curve");
      if (spec.lobes < 0) throw GeometryError("star: lobes must be non-negative");
    }
    pieces_.push_back(Arc::closed(spec));
  } else {
    const auto& sides = spec.sides;
    if (sides.size() < 2) throw GeometryError("polygon: need at least two sides");
    double scale = 0.0;
    for (const auto& s : sides) scale = std::max({scale, s.start.norm(), s.end.norm(), 1.0});
    for (std::size_t i = 0; i < sides.size(); ++i) {
      const auto& s = sides[i];
      const auto& next = sides[(i + 1) % sides.size()];
      if ((s.end - next.start).norm() > 1e-12 * scale)
        throw GeometryError("polygon: side " + std::to_string(i) + " ends at " + fmt_point(s.end) +
                            " but side " + std::to_string((i + 1) % sides.size()) +
                            " starts at " + fmt_point(next.start) + " (curve not closed)");
      if ((s.end - s.start).norm() <= 1e-14 * scale)
        throw GeometryError("polygon: side " + std::to_string(i) + " is degenerate");
      pieces_.push_back(Arc::from_side(s));
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const Arc& arc = pieces_[i];
      for (int k = 0; k <= 64; ++k)
        if (!(arc.speed(k / 64.0) > 1e-14 * scale))
          throw GeometryError("polygon: side " + std::to_string(i) + " has a singular parameterization");
    }
    const std::size_t ns = pieces_.size();
    for (std::size_t i = 0; i < ns; ++i) {
      const Arc& prev = pieces_[(i + ns - 1) % ns];
      Point u = prev.deriv(1.0).normalized(), v = pieces_[i].deriv(0.0).normalized();
      double turn = std::atan2(cross(u, v), u.dot(v));
      if (std::abs(turn) > kPi - 1e-10)
        throw GeometryError("polygon: cusp at " + fmt_point(spec.sides[i].start) +
                            " (interior angle 0 or 2 pi)");
      Corner c;
      c.p = spec.sides[i].start;
      c.interior_angle = kPi - turn;
      c.is_vertex = std::abs(turn) > 1e-10;
      corners_.push_back(c);
    }
  }

  // Simplicity: no crossings between non-adjacent chords of a fine sampling.
  std::vector<Point> poly;
  const int per = pieces_.size() == 1 ? 1024 : 96;
  for (const Arc& a : pieces_)
    for (int k = 0; k < per; ++k) poly.push_back(a.point(double(k) / per));
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]))
        throw GeometryError("curve is not simple: self-intersection near " + fmt_point(poly[i]));
    }
  }
  if (!(signed_area() > 0))
    throw GeometryError("curve must be counterclockwise (signed area " +
                        std::to_string(signed_area()) + ")");
}

std::vector<Point> Curve::vertices() const {
  std::vector<Point> v;
  for (const auto& c : corners_)
    if (c.is_vertex) v.push_back(c.p);
  return v;
}

double Curve::length() const {
  double L = 0.0;
  for (const Arc& a : pieces_) L += a.length();
  return L;
}

double Curve::signed_area() const {
  double A = 0.0;
  for (const Arc& a : pieces_)
    A += integrate([&a](double t) { return 0.5 * cross(a.point(t), a.deriv(t)); }, 0.0, 1.0);
  return A;
}

// -------------------------------------------------------------- Mesh

GradingPolicy GradingPolicy::uniform(double max_len) {
  GradingPolicy g;
  g.kind = Kind::uniform;
  g.max_panel_length = max_len;
  return g;
}

GradingPolicy GradingPolicy::dyadic(double gamma, double max_len) {
  GradingPolicy g;
  g.kind = Kind::dyadic;
  g.gamma = gamma;
  g.max_panel_length = max_len;
  return g;
}

namespace {

// Arc-length breakpoints of one side: dyadic from both ends, uniform between.
std::vector<double> side_breaks(double L, double h, double cutoff, bool dyadic, int levels) {
  std::vector<double> left{0.0};
  if (dyadic && cutoff < 0.5 * L) {
    for (int k = levels; k > 0; --k) left.push_back(std::ldexp(cutoff, -k));
    left.push_back(cutoff);
    double len = cutoff;
    while (len <= h * (1 + 1e-12) && left.back() + len <= 0.5 * L * (1 + 1e-12)) {
      left.push_back(left.back() + len);
      len *= 2.0;
    }
  }
  double a = left.back(), b = L - a;
  std::vector<double> br = left;
  double mid = b - a;
  if (mid > 1e-12 * L) {
    int m = std::max(1, int(std::ceil(mid / h - 1e-9)));
    for (int k = 1; k < m; ++k) br.push_back(a + mid * k / m);
  }
  for (std::size_t k = left.size(); k-- > 0;) {
    double v = L - left[k];
    if (v > br.back() + 1e-12 * L) br.push_back(v);
  }
  return br;
}

}  // namespace

BoundaryMesh build_mesh(const CurveSpec& spec, std::size_t n, const GradingPolicy& grading) {
  if (n < 16) throw DomainError("build_mesh: need n >= 16 nodes");
  auto curve = std::make_shared<const Curve>(spec);
  std::vector<Panel> panels;

  if (curve->smooth()) {
    const Arc& arc = curve->pieces()[0];
    double L = arc.length();
    double h = grading.max_panel_length > 0 ? grading.max_panel_length : L * kPanelOrder / n;
    int P = std::max(1, int(std::ceil(L / h - 1e-9)));
    for (int p = 0; p < P; ++p) {
      double t0 = p == 0 ? 0.0 : arc.param_at_length(L * p / P);
      double t1 = p == P - 1 ? 1.0 : arc.param_at_length(L * (p + 1) / P);
      panels.push_back({0, t0, t1, 0, 0.0});
    }
  } else {
    const auto& pieces = curve->pieces();
    std::vector<double> lens;
    for (const Arc& a : pieces) lens.push_back(a.length());
    // Default corner panel: below gamma / 4 and at least three doublings
    // under the uniform panel length.
    auto cutoff = [&](std::size_t i, double h) {
      if (grading.cutoff > 0) return grading.cutoff;
      double c = h / 8.0;
      if (grading.gamma > 0) c = std::min(c, grading.gamma / 4.0);
      return std::max(c, lens[i] * std::ldexp(1.0, -12));
    };
    const bool dyadic = grading.kind == GradingPolicy::Kind::dyadic;
    auto count = [&](double h) {
      std::size_t N = 0;
      for (std::size_t i = 0; i < pieces.size(); ++i)
        N += (side_breaks(lens[i], h, cutoff(i, h), dyadic, grading.corner_levels).size() - 1) * kPanelOrder;
      return N;
    };
    double h = grading.max_panel_length;
    if (h <= 0) {
      h = *std::max_element(lens.begin(), lens.end());
      while (count(h) < n) h *= 0.99;
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      auto br = side_breaks(lens[i], h, cutoff(i, h), dyadic, grading.corner_levels);
      std::vector<double> ts(br.size());
      for (std::size_t k = 0; k < br.size(); ++k) ts[k] = pieces[i].param_at_length(br[k]);
      ts.front() = 0.0;
      ts.back() = 1.0;
      for (std::size_t k = 0; k + 1 < ts.size(); ++k) panels.push_back({int(i), ts[k], ts[k + 1], 0, 0.0});
    }
  }
  return BoundaryMesh(std::move(curve), std::move(panels));
}

BoundaryMesh::BoundaryMesh(std::shared_ptr<const Curve> curve, std::vector<Panel> panels)
    : curve_(std::move(curve)), panels_(std::move(panels)) {
  const PanelRule& r = panel_rule();
  const std::size_t n = panels_.size() * kPanelOrder;
  nodes_.resize(n);
  normals_.resize(n);
  weights_.resize(n);
  curvature_.resize(n);
  vertex_dist_.resize(n);
  arclength_.resize(n);
  panel_index_.resize(n);
  params_.resize(n);
  vertices_ = curve_->vertices();

  double s0 = 0.0;
  for (std::size_t p = 0; p < panels_.size(); ++p) {
    Panel& pan = panels_[p];
    const Arc& arc = curve_->pieces()[pan.piece];
    pan.first = int(p * kPanelOrder);
    pan.length = arc.length(pan.t0, pan.t1);
    double mid = 0.5 * (pan.t0 + pan.t1), half = 0.5 * (pan.t1 - pan.t0);
    for (int k = 0; k < kPanelOrder; ++k) {
      std::size_t i = p * kPanelOrder + k;
      double t = mid + half * r.x[k];
      Point d = arc.deriv(t);
      double sp = d.norm();
      nodes_[i] = arc.point(t);
      normals_[i] = Point(d.y(), -d.x()) / sp;
      weights_[i] = half * r.w[k] * sp;
      curvature_[i] = arc.curvature(t);
      panel_index_[i] = int(p);
      params_[i] = t;
      arclength_[i] = s0 + arc.length(pan.t0, t);
      double vd = kInf;
      for (const Point& v : vertices_) vd = std::min(vd, (nodes_[i] - v).norm());
      vertex_dist_[i] = vd;
    }
    s0 += pan.length;
  }
  length_ = s0;
}

double BoundaryMesh::signed_area() const {
  double A = 0.0;
  for (std::size_t i = 0; i < size(); ++i) A += 0.5 * weights_[i] * nodes_[i].dot(normals_[i]);
  return A;
}

std::uint64_t BoundaryMesh::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) h = (h ^ c) * 1099511628211ull;
  };
  for (std::size_t i = 0; i < size(); ++i) {
    mix(nodes_[i].x());
    mix(nodes_[i].y());
    mix(weights_[i]);
  }
  return h;
}

double dist_to_vertices(const BoundaryMesh& mesh, const Point& x) {
  double d = kInf;
  for (const Point& v : mesh.vertices()) d = std::min(d, (x - v).norm());
  return d;
}

void write_mesh_csv(const BoundaryMesh& mesh, std::ostream& out) {
  out << "x,y,nx,ny,w,vertex_dist\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Point &p = mesh.nodes()[i], &nv = mesh.normals()[i];
    out << p.x() << ',' << p.y() << ',' << nv.x() << ',' << nv.y() << ',' << mesh.weights()[i] << ','
        << mesh.vertex_dist()[i] << '\n';
  }
}

}  // namespace nlex
