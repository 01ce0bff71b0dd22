#include "nlex/io.hpp"

#include <string>

namespace nlex {

namespace {

template <class T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return field<T>(j, key, T{});
}

SideSpec side_from_json(const Json& j) {
  const auto kind = required<std::string>(j, "kind");
  Point a = point_from_json(j.at("start")), b = point_from_json(j.contains("end") ? j.at("end") : Json());
  if (kind == "line") return SideSpec::line(a, b);
  if (kind == "arc") return SideSpec::arc(a, b, required<double>(j, "bulge"));
  if (kind == "hermite")
    return SideSpec::hermite(a, b, point_from_json(j.at("tangent_start")), point_from_json(j.at("tangent_end")));
  throw ConfigError("unknown side kind '" + kind + "'");
}

Json side_to_json(const SideSpec& s) {
  Json j;
  j["start"] = point_to_json(s.start);
  j["end"] = point_to_json(s.end);
  switch (s.kind) {
    case SideKind::line: j["kind"] = "line"; break;
    case SideKind::arc:
      j["kind"] = "arc";
      j["bulge"] = s.bulge;
      break;
    case SideKind::hermite:
      j["kind"] = "hermite";
      j["tangent_start"] = point_to_json(s.tangent_start);
      j["tangent_end"] = point_to_json(s.tangent_end);
      break;
  }
  return j;
}

}  // namespace

Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("expected a point [x, y]");
  return Point(j[0].get<double>(), j[1].get<double>());
}

Json point_to_json(const Point& p) { return Json::array({p.x(), p.y()}); }

CurveSpec curve_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("curve must be a JSON object");
  const auto kind = required<std::string>(j, "kind");
  const Point c = j.contains("center") ? point_from_json(j.at("center")) : Point::Zero();
  if (kind == "circle") return CurveSpec::circle(required<double>(j, "radius"), c);
  if (kind == "ellipse") return CurveSpec::ellipse(required<double>(j, "a"), required<double>(j, "b"), c);
  if (kind == "star")
    return CurveSpec::star(required<double>(j, "radius"), required<double>(j, "amplitude"), required<int>(j, "lobes"),
                           c);
  if (kind == "unit_square") return CurveSpec::unit_square();
  if (kind == "polygon") {
    if (j.contains("vertices")) {
      std::vector<Point> v;
      for (const auto& p : j.at("vertices")) v.push_back(point_from_json(p));
      if (v.size() < 3) throw ConfigError("polygon needs at least 3 vertices");
      return CurveSpec::polygon(v);
    }
    if (!j.contains("sides") || !j.at("sides").is_array()) throw ConfigError("polygon needs 'vertices' or 'sides'");
    std::vector<SideSpec> sides;
    for (const auto& s : j.at("sides")) sides.push_back(side_from_json(s));
    return CurveSpec::polygon(std::move(sides));
  }
  throw ConfigError("unknown curve kind '" + kind + "'");
}

Json curve_to_json(const CurveSpec& c) {
  Json j;
  j["center"] = point_to_json(c.center);
  switch (c.kind) {
    case CurveSpec::Kind::circle:
      j["kind"] = "circle";
      j["radius"] = c.radius;
      break;
    case CurveSpec::Kind::ellipse:
      j["kind"] = "ellipse";
      j["a"] = c.a;
      j["b"] = c.b;
      break;
    case CurveSpec::Kind::star:
      j["kind"] = "star";
      j["radius"] = c.radius;
      j["amplitude"] = c.amplitude;
      j["lobes"] = c.lobes;
      break;
    case CurveSpec::Kind::polygon: {
      j.erase("center");
      j["kind"] = "polygon";
      Json sides = Json::array();
      for (const auto& s : c.sides) sides.push_back(side_to_json(s));
      j["sides"] = sides;
      break;
    }
  }
  return j;
}

GradingPolicy grading_from_json(const Json& j, double gamma) {
  GradingPolicy g;
  g.gamma = gamma;
  if (j.is_null()) return g;
  if (!j.is_object()) throw ConfigError("grading must be a JSON object");
  const auto kind = field<std::string>(j, "kind", "dyadic");
  if (kind == "uniform")
    g.kind = GradingPolicy::Kind::uniform;
  else if (kind == "dyadic")
    g.kind = GradingPolicy::Kind::dyadic;
  else
    throw ConfigError("unknown grading kind '" + kind + "'");
  g.cutoff = field<double>(j, "cutoff", 0.0);
  g.corner_levels = field<int>(j, "corner_levels", 0);
  g.max_panel_length = field<double>(j, "max_panel_length", 0.0);
  if (g.cutoff < 0 || g.corner_levels < 0 || g.max_panel_length < 0)
    throw ConfigError("grading fields must be non-negative");
  return g;
}

Json grading_to_json(const GradingPolicy& g) {
  return Json{{"kind", g.kind == GradingPolicy::Kind::uniform ? "uniform" : "dyadic"},
              {"cutoff", g.cutoff},
              {"corner_levels", g.corner_levels},
              {"max_panel_length", g.max_panel_length}};
}

}  // namespace nlex
