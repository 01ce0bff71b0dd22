// JSON encodings of curve specifications and grading policies.
#pragma once

#include "json.hpp"
#include "nlex/geometry.hpp"

namespace nlex {

using Json = nlohmann::json;

// {"kind": "circle" | "ellipse" | "star" | "polygon" | "unit_square", ...};
// see README for the field list. Throws ConfigError on malformed input.
CurveSpec curve_from_json(const Json& j);
Json curve_to_json(const CurveSpec& c);

// {"kind": "uniform" | "dyadic", "cutoff", "corner_levels", "max_panel_length"}.
// `gamma` fills the grading scale.
GradingPolicy grading_from_json(const Json& j, double gamma);
Json grading_to_json(const GradingPolicy& g);

Point point_from_json(const Json& j);
Json point_to_json(const Point& p);

}  // namespace nlex
