// Nystrom discretizations of the Yukawa layer operators on a BoundaryMesh.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlex/geometry.hpp"

namespace nlex {

// Which domain's outward normal an operator uses. interior = Omega_1 (the
// region enclosed by the mesh), exterior = Omega_0.
enum class Side { interior, exterior };

inline double side_sign(Side s) { return s == Side::interior ? 1.0 : -1.0; }

enum class Convention { density_to_values, values_to_values };

struct BoundaryOperator {
  Mat matrix;
  Convention convention = Convention::density_to_values;
  double gamma = 0.0;
  std::uint64_t row_mesh = 0;  // BoundaryMesh::hash()
  std::uint64_t col_mesh = 0;
  std::string name;

  Vec apply(const Vec& x) const { return matrix * x; }
  Eigen::Index rows() const { return matrix.rows(); }
};

struct AssemblyOptions {
  // Entries with |x - y| > truncation * gamma are dropped; <= 0 keeps all.
  double truncation = 40.0;
  // Source panels closer than max(near_factor * gamma, panel length) get
  // adaptive product integration.
  double near_factor = 6.0;
};

// V, K' and K sharing one kernel sweep. K' uses the target normal, K the
// source normal; both with the interior (Omega_1) orientation.
struct LayerOperators {
  BoundaryOperator V;
  BoundaryOperator Kp;
  BoundaryOperator K;
};

LayerOperators assemble_layers(const BoundaryMesh& mesh, double gamma,
                               const AssemblyOptions& opt = {});

BoundaryOperator assemble_single_layer(const BoundaryMesh& mesh, double gamma,
                                       const AssemblyOptions& opt = {});

// K' such that the normal derivative of the single-layer potential, taken from
// inside the chosen side, is (I/2 + K') phi.
BoundaryOperator assemble_adjoint_double_layer(const BoundaryMesh& mesh, Side normal_of, double gamma,
                                               const AssemblyOptions& opt = {});

// Double layer with the source normal of the chosen side (principal value).
BoundaryOperator assemble_double_layer(const BoundaryMesh& mesh, Side normal_of, double gamma,
                                       const AssemblyOptions& opt = {});

BoundaryOperator assemble_mass(const BoundaryMesh& mesh);

// Cross-mesh block: rows are the nodes of `target` with normals of side
// `target_side`, columns are densities on `source`. Returns the single layer
// and the adjoint double layer (target normal). Works when the two curves
// share pieces, e.g. interfaces of a partition.
struct CrossLayer {
  Mat V;
  Mat Kp;
};
CrossLayer assemble_cross(const BoundaryMesh& target, Side target_side, const BoundaryMesh& source,
                          double gamma, const AssemblyOptions& opt = {});
// Same, with source_node[i] the index of the source node coinciding with
// target node i (or -1). Coincident rows then use same-piece differences.
CrossLayer assemble_cross(const BoundaryMesh& target, Side target_side, const BoundaryMesh& source,
                          double gamma, const std::vector<int>& source_node, const AssemblyOptions& opt = {});

// Potential evaluation: (Psi phi)(x) = int G(x - y) phi(y) ds(y) at points
// away from the curve.
Vec single_layer_potential(const BoundaryMesh& mesh, const Vec& density, double gamma,
                           const std::vector<Point>& points);

// Binary matrix (column-major doubles) plus a JSON sidecar at path + ".json".
void write_operator(const BoundaryOperator& op, const std::string& path);
BoundaryOperator read_operator(const std::string& path);

}  // namespace nlex
