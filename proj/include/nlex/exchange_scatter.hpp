// Local and non-local exchange operators, scattering operators and the
// relaxed fixed-point iteration for the coercive transmission problem.
#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "nlex/dtn_spectral.hpp"
#include "nlex/io.hpp"
#include "nlex/rates.hpp"

namespace nlex {

using cdouble = std::complex<double>;

// One trace per subdomain boundary, all for the same gamma.
struct MultiTrace {
  std::vector<Vec> parts;
  double gamma = 0.0;

  std::size_t size() const { return parts.size(); }
  MultiTrace operator+(const MultiTrace& o) const;
  MultiTrace operator-(const MultiTrace& o) const;
  MultiTrace operator*(double a) const;
};

// Product norm sqrt(sum_k ||phi_k||^2_{H^s}) with one basis per part.
double multitrace_norm(const MultiTrace& phi, double s, const std::vector<const SpectralBasis*>& bases);

// ---------------------------------------------------------------- two domains
// Parts are (phi_0, phi_1): Omega_0 the exterior, Omega_1 the interior of one
// closed mesh.

// (phi_0, phi_1) -> -(phi_1, phi_0)
MultiTrace apply_pi0(const MultiTrace& phi);

// A = 2 K' with the Omega_0 normal, equal to -2 K' with the Omega_1 normal.
BoundaryOperator assemble_A(const BoundaryMesh& mesh, double gamma, const AssemblyOptions& opt = {});

// Pi_gamma = Pi_0 + [[-A, -A], [A, A]].
MultiTrace apply_pi_gamma(const MultiTrace& phi, const BoundaryOperator& A);
// The same operator as a dense 2n x 2n matrix.
Mat pi_gamma_matrix(const BoundaryOperator& A);
Mat pi0_matrix(Eigen::Index n);

// ||(Pi_gamma - Pi_0) phi||_{H^s} / ||phi||_{H^s}. bases = {Omega_0, Omega_1}.
// With M > 0 each part must lie in X_gamma(M) on `mesh`, else MembershipError.
double exchange_defect(const MultiTrace& phi, double s, const BoundaryOperator& A,
                       const std::vector<const SpectralBasis*>& bases, const BoundaryMesh* mesh = nullptr,
                       double M = 0.0);

// ---------------------------------------------------------------- partitions

struct Subdomain {
  BoundaryMesh mesh;
  Side side = Side::interior;  // exterior: the unbounded complement of the curve
};

// Subdomains whose boundary meshes coincide node-for-node on shared interfaces.
struct Partition {
  std::vector<Subdomain> parts;
  double gamma = 0.0;
  // Declared interface pairs (j, k); empty means "infer from node matching".
  std::vector<std::pair<int, int>> interfaces;
};

// {"gamma", "max_panel_length", "grading", "subdomains":
// [{"curve": CurveSpec, "side": "interior" | "exterior"}], "interfaces"}.
Partition partition_from_json(const Json& j);

// Built-in partitions used by tests and the CLI.
// Disc of radius R and its exterior.
Partition disc_partition(double R, double gamma, double max_panel_length);
// [-1,0]x[0,1], [0,1]x[0,1] and the exterior of [-1,1]x[0,1]; cross-points at
// (0,0) and (0,1). `corner_levels` refines every vertex, which helps at the
// reentrant corners of the exterior where Neumann traces are singular.
Partition crosspoint_partition(double gamma, double max_panel_length, int corner_levels = 0);

struct NodeMatch {
  int part = -1;
  int node = -1;
};

// For each node of each part, the coinciding node on another part. Throws
// GeometryError when some node has no partner within `tol` (non-matching
// interface discretizations).
std::vector<std::vector<NodeMatch>> match_interfaces(const Partition& p, double tol = 1e-12);

// Pi_gamma = Id - 2 tau_N Psi_gamma for a partition, with
//   (Pi phi)_j = -sum_{k != j} phi_k(matched) - 2 sum_k S*^{j}_k phi_k
// where S*^{j}_k is the principal-value adjoint double layer from the
// boundary of Omega_k to the boundary of Omega_j with the Omega_j normal.
class ExchangeOperator {
 public:
  enum class Kind { local, nonlocal };

  ExchangeOperator(const Partition& p, const AssemblyOptions& opt = {});

  std::size_t parts() const { return sizes_.size(); }
  double gamma() const { return gamma_; }
  const std::vector<Eigen::Index>& sizes() const { return sizes_; }
  const std::vector<std::vector<NodeMatch>>& matches() const { return match_; }
  // Block S*^{j}_k.
  const Mat& block(std::size_t j, std::size_t k) const { return blocks_[j][k]; }

  MultiTrace apply(const MultiTrace& phi, Kind kind = Kind::nonlocal) const;
  CVec apply(const CVec& phi, Kind kind = Kind::nonlocal) const;
  Mat dense(Kind kind = Kind::nonlocal) const;

  Vec flatten(const MultiTrace& phi) const;
  MultiTrace split(const Vec& v) const;

 private:
  double gamma_;
  std::vector<Eigen::Index> sizes_, offsets_;
  std::vector<std::vector<NodeMatch>> match_;
  std::vector<std::vector<Mat>> blocks_;
};

// ---------------------------------------------------------------- scattering

struct ScatterContext {
  const DtnOperator* dtn = nullptr;
  double omega = 0.0;  // impedance, > 0
  double mu = 1.0;
  double gamma = 0.0;  // used when dtn is null
};

enum class ScatterKind { local, nonlocal };

// Outgoing Robin trace mu tau_N + i omega gamma^-1 X tau_D with X = Id
// (local) or T_gamma (nonlocal). With mu = 1, omega = gamma this is
// tau_N + i tau_D and tau_N + i T tau_D.
CVec apply_scattering(const Vec& tau_D, const Vec& tau_N, const ScatterContext& ctx, ScatterKind kind);
// Ingoing trace mu tau_N - i omega gamma^-1 X tau_D.
CVec ingoing_trace(const Vec& tau_D, const Vec& tau_N, const ScatterContext& ctx, ScatterKind kind);

// H^s norm of a complex trace: sqrt(||Re||^2 + ||Im||^2).
double complex_sobolev_norm(const CVec& h, double s, const SpectralBasis& basis);

// ---------------------------------------------------------------- counterexample

enum class DensityProfile { indicator, smooth_bump };

struct CounterexampleOptions {
  double c_star = 0.25;
  DensityProfile profile = DensityProfile::indicator;
  // Support width of the density: c_star * gamma, or this when > 0.
  double fixed_width = 0.0;
  double s = -0.5;
  // Largest panel length on the square's sides.
  double max_panel_length = 1.0 / 24.0;
  int drop = 1;
};

// The density f on the first `width` of the bottom side of the unit square,
// next to the convex vertex (0,0): 1 on [0, width) or sin^2(pi x / width).
Vec corner_density(const BoundaryMesh& square, double width, DensityProfile profile);

// Defect ratios ||(Pi_gamma - Pi_0)(f, 0)|| / ||(f, 0)|| in H^s over the sweep.
// The assertion is non-decay (|slope| <= 0.15) for the indicator and decay
// (slope >= 0.25) for the fixed-width bump.
RateReport counterexample_study(const std::vector<double>& gammas, const CounterexampleOptions& opt);

// ---------------------------------------------------------------- fixed point

struct PointSource {
  Point x;
  double q = 1.0;
};

// u = sum_m q_m G(x - s_m), the free-space solution of (-Delta + gamma^-2) u = f
// for f = sum_m q_m delta_{s_m}.
double point_source_field(const std::vector<PointSource>& src, double gamma, const Point& x);
Point point_source_gradient(const std::vector<PointSource>& src, double gamma, const Point& x);

struct FixedPointOptions {
  double relax = 0.5;
  double tol = 1e-10;
  int max_iter = 400;
  double omega = 1.0;
  double mu = 1.0;
};

struct FixedPointResult {
  std::vector<Vec> dirichlet;  // reconstructed u on each boundary
  std::vector<CVec> p;         // converged ingoing traces
  std::vector<double> history; // H^-1/2 step residual per iteration
  bool converged = false;
  int iterations = 0;
  double isometry_defect = 0.0; // | ||Pi q|| - ||q|| | / ||q|| at q = S p
  double max_imag = 0.0;        // largest |Im d| relative to max |d|
};

// Relaxed iteration p <- (1 - relax) p + relax (Pi S p + f) for
// (-Delta + gamma^-2) u = sum of point sources, with the sources inside
// Omega_j assigned to Omega_j. Non-convergence is reported, not thrown.
class FixedPointSolver {
 public:
  FixedPointSolver(const Partition& p, const AssemblyOptions& opt = {});

  const Partition& partition() const { return part_; }
  const ExchangeOperator& exchange() const { return *pi_; }
  const DtnOperator& dtn(std::size_t j) const { return dtn_[j]; }
  const SpectralBasis& basis(std::size_t j) const { return basis_[j]; }

  FixedPointResult solve(const std::vector<PointSource>& sources, const FixedPointOptions& opt) const;

  // Exact traces of the free-space solution on boundary j.
  Vec exact_dirichlet(std::size_t j, const std::vector<PointSource>& sources) const;

  // Relative H^{1/2} product-norm error of the reconstructed traces.
  double trace_error(const FixedPointResult& r, const std::vector<PointSource>& sources) const;

 private:
  Partition part_;
  std::unique_ptr<ExchangeOperator> pi_;
  std::vector<DtnOperator> dtn_;
  std::vector<Eigen::PartialPivLU<Mat>> dtn_lu_;
  std::vector<SpectralBasis> basis_;
};

// Whether x lies in the subdomain (interior or exterior of its curve).
bool contains(const Subdomain& d, const Point& x);

// CSV "iter,residual".
void write_history_csv(const FixedPointResult& r, std::ostream& out);

}  // namespace nlex
