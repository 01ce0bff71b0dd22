// Dirichlet-to-Neumann operators, Steklov spectra and gamma-weighted norms.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nlex/boundary_ops.hpp"

namespace nlex {

struct DtnOperator {
  Mat matrix;  // values to values
  Side side = Side::interior;
  double gamma = 0.0;
  std::uint64_t mesh_hash = 0;

  Vec apply(const Vec& h) const { return matrix * h; }
};

// Relative asymmetry ||S - S^T||_F / ||S||_F of S = W^1/2 T W^-1/2.
double mass_asymmetry(const Mat& T, const Vec& weights);

// Layer operators and the factorized single layer for one (mesh, gamma).
// Immutable after construction.
class DtnContext {
 public:
  DtnContext(BoundaryMesh mesh, double gamma, const AssemblyOptions& opt = {});

  const BoundaryMesh& mesh() const { return mesh_; }
  double gamma() const { return gamma_; }
  const LayerOperators& layers() const { return layers_; }
  const Eigen::PartialPivLU<Mat>& v_lu() const { return lu_; }
  const Mat& v_inverse() const { return v_inv_; }
  double v_condition_estimate() const { return cond_; }

  // gamma V^-1 (I/2 + K_side), from the direct Green representation. Stays
  // accurate at corners, where the single-layer density V^-1 h is singular.
  DtnOperator dtn(Side side) const;
  // gamma (I/2 + K'_side) V^-1, the single-layer ansatz.
  DtnOperator dtn_indirect(Side side) const;
  // A = 2 K' with the Omega_0 normal.
  BoundaryOperator A() const;

 private:
  BoundaryMesh mesh_;
  double gamma_;
  LayerOperators layers_;
  Eigen::PartialPivLU<Mat> lu_;
  Mat v_inv_;
  double cond_ = 0.0;
};

// Throws ConditioningError when V is numerically singular.
DtnOperator dtn_matrix(const BoundaryMesh& mesh, Side side, double gamma,
                       const AssemblyOptions& opt = {});

// L2-orthonormal Steklov eigenpairs, ascending.
struct SpectralBasis {
  Vec lambdas;
  Mat modes;  // column j is h_j, sum_i w_i h_j(x_i)^2 = 1
  Vec weights;
  double gamma = 0.0;
  double symmetry_residual = 0.0;

  std::size_t size() const { return std::size_t(lambdas.size()); }
  // a_j = <h, h_j>
  Vec coefficients(const Vec& h) const { return modes.transpose() * weights.cwiseProduct(h); }
};

// Fraction 1/kResolvedFraction of the spectrum on which the skew part of the
// mass-symmetrized operator is measured.
inline constexpr int kResolvedFraction = 4;

// Throws SymmetryError when the skew part of W^1/2 T W^-1/2, restricted to the
// lowest n/4 eigenvectors of its symmetric part, exceeds `tol` relative.
SpectralBasis steklov_eigs(const DtnOperator& T, const Vec& weights, double tol = 1e-6);

// (gamma^-2s sum_j lambda_j^2s a_j^2)^1/2; s must lie in [-1/2, 1/2].
double sobolev_norm(const Vec& h, double s, const SpectralBasis& basis);
double rayleigh_quotient(const Vec& h, const SpectralBasis& basis);

// Discrete ||d f / ds||_L2 / ||f||_L2: per-panel spectral differentiation plus
// a jump penalty J^2 / delta across panel junctions.
double gradient_ratio(const BoundaryMesh& mesh, const Vec& f);
bool in_x_subspace(const BoundaryMesh& mesh, const Vec& f, double M);

struct XSubspace {
  Mat basis;  // mass-orthonormal columns
  Vec frequencies;
  double M = 0.0;
  double gamma = 0.0;
};

inline constexpr double kXSlack = 0.99;

// Arc-length Fourier modes with frequency <= 0.99 M. Requires 0 < M <= 1/gamma.
XSubspace build_x_subspace(const BoundaryMesh& mesh, double gamma, double M);

// ||(T - I) h||_{-1/2} / ||h||_{-1/2}. The checked form rejects h outside X_gamma(M).
double dtn_defect(const Vec& h, const DtnOperator& T, const SpectralBasis& basis,
                  const BoundaryMesh& mesh, double M);
double dtn_defect_unchecked(const Vec& h, const DtnOperator& T, const SpectralBasis& basis);

struct VertexConcentrationReport {
  double sup_ratio;   // ||h||_inf / ||h||_L2
  double sup_bound;   // C (1 + M^1/2)
  double disc_ratio;  // max over vertices of int_{D(v, gamma^a)} h^2 / ||h||^2
  double disc_bound;  // min(C (1 + M) gamma^a, 1)
  bool pass;
};
VertexConcentrationReport vertex_concentration_check(const Vec& h, const BoundaryMesh& mesh, double gamma,
                                                     double a, double M, double C = 4.0);

struct LowerBoundReport {
  double ratio;  // ||h||_{-1/2} / (gamma^1/2 ||h||_L2)
  bool pass;     // ratio >= 1/2
};
// Rejects h outside X_gamma(M).
LowerBoundReport hminus_lower_bound_check(const Vec& h, const SpectralBasis& basis, const BoundaryMesh& mesh,
                                          double M);

// Separation-of-variables values on the disc of radius R, x = R / gamma.
namespace disc {
struct Radial {
  double i_scaled;  // exp(-x) I_n(x)
  double k_scaled;  // exp(x) K_n(x)
  double di_over_i; // I_n'(x) / I_n(x)
  double dk_over_k; // K_n'(x) / K_n(x)
};
Radial radial(int n, double x);
double single_layer_eig(int n, double R, double gamma);
double interior_jump_eig(int n, double R, double gamma);  // 1/2 + K'
double dtn_interior_eig(int n, double R, double gamma);
double dtn_exterior_eig(int n, double R, double gamma);
double a_operator_eig(int n, double R, double gamma);
// I_0 .. I_nmax scaled by exp(-x), from Miller's backward recurrence.
std::vector<double> bessel_i_miller(int nmax, double x);
}  // namespace disc

struct RobinSteklovReport {
  std::vector<double> lambdas;       // I_n'/I_n from the continued fraction
  std::vector<double> robin_lambdas; // same quantity from Miller values
  std::vector<double> residuals;     // |I_n' - lambda I_n| / |I_n'| with Miller values
  double max_residual = 0.0;
};
RobinSteklovReport robin_steklov_check_disc(double gamma, int n_max, double R = 1.0);

// Rows "j,lambda" and a binary mode matrix at `modes_path`.
void write_spectrum_csv(const SpectralBasis& basis, std::ostream& out);
void write_modes_binary(const SpectralBasis& basis, const std::string& modes_path);

}  // namespace nlex
