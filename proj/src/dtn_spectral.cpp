#include "nlex/dtn_spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nlex/bessel.hpp"
#include "nlex/quadrature.hpp"

namespace nlex {

double mass_asymmetry(const Mat& T, const Vec& weights) {
  Vec sw = weights.cwiseSqrt();
  Mat S = sw.asDiagonal() * T * sw.cwiseInverse().asDiagonal();
  double nrm = S.norm();
  return nrm > 0 ? (S - S.transpose()).norm() / nrm : 0.0;
}

DtnContext::DtnContext(BoundaryMesh mesh, double gamma, const AssemblyOptions& opt)
    : mesh_(std::move(mesh)), gamma_(gamma) {
  layers_ = assemble_layers(mesh_, gamma_, opt);
  lu_.compute(layers_.V.matrix);
  double rc = lu_.rcond();
  cond_ = rc > 0 ? 1.0 / rc : kInf;
  if (!(rc > 1e-14))
    throw ConditioningError("single layer is numerically singular (condition estimate " +
                                std::to_string(cond_) + ")",
                            cond_);
  v_inv_ = lu_.inverse();
}

DtnOperator DtnContext::dtn_indirect(Side side) const {
  Mat B = side_sign(side) * layers_.Kp.matrix;
  B.diagonal().array() += 0.5;
  DtnOperator T;
  T.matrix = gamma_ * B * v_inv_;
  T.side = side;
  T.gamma = gamma_;
  T.mesh_hash = mesh_.hash();
  return T;
}

DtnOperator DtnContext::dtn(Side side) const {
  Mat B = side_sign(side) * layers_.K.matrix;
  B.diagonal().array() += 0.5;
  DtnOperator T;
  T.matrix = gamma_ * v_inv_ * B;
  T.side = side;
  T.gamma = gamma_;
  T.mesh_hash = mesh_.hash();
  return T;
}

BoundaryOperator DtnContext::A() const {
  BoundaryOperator a = layers_.Kp;
  a.matrix *= -2.0;
  a.name = "A";
  return a;
}

DtnOperator dtn_matrix(const BoundaryMesh& mesh, Side side, double gamma, const AssemblyOptions& opt) {
  return DtnContext(mesh, gamma, opt).dtn(side);
}

SpectralBasis steklov_eigs(const DtnOperator& T, const Vec& weights, double tol) {
  const Eigen::Index n = T.matrix.rows();
  if (weights.size() != n) throw DomainError("steklov_eigs: mass size mismatch");
  Vec sw = weights.cwiseSqrt();
  Mat S = sw.asDiagonal() * T.matrix * sw.cwiseInverse().asDiagonal();
  Mat A = 0.5 * (S + S.transpose());
  Vec lam(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', lapack_int(n), A.data(), lapack_int(n), lam.data());
  if (info != 0) throw std::runtime_error("steklov_eigs: dsyevd failed with info " + std::to_string(info));
  // Nystrom transposes are inaccurate on unresolved modes, so the skew part is
  // measured on the lowest quarter of the spectrum only.
  const Eigen::Index k = std::max<Eigen::Index>(1, n / kResolvedFraction);
  Mat Q = A.leftCols(k);
  Mat SQ = S * Q;
  Mat P = Q.transpose() * SQ;
  double pn = P.norm();
  double res = pn > 0 ? (P - P.transpose()).norm() / pn : 0.0;
  if (!(res <= tol)) {
    std::ostringstream msg;
    msg << std::scientific << std::setprecision(2) << "steklov_eigs: mass-symmetrized residual " << res << " exceeds "
        << tol;
    throw SymmetryError(msg.str(), res);
  }
  // dsyevd returns ascending values; keep index order among ties.
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lam[a] < lam[b]; });
  SpectralBasis B;
  B.lambdas.resize(n);
  B.modes.resize(n, n);
  Vec isw = sw.cwiseInverse();
  for (Eigen::Index j = 0; j < n; ++j) {
    B.lambdas[j] = lam[order[j]];
    B.modes.col(j) = isw.cwiseProduct(A.col(order[j]));
  }
  B.weights = weights;
  B.gamma = T.gamma;
  B.symmetry_residual = res;
  return B;
}

double sobolev_norm(const Vec& h, double s, const SpectralBasis& basis) {
  if (!(s >= -0.5 && s <= 0.5)) throw DomainError("sobolev_norm: s must lie in [-1/2, 1/2]");
  Vec a = basis.coefficients(h);
  if (s == 0.0) return a.norm();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    double l = basis.lambdas[j];
    if (!(l > 0)) throw DomainError("sobolev_norm: non-positive Steklov eigenvalue");
    sum += std::pow(l, 2.0 * s) * a[j] * a[j];
  }
  return std::pow(basis.gamma, -s) * std::sqrt(sum);
}

double rayleigh_quotient(const Vec& h, const SpectralBasis& basis) {
  Vec a = basis.coefficients(h);
  double den = a.squaredNorm();
  if (!(den > 0)) throw DomainError("rayleigh_quotient: zero input");
  return a.cwiseAbs2().dot(basis.lambdas) / den;
}

double gradient_ratio(const BoundaryMesh& mesh, const Vec& f) {
  const PanelRule& r = panel_rule();
  const auto& D = panel_diff_matrix();
  const auto& panels = mesh.panels();
  const Vec& w = mesh.weights();
  double energy = 0.0;
  double lo[kPanelOrder], hi[kPanelOrder];
  lagrange_values(-1.0, lo);
  lagrange_values(1.0, hi);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const int f0 = panels[p].first;
    Eigen::Map<const Eigen::Matrix<double, kPanelOrder, 1>> fp(f.data() + f0);
    Eigen::Matrix<double, kPanelOrder, 1> du = D * fp;
    for (int k = 0; k < kPanelOrder; ++k) {
      double ds_du = w[f0 + k] / r.w[k];
      double g = du[k] / ds_du;
      energy += w[f0 + k] * g * g;
    }
    // Jump to the next panel along the curve.
    const std::size_t q = (p + 1) % panels.size();
    const int g0 = panels[q].first;
    double right = 0.0, left = 0.0;
    for (int k = 0; k < kPanelOrder; ++k) {
      right += hi[k] * f[f0 + k];
      left += lo[k] * f[g0 + k];
    }
    double delta = 0.5 * (panels[p].length + panels[q].length);
    energy += (right - left) * (right - left) / delta;
  }
  double l2 = std::sqrt(f.cwiseAbs2().dot(w));
  if (!(l2 > 0)) throw DomainError("gradient_ratio: zero function");
  return std::sqrt(energy) / l2;
}

bool in_x_subspace(const BoundaryMesh& mesh, const Vec& f, double M) {
  return gradient_ratio(mesh, f) <= M * (1.0 + 1e-6);
}

XSubspace build_x_subspace(const BoundaryMesh& mesh, double gamma, double M) {
  if (!(gamma > 0)) throw DomainError("build_x_subspace: gamma must be positive");
  if (!(M > 0)) throw DomainError("build_x_subspace: empty subspace for M <= 0");
  if (M > (1.0 + 1e-12) / gamma) throw DomainError("build_x_subspace: need M <= 1/gamma");
  const double L = mesh.length();
  const int K = int(std::floor(kXSlack * M * L / (2.0 * kPi) + 1e-12));
  const int dim = 2 * K + 1;
  const Eigen::Index n = Eigen::Index(mesh.size());
  if (dim > n / 4)
    throw DomainError("build_x_subspace: mesh too coarse for " + std::to_string(dim) + " modes");
  Mat F(n, dim);
  Vec freq(dim);
  const Vec& s = mesh.arclength();
  F.col(0).setOnes();
  freq[0] = 0.0;
  for (int k = 1; k <= K; ++k) {
    double om = 2.0 * kPi * k / L;
    F.col(2 * k - 1) = (om * s.array()).cos().matrix();
    F.col(2 * k) = (om * s.array()).sin().matrix();
    freq[2 * k - 1] = freq[2 * k] = om;
  }
  Mat G = F.transpose() * mesh.weights().asDiagonal() * F;
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw std::runtime_error("build_x_subspace: Gram matrix not SPD");
  XSubspace X;
  X.basis = llt.matrixU().solve<Eigen::OnTheRight>(F);
  X.frequencies = freq;
  X.M = M;
  X.gamma = gamma;
  for (int j = 0; j < dim; ++j) {
    double ratio = gradient_ratio(mesh, X.basis.col(j));
    if (ratio > M * 1.01)
      throw MembershipError("build_x_subspace: basis element " + std::to_string(j) +
                                " fails the gradient bound (mesh under-resolved)",
                            ratio, M);
  }
  return X;
}

double dtn_defect_unchecked(const Vec& h, const DtnOperator& T, const SpectralBasis& basis) {
  Vec r = T.apply(h) - h;
  return sobolev_norm(r, -0.5, basis) / sobolev_norm(h, -0.5, basis);
}

double dtn_defect(const Vec& h, const DtnOperator& T, const SpectralBasis& basis, const BoundaryMesh& mesh,
                  double M) {
  double ratio = gradient_ratio(mesh, h);
  if (ratio > M * (1.0 + 1e-6))
    throw MembershipError("dtn_defect: trace is not in X_gamma(M)", ratio, M);
  return dtn_defect_unchecked(h, T, basis);
}

VertexConcentrationReport vertex_concentration_check(const Vec& h, const BoundaryMesh& mesh, double gamma,
                                                     double a, double M, double C) {
  const Vec& w = mesh.weights();
  double l2sq = h.cwiseAbs2().dot(w);
  if (!(l2sq > 0)) throw DomainError("vertex_concentration_check: zero function");
  VertexConcentrationReport r{};
  r.sup_ratio = h.cwiseAbs().maxCoeff() / std::sqrt(l2sq);
  r.sup_bound = C * (1.0 + std::sqrt(M));
  const double rad = std::pow(gamma, a);
  r.disc_ratio = 0.0;
  for (const Point& v : mesh.vertices()) {
    double m = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i)
      if ((mesh.nodes()[i] - v).norm() < rad) m += w[i] * h[i] * h[i];
    r.disc_ratio = std::max(r.disc_ratio, m / l2sq);
  }
  r.disc_bound = std::min(C * (1.0 + M) * rad, 1.0);
  r.pass = r.sup_ratio <= r.sup_bound && r.disc_ratio <= r.disc_bound;
  return r;
}

LowerBoundReport hminus_lower_bound_check(const Vec& h, const SpectralBasis& basis, const BoundaryMesh& mesh,
                                          double M) {
  double gr = gradient_ratio(mesh, h);
  if (gr > M * (1.0 + 1e-6))
    throw MembershipError("hminus_lower_bound_check: trace is not in X_gamma(M)", gr, M);
  double l2 = std::sqrt(h.cwiseAbs2().dot(mesh.weights()));
  LowerBoundReport r{};
  r.ratio = sobolev_norm(h, -0.5, basis) / (std::sqrt(basis.gamma) * l2);
  r.pass = r.ratio >= 0.5;
  return r;
}

namespace disc {

Radial radial(int n, double x) {
  if (n < 0 || !(x > 0)) throw DomainError("disc::radial: need n >= 0 and x > 0");
  // I_{n+1}/I_n by modified Lentz on the first continued fraction.
  const double tiny = 1e-300;
  double f = tiny, C = f, D = 0.0;
  for (int k = 1; k < 100000; ++k) {
    double b = 2.0 * (n + k) / x;
    D = b + D;
    if (D == 0) D = tiny;
    C = b + 1.0 / C;
    if (C == 0) C = tiny;
    D = 1.0 / D;
    double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double ratio = f;
  // Scaled K_n, K_{n+1} by forward recurrence (stable for K).
  BesselPair k01 = bessel_k01_scaled(x);
  double kn, kn1;
  if (n == 0) {
    kn = k01.k0;
    kn1 = k01.k1;
  } else {
    double a = k01.k0, b = k01.k1;
    for (int m = 1; m < n; ++m) {
      double c = a + (2.0 * m / x) * b;
      a = b;
      b = c;
    }
    kn = b;
    kn1 = a + (2.0 * n / x) * b;
  }
  Radial r{};
  r.k_scaled = kn;
  r.i_scaled = 1.0 / (x * (kn1 + ratio * kn));
  r.di_over_i = ratio + n / x;
  r.dk_over_k = -kn1 / kn + n / x;
  return r;
}

double single_layer_eig(int n, double R, double gamma) {
  Radial r = radial(n, R / gamma);
  return R * r.i_scaled * r.k_scaled;
}

double interior_jump_eig(int n, double R, double gamma) {
  double x = R / gamma;
  Radial r = radial(n, x);
  return x * r.di_over_i * r.i_scaled * r.k_scaled;
}

double dtn_interior_eig(int n, double R, double gamma) { return radial(n, R / gamma).di_over_i; }

double dtn_exterior_eig(int n, double R, double gamma) { return -radial(n, R / gamma).dk_over_k; }

double a_operator_eig(int n, double R, double gamma) {
  // A = 2 K'_0 = -2 K'_1 and (1/2 + K'_1) = x I_n' K_n.
  return 2.0 * (0.5 - interior_jump_eig(n, R, gamma));
}

std::vector<double> bessel_i_miller(int nmax, double x) {
  if (nmax < 0 || !(x > 0)) throw DomainError("bessel_i_miller: need nmax >= 0 and x > 0");
  const int N = 2 * (nmax + int(x)) + 60;
  std::vector<double> v(N + 2, 0.0);
  v[N] = 1e-280;
  for (int k = N; k >= 1; --k) {
    v[k - 1] = v[k + 1] + (2.0 * k / x) * v[k];
    if (v[k - 1] > 1e250)
      for (int j = k - 1; j <= N; ++j) v[j] *= 1e-250;
  }
  double sum = v[0];
  for (int k = 1; k <= N; ++k) sum += 2.0 * v[k];
  std::vector<double> out(nmax + 2);
  for (int k = 0; k <= nmax + 1; ++k) out[k] = v[k] / sum;
  return out;
}

}  // namespace disc

RobinSteklovReport robin_steklov_check_disc(double gamma, int n_max, double R) {
  if (!(gamma > 0) || n_max < 0) throw DomainError("robin_steklov_check_disc: bad arguments");
  const double x = R / gamma;
  auto I = disc::bessel_i_miller(n_max + 1, x);
  RobinSteklovReport rep;
  for (int n = 0; n <= n_max; ++n) {
    double lam = disc::dtn_interior_eig(n, R, gamma);
    double dI = n == 0 ? I[1] : 0.5 * (I[n - 1] + I[n + 1]);
    // Robin condition u_r = (lambda / gamma) u for u = I_n(r / gamma).
    double res = std::abs(dI - lam * I[n]) / std::abs(dI);
    rep.lambdas.push_back(lam);
    rep.robin_lambdas.push_back(dI / I[n]);
    rep.residuals.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  return rep;
}

void write_spectrum_csv(const SpectralBasis& basis, std::ostream& out) {
  out << "j,lambda\n" << std::setprecision(17);
  for (std::size_t j = 0; j < basis.size(); ++j) out << j << ',' << basis.lambdas[Eigen::Index(j)] << '\n';
}

void write_modes_binary(const SpectralBasis& basis, const std::string& modes_path) {
  std::ofstream f(modes_path, std::ios::binary);
  if (!f) throw std::runtime_error("write_modes_binary: cannot open " + modes_path);
  const char magic[8] = {'N', 'L', 'E', 'X', 'M', 'O', 'D', '1'};
  std::uint64_t rows = basis.modes.rows(), cols = basis.modes.cols();
  f.write(magic, 8);
  f.write(reinterpret_cast<const char*>(&rows), 8);
  f.write(reinterpret_cast<const char*>(&cols), 8);
  f.write(reinterpret_cast<const char*>(basis.modes.data()), std::streamsize(rows * cols * sizeof(double)));
  if (!f) throw std::runtime_error("write_modes_binary: write failed");
}

}  // namespace nlex
