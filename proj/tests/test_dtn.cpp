#include "doctest.h"

#include <random>

#include "nlex/dtn_spectral.hpp"
#include "oracles/disc_oracle.hpp"

using namespace nlex;

namespace {

Vec fourier_mode(const BoundaryMesh& m, int n) {
  Vec v(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) v[i] = std::cos(n * std::atan2(m.nodes()[i].y(), m.nodes()[i].x()));
  return v;
}

double mode_error(const Mat& op, const Vec& v, double mu) {
  return (op * v - mu * v).cwiseAbs().maxCoeff() / (std::abs(mu) * v.cwiseAbs().maxCoeff());
}

struct Disc {
  BoundaryMesh mesh = build_mesh(CurveSpec::circle(1.0), 512, GradingPolicy::uniform());
  DtnContext ctx{mesh, 0.1};
  DtnOperator T1 = ctx.dtn(Side::interior);
  DtnOperator T0 = ctx.dtn(Side::exterior);
  SpectralBasis b1 = steklov_eigs(T1, mesh.weights());
};

const Disc& disc01() {
  static const Disc d;
  return d;
}

}  // namespace

TEST_SUITE("dtn_spectral") {

TEST_CASE("disc DtN eigenvalues, interior and exterior") {
  const Disc& d = disc01();
  for (int n = 0; n <= 16; ++n) {
    CAPTURE(n);
    const Vec v = fourier_mode(d.mesh, n);
    CHECK(mode_error(d.T1.matrix, v, oracle::disc_dtn_interior(n, 1.0, 0.1)) <= 1e-6);
    CHECK(mode_error(d.T0.matrix, v, oracle::disc_dtn_exterior(n, 1.0, 0.1)) <= 1e-6);
    CHECK(std::abs(disc::dtn_interior_eig(n, 1.0, 0.1) / oracle::disc_dtn_interior(n, 1.0, 0.1) - 1) <= 1e-12);
    CHECK(std::abs(disc::dtn_exterior_eig(n, 1.0, 0.1) / oracle::disc_dtn_exterior(n, 1.0, 0.1) - 1) <= 1e-12);
  }
  // The indirect route agrees on the disc.
  const Mat Ti = d.ctx.dtn_indirect(Side::interior).matrix;
  CHECK(mode_error(Ti, fourier_mode(d.mesh, 5), oracle::disc_dtn_interior(5, 1.0, 0.1)) <= 1e-6);
}

TEST_CASE("n = 0 disc eigenvalue tends to 1 as gamma shrinks") {
  const double g = 0.01;
  CHECK(std::abs(oracle::disc_dtn_interior(0, 1.0, g) - 1.0) <= 1e-2);
  DtnOperator T = dtn_matrix(build_mesh(CurveSpec::circle(1.0), 1024, GradingPolicy::uniform()), Side::interior, g);
  const Vec one = Vec::Ones(1024);
  CHECK(std::abs((T.matrix * one).mean() - 1.0) <= 1e-2);
  CHECK(T.gamma == g);
}

TEST_CASE("Steklov basis: orthonormality, positivity and norms") {
  const Disc& d = disc01();
  const SpectralBasis& b = d.b1;
  const Mat G = b.modes.transpose() * d.mesh.weights().asDiagonal() * b.modes;
  CHECK((G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(b.lambdas.minCoeff() > 0.0);
  CHECK(b.symmetry_residual <= 1e-6);
  for (Eigen::Index j : {0, 3, 10, 40}) {
    CAPTURE(j);
    const Vec h = b.modes.col(j);
    CHECK(std::abs(sobolev_norm(h, -0.5, b) - std::sqrt(0.1 / b.lambdas[j])) <= 1e-12);
    CHECK(std::abs(sobolev_norm(h, 0.0, b) - 1.0) <= 1e-12);
    CHECK(std::abs(rayleigh_quotient(h, b) - b.lambdas[j]) <= 1e-10 * b.lambdas[j]);
  }
  const Vec mix = b.modes.col(0) + b.modes.col(1);
  CHECK(std::abs(rayleigh_quotient(mix, b) - 0.5 * (b.lambdas[0] + b.lambdas[1])) <= 1e-12);
  // Reconstruction from coefficients.
  const Vec h = fourier_mode(d.mesh, 3);
  CHECK((b.modes * b.coefficients(h) - h).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("Sobolev norms: duality and argument checks") {
  const Disc& d = disc01();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  for (int t = 0; t < 20; ++t) {
    Vec f(d.mesh.size()), g(d.mesh.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = N(rng), g[i] = N(rng);
    const double pair = std::abs(f.dot(d.mesh.weights().cwiseProduct(g)));
    CHECK(pair <= sobolev_norm(f, -0.5, d.b1) * sobolev_norm(g, 0.5, d.b1) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(sobolev_norm(Vec::Ones(512), 0.75, d.b1), DomainError);
  CHECK_THROWS_AS(rayleigh_quotient(Vec::Zero(512), d.b1), DomainError);
}

TEST_CASE("a non-self-adjoint operator is rejected") {
  const Disc& d = disc01();
  // Add a skew coupling between cos(theta) and sin(theta): W K is antisymmetric.
  Vec u(512), v(512);
  for (std::size_t i = 0; i < 512; ++i) {
    const double t = std::atan2(d.mesh.nodes()[i].y(), d.mesh.nodes()[i].x());
    u[i] = std::cos(t), v[i] = std::sin(t);
  }
  const Vec& w = d.mesh.weights();
  DtnOperator bad = d.T1;
  bad.matrix += 0.01 * (u * w.cwiseProduct(v).transpose() - v * w.cwiseProduct(u).transpose());
  CHECK_THROWS_AS(steklov_eigs(bad, d.mesh.weights()), SymmetryError);
}

TEST_CASE("ellipse spectrum lies above 1 - C gamma") {
  const double g = 0.05;
  BoundaryMesh m = build_mesh(CurveSpec::ellipse(1.0, 0.6), 1024, GradingPolicy::uniform());
  SpectralBasis b = steklov_eigs(dtn_matrix(m, Side::interior, g), m.weights());
  const double C = (1.0 - b.lambdas[0]) / g;
  MESSAGE("ellipse lambda_1 = " << b.lambdas[0] << ", fitted C = " << C);
  CHECK(b.lambdas.minCoeff() >= 0.8);
}

TEST_CASE("X subspace membership") {
  const double g = 0.1;
  BoundaryMesh m = build_mesh(CurveSpec::circle(1.0), 512, GradingPolicy::uniform());
  CHECK(in_x_subspace(m, Vec::Ones(512), 0.5));
  CHECK(gradient_ratio(m, Vec::Ones(512)) <= 1e-10);
  for (int n = 1; n <= 6; ++n) {
    CAPTURE(n);
    CHECK(std::abs(gradient_ratio(m, fourier_mode(m, n)) - n) <= 1e-8 * n);
    CHECK(in_x_subspace(m, fourier_mode(m, n), 4.0) == (n <= 4));
  }
  for (double M : {1.5, 3.5, 4.5, 7.2}) {
    CAPTURE(M);
    XSubspace X = build_x_subspace(m, g, M);
    // Brute-force count of Fourier modes passing the membership test.
    int count = 1;
    for (int n = 1; n <= 20; ++n) count += in_x_subspace(m, fourier_mode(m, n), M) ? 2 : 0;
    CHECK(count == 2 * int(std::floor(M)) + 1);
    CHECK(int(X.basis.cols()) == count);
    const Mat G = X.basis.transpose() * m.weights().asDiagonal() * X.basis;
    CHECK((G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index j = 0; j < X.basis.cols(); ++j) CHECK(in_x_subspace(m, X.basis.col(j), M));
  }
  // At integer M the 0.99 slack leaves out the boundary pair cos(M theta), sin(M theta).
  CHECK(build_x_subspace(m, g, 4.0).basis.cols() == 7);
  CHECK_THROWS_AS(build_x_subspace(m, g, 11.0), DomainError);
}

TEST_CASE("DtN defect") {
  const Disc& d = disc01();
  // Mode with eigenvalue 1 exactly: use the identity as the operator.
  DtnOperator I = d.T1;
  I.matrix = Mat::Identity(512, 512);
  CHECK(dtn_defect_unchecked(d.b1.modes.col(2), I, d.b1) == 0.0);
  const Vec h = fourier_mode(d.mesh, 2);
  const double def = dtn_defect(h, d.T1, d.b1, d.mesh, 4.0);
  CHECK(std::abs(def - std::abs(oracle::disc_dtn_interior(2, 1.0, 0.1) - 1.0)) <= 1e-6);
  CHECK_THROWS_AS(dtn_defect(fourier_mode(d.mesh, 9), d.T1, d.b1, d.mesh, 4.0), MembershipError);
}

TEST_CASE("H^-1/2 lower bound") {
  const Disc& d = disc01();
  LowerBoundReport c = hminus_lower_bound_check(Vec::Ones(512), d.b1, d.mesh, 4.0);
  CHECK(c.pass);
  CHECK(std::abs(c.ratio - 1.0 / std::sqrt(oracle::disc_dtn_interior(0, 1.0, 0.1))) <= 1e-8);
  LowerBoundReport f = hminus_lower_bound_check(d.b1.modes.col(0), d.b1, d.mesh, 4.0);
  CHECK(f.ratio >= 0.5);
  CHECK_THROWS_AS(hminus_lower_bound_check(fourier_mode(d.mesh, 30), d.b1, d.mesh, 4.0), MembershipError);
}

TEST_CASE("vertex concentration") {
  const double g = 0.05, a = 0.5;
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 512, GradingPolicy::dyadic(g));
  VertexConcentrationReport r = vertex_concentration_check(Vec::Ones(m.size()), m, g, a, 4.0);
  CHECK(std::abs(r.sup_ratio - 0.5) <= 1e-12);  // |Gamma|^-1/2 with |Gamma| = 4
  // Node sum of the weights inside D(v, gamma^a), and its continuum value 2 gamma^a / |Gamma|.
  double node_sum = 0.0;
  for (const Point& v : m.vertices()) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if ((m.nodes()[i] - v).norm() < std::pow(g, a)) s += m.weights()[i];
    node_sum = std::max(node_sum, s / 4.0);
  }
  CHECK(std::abs(r.disc_ratio - node_sum) <= 1e-12);
  CHECK(std::abs(r.disc_ratio - 2.0 * std::pow(g, a) / 4.0) <= 0.05 * r.disc_ratio);
  CHECK(r.pass);
  // A single Fourier mode of frequency M on the circle.
  BoundaryMesh c = build_mesh(CurveSpec::circle(1.0), 512, GradingPolicy::uniform());
  VertexConcentrationReport s = vertex_concentration_check(fourier_mode(c, 4), c, g, a, 4.0);
  CHECK(std::abs(s.sup_ratio - std::sqrt(1.0 / kPi)) <= 1e-3);
  CHECK(s.sup_ratio <= s.sup_bound);
}

TEST_CASE("Robin-Steklov disc check") {
  RobinSteklovReport a = robin_steklov_check_disc(0.1, 0);
  CHECK(a.max_residual <= 1e-8);
  RobinSteklovReport b = robin_steklov_check_disc(0.05, 16);
  CHECK(b.max_residual <= 1e-8);
  // Consistency with the discrete DtN.
  const Disc& d = disc01();
  RobinSteklovReport c = robin_steklov_check_disc(0.1, 16);
  for (int n = 0; n <= 16; ++n)
    CHECK(mode_error(d.T1.matrix, fourier_mode(d.mesh, n), c.lambdas[std::size_t(n)]) <= 1e-6);
}

TEST_CASE("square DtN is exact on the corner solution") {
  // F = exp(-(x + y) / (gamma sqrt 2)) solves the equation; its outward normal
  // derivative is (1/sqrt 2) F / gamma on the two sides through the origin.
  const double g = 0.05;
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 1024, GradingPolicy::dyadic(g));
  DtnOperator T = dtn_matrix(m, Side::interior, g);
  Vec F(m.size()), dF(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Point& x = m.nodes()[i];
    F[i] = std::exp(-(x.x() + x.y()) / (g * std::sqrt(2.0)));
    dF[i] = -m.normals()[i].sum() / std::sqrt(2.0) * F[i];  // gamma * normal derivative
  }
  const Vec w = m.weights();
  const Vec e = T.apply(F) - dF;
  CHECK(std::sqrt(e.dot(w.cwiseProduct(e)) / dF.dot(w.cwiseProduct(dF))) <= 1e-8);
}

}  // TEST_SUITE
