#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "nlex/boundary_ops.hpp"
#include "nlex/dtn_spectral.hpp"
#include "oracles/disc_oracle.hpp"

using namespace nlex;

namespace {

Vec fourier_mode(const BoundaryMesh& m, int n, bool sine = false) {
  Vec v(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double t = std::atan2(m.nodes()[i].y(), m.nodes()[i].x());
    v[i] = sine ? std::sin(n * t) : std::cos(n * t);
  }
  return v;
}

// max |Op v - mu v| / max |mu v|
double mode_error(const Mat& op, const Vec& v, double mu) {
  return (op * v - mu * v).cwiseAbs().maxCoeff() / (std::abs(mu) * v.cwiseAbs().maxCoeff());
}

const BoundaryMesh& disc512() {
  static const BoundaryMesh m = build_mesh(CurveSpec::circle(1.0), 512, GradingPolicy::uniform());
  return m;
}

}  // namespace

TEST_SUITE("boundary_ops") {

TEST_CASE("single layer on the disc matches the separated-variables eigenvalues") {
  const double g = 0.1;
  BoundaryOperator V = assemble_single_layer(disc512(), g);
  CHECK(V.convention == Convention::density_to_values);
  CHECK(V.matrix.allFinite());
  for (int n = 0; n <= 8; ++n) {
    CAPTURE(n);
    const double mu = oracle::disc_single_layer(n, 1.0, g);
    CHECK(std::abs(disc::single_layer_eig(n, 1.0, g) - mu) <= 1e-12 * mu);
    CHECK(mode_error(V.matrix, fourier_mode(disc512(), n), mu) <= 1e-6);
  }
}

TEST_CASE("single layer is symmetric and positive in the mass pairing") {
  const double g = 0.1;
  BoundaryMesh m = build_mesh(CurveSpec::ellipse(1.0, 0.6), 256, GradingPolicy::uniform());
  BoundaryOperator V = assemble_single_layer(m, g);
  // Product-integrated near-field rows are exact in their action on resolved
  // densities, not entrywise, so the pairing is compared on X_gamma(1/gamma).
  const XSubspace X = build_x_subspace(m, g, 1.0 / g);
  const Mat R = X.basis.transpose() * m.weights().asDiagonal() * V.matrix * X.basis;
  CHECK((R - R.transpose()).norm() <= 1e-10 * R.norm());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const Vec s = m.weights().cwiseSqrt();
  const Mat S = s.asDiagonal() * V.matrix * s.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> full(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  CHECK(full.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("single layer of a constant density is constant on the circle") {
  const double g = 0.1;
  BoundaryOperator V = assemble_single_layer(disc512(), g);
  const Vec v = V.matrix * Vec::Ones(512);
  CHECK((v.maxCoeff() - v.minCoeff()) / v.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("adjoint double layer: jump eigenvalues and the normal flip") {
  const double g = 0.1;
  BoundaryOperator K1 = assemble_adjoint_double_layer(disc512(), Side::interior, g);
  BoundaryOperator K0 = assemble_adjoint_double_layer(disc512(), Side::exterior, g);
  CHECK(bool(K0.matrix == -K1.matrix));
  const Mat I = Mat::Identity(512, 512);
  const Mat plus = 0.5 * I + K1.matrix, minus = -0.5 * I + K1.matrix;
  const Vec phi = fourier_mode(disc512(), 3) + fourier_mode(disc512(), 1, true);
  CHECK((plus * phi - minus * phi - phi).cwiseAbs().maxCoeff() <= 1e-14);
  for (int n = 0; n <= 8; ++n) {
    CAPTURE(n);
    const double x = 1.0 / g, mu = oracle::disc_interior_jump(n, 1.0, g);
    // Wronskian I_n K_n' - I_n' K_n = -1/x.
    CHECK(std::abs(oracle::I(n, x) * oracle::dK(n, x) - oracle::dI(n, x) * oracle::K(n, x) + 1.0 / x) <= 1e-12 / x);
    CHECK(std::abs(disc::interior_jump_eig(n, 1.0, g) - mu) <= 1e-12 * std::abs(mu));
    CHECK(mode_error(plus, fourier_mode(disc512(), n), mu) <= 1e-5);
  }
}

TEST_CASE("combined sweep matches the separate assemblies") {
  const double g = 0.05;
  BoundaryMesh m = build_mesh(CurveSpec::unit_square(), 256, GradingPolicy::dyadic(g));
  LayerOperators L = assemble_layers(m, g);
  CHECK((L.V.matrix - assemble_single_layer(m, g).matrix).norm() <= 1e-14 * L.V.matrix.norm());
  CHECK((L.Kp.matrix - assemble_adjoint_double_layer(m, Side::interior, g).matrix).norm() <=
        1e-14 * L.Kp.matrix.norm());
  CHECK((L.K.matrix - assemble_double_layer(m, Side::interior, g).matrix).norm() <= 1e-14 * L.K.matrix.norm());
}

TEST_CASE("cross assembly on the same mesh reproduces the self blocks") {
  const double g = 0.1;
  BoundaryMesh m = build_mesh(CurveSpec::circle(1.0), 256, GradingPolicy::uniform());
  std::vector<int> same(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) same[i] = int(i);
  CrossLayer c = assemble_cross(m, Side::interior, m, g, same);
  LayerOperators L = assemble_layers(m, g);
  CHECK((c.V - L.V.matrix).norm() <= 1e-10 * L.V.matrix.norm());
  CHECK((c.Kp - L.Kp.matrix).norm() <= 1e-10 * L.Kp.matrix.norm());
}

TEST_CASE("kernel truncation does not change the disc eigenvalues") {
  const double g = 0.05;
  AssemblyOptions full;
  full.truncation = 0.0;
  BoundaryOperator a = assemble_single_layer(disc512(), g), b = assemble_single_layer(disc512(), g, full);
  const Vec v = fourier_mode(disc512(), 4);
  CHECK((a.matrix * v - b.matrix * v).cwiseAbs().maxCoeff() <= 1e-12 * (b.matrix * v).cwiseAbs().maxCoeff());
}

TEST_CASE("mass pairing") {
  BoundaryOperator W = assemble_mass(disc512());
  const Vec one = Vec::Ones(512), s = fourier_mode(disc512(), 1, true), c = fourier_mode(disc512(), 1);
  CHECK(std::abs(one.dot(W.matrix * one) - 2 * kPi) <= 1e-10);
  CHECK(std::abs(s.dot(W.matrix * c)) <= 1e-10);
  // <e^{i theta}, e^{-i theta}> without conjugation is int e^{2 i theta} = 0; with it, 2 pi.
  CHECK(std::abs(c.dot(W.matrix * c) + s.dot(W.matrix * s) - 2 * kPi) <= 1e-10);
}

TEST_CASE("single-layer potential matches the disc oracle off the curve") {
  const double g = 0.2;
  const int n = 2;
  const Vec phi = fourier_mode(disc512(), n);
  // Psi e^{in theta} at radius r < 1: R I_n(r/gamma) K_n(R/gamma) e^{in theta}.
  const double r = 0.7, t = 0.3;
  const Vec u = single_layer_potential(disc512(), phi, g, {Point(r * std::cos(t), r * std::sin(t))});
  const double expect = oracle::I(n, r / g) * oracle::K(n, 1.0 / g) * std::cos(n * t);
  CHECK(std::abs(u[0] - expect) <= 1e-8 * std::abs(expect));
}

TEST_CASE("operator files round trip") {
  BoundaryOperator V = assemble_single_layer(build_mesh(CurveSpec::circle(1.0), 64, GradingPolicy::uniform()), 0.1);
  const auto path = (std::filesystem::temp_directory_path() / "nlex_op_roundtrip.bin").string();
  write_operator(V, path);
  BoundaryOperator R = read_operator(path);
  CHECK(bool(R.matrix == V.matrix));
  CHECK(R.gamma == V.gamma);
  CHECK(R.row_mesh == V.row_mesh);
  CHECK(R.name == V.name);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

}  // TEST_SUITE
