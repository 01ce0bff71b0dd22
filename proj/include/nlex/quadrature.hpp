// Gauss-Legendre rules and barycentric Lagrange helpers on [-1, 1].
#pragma once

#include <array>
#include <vector>

#include "nlex/common.hpp"

namespace nlex {

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Newton iteration on P_n; accurate to a few ulp for n <= 64.
GaussRule gauss_legendre(int n);

// Cached 16-point rule plus its barycentric weights.
struct PanelRule {
  std::array<double, kPanelOrder> x;
  std::array<double, kPanelOrder> w;
  std::array<double, kPanelOrder> bary;
};
const PanelRule& panel_rule();

// Values of the 16 Lagrange basis polynomials at u in [-1, 1].
void lagrange_values(double u, double* out);

// Derivatives of the 16 Lagrange basis polynomials at every panel node:
// D(i, j) = l_j'(x_i).
const Eigen::Matrix<double, kPanelOrder, kPanelOrder>& panel_diff_matrix();

}  // namespace nlex
