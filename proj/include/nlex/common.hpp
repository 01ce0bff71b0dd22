// Shared aliases, constants and error types.
#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace nlex {

using Point = Eigen::Vector2d;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Legendre nodes per panel.
inline constexpr int kPanelOrder = 16;

// Bad argument value (z <= 0, s outside [-1/2, 1/2], ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Curve rejected at construction: not closed, not simple, clockwise, ...
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConditioningError : std::runtime_error {
  ConditioningError(const std::string& what, double cond)
      : std::runtime_error(what), condition_estimate(cond) {}
  double condition_estimate;
};

// A matrix expected to be self-adjoint in the mass pairing is not.
struct SymmetryError : std::runtime_error {
  SymmetryError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
  double residual;
};

// A trace failed the X_gamma(M) gradient-energy test.
struct MembershipError : std::runtime_error {
  MembershipError(const std::string& what, double r, double b)
      : std::runtime_error(what), ratio(r), bound(b) {}
  double ratio;
  double bound;
};

// Malformed or inconsistent configuration / JSON input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A report or snapshot file could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* version();

}  // namespace nlex
