#include "passforge/unitary.hpp"

#include <cmath>
#include <numbers>

#include "passforge/error.hpp"

namespace passforge {

Mat2 one_qubit_matrix(GateKind kind, double angle) {
  using std::numbers::pi;
  const Complex i(0, 1);
  const double r = 1.0 / std::numbers::sqrt2;
  switch (kind) {
    case GateKind::I: return Mat2::identity();
    case GateKind::X: return Mat2{{0, 1, 1, 0}};
    case GateKind::SX: return Mat2{{Complex(0.5, 0.5), Complex(0.5, -0.5), Complex(0.5, -0.5), Complex(0.5, 0.5)}};
    case GateKind::RZ: return Mat2{{std::exp(-i * angle / 2.0), 0, 0, std::exp(i * angle / 2.0)}};
    case GateKind::H: return Mat2{{r, r, r, -r}};
    case GateKind::S: return Mat2{{1, 0, 0, i}};
    case GateKind::T: return Mat2{{1, 0, 0, std::exp(i * pi / 4.0)}};
    default: throw ContractError("not a one-qubit unitary: " + std::string(gate_name(kind)));
  }
}

bool equal_up_to_phase(const Mat2& a, const Mat2& b, double tol) {
  // Align phases on the largest entry of b.
  int k = 0;
  for (int j = 1; j < 4; ++j) {
    if (std::abs(b.m[j]) > std::abs(b.m[k])) k = j;
  }
  if (std::abs(a.m[k]) < 1e-12) return false;
  const Complex phase = a.m[k] / b.m[k];
  if (std::abs(std::abs(phase) - 1.0) > tol) return false;
  for (int j = 0; j < 4; ++j) {
    if (std::abs(a.m[j] - phase * b.m[j]) > tol) return false;
  }
  return true;
}

EulerZyz euler_zyz(const Mat2& u) {
  const Complex det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  const Complex scale = 1.0 / std::sqrt(det);
  const Complex a = u(1, 1) * scale;  // e^{i(phi+lambda)/2} cos(theta/2)
  const Complex b = u(1, 0) * scale;  // e^{i(phi-lambda)/2} sin(theta/2)
  EulerZyz e;
  e.theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
  const double sum = std::abs(a) > 1e-12 ? 2.0 * std::arg(a) : 0.0;
  const double diff = std::abs(b) > 1e-12 ? 2.0 * std::arg(b) : 0.0;
  e.phi = (sum + diff) / 2.0;
  e.lambda = (sum - diff) / 2.0;
  return e;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

}  // namespace passforge
