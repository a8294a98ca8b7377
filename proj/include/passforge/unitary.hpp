#pragma once

#include <array>
#include <complex>

#include "passforge/circuit.hpp"

namespace passforge {

using Complex = std::complex<double>;

/// Row-major 2x2 complex matrix.
struct Mat2 {
  std::array<Complex, 4> m{};

  Complex& operator()(int r, int c) { return m[2 * r + c]; }
  const Complex& operator()(int r, int c) const { return m[2 * r + c]; }

  static Mat2 identity() { return Mat2{{Complex(1), Complex(0), Complex(0), Complex(1)}}; }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 out;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c);
    }
    return out;
  }
};

/// Matrix of a one-qubit gate kind (RZ uses `angle`).
Mat2 one_qubit_matrix(GateKind kind, double angle = 0.0);

/// True when a == e^{i phi} b for some phi, entrywise within `tol`.
bool equal_up_to_phase(const Mat2& a, const Mat2& b, double tol = 1e-9);

/// ZYZ Euler angles with U = e^{i alpha} RZ(phi) RY(theta) RZ(lambda).
struct EulerZyz {
  double theta = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
};

EulerZyz euler_zyz(const Mat2& u);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace passforge
