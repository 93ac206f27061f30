#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace floquet_ep {

using cplx = std::complex<double>;
using CVec3 = std::array<cplx, 3>;

inline constexpr cplx kI{0.0, 1.0};

/**
 * @brief Dense 2x2 complex matrix stored row-major.
 *
 * Small value type; all arithmetic is inline and allocation free.
 */
struct Complex2x2 {
  std::array<cplx, 4> a{};

  constexpr cplx& operator()(int r, int c) { return a[2 * r + c]; }
  constexpr const cplx& operator()(int r, int c) const { return a[2 * r + c]; }

  static constexpr Complex2x2 zero() { return {}; }
  static constexpr Complex2x2 identity() { return {{1.0, 0.0, 0.0, 1.0}}; }
  static constexpr Complex2x2 pauli_x() { return {{0.0, 1.0, 1.0, 0.0}}; }
  static constexpr Complex2x2 pauli_y() { return {{0.0, -kI, kI, 0.0}}; }
  static constexpr Complex2x2 pauli_z() { return {{1.0, 0.0, 0.0, -1.0}}; }

  [[nodiscard]] constexpr cplx trace() const { return a[0] + a[3]; }
  [[nodiscard]] constexpr cplx det() const { return a[0] * a[3] - a[1] * a[2]; }

  [[nodiscard]] Complex2x2 transpose() const { return {{a[0], a[2], a[1], a[3]}}; }
  [[nodiscard]] Complex2x2 adjoint() const {
    return {{std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])}};
  }

  [[nodiscard]] double frobenius_norm() const {
    double s = 0.0;
    for (const auto& z : a) s += std::norm(z);
    return std::sqrt(s);
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const auto& z : a) m = std::max(m, std::abs(z));
    return m;
  }

  [[nodiscard]] bool is_finite() const {
    for (const auto& z : a)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  Complex2x2& operator+=(const Complex2x2& o) {
    for (int i = 0; i < 4; ++i) a[i] += o.a[i];
    return *this;
  }
  Complex2x2& operator-=(const Complex2x2& o) {
    for (int i = 0; i < 4; ++i) a[i] -= o.a[i];
    return *this;
  }
  Complex2x2& operator*=(cplx s) {
    for (auto& z : a) z *= s;
    return *this;
  }

  friend bool operator==(const Complex2x2&, const Complex2x2&) = default;
};

inline Complex2x2 operator+(Complex2x2 x, const Complex2x2& y) { return x += y; }
inline Complex2x2 operator-(Complex2x2 x, const Complex2x2& y) { return x -= y; }
inline Complex2x2 operator*(Complex2x2 x, cplx s) { return x *= s; }
inline Complex2x2 operator*(cplx s, Complex2x2 x) { return x *= s; }
inline Complex2x2 operator*(double s, Complex2x2 x) { return x *= cplx{s, 0.0}; }

inline Complex2x2 operator*(const Complex2x2& x, const Complex2x2& y) {
  return {{x.a[0] * y.a[0] + x.a[1] * y.a[2], x.a[0] * y.a[1] + x.a[1] * y.a[3],
           x.a[2] * y.a[0] + x.a[3] * y.a[2], x.a[2] * y.a[1] + x.a[3] * y.a[3]}};
}

inline std::array<cplx, 2> operator*(const Complex2x2& m, const std::array<cplx, 2>& v) {
  return {m.a[0] * v[0] + m.a[1] * v[1], m.a[2] * v[0] + m.a[3] * v[1]};
}

inline double max_abs_diff(const Complex2x2& x, const Complex2x2& y) {
  return (x - y).max_abs();
}

/// Complex (bilinear, not Hermitian) dot product d.d of a complex 3-vector.
inline cplx bilinear_square(const CVec3& d) { return d[0] * d[0] + d[1] * d[1] + d[2] * d[2]; }

inline double euclidean_norm(const CVec3& d) {
  return std::sqrt(std::norm(d[0]) + std::norm(d[1]) + std::norm(d[2]));
}

/// Returns d.sigma = dx X + dy Y + dz Z.
inline Complex2x2 pauli_combination(const CVec3& d) {
  return {{d[2], d[0] - kI * d[1], d[0] + kI * d[1], -d[2]}};
}

/**
 * @brief Expansion M = d0 I + d.sigma with complex coefficients.
 *
 * Re(d) is the Hermitian field A, Im(d) the anti-Hermitian field B of
 * H = A.sigma + i B.sigma.
 */
struct BlochDecomposition {
  cplx d0{};
  CVec3 d{};

  [[nodiscard]] Complex2x2 matrix() const {
    Complex2x2 m = pauli_combination(d);
    m(0, 0) += d0;
    m(1, 1) += d0;
    return m;
  }

  [[nodiscard]] std::array<double, 3> hermitian_field() const {
    return {d[0].real(), d[1].real(), d[2].real()};
  }
  [[nodiscard]] std::array<double, 3> anti_hermitian_field() const {
    return {d[0].imag(), d[1].imag(), d[2].imag()};
  }
};

// d0 = tr(M)/2 and d_k = tr(sigma_k M)/2, written out entrywise.
inline BlochDecomposition bloch_decompose(const Complex2x2& m) {
  const cplx half{0.5, 0.0};
  return {half * (m(0, 0) + m(1, 1)),
          {half * (m(0, 1) + m(1, 0)), half * kI * (m(0, 1) - m(1, 0)),
           half * (m(0, 0) - m(1, 1))}};
}

}  // namespace floquet_ep
