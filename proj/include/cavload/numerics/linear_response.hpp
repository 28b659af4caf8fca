#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace cavload {

using cplx = std::complex<double>;

struct Mat2 {
  cplx a{}, b{}, c{}, d{};  // [[a, b], [c, d]]

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c,
            c * o.b + d * o.d};
  }
  Mat2 operator+(const Mat2& o) const {
    return {a + o.a, b + o.b, c + o.c, d + o.d};
  }
  Mat2 operator*(cplx s) const { return {a * s, b * s, c * s, d * s}; }
  Mat2 transpose() const { return {a, c, b, d}; }
};

struct Vec2 {
  cplx x{}, y{};
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator*(cplx s) const { return {x * s, y * s}; }
};

inline Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

// sinh(z)/z, finite and smooth through z = 0.
inline cplx sinhc(cplx z) {
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0);
  }
  return std::sinh(z) / z;
}

// exp(A s) for a constant 2x2 generator, written as
// exp(m s) [cosh(nu s) I + s sinhc(nu s) N] with N = A - m I traceless and
// N^2 = nu^2 I. Both factors are even in nu, so the branch of the square
// root never matters and the coalescent case nu = 0 needs no special path.
class Propagator2 {
 public:
  Propagator2() = default;
  explicit Propagator2(const Mat2& A) : A_(A) {
    m_ = 0.5 * (A.a + A.d);
    N_ = {A.a - m_, A.b, A.c, A.d - m_};
    nu_ = std::sqrt(N_.a * N_.a + N_.b * N_.c);
  }

  Mat2 operator()(double s) const {
    const cplx e = std::exp(m_ * s);
    const cplx ch = std::cosh(nu_ * s);
    const cplx sh = s * sinhc(nu_ * s);
    return {e * (ch + sh * N_.a), e * sh * N_.b, e * sh * N_.c,
            e * (ch + sh * N_.d)};
  }

  const Mat2& generator() const { return A_; }
  cplx half_trace() const { return m_; }
  cplx nu() const { return nu_; }

 private:
  Mat2 A_{};
  Mat2 N_{};
  cplx m_{};
  cplx nu_{};
};

}  // namespace cavload
