#pragma once

// Forward-mode dual numbers. Nest Dual<Dual<double>> for second derivatives.

#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/Core>

namespace anholoflow {

template <class T>
struct Dual {
  T a{};  // value
  T b{};  // derivative along the seeded direction

  constexpr Dual() = default;
  constexpr Dual(double v) : a(v), b(0.0) {}
  template <class U, std::enable_if_t<std::is_same_v<U, T> && !std::is_same_v<T, double>, int> = 0>
  constexpr Dual(const U& v) : a(v), b(0.0) {}
  constexpr Dual(const T& v, const T& d) : a(v), b(d) {}

  Dual& operator+=(const Dual& y) { a += y.a; b += y.b; return *this; }
  Dual& operator-=(const Dual& y) { a -= y.a; b -= y.b; return *this; }
  Dual& operator*=(const Dual& y) { *this = *this * y; return *this; }
  Dual& operator/=(const Dual& y) { *this = *this / y; return *this; }

  friend Dual operator+(const Dual& x) { return x; }
  friend Dual operator-(const Dual& x) { return {-x.a, -x.b}; }
  friend Dual operator+(const Dual& x, const Dual& y) { return {x.a + y.a, x.b + y.b}; }
  friend Dual operator-(const Dual& x, const Dual& y) { return {x.a - y.a, x.b - y.b}; }
  friend Dual operator*(const Dual& x, const Dual& y) { return {x.a * y.a, x.a * y.b + x.b * y.a}; }
  friend Dual operator/(const Dual& x, const Dual& y) {
    T inv = T(1.0) / y.a;
    T q = x.a * inv;
    return {q, (x.b - q * y.b) * inv};
  }
  friend Dual operator+(const Dual& x, double s) { return {x.a + s, x.b}; }
  friend Dual operator+(double s, const Dual& x) { return {x.a + s, x.b}; }
  friend Dual operator-(const Dual& x, double s) { return {x.a - s, x.b}; }
  friend Dual operator-(double s, const Dual& x) { return {s - x.a, -x.b}; }
  friend Dual operator*(const Dual& x, double s) { return {x.a * s, x.b * s}; }
  friend Dual operator*(double s, const Dual& x) { return {x.a * s, x.b * s}; }
  friend Dual operator/(const Dual& x, double s) { return {x.a / s, x.b / s}; }

  friend bool operator<(const Dual& x, const Dual& y) { return x.a < y.a; }
  friend bool operator>(const Dual& x, const Dual& y) { return x.a > y.a; }
  friend bool operator<=(const Dual& x, const Dual& y) { return x.a <= y.a; }
  friend bool operator>=(const Dual& x, const Dual& y) { return x.a >= y.a; }
  friend bool operator==(const Dual& x, const Dual& y) { return x.a == y.a && x.b == y.b; }
  friend bool operator!=(const Dual& x, const Dual& y) { return !(x == y); }

  friend Dual sin(const Dual& x) { using std::sin; using std::cos; return {sin(x.a), cos(x.a) * x.b}; }
  friend Dual cos(const Dual& x) { using std::sin; using std::cos; return {cos(x.a), -sin(x.a) * x.b}; }
  friend Dual tan(const Dual& x) {
    using std::tan;
    T t = tan(x.a);
    return {t, (T(1.0) + t * t) * x.b};
  }
  friend Dual exp(const Dual& x) { using std::exp; T e = exp(x.a); return {e, e * x.b}; }
  friend Dual log(const Dual& x) { using std::log; return {log(x.a), x.b / x.a}; }
  friend Dual sqrt(const Dual& x) {
    using std::sqrt;
    T r = sqrt(x.a);
    return {r, x.b / (2.0 * r)};
  }
  friend Dual sinh(const Dual& x) { using std::sinh; using std::cosh; return {sinh(x.a), cosh(x.a) * x.b}; }
  friend Dual cosh(const Dual& x) { using std::sinh; using std::cosh; return {cosh(x.a), sinh(x.a) * x.b}; }
  friend Dual tanh(const Dual& x) {
    using std::tanh;
    T t = tanh(x.a);
    return {t, (T(1.0) - t * t) * x.b};
  }
  friend Dual atan(const Dual& x) { using std::atan; return {atan(x.a), x.b / (T(1.0) + x.a * x.a)}; }
  friend Dual pow(const Dual& x, double p) {
    using std::pow;
    return {pow(x.a, p), p * pow(x.a, p - 1.0) * x.b};
  }
  friend Dual abs(const Dual& x) { return x.a < T(0.0) ? -x : x; }
  friend Dual fabs(const Dual& x) { return abs(x); }
  friend bool isfinite(const Dual& x) { using std::isfinite; return isfinite(x.a) && isfinite(x.b); }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;
using D5 = Dual<D4>;

inline double value(double x) { return x; }
template <class T>
double value(const Dual<T>& x) { return value(x.a); }

template <class S>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

template <class S>
struct dual_depth : std::integral_constant<int, 0> {};
template <class T>
struct dual_depth<Dual<T>> : std::integral_constant<int, 1 + dual_depth<T>::value> {};
template <class S>
inline constexpr int dual_depth_v = dual_depth<S>::value;

// Embeds a scalar of a lower tower level as a constant of level T.
template <class T, class S>
T lift(const S& s) {
  if constexpr (std::is_same_v<T, S>) {
    return s;
  } else {
    using Inner = decltype(T{}.a);
    return T(lift<Inner>(s));
  }
}

// Primal part of a dual (or of a container of duals) and its tangent part.
template <class T>
T primal(const Dual<T>& x) { return x.a; }
template <class T>
T tangent(const Dual<T>& x) { return x.b; }

template <class T, int R, int C>
Eigen::Matrix<T, R, C> primal(const Eigen::Matrix<Dual<T>, R, C>& m) {
  return m.unaryExpr([](const Dual<T>& x) { return x.a; });
}
template <class T, int R, int C>
Eigen::Matrix<T, R, C> tangent(const Eigen::Matrix<Dual<T>, R, C>& m) {
  return m.unaryExpr([](const Dual<T>& x) { return x.b; });
}

template <class T, class S, int R, int C>
Eigen::Matrix<T, R, C> lift(const Eigen::Matrix<S, R, C>& m) {
  return m.unaryExpr([](const S& x) { return lift<T>(x); });
}

}  // namespace anholoflow

namespace Eigen {

template <class T>
struct NumTraits<anholoflow::Dual<T>> : GenericNumTraits<anholoflow::Dual<T>> {
  using Real = anholoflow::Dual<T>;
  using NonInteger = Real;
  using Nested = Real;
  using Literal = Real;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost
  };
  static Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static Real dummy_precision() { return Real(1e-12); }
  static Real highest() { return Real(std::numeric_limits<double>::max()); }
  static Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static int digits10() { return std::numeric_limits<double>::digits10; }
  static int digits() { return std::numeric_limits<double>::digits; }
};

template <class T, typename Op>
struct ScalarBinaryOpTraits<anholoflow::Dual<T>, double, Op> {
  using ReturnType = anholoflow::Dual<T>;
};
template <class T, typename Op>
struct ScalarBinaryOpTraits<double, anholoflow::Dual<T>, Op> {
  using ReturnType = anholoflow::Dual<T>;
};

}  // namespace Eigen
