#pragma once

// Charts, differentiable fields and the small dense helpers shared by the
// geometry modules. Every field is a plain evaluator that can be called with
// double or with nested dual scalars up to depth five.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "anholoflow/dual.hpp"
#include "anholoflow/errors.hpp"

namespace anholoflow {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using VecD = Vec<double>;
using MatD = Mat<double>;

inline constexpr double kDegeneracyTol = 1e-12;

struct Chart {
  int n = 2;  // horizontal dimension
  int m = 2;  // vertical dimension
  bool tangent_bundle = true;
  std::vector<std::string> labels;

  Chart() = default;
  Chart(int n_, int m_, bool tm = false);
  int dim() const { return n + m; }
  void validate() const;
};

// Rank-3 array, index order (upper, lower, lower).
template <class S>
struct Tensor3 {
  int d0 = 0, d1 = 0, d2 = 0;
  std::vector<S> data;

  Tensor3() = default;
  Tensor3(int a, int b, int c) : d0(a), d1(b), d2(c), data(std::size_t(a) * b * c, S(0.0)) {}
  S& operator()(int i, int j, int k) { return data[(std::size_t(i) * d1 + j) * d2 + k]; }
  const S& operator()(int i, int j, int k) const { return data[(std::size_t(i) * d1 + j) * d2 + k]; }
};

template <class S>
struct Tensor4 {
  int d0 = 0, d1 = 0, d2 = 0, d3 = 0;
  std::vector<S> data;

  Tensor4() = default;
  Tensor4(int a, int b, int c, int d)
      : d0(a), d1(b), d2(c), d3(d), data(std::size_t(a) * b * c * d, S(0.0)) {}
  S& operator()(int i, int j, int k, int l) {
    return data[((std::size_t(i) * d1 + j) * d2 + k) * d3 + l];
  }
  const S& operator()(int i, int j, int k, int l) const {
    return data[((std::size_t(i) * d1 + j) * d2 + k) * d3 + l];
  }
};

template <class T>
Tensor3<T> tangent(const Tensor3<Dual<T>>& t) {
  Tensor3<T> r(t.d0, t.d1, t.d2);
  for (std::size_t i = 0; i < t.data.size(); ++i) r.data[i] = t.data[i].b;
  return r;
}
template <class T>
Tensor3<T> primal(const Tensor3<Dual<T>>& t) {
  Tensor3<T> r(t.d0, t.d1, t.d2);
  for (std::size_t i = 0; i < t.data.size(); ++i) r.data[i] = t.data[i].a;
  return r;
}

template <class S>
Tensor3<double> to_double(const Tensor3<S>& t) {
  Tensor3<double> r(t.d0, t.d1, t.d2);
  for (std::size_t i = 0; i < t.data.size(); ++i) r.data[i] = value(t.data[i]);
  return r;
}

template <class S>
double max_abs(const Tensor3<S>& t) {
  double m = 0.0;
  for (const auto& x : t.data) m = std::max(m, std::abs(value(x)));
  return m;
}
template <class S>
double max_abs(const Tensor4<S>& t) {
  double m = 0.0;
  for (const auto& x : t.data) m = std::max(m, std::abs(value(x)));
  return m;
}

template <class S>
Mat<double> to_double(const Mat<S>& m) {
  return m.unaryExpr([](const S& x) { return value(x); });
}

// Type-erased evaluator over the scalar tower double, D1 ... D5.
template <class S>
using Scalar = S;

template <template <class> class Out>
class Field {
 public:
  template <class S>
  using Fn = std::function<Out<S>(const Vec<S>&)>;

  Field() = default;
  template <class F, std::enable_if_t<!std::is_same_v<std::decay_t<F>, Field>, int> = 0>
  explicit Field(F f) : fns_(Fn<double>(f), Fn<D1>(f), Fn<D2>(f), Fn<D3>(f), Fn<D4>(f), Fn<D5>(f)) {}

  template <class S>
  Out<S> operator()(const Vec<S>& p) const {
    const auto& fn = std::get<Fn<S>>(fns_);
    if (!fn) throw EvaluationError("empty field evaluator");
    return fn(p);
  }
  explicit operator bool() const { return static_cast<bool>(std::get<0>(fns_)); }

 private:
  std::tuple<Fn<double>, Fn<D1>, Fn<D2>, Fn<D3>, Fn<D4>, Fn<D5>> fns_;
};

using MatrixField = Field<Mat>;
using ScalarField = Field<Scalar>;

using Rng = std::mt19937_64;

// Coordinate box used for random sampling and lattices.
struct Box {
  VecD lo, hi;
  VecD sample(Rng& rng) const;
  bool contains(const VecD& p) const;
};

// Base metric g_ij(x) on an n-dimensional chart.
struct MetricField {
  std::string name;
  int n = 2;
  MatrixField g;
  std::optional<VecD> signature;  // entries of +-1
  Box domain;                     // where the fixture is regular

  template <class S>
  Mat<S> operator()(const Vec<S>& x) const {
    if (x.size() != n) throw EvaluationError("metric evaluated at point of wrong dimension");
    return g(x);
  }
};

// Directional derivative of f at p along d.
template <class S, class F>
auto directional(const F& f, const Vec<S>& p, const Vec<S>& d) {
  Vec<Dual<S>> q(p.size());
  for (int i = 0; i < p.size(); ++i) q[i] = Dual<S>(p[i], d[i]);
  return tangent(f(q));
}

template <class S, class F>
auto partial(const F& f, const Vec<S>& p, int k) {
  Vec<S> d = Vec<S>::Zero(p.size());
  d[k] = S(1.0);
  return directional(f, p, d);
}

template <class S>
Vec<S> unit(int dim, int k) {
  Vec<S> d = Vec<S>::Zero(dim);
  d[k] = S(1.0);
  return d;
}

// Derivative of a scalar field; multi_index has at most two entries.
double eval_derivative(const ScalarField& f, const VecD& point, const std::vector<int>& multi_index);

template <class S>
S determinant(const Mat<S>& a) {
  return a.rows() == 0 ? S(1.0) : a.partialPivLu().determinant();
}

template <class S>
Mat<S> invert_symmetric(const Mat<S>& a) {
  if (a.rows() != a.cols()) throw DimensionError("invert_symmetric needs a square matrix");
  S det = determinant<S>(a);
  double dv = value(det);
  if (!(std::abs(dv) > kDegeneracyTol)) {
    throw SingularMetricError("singular metric: |det| = " + std::to_string(std::abs(dv)) +
                                  " <= 1e-12",
                              dv);
  }
  Mat<S> inv = a.partialPivLu().inverse();
  return (0.5 * (inv + inv.transpose())).eval();
}

// Symmetric positive definite square root and its inverse (double only).
MatD spd_sqrt(const MatD& a);

// Catalog of base metrics; params fall back to defaults when absent.
using Params = std::map<std::string, double>;
MetricField make_base_metric(const std::string& name, int n, const Params& params = {});
std::vector<std::string> base_metric_names();

// Completes an n x n matrix to m x m by appending diagonal entries.
template <class S>
Mat<S> v_complete(const Mat<S>& g, int m, double fill = 1.0) {
  const int n = static_cast<int>(g.rows());
  if (m < n) throw DimensionError("vertical dimension smaller than horizontal");
  Mat<S> h = Mat<S>::Zero(m, m);
  h.topLeftCorner(n, n) = g;
  for (int a = n; a < m; ++a) h(a, a) = S(fill);
  return h;
}


}  // namespace anholoflow
