#pragma once

// Semispray, canonical N-connection, N-adapted frames, anholonomy and
// N-connection curvature.

#include "anholoflow/tensor_core.hpp"

namespace anholoflow {

enum class NMode { Canonical, UserSupplied, Linear };

std::string to_string(NMode m);

// Coefficients N^a_i(x, y) stored as an m x n matrix, row a, column i.
struct NConnection {
  int n = 2;
  int m = 2;
  NMode mode = NMode::UserSupplied;
  MatrixField N;

  template <class S>
  Mat<S> operator()(const Vec<S>& u) const {
    if (u.size() != n + m) throw EvaluationError("N-connection evaluated at point of wrong dimension");
    return N(u);
  }
};

// Levi-Civita symbols of the base metric, gamma(i, l, m) = gamma^i_{lm}.
template <class S>
Tensor3<S> christoffel(const MetricField& g, const Vec<S>& x) {
  const int n = g.n;
  Mat<S> gx = g(x);
  Mat<S> gi = invert_symmetric<S>(gx);
  std::vector<Mat<S>> dg;
  dg.reserve(n);
  for (int h = 0; h < n; ++h) dg.push_back(partial<S>(g.g, x, h));
  Tensor3<S> gam(n, n, n);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l)
      for (int m = l; m < n; ++m) {
        S s(0.0);
        for (int h = 0; h < n; ++h) s += gi(i, h) * (dg[m](l, h) + dg[l](m, h) - dg[h](l, m));
        gam(i, l, m) = 0.5 * s;
        gam(i, m, l) = gam(i, l, m);
      }
  return gam;
}

// Vertical metric: half the y-Hessian of g_ab(x) y^a y^b.
template <class S>
Mat<S> vertical_metric(const MetricField& g, const Vec<S>& x, const Vec<S>& y) {
  const int n = g.n;
  if (y.size() != n) throw DimensionError("vertical metric needs y of dimension n");
  const Mat<S> gx = g(x);
  auto energy = [&gx](const auto& yy) {
    using T = typename std::decay_t<decltype(yy)>::Scalar;
    Mat<T> gt = lift<T>(gx);
    return T((yy.transpose() * gt * yy)(0, 0));
  };
  Mat<S> h(n, n);
  for (int a = 0; a < n; ++a) {
    auto inner = [&](const Vec<Dual<S>>& q) { return partial<Dual<S>>(energy, q, a); };
    for (int b = 0; b < n; ++b) h(a, b) = 0.5 * partial<S>(inner, y, b);
  }
  return h;
}

// G^i = 1/4 gt^{ij} g_jk gamma^k_{lm} y^l y^m.
template <class S>
Vec<S> semispray(const MetricField& g, const Vec<S>& x, const Vec<S>& y) {
  const int n = g.n;
  Mat<S> gt = vertical_metric<S>(g, x, y);
  S det = determinant<S>(gt);
  if (!(std::abs(value(det)) > kDegeneracyTol))
    throw RegularityError("vertical metric is degenerate: |det| = " + std::to_string(std::abs(value(det))));
  Mat<S> gti = invert_symmetric<S>(gt);
  Mat<S> gx = g(x);
  Tensor3<S> gam = christoffel<S>(g, x);
  Vec<S> q = Vec<S>::Zero(n);  // gamma^k_{lm} y^l y^m
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) q[k] += gam(k, l, m) * y[l] * y[m];
  return (0.25 * (gti * (gx * q))).eval();
}

// N^a_i = dG^a/dy^i on the first n fibre coordinates; rows a >= n vanish.
NConnection canonical_nconnection(const MetricField& g, int m);

NConnection user_nconnection(int n, int m, MatrixField N);

// N^a_j = Gamma^a_{bj}(x) y^b with Gamma given as gam(a, b, j).
using ConnectionField = Field<Tensor3>;
NConnection linear_nconnection(int n, int m, ConnectionField gamma);

NConnection zero_nconnection(int n, int m);

// Omega(a, i, j) = Omega^a_{ij}.
template <class S>
Tensor3<S> nconnection_curvature(const NConnection& N, const Vec<S>& u) {
  const int n = N.n, m = N.m;
  Mat<S> Nu = N(u);
  std::vector<Mat<S>> dN;
  dN.reserve(n + m);
  for (int mu = 0; mu < n + m; ++mu) dN.push_back(partial<S>(N.N, u, mu));
  Tensor3<S> om(m, n, n);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S s = dN[j](a, i) - dN[i](a, j);
        for (int b = 0; b < m; ++b) s += Nu(b, i) * dN[n + b](a, j) - Nu(b, j) * dN[n + b](a, i);
        om(a, i, j) = s;
      }
  return om;
}

// W(c, a, b) = W^c_{ab} with [e_a, e_b] = W^c_{ab} e_c over all D = n + m indices.
template <class S>
Tensor3<S> anholonomy(const NConnection& N, const Vec<S>& u) {
  const int n = N.n, m = N.m, D = n + m;
  Tensor3<S> W(D, D, D);
  Tensor3<S> om = nconnection_curvature<S>(N, u);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) W(n + a, i, j) = om(a, i, j);
  for (int a = 0; a < m; ++a) {
    Mat<S> dNa = partial<S>(N.N, u, n + a);
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < n; ++i) {
        W(n + b, i, n + a) = dNa(b, i);
        W(n + b, n + a, i) = -dNa(b, i);
      }
  }
  return W;
}

// Frame vectors e_alpha as rows of a D x D matrix in the coordinate basis.
template <class S>
Mat<S> frame_matrix(const NConnection& N, const Vec<S>& u) {
  const int n = N.n, m = N.m, D = n + m;
  Mat<S> Nu = N(u);
  Mat<S> E = Mat<S>::Identity(D, D);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) E(i, n + a) = -Nu(a, i);
  return E;
}

// Coframe e^alpha as rows: e^a = dy^a + N^a_i dx^i.
template <class S>
Mat<S> coframe_matrix(const NConnection& N, const Vec<S>& u) {
  const int n = N.n, m = N.m, D = n + m;
  Mat<S> Nu = N(u);
  Mat<S> C = Mat<S>::Identity(D, D);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) C(n + a, i) = Nu(a, i);
  return C;
}

struct NAdaptedFrame {
  MatD frame;    // rows e_alpha
  MatD coframe;  // rows e^alpha
  // max |coframe * frame^T - I|
  double duality_residual() const;
};

NAdaptedFrame adapted_frame(const NConnection& N, const VecD& u);

// Derivative of a scalar function along e_alpha at u.
template <class S, class F>
S frame_derivative(const NConnection& N, const F& f, const Vec<S>& u, int alpha) {
  Mat<S> E = frame_matrix<S>(N, u);
  Vec<S> d = E.row(alpha).transpose();
  return directional<S>(f, u, d);
}

// Integrates x'' + 2 G(x, x') = 0 with classical RK4; returns x at t_end.
VecD nonlinear_geodesic(const MetricField& g, const VecD& x0, const VecD& y0, double t_end, int steps);

}  // namespace anholoflow
