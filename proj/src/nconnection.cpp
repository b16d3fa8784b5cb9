#include "anholoflow/nconnection.hpp"

namespace anholoflow {

std::string to_string(NMode m) {
  switch (m) {
    case NMode::Canonical: return "canonical";
    case NMode::UserSupplied: return "user";
    case NMode::Linear: return "linear";
  }
  return "unknown";
}

NConnection canonical_nconnection(const MetricField& g, int m) {
  const int n = g.n;
  if (m < n) throw DimensionError("canonical N-connection needs m >= n");
  NConnection N;
  N.n = n;
  N.m = m;
  N.mode = NMode::Canonical;
  N.N = MatrixField([g, n, m](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Mat<S> out = Mat<S>::Zero(m, n);
    // Two extra dual levels are spent inside (y-derivative and christoffel).
    if constexpr (dual_depth_v<S> + 2 <= 5) {
      Vec<S> x = u.head(n);
      Vec<S> y = u.segment(n, n);
      for (int j = 0; j < n; ++j) {
        auto G = [&](const Vec<Dual<S>>& yy) {
          Vec<Dual<S>> xx = lift<Dual<S>>(x);
          return semispray<Dual<S>>(g, xx, yy);
        };
        Vec<S> col = partial<S>(G, y, j);
        out.block(0, j, n, 1) = col;
      }
    } else {
      throw EvaluationError("canonical N-connection: derivative depth exceeded");
    }
    return out;
  });
  return N;
}

NConnection user_nconnection(int n, int m, MatrixField f) {
  NConnection N;
  N.n = n;
  N.m = m;
  N.mode = NMode::UserSupplied;
  N.N = std::move(f);
  return N;
}

NConnection linear_nconnection(int n, int m, ConnectionField gamma) {
  NConnection N;
  N.n = n;
  N.m = m;
  N.mode = NMode::Linear;
  N.N = MatrixField([gamma, n, m](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Vec<S> x = u.head(n);
    Tensor3<S> G = gamma(x);
    Mat<S> out = Mat<S>::Zero(m, n);
    for (int a = 0; a < m; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < m; ++b) out(a, j) += G(a, b, j) * u[n + b];
    return out;
  });
  return N;
}

NConnection zero_nconnection(int n, int m) {
  return user_nconnection(n, m, MatrixField([n, m](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return Mat<S>::Zero(m, n).eval();
  }));
}

double NAdaptedFrame::duality_residual() const {
  MatD p = coframe * frame.transpose();
  return (p - MatD::Identity(p.rows(), p.cols())).cwiseAbs().maxCoeff();
}

NAdaptedFrame adapted_frame(const NConnection& N, const VecD& u) {
  return NAdaptedFrame{frame_matrix<double>(N, u), coframe_matrix<double>(N, u)};
}

VecD nonlinear_geodesic(const MetricField& g, const VecD& x0, const VecD& y0, double t_end, int steps) {
  const int n = g.n;
  auto rhs = [&](const VecD& s) {
    VecD x = s.head(n), y = s.tail(n);
    VecD d(2 * n);
    d.head(n) = y;
    d.tail(n) = -2.0 * semispray<double>(g, x, y);
    return d;
  };
  VecD s(2 * n);
  s << x0, y0;
  const double h = t_end / steps;
  for (int k = 0; k < steps; ++k) {
    VecD k1 = rhs(s);
    VecD k2 = rhs(s + 0.5 * h * k1);
    VecD k3 = rhs(s + 0.5 * h * k2);
    VecD k4 = rhs(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s.head(n);
}

}  // namespace anholoflow
