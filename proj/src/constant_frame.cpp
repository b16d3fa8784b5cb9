#include "anholoflow/constant_frame.hpp"

#include <Eigen/Eigenvalues>

namespace anholoflow {

namespace {

// Columns permuted so that the pivot signs follow the requested order.
MatD ordered_orthonormal(const MatD& g, const VecD& want) {
  VecD s;
  MatD A = ldl_orthonormal<double>(g, &s);
  const int d = static_cast<int>(g.rows());
  MatD out(d, d);
  std::vector<bool> used(d, false);
  for (int k = 0; k < d; ++k) {
    int pick = -1;
    for (int j = 0; j < d && pick < 0; ++j)
      if (!used[j] && s[j] == want[k]) pick = j;
    if (pick < 0) throw SignatureError("target signature does not match the base v-completion");
    used[pick] = true;
    out.col(k) = A.col(pick);
  }
  return out;
}

}  // namespace

MatD VielbeinField::operator()(const VecD& x) const {
  MatD gv = v_complete<double>(base(x), m);
  Eigen::SelfAdjointEigenSolver<MatD> eg(gv), et(target);
  const bool spd = eg.eigenvalues().minCoeff() > 0.0 && et.eigenvalues().minCoeff() > 0.0;
  if (spd) {
    // Symmetric solution g^{-1/2} (g^{1/2} t g^{1/2})^{1/2} g^{-1/2}.
    MatD r = eg.operatorSqrt();
    MatD ri = eg.operatorInverseSqrt();
    return ri * spd_sqrt(r * target * r) * ri;
  }
  VecD st;
  MatD At = ldl_orthonormal<double>(target, &st);
  return ordered_orthonormal(gv, st) * At.inverse();
}

double VielbeinField::residual(const VecD& x, const VecD& y) const {
  const MatD e = (*this)(x);
  const MatD gv = v_complete<double>(base(x), m);
  auto energy = [&](const auto& yy) {
    using T = typename std::decay_t<decltype(yy)>::Scalar;
    Vec<T> w = lift<T>(e) * yy;
    return T((w.transpose() * lift<T>(gv) * w)(0, 0));
  };
  double r = 0.0;
  for (int a = 0; a < m; ++a) {
    auto inner = [&](const Vec<D1>& q) { return partial<D1>(energy, q, a); };
    for (int b = 0; b < m; ++b) r = std::max(r, std::abs(0.5 * partial<double>(inner, y, b) - target(a, b)));
  }
  return r;
}

VielbeinField solve_vertical_vielbein(const MetricField& base, const MatD& target) {
  const int m = static_cast<int>(target.rows());
  if (target.cols() != m) throw DimensionError("target metric must be square");
  if (m < base.n) throw DimensionError("target dimension below base dimension");
  if ((target - target.transpose()).cwiseAbs().maxCoeff() > 1e-14) throw SignatureError("target is not symmetric");
  if (std::abs(target.determinant()) <= kDegeneracyTol) throw SignatureError("target metric is degenerate");
  VielbeinField v{base, m, target};
  // Signature compatibility is checked at a representative point.
  VecD x0 = 0.5 * (base.domain.lo + base.domain.hi);
  VecD st, sg;
  ldl_orthonormal<double>(target, &st);
  ldl_orthonormal<double>(v_complete<double>(base(x0), m), &sg);
  if (st.sum() != sg.sum()) throw SignatureError("target signature does not match the base v-completion");
  return v;
}

Tensor4<double> orthonormal_curvature(const DConnection& dc, const VecD& u) {
  const int D = dc.dm.dim();
  Tensor4<double> R = frame_curvature<double>(dc, u);
  MatD A = orthonormal_frame<double>(dc.dm, u);
  MatD Ai = A.inverse();
  // Contract one slot at a time.
  auto contract = [D](const Tensor4<double>& t, const MatD& M, int slot, bool upper) {
    Tensor4<double> r(D, D, D, D);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int k = 0; k < D; ++k) {
              int idx[4] = {a, b, c, d};
              const int out = idx[slot];
              idx[slot] = k;
              s += (upper ? M(out, k) : M(k, out)) * t(idx[0], idx[1], idx[2], idx[3]);
            }
            r(a, b, c, d) = s;
          }
    return r;
  };
  R = contract(R, Ai, 0, true);
  for (int s = 1; s < 4; ++s) R = contract(R, A, s, false);
  return R;
}

ConstantCurvatureReport constant_curvature_check(const DMetric& dm, const std::vector<VecD>& sample, double tol,
                                                 bool tm_mode) {
  if (sample.size() < 2) throw ConfigError("constant-curvature check needs at least two sample points");
  const int n = dm.n, D = dm.dim();
  DConnection dc = canonical_dconnection(dm, tm_mode);
  std::vector<Tensor4<double>> Rs;
  ConstantCurvatureReport rep;
  rep.tol = tol;
  for (const char* k : {"hh", "hv", "vhh", "vvh", "vv"}) rep.torsion[k] = 0.0;
  for (const auto& u : sample) {
    Rs.push_back(orthonormal_curvature(dc, u));
    rep.coefficient_max = std::max(rep.coefficient_max, max_abs(dc.gamma<double>(u)));
    auto t = dtorsion<double>(dc, u);
    rep.torsion["hh"] = std::max(rep.torsion["hh"], max_abs(t.hh));
    rep.torsion["hv"] = std::max(rep.torsion["hv"], max_abs(t.hv));
    rep.torsion["vhh"] = std::max(rep.torsion["vhh"], max_abs(t.vhh));
    rep.torsion["vvh"] = std::max(rep.torsion["vvh"], max_abs(t.vvh));
    rep.torsion["vv"] = std::max(rep.torsion["vv"], max_abs(t.vv));
  }
  // Block membership by the horizontal/vertical type of each slot.
  auto block_of = [n](int a, int b, int c, int d) -> const char* {
    const bool ha = a < n, hb = b < n, hc = c < n, hd = d < n;
    if (ha != hb) return nullptr;
    if (hc && hd) return ha ? "Rh" : "Rv";
    if (hc && !hd) return ha ? "Ph" : "Pv";
    if (!hc && !hd) return ha ? "Sh" : "Sv";
    return nullptr;  // (v, h) derivative slots mirror P by antisymmetry
  };
  for (const char* k : {"Rh", "Rv", "Ph", "Pv", "Sh", "Sv"}) rep.curvature[k] = BlockSpread{};
  const double inv = 1.0 / static_cast<double>(Rs.size());
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = 0; d < D; ++d) {
          const char* key = block_of(a, b, c, d);
          if (!key) continue;
          double mean = 0.0;
          for (const auto& R : Rs) mean += R(a, b, c, d) * inv;
          auto& bs = rep.curvature[key];
          for (const auto& R : Rs) {
            bs.spread = std::max(bs.spread, std::abs(R(a, b, c, d) - mean));
            bs.maximum = std::max(bs.maximum, std::abs(R(a, b, c, d)));
          }
        }
  rep.pass = true;
  for (auto& [k, bs] : rep.curvature) {
    bs.pass = bs.spread <= tol;
    rep.pass = rep.pass && bs.pass;
  }
  return rep;
}

double skew_structure_check(const DConnection& dc, const VecD& X, const VecD& u) {
  const int n = dc.dm.n, m = dc.dm.m, D = n + m;
  if (X.size() != D) throw DimensionError("tangent has wrong dimension");
  MatD g = dc.dm.g(u), h = dc.dm.h(u);
  const double norm = X.head(n).dot(g * X.head(n)) + X.tail(m).dot(h * X.tail(m));
  if (std::abs(norm - 1.0) > 1e-10)
    throw NormalizationError("tangent is not unit: g(X, X) = " + std::to_string(norm));
  MatD A = orthonormal_frame<double>(dc.dm, u);
  VecD eta = block_signature(dc.dm, u);
  MatD Ai = A.inverse();
  // X as a coordinate direction X^gamma e_gamma.
  MatD E = frame_matrix<double>(dc.dm.N, u);
  VecD dir = E.transpose() * X;
  auto afun = [&dc](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return orthonormal_frame<T>(dc.dm, q);
  };
  MatD XA = directional<double>(afun, u, dir);
  Tensor3<double> G = dc.gamma<double>(u);
  MatD GX = MatD::Zero(D, D);  // Gamma^alpha_{beta gamma} X^gamma
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c) GX(a, b) += G(a, b, c) * X[c];
  MatD low = eta.asDiagonal() * (Ai * (XA + GX * A));
  MatD sk = low + low.transpose();
  return std::max(sk.topLeftCorner(n, n).cwiseAbs().maxCoeff(), sk.bottomRightCorner(m, m).cwiseAbs().maxCoeff());
}

double skew_structure_check(const DMetric& dm, const VecD& X, const VecD& u) {
  return skew_structure_check(canonical_dconnection(dm), X, u);
}

}  // namespace anholoflow
