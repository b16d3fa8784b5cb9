#pragma once

// d-metrics, the canonical d-connection and its torsion, curvature and Ricci
// blocks, plus the Levi-Civita connection of the coordinate form.
//
// Index layout: u = (x^0..x^{n-1}, y^0..y^{m-1}); a vertical index a maps to
// the global index n + a. Connection tables store Gamma(alpha, beta, gamma)
// = Gamma^alpha_{beta gamma} with the derivative direction last.

#include <functional>

#include "anholoflow/nconnection.hpp"

namespace anholoflow {

struct DMetric {
  std::string name;
  int n = 2;
  int m = 2;
  MatrixField g;  // u -> n x n
  MatrixField h;  // u -> m x m
  NConnection N;
  bool tm = false;  // tangent-bundle identification a <-> i
  Box domain;       // sampling box in u

  int dim() const { return n + m; }
  template <class S>
  Mat<S> gblock(const Vec<S>& u) const { return g(u); }
  template <class S>
  Mat<S> hblock(const Vec<S>& u) const { return h(u); }
};

// Deformation factors applied entrywise to the lift (all default to 1).
struct Deformation {
  MatrixField eta_h;  // n x n
  MatrixField eta_v;  // n x n
  MatrixField eta_N;  // n x n
};

DMetric sasaki_lift(const MetricField& base, int m, const Deformation& def = {});
DMetric constant_dmetric(const MatD& g0, const MatD& h0, const NConnection& N);
DMetric product_dmetric(const MetricField& hbase, const MetricField& vbase, const NConnection& N);
DMetric general_dmetric(int n, int m, MatrixField g, MatrixField h, NConnection N);

// Coordinate (off-diagonal) form of the d-metric.
template <class S>
Mat<S> coordinate_form(const DMetric& dm, const Vec<S>& u) {
  const int n = dm.n, m = dm.m;
  Mat<S> g = dm.g(u), h = dm.h(u), N = dm.N(u);
  Mat<S> G(n + m, n + m);
  Mat<S> hN = h * N;
  Mat<S> top = g + N.transpose() * hN;
  G.topLeftCorner(n, n) = 0.5 * (top + top.transpose());
  G.bottomLeftCorner(m, n) = hN;
  G.topRightCorner(n, m) = hN.transpose();
  G.bottomRightCorner(m, m) = h;
  return G;
}

struct DBlocks {
  MatD g, h, N;
};
DBlocks extract_blocks(const MatD& coord, int n, int m);

enum class ConnKind { Canonical, CanonicalTM, Zero };

template <class S>
struct DCoeffs {
  Tensor3<S> Lh;  // L^i_{jk}  (n, n, n)
  Tensor3<S> Lv;  // L^a_{bk}  (m, m, n)
  Tensor3<S> Ch;  // C^i_{jc}  (n, n, m)
  Tensor3<S> Cv;  // C^a_{bc}  (m, m, m)
};

// Geometric data at one point: blocks, inverses, N and frame derivatives.
template <class S>
struct PointData {
  int n = 0, m = 0;
  Mat<S> g, h, gi, hi, N;
  std::vector<Mat<S>> eg, eh;  // e_alpha g, e_alpha h for alpha < n + m
  std::vector<Mat<S>> dN;      // d_mu N for mu < n + m

  PointData(const DMetric& dm, const Vec<S>& u) : n(dm.n), m(dm.m) {
    const int D = n + m;
    g = dm.g(u);
    h = dm.h(u);
    N = dm.N(u);
    gi = invert_symmetric<S>(g);
    hi = invert_symmetric<S>(h);
    std::vector<Mat<S>> dg, dh;
    for (int mu = 0; mu < D; ++mu) {
      dg.push_back(partial<S>(dm.g, u, mu));
      dh.push_back(partial<S>(dm.h, u, mu));
      dN.push_back(partial<S>(dm.N.N, u, mu));
    }
    eg = dg;
    eh = dh;
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < m; ++a) {
        eg[k] -= N(a, k) * dg[n + a];
        eh[k] -= N(a, k) * dh[n + a];
      }
  }
};

template <class S>
DCoeffs<S> dconnection_coefficients(const DMetric& dm, ConnKind kind, const Vec<S>& u) {
  const int n = dm.n, m = dm.m;
  DCoeffs<S> c{Tensor3<S>(n, n, n), Tensor3<S>(m, m, n), Tensor3<S>(n, n, m), Tensor3<S>(m, m, m)};
  if (kind == ConnKind::Zero) return c;
  if (kind == ConnKind::CanonicalTM && (!dm.tm || n != m))
    throw DimensionError("tangent-bundle mode needs a TM d-metric");
  PointData<S> p(dm, u);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        S s(0.0);
        for (int r = 0; r < n; ++r) s += p.gi(i, r) * (p.eg[k](j, r) + p.eg[j](k, r) - p.eg[r](j, k));
        c.Lh(i, j, k) = 0.5 * s;
      }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc) {
        S s(0.0);
        for (int d = 0; d < m; ++d)
          s += p.hi(a, d) * (p.eh[n + cc](b, d) + p.eh[n + b](cc, d) - p.eh[n + d](b, cc));
        c.Cv(a, b, cc) = 0.5 * s;
      }
  if (kind == ConnKind::CanonicalTM) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          c.Lv(i, j, k) = c.Lh(i, j, k);
          c.Ch(i, j, k) = c.Cv(i, j, k);
        }
    return c;
  }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        S s(0.0);
        for (int cc = 0; cc < m; ++cc) {
          S t = p.eh[k](b, cc);
          for (int d = 0; d < m; ++d) t -= p.h(d, cc) * p.dN[n + b](d, k) + p.h(d, b) * p.dN[n + cc](d, k);
          s += p.hi(a, cc) * t;
        }
        c.Lv(a, b, k) = p.dN[n + b](a, k) + 0.5 * s;
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int cc = 0; cc < m; ++cc) {
        S s(0.0);
        for (int k = 0; k < n; ++k) s += p.gi(i, k) * p.eg[n + cc](j, k);
        c.Ch(i, j, cc) = 0.5 * s;
      }
  return c;
}

template <class S>
Tensor3<S> assemble_gamma(const DCoeffs<S>& c, int n, int m) {
  const int D = n + m;
  Tensor3<S> G(D, D, D);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) G(i, j, k) = c.Lh(i, j, k);
      for (int a = 0; a < m; ++a) G(i, j, n + a) = c.Ch(i, j, a);
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      for (int k = 0; k < n; ++k) G(n + a, n + b, k) = c.Lv(a, b, k);
      for (int cc = 0; cc < m; ++cc) G(n + a, n + b, n + cc) = c.Cv(a, b, cc);
    }
  return G;
}

struct DConnection {
  DMetric dm;
  ConnKind kind = ConnKind::Canonical;

  template <class S>
  DCoeffs<S> coeffs(const Vec<S>& u) const { return dconnection_coefficients<S>(dm, kind, u); }
  template <class S>
  Tensor3<S> gamma(const Vec<S>& u) const { return assemble_gamma<S>(coeffs<S>(u), dm.n, dm.m); }
};

DConnection canonical_dconnection(const DMetric& dm, bool tm_mode = false);

template <class S>
struct TorsionBlocks {
  Tensor3<S> hh;   // T^i_{jk}
  Tensor3<S> hv;   // T^i_{ja}
  Tensor3<S> vhh;  // T^a_{ji}
  Tensor3<S> vvh;  // T^a_{bi}
  Tensor3<S> vv;   // T^a_{bc}
};

template <class S>
TorsionBlocks<S> dtorsion(const DConnection& dc, const Vec<S>& u) {
  const int n = dc.dm.n, m = dc.dm.m;
  DCoeffs<S> c = dc.coeffs<S>(u);
  TorsionBlocks<S> t{Tensor3<S>(n, n, n), Tensor3<S>(n, n, m), Tensor3<S>(m, n, n), Tensor3<S>(m, m, n),
                     Tensor3<S>(m, m, m)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) t.hh(i, j, k) = c.Lh(i, j, k) - c.Lh(i, k, j);
      for (int a = 0; a < m; ++a) t.hv(i, j, a) = c.Ch(i, j, a);
    }
  t.vhh = nconnection_curvature<S>(dc.dm.N, u);
  for (int b = 0; b < m; ++b) {
    Mat<S> dNb = partial<S>(dc.dm.N.N, u, n + b);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i) t.vvh(a, b, i) = dNb(a, i) - c.Lv(a, b, i);
  }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc) t.vv(a, b, cc) = c.Cv(a, b, cc) - c.Cv(a, cc, b);
  return t;
}

// Full curvature R(alpha, beta, gamma, delta) in the N-adapted frame:
// e_d G^a_{bc} - e_c G^a_{bd} + G^f_{bc} G^a_{fd} - G^f_{bd} G^a_{fc} + G^a_{bf} W^f_{cd}.
template <class S>
Tensor4<S> frame_curvature(const DConnection& dc, const Vec<S>& u) {
  const int n = dc.dm.n, m = dc.dm.m, D = n + m;
  Tensor3<S> G = dc.gamma<S>(u);
  Tensor3<S> W = anholonomy<S>(dc.dm.N, u);
  Mat<S> E = frame_matrix<S>(dc.dm.N, u);
  auto gfun = [&dc](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return dc.gamma<T>(q);
  };
  std::vector<Tensor3<S>> eG;
  eG.reserve(D);
  for (int d = 0; d < D; ++d) {
    Vec<S> dir = E.row(d).transpose();
    eG.push_back(directional<S>(gfun, u, dir));
  }
  Tensor4<S> R(D, D, D, D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = c + 1; d < D; ++d) {
          S s = eG[d](a, b, c) - eG[c](a, b, d);
          for (int f = 0; f < D; ++f)
            s += G(f, b, c) * G(a, f, d) - G(f, b, d) * G(a, f, c) + G(a, b, f) * W(f, c, d);
          R(a, b, c, d) = s;
          R(a, b, d, c) = -s;
        }
  return R;
}

template <class S>
struct CurvatureBlocks {
  Tensor4<S> R;  // full frame curvature
  int n = 0, m = 0;

  S Rh(int i, int h, int j, int k) const { return R(i, h, j, k); }
  S Rv(int a, int b, int j, int k) const { return R(n + a, n + b, j, k); }
  S Ph(int i, int j, int k, int a) const { return R(i, j, k, n + a); }
  S Pv(int c, int b, int k, int a) const { return R(n + c, n + b, k, n + a); }
  S Sh(int i, int j, int b, int c) const { return R(i, j, n + b, n + c); }
  S Sv(int a, int b, int c, int d) const { return R(n + a, n + b, n + c, n + d); }
};

template <class S>
CurvatureBlocks<S> dcurvature(const DConnection& dc, const Vec<S>& u) {
  return CurvatureBlocks<S>{frame_curvature<S>(dc, u), dc.dm.n, dc.dm.m};
}

template <class S>
struct RicciBlocks {
  Mat<S> Rhh;  // R_ij
  Mat<S> Rhv;  // R_ia
  Mat<S> Rvh;  // R_ai
  Mat<S> Svv;  // S_ab
  S Rs;        // g^ij R_ij
  S Ss;        // h^ab S_ab

  // Full D x D Ricci d-tensor.
  Mat<S> full() const {
    const int n = static_cast<int>(Rhh.rows()), m = static_cast<int>(Svv.rows());
    Mat<S> r(n + m, n + m);
    r.topLeftCorner(n, n) = Rhh;
    r.topRightCorner(n, m) = Rhv;
    r.bottomLeftCorner(m, n) = Rvh;
    r.bottomRightCorner(m, m) = Svv;
    return r;
  }
};

template <class S>
RicciBlocks<S> ricci_and_scalar(const DMetric& dm, const CurvatureBlocks<S>& cb, const Vec<S>& u) {
  const int n = dm.n, m = dm.m, D = n + m;
  Mat<S> ric = Mat<S>::Zero(D, D);
  for (int b = 0; b < D; ++b)
    for (int c = 0; c < D; ++c) {
      S s(0.0);
      for (int a = 0; a < D; ++a) s += cb.R(a, b, c, a);
      ric(b, c) = s;
    }
  Mat<S> gi = invert_symmetric<S>(dm.g(u));
  Mat<S> hi = invert_symmetric<S>(dm.h(u));
  RicciBlocks<S> r;
  r.Rhh = ric.topLeftCorner(n, n);
  r.Rhv = ric.topRightCorner(n, m);
  r.Rvh = ric.bottomLeftCorner(m, n);
  r.Svv = ric.bottomRightCorner(m, m);
  r.Rs = (gi.cwiseProduct(r.Rhh.transpose())).sum();
  r.Ss = (hi.cwiseProduct(r.Svv.transpose())).sum();
  return r;
}

template <class S>
RicciBlocks<S> ricci_at(const DConnection& dc, const Vec<S>& u) {
  return ricci_and_scalar<S>(dc.dm, dcurvature<S>(dc, u), u);
}

// Coordinate Christoffel symbols of the coordinate form.
template <class S>
Tensor3<S> levi_civita(const DMetric& dm, const Vec<S>& u) {
  const int D = dm.dim();
  auto G = [&dm](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return coordinate_form<T>(dm, q);
  };
  Mat<S> g = G(u);
  Mat<S> gi = invert_symmetric<S>(g);
  std::vector<Mat<S>> dg;
  for (int mu = 0; mu < D; ++mu) dg.push_back(partial<S>(G, u, mu));
  Tensor3<S> gam(D, D, D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = b; c < D; ++c) {
        S s(0.0);
        for (int mu = 0; mu < D; ++mu) s += gi(a, mu) * (dg[c](b, mu) + dg[b](c, mu) - dg[mu](b, c));
        gam(a, b, c) = 0.5 * s;
        gam(a, c, b) = gam(a, b, c);
      }
  return gam;
}

// max |d_c g_ab - G^f_{ac} g_fb - G^f_{bc} g_af| for coordinate symbols.
double levi_civita_residual(const DMetric& dm, const VecD& u);

// Levi-Civita symbols expressed in the N-adapted frame.
Tensor3<double> levi_civita_in_frame(const DMetric& dm, const VecD& u);

// max over D_j g_kl, D_a g_kl, D_j h_ab, D_a h_bc.
double compatibility_residual(const DConnection& dc, const VecD& u);

// Block transform A with A^T g A = eta per block.
template <class S>
Mat<S> ldl_orthonormal(const Mat<S>& g, Vec<S>* signs) {
  const int n = static_cast<int>(g.rows());
  Mat<S> L = Mat<S>::Identity(n, n);
  Vec<S> d(n);
  for (int j = 0; j < n; ++j) {
    S s = g(j, j);
    for (int k = 0; k < j; ++k) s -= L(j, k) * L(j, k) * d[k];
    if (!(std::abs(value(s)) > kDegeneracyTol)) throw SignatureError("zero pivot in block orthonormalization");
    d[j] = s;
    for (int i = j + 1; i < n; ++i) {
      S t = g(i, j);
      for (int k = 0; k < j; ++k) t -= L(i, k) * L(j, k) * d[k];
      L(i, j) = t / s;
    }
  }
  // A = L^{-T} |D|^{-1/2}
  Mat<S> Linv = L.template triangularView<Eigen::UnitLower>().solve(Mat<S>::Identity(n, n));
  Mat<S> A = Linv.transpose();
  for (int j = 0; j < n; ++j) {
    using std::sqrt;
    S mag = value(d[j]) < 0.0 ? -d[j] : d[j];
    A.col(j) /= sqrt(mag);
  }
  if (signs) {
    signs->resize(n);
    for (int j = 0; j < n; ++j) (*signs)[j] = S(value(d[j]) < 0.0 ? -1.0 : 1.0);
  }
  return A;
}

template <class S>
Mat<S> orthonormal_frame(const DMetric& dm, const Vec<S>& u, const VecD* eta = nullptr) {
  const int n = dm.n, m = dm.m;
  Vec<S> sh, sv;
  Mat<S> Ah = ldl_orthonormal<S>(dm.g(u), &sh);
  Mat<S> Av = ldl_orthonormal<S>(dm.h(u), &sv);
  Mat<S> A = Mat<S>::Zero(n + m, n + m);
  A.topLeftCorner(n, n) = Ah;
  A.bottomRightCorner(m, m) = Av;
  if (eta) {
    Vec<S> s(n + m);
    s << sh, sv;
    for (int k = 0; k < n + m; ++k)
      if (value(s[k]) != (*eta)[k]) throw SignatureError("block signature does not match the declared eta");
  }
  return A;
}

MatD orthonormalize(const DMetric& dm, const VecD& u, const VecD* eta = nullptr);

// Signs of the block pivots, ordered (h, v).
VecD block_signature(const DMetric& dm, const VecD& u);

// Named bundle fixtures: Sasaki lifts of the base catalog plus
// constant-block, product and user-style examples.
DMetric make_dmetric(const std::string& name, int n, int m, const Params& params = {});
std::vector<std::string> dmetric_names();

}  // namespace anholoflow
