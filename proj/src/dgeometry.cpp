#include "anholoflow/dgeometry.hpp"

namespace anholoflow {

namespace {

Box lift_box(const Box& base, int m, double ylo, double yhi) {
  const int n = static_cast<int>(base.lo.size());
  Box b{VecD(n + m), VecD(n + m)};
  b.lo << base.lo, VecD::Constant(m, ylo);
  b.hi << base.hi, VecD::Constant(m, yhi);
  return b;
}

template <class S>
Mat<S> apply_factor(const MatrixField& f, const Vec<S>& u, Mat<S> a) {
  if (!f) return a;
  return a.cwiseProduct(f(u));
}

}  // namespace

DMetric sasaki_lift(const MetricField& base, int m, const Deformation& def) {
  const int n = base.n;
  if (m < n) throw DimensionError("Sasaki lift needs m >= n");
  DMetric dm;
  dm.name = "sasaki:" + base.name;
  dm.n = n;
  dm.m = m;
  dm.tm = (m == n);
  NConnection Nc = canonical_nconnection(base, m);
  // The lift evaluates the canonical N at depth S, which spends two levels.
  auto vmetric = [base, n](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Vec<S> x = u.head(n), y = u.segment(n, n);
    return vertical_metric<S>(base, x, y);
  };
  dm.g = MatrixField([vmetric, eta = def.eta_h](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return apply_factor<S>(eta, u, vmetric(u));
  });
  dm.h = MatrixField([vmetric, eta = def.eta_v, m](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return v_complete<S>(apply_factor<S>(eta, u, vmetric(u)), m);
  });
  if (def.eta_N) {
    NConnection Nd = Nc;
    Nd.mode = NMode::UserSupplied;
    Nd.N = MatrixField([Nc, eta = def.eta_N, n, m](const auto& u) {
      using S = typename std::decay_t<decltype(u)>::Scalar;
      Mat<S> N = Nc(u);
      Mat<S> e = eta(u);
      for (int a = 0; a < n; ++a)
        for (int j = 0; j < n; ++j) N(a, j) *= e(a, j);
      (void)m;
      return N;
    });
    dm.N = Nd;
  } else {
    dm.N = Nc;
  }
  dm.domain = lift_box(base.domain, m, -1.0, 1.0);
  return dm;
}

DMetric constant_dmetric(const MatD& g0, const MatD& h0, const NConnection& N) {
  DMetric dm;
  dm.name = "constant";
  dm.n = static_cast<int>(g0.rows());
  dm.m = static_cast<int>(h0.rows());
  dm.tm = false;
  dm.g = MatrixField([g0](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return lift<S>(g0);
  });
  dm.h = MatrixField([h0](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return lift<S>(h0);
  });
  dm.N = N;
  dm.domain = Box{VecD::Constant(dm.n + dm.m, -1.0), VecD::Constant(dm.n + dm.m, 1.0)};
  return dm;
}

DMetric product_dmetric(const MetricField& hbase, const MetricField& vbase, const NConnection& N) {
  DMetric dm;
  dm.name = "product:" + hbase.name + "x" + vbase.name;
  const int n = hbase.n, m = vbase.n;
  dm.n = n;
  dm.m = m;
  dm.tm = (n == m);
  dm.g = MatrixField([hbase, n](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Vec<S> x = u.head(n);
    return hbase(x);
  });
  dm.h = MatrixField([vbase, n, m](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Vec<S> y = u.segment(n, m);
    return vbase(y);
  });
  dm.N = N;
  dm.domain = Box{VecD(n + m), VecD(n + m)};
  dm.domain.lo << hbase.domain.lo, vbase.domain.lo;
  dm.domain.hi << hbase.domain.hi, vbase.domain.hi;
  return dm;
}

DMetric general_dmetric(int n, int m, MatrixField g, MatrixField h, NConnection N) {
  if (N.n != n || N.m != m) throw DimensionError("N-connection dimensions do not match the d-metric");
  DMetric dm;
  dm.name = "user";
  dm.n = n;
  dm.m = m;
  dm.tm = (n == m);
  dm.g = std::move(g);
  dm.h = std::move(h);
  dm.N = std::move(N);
  dm.domain = Box{VecD::Constant(n + m, -1.0), VecD::Constant(n + m, 1.0)};
  return dm;
}

DBlocks extract_blocks(const MatD& G, int n, int m) {
  if (G.rows() != n + m || G.cols() != n + m) throw DimensionError("coordinate form has wrong size");
  DBlocks b;
  b.h = G.bottomRightCorner(m, m);
  MatD hi = invert_symmetric<double>(b.h);
  b.N = hi * G.bottomLeftCorner(m, n);
  b.g = G.topLeftCorner(n, n) - b.N.transpose() * b.h * b.N;
  return b;
}

DConnection canonical_dconnection(const DMetric& dm, bool tm_mode) {
  if (tm_mode && (!dm.tm || dm.n != dm.m)) throw DimensionError("tangent-bundle mode needs a TM d-metric");
  return DConnection{dm, tm_mode ? ConnKind::CanonicalTM : ConnKind::Canonical};
}

double levi_civita_residual(const DMetric& dm, const VecD& u) {
  const int D = dm.dim();
  auto G = [&dm](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return coordinate_form<T>(dm, q);
  };
  MatD g = G(u);
  Tensor3<double> gam = levi_civita<double>(dm, u);
  double r = 0.0;
  for (int c = 0; c < D; ++c) {
    MatD dg = partial<double>(G, u, c);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        double s = dg(a, b);
        for (int f = 0; f < D; ++f) s -= gam(f, a, c) * g(f, b) + gam(f, b, c) * g(a, f);
        r = std::max(r, std::abs(s));
      }
  }
  return r;
}

Tensor3<double> levi_civita_in_frame(const DMetric& dm, const VecD& u) {
  const int D = dm.dim();
  Tensor3<double> gam = levi_civita<double>(dm, u);
  MatD E = frame_matrix<double>(dm.N, u);
  MatD C = coframe_matrix<double>(dm.N, u);
  auto efun = [&dm](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return frame_matrix<T>(dm.N, q);
  };
  Tensor3<double> out(D, D, D);
  for (int c = 0; c < D; ++c) {
    VecD dir = E.row(c).transpose();
    MatD dE = directional<double>(efun, u, dir);  // row b: e_c(E_b)
    for (int b = 0; b < D; ++b) {
      VecD v = dE.row(b).transpose();  // coordinate components
      for (int mu = 0; mu < D; ++mu)
        for (int l = 0; l < D; ++l)
          for (int nu = 0; nu < D; ++nu) v[mu] += E(b, l) * E(c, nu) * gam(mu, l, nu);
      VecD comp = C * v;
      for (int a = 0; a < D; ++a) out(a, b, c) = comp[a];
    }
  }
  return out;
}

double compatibility_residual(const DConnection& dc, const VecD& u) {
  const int n = dc.dm.n, m = dc.dm.m;
  PointData<double> p(dc.dm, u);
  DCoeffs<double> c = dc.coeffs<double>(u);
  double r = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      for (int j = 0; j < n; ++j) {
        double s = p.eg[j](k, l);
        for (int q = 0; q < n; ++q) s -= c.Lh(q, k, j) * p.g(q, l) + c.Lh(q, l, j) * p.g(k, q);
        r = std::max(r, std::abs(s));
      }
      for (int a = 0; a < m; ++a) {
        double s = p.eg[n + a](k, l);
        for (int q = 0; q < n; ++q) s -= c.Ch(q, k, a) * p.g(q, l) + c.Ch(q, l, a) * p.g(k, q);
        r = std::max(r, std::abs(s));
      }
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      for (int j = 0; j < n; ++j) {
        double s = p.eh[j](a, b);
        for (int q = 0; q < m; ++q) s -= c.Lv(q, a, j) * p.h(q, b) + c.Lv(q, b, j) * p.h(a, q);
        r = std::max(r, std::abs(s));
      }
      for (int cc = 0; cc < m; ++cc) {
        double s = p.eh[n + cc](a, b);
        for (int q = 0; q < m; ++q) s -= c.Cv(q, a, cc) * p.h(q, b) + c.Cv(q, b, cc) * p.h(a, q);
        r = std::max(r, std::abs(s));
      }
    }
  return r;
}

MatD orthonormalize(const DMetric& dm, const VecD& u, const VecD* eta) {
  return orthonormal_frame<double>(dm, u, eta);
}

VecD block_signature(const DMetric& dm, const VecD& u) {
  VecD sh, sv;
  ldl_orthonormal<double>(dm.g(u), &sh);
  ldl_orthonormal<double>(dm.h(u), &sv);
  VecD eta(dm.dim());
  eta << sh, sv;
  return eta;
}

}  // namespace anholoflow

namespace anholoflow {

namespace {

double param_or(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

MatD constant_block(int d, double diag_step, double off) {
  MatD a = MatD::Identity(d, d);
  for (int i = 0; i < d; ++i) {
    a(i, i) += diag_step * i;
    if (i + 1 < d) a(i, i + 1) = a(i + 1, i) = off;
  }
  return a;
}

// N^a_k = A^a_k(x) + (h0^{-1} grad_y phi_k)^a, which keeps h0 dN_k symmetric.
NConnection gradient_nconnection(int n, int m, const MatD& h0, double generic) {
  MatD hi = h0.inverse();
  return user_nconnection(n, m, MatrixField([n, m, hi, generic](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    using std::cos;
    using std::sin;
    Mat<S> N(m, n);
    for (int k = 0; k < n; ++k) {
      const S& xk = u[k];
      Vec<S> grad(m);
      for (int b = 0; b < m; ++b) {
        const S& yn = u[n + (b + 1) % m];
        const S& yp = u[n + (b + m - 1) % m];
        // phi_k = 0.3 (1 + x_k) sum_b y_b^2 y_{b+1} + 0.2 sin(y_0 + x_k)
        grad[b] = 0.3 * (1.0 + xk) * (2.0 * u[n + b] * yn + yp * yp);
        if (b == 0) grad[b] += 0.2 * cos(u[n] + xk);
      }
      Vec<S> col = lift<S>(hi) * grad;
      for (int a = 0; a < m; ++a) {
        N(a, k) = col[a] + 0.5 * sin(xk + double(a));
        if (generic != 0.0) N(a, k) += generic * (k + 1) * u[n + (a + 1) % m];
      }
    }
    return N;
  }));
}

}  // namespace

std::vector<std::string> dmetric_names() {
  std::vector<std::string> names = base_metric_names();
  for (const char* s : {"m1b", "m1b-generic", "clgs", "product-sphere"}) names.emplace_back(s);
  return names;
}

DMetric make_dmetric(const std::string& name, int n, int m, const Params& params) {
  if (m < n) throw DimensionError("d-metric fixtures need m >= n");
  for (const auto& b : base_metric_names())
    if (name == b) return sasaki_lift(make_base_metric(name, n, params), m);
  if (name == "m1b" || name == "m1b-generic") {
    MatD g0 = constant_block(n, 0.5, 0.2);
    MatD h0 = constant_block(m, 0.25, 0.3);
    double generic = name == "m1b" ? 0.0 : param_or(params, "generic", 0.4);
    DMetric dm = constant_dmetric(g0, h0, gradient_nconnection(n, m, h0, generic));
    dm.name = name;
    return dm;
  }
  if (name == "clgs") {
    // Unit blocks with the canonical N of a sphere base.
    auto base = make_base_metric("sphere", n, params);
    DMetric dm = constant_dmetric(MatD::Identity(n, n), MatD::Identity(m, m), canonical_nconnection(base, m));
    dm.name = name;
    dm.tm = (n == m);
    dm.domain.lo.head(n) = base.domain.lo;
    dm.domain.hi.head(n) = base.domain.hi;
    return dm;
  }
  if (name == "product-sphere") {
    Params ph{{"radius", param_or(params, "radius_h", 1.0)}};
    Params pv{{"radius", param_or(params, "radius_v", 1.0)}};
    DMetric dm = product_dmetric(make_base_metric("sphere", n, ph), make_base_metric("sphere", m, pv),
                                 zero_nconnection(n, m));
    dm.name = name;
    return dm;
  }
  throw ConfigError("unknown d-metric fixture '" + name + "'");
}

}  // namespace anholoflow
