#include "doctest.h"

#include "anholoflow/constant_frame.hpp"

using namespace anholoflow;

namespace {

std::vector<VecD> samples(const DMetric& dm, int count, unsigned seed) {
  Rng rng(seed);
  std::vector<VecD> pts;
  for (int i = 0; i < count; ++i) pts.push_back(dm.domain.sample(rng));
  return pts;
}

// Frame derivative e_alpha of a matrix field by central differences.
MatD fd_frame(const MatrixField& f, const NConnection& N, const VecD& u, int alpha) {
  MatD E = frame_matrix<double>(N, u);
  VecD d = E.row(alpha).transpose();
  const double h = 1e-5;
  return (f(VecD(u + h * d)) - f(VecD(u - h * d))) / (2 * h);
}

}  // namespace

TEST_CASE("coordinate form assembles and round-trips") {
  DMetric flat = make_dmetric("flat", 2, 2);
  VecD u(4);
  u << 0.1, 0.2, 0.3, 0.4;
  CHECK((coordinate_form<double>(flat, u) - MatD::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  DMetric dm = make_dmetric("m1b-generic", 2, 3);
  VecD w(5);
  w << 0.3, -0.2, 0.5, 0.1, -0.7;
  MatD G = coordinate_form<double>(dm, w);
  MatD g = dm.g(w), h = dm.h(w), N = dm.N(w);
  CHECK((G.topLeftCorner(2, 2) - (g + N.transpose() * h * N)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((G.topRightCorner(2, 3) - N.transpose() * h).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
  DBlocks b = extract_blocks(G, 2, 3);
  CHECK((b.g - g).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.h - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.N - N).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Sasaki lift uses the induced metric on both blocks") {
  auto base = make_base_metric("sphere", 2);
  DMetric dm = sasaki_lift(base, 3);
  VecD u(5);
  u << 1.0, 1.4, 0.2, -0.3, 0.8;
  MatD gt = vertical_metric<double>(base, u.head(2), VecD(u.segment(2, 2)));
  CHECK((dm.g(u) - gt).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dm.h(u).topLeftCorner(2, 2) - gt).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dm.h(u)(2, 2) == 1.0);
  CHECK_THROWS_AS(sasaki_lift(base, 1), DimensionError);
}

TEST_CASE("canonical coefficients match a finite-difference assembly") {
  DMetric dm = make_dmetric("diagonal-polynomial", 2, 2);
  // Make the blocks y-dependent so every coefficient family is exercised.
  MatrixField g0 = dm.g, h0 = dm.h;
  dm.g = MatrixField([g0](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Mat<S> g = g0(u);
    g(0, 1) = g(1, 0) = 0.2 * u[2] * u[3];
    return g;
  });
  dm.h = MatrixField([h0](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    using std::sin;
    Mat<S> h = h0(u);
    h(1, 1) = h(1, 1) + 0.3 * sin(u[2] + u[0]);
    return h;
  });
  DConnection dc = canonical_dconnection(dm);
  for (const VecD& u : samples(dm, 5, 21)) {
    auto c = dc.coeffs<double>(u);
    MatD g = dm.g(u), h = dm.h(u), gi = g.inverse(), hi = h.inverse();
    std::vector<MatD> eg, eh, dN;
    for (int a = 0; a < 4; ++a) {
      eg.push_back(fd_frame(dm.g, dm.N, u, a));
      eh.push_back(fd_frame(dm.h, dm.N, u, a));
    }
    const double s = 1e-5;
    for (int a = 0; a < 4; ++a) {
      VecD p = u, q = u;
      p[a] += s;
      q[a] -= s;
      dN.push_back((dm.N(p) - dm.N(q)) / (2 * s));
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double L = 0, Cv = 0, Ch = 0, Lv = dN[2 + j](i, k);
          for (int r = 0; r < 2; ++r) {
            L += 0.5 * gi(i, r) * (eg[k](j, r) + eg[j](k, r) - eg[r](j, k));
            Cv += 0.5 * hi(i, r) * (eh[2 + k](j, r) + eh[2 + j](k, r) - eh[2 + r](j, k));
            Ch += 0.5 * gi(i, r) * eg[2 + k](j, r);
            double t = eh[k](j, r);
            for (int d = 0; d < 2; ++d) t -= h(d, r) * dN[2 + j](d, k) + h(d, j) * dN[2 + r](d, k);
            Lv += 0.5 * hi(i, r) * t;
          }
          CHECK(std::abs(c.Lh(i, j, k) - L) < 1e-8);
          CHECK(std::abs(c.Cv(i, j, k) - Cv) < 1e-8);
          CHECK(std::abs(c.Ch(i, j, k) - Ch) < 1e-8);
          CHECK(std::abs(c.Lv(i, j, k) - Lv) < 1e-8);
        }
  }
}

TEST_CASE("frame derivatives are elongated, not plain partials") {
  // With N = 0 the horizontal coefficients are the christoffel symbols of g.
  auto base = make_base_metric("sphere", 2);
  MatrixField gy([base](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Vec<S> x = u.head(2);
    Mat<S> g = base(x);
    g(0, 0) = g(0, 0) * (1.0 + 0.5 * u[2] * u[2]);
    return g;
  });
  MatrixField hy([](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return Mat<S>::Identity(2, 2).eval();
  });
  VecD u(4);
  u << 1.1, 0.9, 0.6, -0.4;
  DMetric d0 = general_dmetric(2, 2, gy, hy, zero_nconnection(2, 2));
  auto c0 = canonical_dconnection(d0).coeffs<double>(u);
  MetricField frozen{"frozen", 2, MatrixField([gy, u](const auto& x) {
                       using S = typename std::decay_t<decltype(x)>::Scalar;
                       Vec<S> q(4);
                       q << x, lift<S>(VecD(u.tail(2)));
                       return gy(q);
                     })};
  auto gam = christoffel<double>(frozen, VecD(u.head(2)));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) CHECK(std::abs(c0.Lh(i, j, k) - gam(i, j, k)) < 1e-13);
  // A nonzero N changes L through the y-dependence of g.
  DMetric d1 = general_dmetric(2, 2, gy, hy, canonical_nconnection(base, 2));
  auto c1 = canonical_dconnection(d1).coeffs<double>(u);
  double diff = 0.0;
  for (std::size_t k = 0; k < c1.Lh.data.size(); ++k) diff = std::max(diff, std::abs(c1.Lh.data[k] - c0.Lh.data[k]));
  CHECK(diff > 1e-3);
}

TEST_CASE("canonical d-connection is metric compatible") {
  for (const auto& name : {"flat", "diagonal-polynomial", "conformal", "sphere", "m1b-generic", "product-sphere"}) {
    DMetric dm = make_dmetric(name, 2, 3);
    DConnection dc = canonical_dconnection(dm);
    double worst = 0.0;
    for (const VecD& u : samples(dm, 40, 4)) worst = std::max(worst, compatibility_residual(dc, u));
    CHECK_MESSAGE(worst <= 1e-8, name);
  }
  DMetric dm = make_dmetric("sphere", 2, 2);
  DConnection tm = canonical_dconnection(dm, true);
  for (const VecD& u : samples(dm, 20, 5)) CHECK(compatibility_residual(tm, u) <= 1e-8);
}

TEST_CASE("zero connection residual equals the largest frame derivative of the blocks") {
  DMetric dm = make_dmetric("conformal", 2, 2);
  VecD u(4);
  u << 0.2, -0.1, 0.4, 0.3;
  DConnection zero{dm, ConnKind::Zero};
  PointData<double> p(dm, u);
  double ref = 0.0;
  for (int a = 0; a < 4; ++a) ref = std::max({ref, p.eg[a].cwiseAbs().maxCoeff(), p.eh[a].cwiseAbs().maxCoeff()});
  CHECK(compatibility_residual(zero, u) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("torsion blocks") {
  for (const auto& name : {"sphere", "diagonal-polynomial", "m1b-generic"}) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm);
    for (const VecD& u : samples(dm, 20, 8)) {
      auto t = dtorsion<double>(dc, u);
      CHECK(max_abs(t.hh) <= 1e-10);
      CHECK(max_abs(t.vv) <= 1e-10);
      auto om = nconnection_curvature<double>(dm.N, u);
      for (std::size_t k = 0; k < om.data.size(); ++k) CHECK(std::abs(t.vhh.data[k] - om.data[k]) <= 1e-8);
    }
  }
  DMetric flat = make_dmetric("flat", 2, 2);
  auto t = dtorsion<double>(canonical_dconnection(flat), VecD(VecD::Constant(4, 0.3)));
  CHECK(max_abs(t.hh) + max_abs(t.hv) + max_abs(t.vhh) + max_abs(t.vvh) + max_abs(t.vv) == 0.0);
}

TEST_CASE("curvature antisymmetry, Ricci contraction and the sphere pin") {
  DMetric dm = make_dmetric("sphere", 2, 2);
  DConnection dc = canonical_dconnection(dm);
  for (const VecD& u : samples(dm, 5, 13)) {
    auto cb = dcurvature<double>(dc, u);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) CHECK(cb.R(a, b, c, d) == -cb.R(a, b, d, c));
    // Gaussian curvature 1: R^1_{221} = sin^2 x^1 for the unit chart.
    const double s = std::sin(u[0]);
    CHECK(cb.Rh(0, 1, 1, 0) == doctest::Approx(s * s).epsilon(1e-10));
    auto r = ricci_and_scalar<double>(dm, cb, u);
    CHECK(r.Rs == doctest::Approx(2.0).epsilon(1e-10));
    // Brute-force contraction R_ij = R^k_{ijk}.
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double ref = 0.0;
        for (int k = 0; k < 2; ++k) ref += cb.Rh(k, i, j, k);
        CHECK(r.Rhh(i, j) == doctest::Approx(ref).epsilon(1e-14));
      }
    // Mixed contractions: R_ai = P^b_{aib}, R_ia = -P^k_{ika}.
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 2; ++i) {
        double rai = 0.0, ria = 0.0;
        for (int b = 0; b < 2; ++b) rai += cb.Pv(b, a, i, b);
        for (int k = 0; k < 2; ++k) ria -= cb.Ph(k, i, k, a);
        CHECK(r.Rvh(a, i) == doctest::Approx(rai).epsilon(1e-14));
        CHECK(r.Rhv(i, a) == doctest::Approx(ria).epsilon(1e-14));
      }
  }
  // Radius scaling: R = 2 / a^2.
  DMetric big = make_dmetric("sphere", 2, 2, {{"radius", 2.0}});
  VecD u(4);
  u << 1.2, 0.7, 0.1, 0.2;
  CHECK(ricci_at<double>(canonical_dconnection(big), u).Rs == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("tangent-bundle mode: symmetric Ricci tensor on lifts") {
  for (const auto& name : {"sphere", "diagonal-polynomial", "conformal"}) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm, true);
    for (const VecD& u : samples(dm, 5, 17)) {
      MatD R = ricci_at<double>(dc, u).full();
      CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  CHECK_THROWS_AS(canonical_dconnection(make_dmetric("sphere", 2, 3), true), DimensionError);
}

TEST_CASE("zero connection has zero curvature") {
  DMetric dm = make_dmetric("sphere", 2, 2);
  VecD u(4);
  u << 1.0, 1.0, 0.5, 0.5;
  DConnection zero{dm, ConnKind::Zero};
  auto cb = dcurvature<double>(zero, u);
  CHECK(max_abs(cb.R) == 0.0);
}

TEST_CASE("Levi-Civita connection of the coordinate form") {
  DMetric flat = make_dmetric("flat", 2, 2);
  CHECK(max_abs(levi_civita<double>(flat, VecD(VecD::Constant(4, 0.5)))) == 0.0);

  auto polar = make_base_metric("polar", 2);
  DMetric pd = product_dmetric(polar, make_base_metric("flat", 2), zero_nconnection(2, 2));
  VecD u(4);
  u << 1.7, 0.2, 0.3, 0.4;
  auto lc = levi_civita<double>(pd, u);
  auto ch = christoffel<double>(polar, VecD(u.head(2)));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) CHECK(std::abs(lc(i, j, k) - ch(i, j, k)) < 1e-14);

  for (const auto& name : {"sphere", "m1b-generic", "diagonal-polynomial"}) {
    DMetric dm = make_dmetric(name, 2, 2);
    for (const VecD& p : samples(dm, 10, 3)) {
      CHECK(levi_civita_residual(dm, p) <= 1e-8);
      auto g = levi_civita<double>(dm, p);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c) CHECK(g(a, b, c) == g(a, c, b));
    }
  }
}

TEST_CASE("tangent-bundle coefficients agree with Levi-Civita in the adapted frame") {
  for (const auto& name : {"sphere", "diagonal-polynomial", "conformal", "flat"}) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm, true);
    for (const VecD& u : samples(dm, 10, 29)) {
      auto lf = levi_civita_in_frame(dm, u);
      auto c = dc.coeffs<double>(u);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            CHECK(std::abs(lf(i, j, k) - c.Lh(i, j, k)) <= 1e-8);
            CHECK(std::abs(lf(2 + i, 2 + j, 2 + k) - c.Cv(i, j, k)) <= 1e-8);
          }
    }
  }
}

TEST_CASE("orthonormalize") {
  DMetric flat = make_dmetric("flat", 2, 2);
  VecD u = VecD::Constant(4, 0.1);
  CHECK((orthonormalize(flat, u) - MatD::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  MatD g0(2, 2), h0(2, 2);
  g0 << 4, 0, 0, 1;
  h0 << 9, 0, 0, 1;
  DMetric dg = constant_dmetric(g0, h0, zero_nconnection(2, 2));
  VecD ref(4);
  ref << 0.5, 1.0, 1.0 / 3.0, 1.0;
  CHECK((orthonormalize(dg, u) - MatD(ref.asDiagonal())).cwiseAbs().maxCoeff() < 1e-15);

  Rng rng(31);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    MatD a = MatD::NullaryExpr(2, 2, [&] { return nd(rng); });
    MatD b = MatD::NullaryExpr(3, 3, [&] { return nd(rng); });
    MatD gs = a * a.transpose() + MatD::Identity(2, 2);
    MatD hs = b * b.transpose() + MatD::Identity(3, 3);
    DMetric dm = constant_dmetric(gs, hs, zero_nconnection(2, 3));
    VecD w = VecD::Zero(5);
    MatD A = orthonormalize(dm, w);
    MatD G = coordinate_form<double>(dm, w);
    CHECK((A.transpose() * G * A - MatD::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(A.topRightCorner(2, 3).cwiseAbs().maxCoeff() == 0.0);
  }

  MatD gm(2, 2);
  gm << -1, 0, 0, 1;
  DMetric lor = constant_dmetric(gm, MatD::Identity(2, 2), zero_nconnection(2, 2));
  VecD eta = VecD::Ones(4);
  CHECK_THROWS_AS(orthonormalize(lor, u, &eta), SignatureError);
  eta[0] = -1;
  MatD A = orthonormalize(lor, u, &eta);
  CHECK((A.transpose() * coordinate_form<double>(lor, u) * A - MatD(eta.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fixture catalog") {
  for (const auto& name : dmetric_names()) {
    DMetric dm = make_dmetric(name, 2, 2);
    CHECK(dm.dim() == 4);
    VecD u = 0.5 * (dm.domain.lo + dm.domain.hi);
    MatD G = coordinate_form<double>(dm, u);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(make_dmetric("nope", 2, 2), ConfigError);
}
