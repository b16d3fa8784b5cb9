#include "doctest.h"

#include "anholoflow/ricci_flow.hpp"

using namespace anholoflow;

namespace {

Lattice small(const DMetric& dm, int c) { return Lattice(dm.domain, {c, 1, c, 1}); }

double max_diff(const std::vector<MatD>& a, const std::vector<MatD>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("Chebyshev lattice quadrature and interpolation") {
  Box b{(VecD(2) << -1.0, 0.5).finished(), (VecD(2) << 2.0, 1.5).finished()};
  Lattice lat(b, {7, 5});
  CHECK(lat.size() == 35);
  double q = 0.0;
  for (int f = 0; f < lat.size(); ++f) {
    VecD u = lat.node(f);
    q += lat.weight(f) * std::pow(u[0], 4) * u[1];
  }
  // int_{-1}^{2} x^4 dx * int_{0.5}^{1.5} y dy = (33/5) * 1
  CHECK(q == doctest::Approx(33.0 / 5.0).epsilon(1e-13));

  std::vector<MatD> vals;
  auto poly = [](const auto& u) { return u[0] * u[0] * u[0] - 2.0 * u[0] * u[1] + u[1] * u[1]; };
  for (int f = 0; f < lat.size(); ++f) vals.push_back(MatD::Constant(1, 1, poly(lat.node(f))));
  ChebInterp ip(lat, vals);
  VecD p(2);
  p << 0.37, 0.81;
  CHECK(ip(p)(0, 0) == doctest::Approx(poly(p)).epsilon(1e-13));
  MatD d = partial<double>(ip.field(), p, 0);
  CHECK(d(0, 0) == doctest::Approx(3 * p[0] * p[0] - 2 * p[1]).epsilon(1e-12));

  Lattice flat(b, {1, 3});
  CHECK(flat.volume() == doctest::Approx(3.0));
  double v = 0.0;
  for (int f = 0; f < flat.size(); ++f) v += flat.weight(f);
  CHECK(v == doctest::Approx(3.0));
  CHECK(lat.refined().counts == std::vector<int>{13, 9});
}

TEST_CASE("flat lift is stationary") {
  DMetric dm = make_dmetric("flat", 2, 2);
  auto s = initial_flow_state(dm, small(dm, 3), 0.0, LambdaMode::Normalized);
  CHECK(normalization_factor(s) == 0.0);
  auto t = run_ricci_flow(s, 0.3, 0.1);
  CHECK(max_diff(t.snaps.back().state.g, s.g) == 0.0);
  CHECK(max_diff(t.snaps.back().state.frames, s.frames) == 0.0);
  auto r = scalar_evolution_residual(t, 1);
  CHECK(r.first == 0.0);
  CHECK(r.second == 0.0);
  auto e = einstein_extraction_check(t, 1);
  CHECK(e.fe1 == 0.0);
  CHECK(e.fe2 == 0.0);
}

TEST_CASE("round sphere shrinks uniformly") {
  DMetric dm = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(dm, small(dm, 5), 0.0, LambdaMode::Fixed, 0.0);
  auto t = run_ricci_flow(s, 0.2, 0.05);
  for (const auto& snap : t.snaps) {
    const double c = 1.0 - 2.0 * snap.state.chi;
    for (std::size_t f = 0; f < s.g.size(); ++f) {
      CHECK((snap.state.g[f] - c * s.g[f]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((snap.state.h[f] - c * s.h[f]).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(snap.R_mean == doctest::Approx(2.0 / c).epsilon(1e-9));
    CHECK(snap.offdiag <= 1e-12);
  }
  // Finite difference of two snapshots against -2 R at the first one.
  const auto& a = t.snaps[0];
  const auto& b = t.snaps[1];
  for (std::size_t f = 0; f < s.g.size(); ++f) {
    MatD fd = (b.state.g[f] - a.state.g[f]) / 0.05;
    MatD rhs = -2.0 * a.geo[f].ricci.topLeftCorner(2, 2);
    CHECK((fd - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(run_ricci_flow(s, 0.6, 0.05), FlowSingularityError);
}

TEST_CASE("Einstein fixed point and exponential frames") {
  DMetric dm = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(dm, small(dm, 5), 0.0, LambdaMode::Fixed, 1.0);
  CHECK(einstein_residual(s, 1.0) <= 1e-12);
  auto t = run_ricci_flow(s, 0.5, 0.05);
  const auto& end = t.snaps.back().state;
  CHECK(max_diff(end.g, s.g) <= 1e-8 * 0.5);
  CHECK(max_diff(end.h, s.h) <= 1e-8 * 0.5);
  for (const auto& snap : t.snaps) {
    const double e = std::exp(snap.state.chi);
    for (std::size_t f = 0; f < s.frames.size(); ++f)
      CHECK((snap.state.frames[f] - e * s.frames[f]).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(snap.triangular == 0.0);
  }
  // Constant lambda_hat is not a solution of the lambda_hat equation.
  auto rep = einstein_extraction_check(t, 3);
  CHECK(rep.fe2_available);
  CHECK(rep.lambda_hat == doctest::Approx(2.0));
  CHECK(rep.fe2 == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(rep.fe1 <= 1e-12);
}

TEST_CASE("RK4 order under step halving") {
  DMetric dm = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(dm, small(dm, 3), 0.0, LambdaMode::Fixed, 0.5);
  std::vector<std::vector<MatD>> ends;
  for (int steps : {4, 8, 16}) ends.push_back(run_ricci_flow(s, 0.4, 0.4 / steps).snaps.back().state.g);
  const double e1 = max_diff(ends[0], ends[1]), e2 = max_diff(ends[1], ends[2]);
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("scalar curvature evolution residual converges") {
  DMetric dm = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(dm, small(dm, 3), 0.0, LambdaMode::Fixed, 0.0);
  std::vector<double> res;
  for (double dchi : {0.02, 0.01, 0.005}) {
    auto t = run_ricci_flow(s, 4 * dchi, dchi);
    auto r = scalar_evolution_residual(t, 2);
    res.push_back(std::max(r.first, r.second));
    // lambda_hat = 2 / (1 - 2 chi) solves the lambda_hat equation.
    CHECK(einstein_extraction_check(t, 2).fe2 <= 5.0 * dchi * dchi * 100);
    CHECK_THROWS_AS(scalar_evolution_residual(t, 0), NeedsNeighborsError);
    CHECK_THROWS_AS(scalar_evolution_residual(t, 4), NeedsNeighborsError);
  }
  CHECK(std::log2(res[0] / res[1]) >= 1.9);
  CHECK(std::log2(res[1] / res[2]) >= 1.9);
}

TEST_CASE("normalization factor") {
  DMetric ps = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(ps, small(ps, 3));
  CHECK(normalization_factor(s) == doctest::Approx(4.0).epsilon(1e-10));
  s.lambda_mode = LambdaMode::Normalized;
  CHECK(step_lambda(s, node_geometry(s)) == doctest::Approx(0.8));
  s.lambda_mode = LambdaMode::Dimension;
  CHECK(step_lambda(s, node_geometry(s)) == doctest::Approx(1.0));

  // Non-constant scalar curvature: lattice refinement changes r by < 1%.
  DMetric dp = make_dmetric("diagonal-polynomial", 2, 2);
  Lattice lat(dp.domain, {5, 5, 1, 1});
  const double r1 = normalization_factor(initial_flow_state(dp, lat));
  const double r2 = normalization_factor(initial_flow_state(dp, lat.refined()));
  CHECK(std::abs(r1 - r2) <= 0.01 * std::abs(r2));
}

TEST_CASE("Sasaki lift flow keeps mixed Ricci blocks zero and blocks symmetric") {
  DMetric dm = make_dmetric("diagonal-polynomial", 2, 2);
  auto s = initial_flow_state(dm, Lattice(dm.domain, {4, 4, 1, 1}), 0.0, LambdaMode::Fixed, 0.0);
  auto t = run_ricci_flow(s, 0.02, 0.01);
  for (const auto& snap : t.snaps) {
    CHECK(snap.offdiag <= 1e-8);
    CHECK(snap.asym <= 1e-10);
    CHECK(snap.compat <= 1e-8);
  }
  // The h-block evolution is not a pure component scaling; the residual says so.
  CHECK(t.snaps.back().projection > 0.0);

  DMetric ps = make_dmetric("product-sphere", 2, 2);
  auto p = initial_flow_state(ps, small(ps, 2), 0.0, LambdaMode::Fixed, 0.3);
  auto tp = run_ricci_flow(p, 0.5, 0.005);
  CHECK(tp.snaps.size() == 101);
  CHECK(tp.snaps.back().asym <= 1e-10);
  CHECK(tp.snaps.back().projection <= 1e-10);
}

TEST_CASE("spectral representation agrees over a short run") {
  DMetric ps = make_dmetric("product-sphere", 2, 2);
  Lattice lat(ps.domain, {16, 1, 16, 1});
  auto a = initial_flow_state(ps, lat, 0.0, LambdaMode::Fixed, 0.0, Representation::Spectral);
  auto b = initial_flow_state(ps, lat, 0.0, LambdaMode::Fixed, 0.0, Representation::Modal);
  auto sa = ricci_flow_step(a, 1e-3);
  auto sb = ricci_flow_step(b, 1e-3);
  CHECK(max_diff(sa.g, sb.g) <= 1e-10);
  CHECK(max_diff(sa.frames, sb.frames) <= 1e-10);
}

TEST_CASE("Einstein-constrained step") {
  DMetric ps = make_dmetric("product-sphere", 2, 2);
  auto s = initial_flow_state(ps, small(ps, 3), 0.0, LambdaMode::Fixed, 1.0);
  auto c = einstein_constrained_step(s, 0.1);
  CHECK_FALSE(c.violated);
  CHECK(max_diff(c.state.g, s.g) == 0.0);

  // Constant blocks with a constant N scheduled as N0 (1 + chi).
  MatD N0(2, 2);
  N0 << 0.3, -0.1, 0.2, 0.4;
  NConnection N = user_nconnection(2, 2, MatrixField([N0](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    (void)u;
    return lift<S>(N0);
  }));
  MatD h0(2, 2);
  h0 << 2.0, 0.5, 0.5, 1.0;
  DMetric cd = constant_dmetric(MatD::Identity(2, 2), h0, N);
  auto cs = initial_flow_state(cd, Lattice(cd.domain, {2, 1, 1, 1}), 1.0, LambdaMode::Fixed, 0.0);
  const double dchi = 0.05;
  auto out = einstein_constrained_step(cs, dchi);
  CHECK_FALSE(out.violated);
  const double f0 = 1.0, f1 = 1.0 + dchi;
  MatD expect = MatD::Identity(2, 2) - (f1 * f1 - f0 * f0) * N0.transpose() * h0 * N0;
  for (std::size_t f = 0; f < out.state.g.size(); ++f) {
    CHECK((out.state.g[f] - expect).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((out.state.h[f].array() == cs.h[f].array()).all());
  }
  // A non-Einstein state is flagged but the step is still returned.
  DMetric dp = make_dmetric("diagonal-polynomial", 2, 2);
  auto ds = initial_flow_state(dp, Lattice(dp.domain, {3, 3, 1, 1}), 0.0, LambdaMode::Fixed, 1.0);
  auto bad = einstein_constrained_step(ds, 0.1);
  CHECK(bad.violated);
  CHECK(bad.state.chi == doctest::Approx(0.1));
}
