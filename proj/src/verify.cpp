#include "anholoflow/verify.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "anholoflow/constant_frame.hpp"
#include "anholoflow/errors.hpp"
#include "anholoflow/ricci_flow.hpp"
#include "anholoflow/soliton.hpp"

namespace anholoflow {

bool CriterionResult::pass() const {
  if (checks.empty()) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const CheckResult* CriterionResult::worst() const {
  const CheckResult* w = nullptr;
  double ratio = -1.0;
  for (const auto& c : checks) {
    double r = std::numeric_limits<double>::infinity();
    if (c.pass && c.lower_bound) r = c.residual > 0.0 ? c.tol / c.residual : 0.0;
    else if (c.pass) r = c.tol > 0.0 ? c.residual / c.tol : 0.0;
    if (r > ratio) {
      ratio = r;
      w = &c;
    }
  }
  return w;
}

namespace {

CheckResult at_most(std::string name, double residual, double tol, std::string note = {}) {
  return {std::move(name), residual, tol, std::isfinite(residual) && residual <= tol, std::move(note)};
}

CheckResult at_least(std::string name, double value, double bound, std::string note = {}) {
  return {std::move(name), value, bound, std::isfinite(value) && value >= bound, std::move(note), true};
}

template <class E>
CheckResult throws(std::string name, const std::function<void()>& f) {
  try {
    f();
  } catch (const E&) {
    return {std::move(name), 0.0, 0.0, true, "raised"};
  } catch (const std::exception& e) {
    return {std::move(name), 1.0, 0.0, false, std::string("wrong error: ") + e.what()};
  }
  return {std::move(name), 1.0, 0.0, false, "no error raised"};
}

std::vector<VecD> samples(const DMetric& dm, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VecD> pts;
  for (int i = 0; i < count; ++i) pts.push_back(dm.domain.sample(rng));
  return pts;
}

double max_diff(const std::vector<MatD>& a, const std::vector<MatD>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return d;
}

const char* const kCompatFixtures[] = {"flat", "diagonal-polynomial", "conformal", "sphere"};

CriterionResult compatibility(std::uint64_t seed) {
  CriterionResult r{1, "canonical d-connection metric compatibility", {}};
  for (const char* name : kCompatFixtures) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm);
    double worst = 0.0;
    for (const VecD& u : samples(dm, 500, seed)) worst = std::max(worst, compatibility_residual(dc, u));
    r.checks.push_back(at_most(std::string("compat/") + name, worst, 1e-8, "500 points"));
  }
  return r;
}

CriterionResult torsion(std::uint64_t seed) {
  CriterionResult r{2, "torsion structure and N-connection curvature", {}};
  for (const auto& name : dmetric_names()) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm);
    double pure = 0.0, mixed = 0.0;
    for (const VecD& u : samples(dm, 20, seed + 1)) {
      auto t = dtorsion<double>(dc, u);
      pure = std::max({pure, max_abs(t.hh), max_abs(t.vv)});
      auto om = nconnection_curvature<double>(dm.N, u);
      for (std::size_t k = 0; k < om.data.size(); ++k) mixed = std::max(mixed, std::abs(t.vhh.data[k] - om.data[k]));
    }
    r.checks.push_back(at_most("T_hh,T_vv/" + name, pure, 1e-10));
    r.checks.push_back(at_most("T_vhh-Omega/" + name, mixed, 1e-8));
  }
  return r;
}

CriterionResult anholonomy_oracle(std::uint64_t seed) {
  CriterionResult r{3, "frame commutators reproduce the anholonomy coefficients", {}};
  // f(u) = sin(u0) u3 + u1^2 u2^3 + cos(u2 u0)
  auto f = [](const auto& u) {
    using std::cos;
    using std::sin;
    return sin(u[0]) * u[3] + u[1] * u[1] * u[2] * u[2] * u[2] + cos(u[2] * u[0]);
  };
  for (const auto& name : dmetric_names()) {
    DMetric dm = make_dmetric(name, 2, 2);
    const NConnection& N = dm.N;
    double worst = 0.0;
    for (const VecD& u : samples(dm, 5, seed + 2)) {
      auto W = anholonomy<double>(N, u);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          auto eb = [&](const auto& q) {
            using S = typename std::decay_t<decltype(q)>::Scalar;
            return frame_derivative<S>(N, f, q, b);
          };
          auto ea = [&](const auto& q) {
            using S = typename std::decay_t<decltype(q)>::Scalar;
            return frame_derivative<S>(N, f, q, a);
          };
          double lhs = frame_derivative<double>(N, eb, u, a) - frame_derivative<double>(N, ea, u, b);
          double rhs = 0.0;
          for (int c = 0; c < 4; ++c) rhs += W(c, a, b) * frame_derivative<double>(N, f, u, c);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    r.checks.push_back(at_most("commutator/" + name, worst, 1e-8));
  }
  return r;
}

CriterionResult tm_coincidence(std::uint64_t seed) {
  CriterionResult r{4, "tangent-bundle coefficients equal Levi-Civita in the adapted frame", {}};
  for (const auto& name : base_metric_names()) {
    DMetric dm = make_dmetric(name, 2, 2);
    DConnection dc = canonical_dconnection(dm, true);
    double worst = 0.0;
    for (const VecD& u : samples(dm, 20, seed + 3)) {
      auto lf = levi_civita_in_frame(dm, u);
      auto c = dc.coeffs<double>(u);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            worst = std::max({worst, std::abs(lf(i, j, k) - c.Lh(i, j, k)),
                              std::abs(lf(2 + i, 2 + j, 2 + k) - c.Cv(i, j, k))});
    }
    r.checks.push_back(at_most("tm-lc/" + name, worst, 1e-8));
  }
  return r;
}

CriterionResult constant_curvature(std::uint64_t seed) {
  CriterionResult r{5, "constant-coefficient family: zero curvature, constant coefficients", {}};
  const std::pair<const char*, int> cases[] = {{"m1b", 2}, {"m1b", 3}, {"m1b-generic", 2}, {"m1b-generic", 3}};
  for (const auto& [name, m] : cases) {
    DMetric dm = make_dmetric(name, 2, m);
    auto rep = constant_curvature_check(dm, samples(dm, 100, seed + 4), 1e-10);
    double mx = 0.0, spread = 0.0;
    for (const auto& [k, b] : rep.curvature) {
      mx = std::max(mx, b.maximum);
      spread = std::max(spread, b.spread);
    }
    const std::string tag = std::string(name) + "/m" + std::to_string(m);
    r.checks.push_back(at_most("curvature/" + tag, mx, 1e-10));
    r.checks.push_back(at_most("spread/" + tag, spread, 1e-10));
    if (std::string(name) == "m1b") r.checks.push_back(at_most("coefficients/" + tag, rep.coefficient_max, 1e-10));
  }
  return r;
}

CriterionResult sphere_pin(std::uint64_t seed) {
  CriterionResult r{6, "unit-sphere chart has h scalar curvature 2", {}};
  DMetric dm = make_dmetric("sphere", 2, 2);
  DConnection dc = canonical_dconnection(dm);
  double worst = 0.0;
  for (const VecD& u : samples(dm, 50, seed + 5)) worst = std::max(worst, std::abs(ricci_at<double>(dc, u).Rs - 2.0));
  r.checks.push_back(at_most("R_h-2", worst, 1e-6));
  return r;
}

FlowState sphere_state(int c, LambdaMode mode, double lambda) {
  DMetric ps = make_dmetric("product-sphere", 2, 2);
  return initial_flow_state(ps, Lattice(ps.domain, {c, 1, c, 1}), 0.0, mode, lambda);
}

CriterionResult ricci_order(std::uint64_t) {
  CriterionResult r{7, "Ricci flow order, Einstein fixed point, scalar evolution", {}};
  {
    FlowState s = sphere_state(3, LambdaMode::Fixed, 0.5);
    std::vector<std::vector<MatD>> ends;
    for (int steps : {4, 8, 16}) ends.push_back(run_ricci_flow(s, 0.4, 0.4 / steps).snaps.back().state.g);
    r.checks.push_back(at_least("halving/product-sphere", max_diff(ends[0], ends[1]) / max_diff(ends[1], ends[2]), 8.0,
                                "ratio of successive endpoint differences"));
  }
  {
    DMetric dp = make_dmetric("diagonal-polynomial", 2, 2);
    // The modal basis integrates this fixture exactly, so the nodal form carries the order test.
    FlowState s = initial_flow_state(dp, Lattice(dp.domain, {4, 4, 1, 1}), 0.0, LambdaMode::Fixed, 0.0,
                                     Representation::Spectral);
    std::vector<std::vector<MatD>> ends;
    for (int steps : {4, 8, 16}) ends.push_back(run_ricci_flow(s, 0.04, 0.04 / steps).snaps.back().state.g);
    r.checks.push_back(at_least("halving/diagonal-polynomial", max_diff(ends[0], ends[1]) / max_diff(ends[1], ends[2]),
                                8.0, "nodal representation"));
  }
  {
    FlowState s = sphere_state(5, LambdaMode::Fixed, 1.0);
    auto t = run_ricci_flow(s, 1.0, 0.05);
    const auto& end = t.snaps.back().state;
    r.checks.push_back(at_most("einstein-drift", std::max(max_diff(end.g, s.g), max_diff(end.h, s.h)), 1e-8,
                               "per unit chi"));
  }
  {
    FlowState s = sphere_state(3, LambdaMode::Fixed, 0.0);
    std::vector<double> res;
    for (double dchi : {0.02, 0.01, 0.005}) {
      auto r2 = scalar_evolution_residual(run_ricci_flow(s, 4 * dchi, dchi), 2);
      res.push_back(std::max(r2.first, r2.second));
    }
    r.checks.push_back(at_least("scalar-evolution-order", std::log2(res[1] / res[2]), 1.9));
  }
  return r;
}

CriterionResult frame_growth(std::uint64_t) {
  CriterionResult r{8, "Einstein-state frames grow like exp(lambda chi)", {}};
  FlowState s = sphere_state(5, LambdaMode::Fixed, 1.0);
  auto t = run_ricci_flow(s, 0.5, 0.05);
  double worst = 0.0;
  for (const auto& snap : t.snaps) {
    const double e = std::exp(s.lambda * snap.state.chi);
    for (std::size_t f = 0; f < s.frames.size(); ++f)
      worst = std::max(worst, (snap.state.frames[f] - e * s.frames[f]).cwiseAbs().maxCoeff());
  }
  r.checks.push_back(at_most("frames-vs-exp", worst, 1e-6, "chi in [0, 0.5]"));
  return r;
}

const PeriodicGrid kGrid{256, 2.0 * M_PI};

MatD random_curve(int d, std::uint64_t seed, double amp = 0.5) {
  return make_curve("smooth-random", kGrid, d, {{"seed", static_cast<double>(seed % 1000003)}, {"amp", amp}});
}

CriterionResult operators(std::uint64_t seed) {
  CriterionResult r{9, "bi-Hamiltonian operators and recursion dual path", {}};
  Spectral sp(kGrid);
  for (int d : {1, 3}) {
    double sj = 0.0, sh = 0.0, dual = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::uint64_t b = seed * 7919 + 3 * t;
      MatD v = random_curve(d, b, 0.8), a = random_curve(d, b + 1), w = random_curve(d, b + 2);
      const double scale = std::sqrt(sp.inner(a, a) * sp.inner(w, w));
      sj = std::max(sj, std::abs(sp.inner(a, apply_J(sp, v, w)) + sp.inner(apply_J(sp, v, a), w)) / scale);
      sh = std::max(sh, std::abs(sp.inner(a, apply_H(sp, v, w)) + sp.inner(apply_H(sp, v, a), w)) / scale);
      MatD c = recursion(sp, v, a);
      dual = std::max(dual, (recursion_expanded(sp, v, a) - c).cwiseAbs().maxCoeff() / c.cwiseAbs().maxCoeff());
    }
    const std::string tag = "/d" + std::to_string(d);
    r.checks.push_back(at_most("J-skew" + tag, sj, 1e-8, "100 trials"));
    r.checks.push_back(at_most("H-skew" + tag, sh, 1e-8, "100 trials"));
    r.checks.push_back(at_most("recursion-dual-path" + tag, dual, 1e-7, "relative"));
  }
  return r;
}

CriterionResult conservation(std::uint64_t seed) {
  CriterionResult r{10, "mKdV conservation and exact k = 0 translation", {}};
  Spectral sp(kGrid);
  for (int d : {1, 3}) {
    CurveState s{kGrid, random_curve(d, seed * 31 + d), {}, 0.0, 0.0};
    auto t = evolve(s, Channel::H, 1, 1.0, 0.0, 100);
    const std::string tag = "/d" + std::to_string(d);
    r.checks.push_back(at_most("H0-drift" + tag, t.drift(0), 1e-6, "relative, tau in [0, 1]"));
    r.checks.push_back(at_most("H1-drift" + tag, t.drift(1), 1e-5, "relative, tau in [0, 1]"));
    auto k0 = evolve(s, Channel::H, 0, 0.7, 0.01);
    r.checks.push_back(
        at_most("translation" + tag, (k0.snaps.back().v - sp.shift(s.vh, -0.7)).cwiseAbs().maxCoeff(), 1e-8));
  }
  return r;
}

CriterionResult scaling(std::uint64_t seed) {
  CriterionResult r{11, "mKdV scaling symmetry, weight 3 for k = 1", {}};
  const double lam = 1.7;
  for (int d : {1, 3}) {
    CurveState s{kGrid, random_curve(d, seed * 37 + d), {}, 0.0, 0.0};
    auto a = evolve(s, Channel::H, 1, 0.3);
    CurveState q{PeriodicGrid{kGrid.M, lam * kGrid.L}, s.vh / lam, {}, 0.0, 0.0};
    auto b = evolve(q, Channel::H, 1, std::pow(lam, 3) * 0.3, std::pow(lam, 3) * a.dtau);
    r.checks.push_back(at_most("rescaled/d" + std::to_string(d),
                               (b.snaps.back().v - a.snaps.back().v / lam).cwiseAbs().maxCoeff(), 1e-6));
  }
  return r;
}

CriterionResult sg_flow(std::uint64_t seed) {
  CriterionResult r{12, "SG -1 flow: pointwise frame norm and hyperbolicity", {}};
  for (int d : {1, 3}) {
    MatD ep = random_curve(d, seed * 41 + d, 0.3);
    const double peak = ep.rowwise().norm().maxCoeff();
    if (peak >= 0.8) ep *= 0.8 / peak;
    SGState s = sg_from_perp(kGrid, ep);
    double worst = s.conservation_residual();
    for (int i = 0; i < 100; ++i) {
      s = sg_minus1_flow(s, 0.01, 1.0);
      worst = std::max(worst, s.conservation_residual());
    }
    r.checks.push_back(at_most("d/dl norm/d" + std::to_string(d), worst, 1e-8, "100 steps"));
  }
  r.checks.push_back(throws<HyperbolicityError>("init |e_perp| >= 1", [] {
    sg_from_perp(kGrid, MatD::Constant(kGrid.M, 1, 1.0));
  }));
  r.checks.push_back(throws<HyperbolicityError>("step leaves e_par > 0", [] {
    SGState s;
    s.grid = kGrid;
    s.v = MatD::Constant(kGrid.M, 1, 1.0);
    s.base = VecD::Unit(2, 0);
    sg_minus1_flow(s, 0.01, 1.0);
  }));
  return r;
}

bool same(const MatD& a, const MatD& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

CriterionResult parity(std::uint64_t seed) {
  CriterionResult r{13, "h and v channels are bit-identical", {}};
  Spectral sp(kGrid);
  MatD v = random_curve(3, seed * 43), w = random_curve(3, seed * 43 + 1);
  CurveState s{kGrid, v, v, 0.4, 0.4};
  int mismatches = 0;
  for (int k : {0, 1}) {
    auto a = evolve(s, Channel::H, k, 0.05);
    auto b = evolve(s, Channel::V, k, 0.05);
    for (std::size_t i = 0; i < a.snaps.size(); ++i)
      if (!same(a.snaps[i].v, b.snaps[i].v) || a.snaps[i].H != b.snaps[i].H) ++mismatches;
  }
  PeriodicGrid coarse{64, 2.0 * M_PI};
  MatD vc = make_curve("smooth-random", coarse, 2, {{"seed", 5}, {"band", 4}});
  CurveState c{coarse, vc, vc, 0.4, 0.4};
  auto a2 = evolve(c, Channel::H, 2, 1e-3), b2 = evolve(c, Channel::V, 2, 1e-3);
  if (!same(a2.snaps.back().v, b2.snaps.back().v)) ++mismatches;
  if (!same(recursion(sp, s.v(Channel::H), w), recursion(sp, s.v(Channel::V), w))) ++mismatches;
  SGState g = sg_from_perp(kGrid, 0.2 * random_curve(2, seed * 43 + 2));
  SGState gh = sg_minus1_flow(g, 0.01, s.curvature(Channel::H)), gv = sg_minus1_flow(g, 0.01, s.curvature(Channel::V));
  if (!same(gh.v, gv.v) || !same(gh.e_perp, gv.e_perp)) ++mismatches;
  r.checks.push_back(at_most("mismatched outputs", mismatches, 0.0, "k0, k1, k2, recursion, SG"));
  return r;
}

}  // namespace

int criterion_count() { return 13; }

CriterionResult run_criterion(int id, std::uint64_t seed) {
  using Fn = CriterionResult (*)(std::uint64_t);
  static const Fn table[] = {compatibility, torsion,      anholonomy_oracle, tm_coincidence, constant_curvature,
                             sphere_pin,    ricci_order,  frame_growth,      operators,      conservation,
                             scaling,       sg_flow,      parity};
  if (id < 1 || id > criterion_count()) throw ConfigError("no criterion " + std::to_string(id));
  try {
    return table[id - 1](seed);
  } catch (const std::exception& e) {
    CriterionResult r{id, "criterion " + std::to_string(id) + " raised", {}};
    r.checks.push_back({"exception", 1.0, 0.0, false, e.what()});
    return r;
  }
}

std::vector<CriterionResult> run_suite(std::uint64_t seed, const std::vector<int>& ids) {
  std::vector<CriterionResult> out;
  if (ids.empty()) {
    for (int id = 1; id <= criterion_count(); ++id) out.push_back(run_criterion(id, seed));
  } else {
    for (int id : ids) out.push_back(run_criterion(id, seed));
  }
  return out;
}

}  // namespace anholoflow
