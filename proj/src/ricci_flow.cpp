#include "anholoflow/ricci_flow.hpp"

#include <cmath>

namespace anholoflow {

NConnection NSchedule::at(double chi) const {
  if (kappa == 0.0) return N0;
  NConnection out = N0;
  out.mode = NMode::UserSupplied;
  const double f = factor(chi);
  out.N = MatrixField([base = N0, f](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return (base.N(u) * f).eval();
  });
  return out;
}

namespace {

MatrixField modal_field(const std::vector<MatrixField>& basis, const VecD& a) {
  return MatrixField([basis, a](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    Mat<S> out = basis[0](u) * a[0];
    for (std::size_t p = 1; p < basis.size(); ++p) out += basis[p](u) * a[static_cast<int>(p)];
    return out;
  });
}

std::vector<MatrixField> component_basis(const MatrixField& block, int d, const Lattice& lat) {
  std::vector<MatrixField> basis;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      bool live = false;
      for (int f = 0; f < lat.size() && !live; ++f) live = block(lat.node(f))(i, j) != 0.0;
      if (!live) continue;
      basis.emplace_back([block, i, j](const auto& u) {
        using S = typename std::decay_t<decltype(u)>::Scalar;
        Mat<S> b = block(u);
        Mat<S> out = Mat<S>::Zero(b.rows(), b.cols());
        out(i, j) = b(i, j);
        out(j, i) = b(j, i);
        return out;
      });
    }
  if (basis.empty()) throw ConfigError("metric block vanishes on the lattice");
  return basis;
}

void sync_nodes(FlowState& s) {
  if (s.rep != Representation::Modal) return;
  MatrixField g = modal_field(s.g_basis, s.a_g), h = modal_field(s.h_basis, s.a_h);
  for (int f = 0; f < s.lattice.size(); ++f) {
    VecD u = s.lattice.node(f);
    s.g[f] = g(u);
    s.h[f] = h(u);
  }
}

}  // namespace

DMetric FlowState::dmetric() const {
  DMetric dm;
  dm.name = "flow";
  dm.n = n;
  dm.m = m;
  dm.tm = (n == m);
  if (rep == Representation::Modal) {
    dm.g = modal_field(g_basis, a_g);
    dm.h = modal_field(h_basis, a_h);
  } else {
    dm.g = ChebInterp(lattice, g).field();
    dm.h = ChebInterp(lattice, h).field();
  }
  dm.N = N.at(chi);
  dm.domain = lattice.box;
  return dm;
}

FlowState initial_flow_state(const DMetric& dm, const Lattice& lat, double kappa, LambdaMode mode, double lambda,
                             Representation rep) {
  if (lat.dim() != dm.dim()) throw DimensionError("lattice dimension does not match the d-metric");
  FlowState s;
  s.rep = rep;
  s.n = dm.n;
  s.m = dm.m;
  s.lattice = lat;
  s.N = NSchedule{dm.N, kappa};
  s.lambda_mode = mode;
  s.lambda = lambda;
  for (int f = 0; f < lat.size(); ++f) {
    VecD u = lat.node(f);
    s.g.push_back(dm.g(u));
    s.h.push_back(dm.h(u));
    s.frames.push_back(coframe_matrix<double>(dm.N, u));
  }
  if (rep == Representation::Modal) {
    s.g_basis = component_basis(dm.g, dm.n, lat);
    s.h_basis = component_basis(dm.h, dm.m, lat);
    if (kappa != 0.0) {
      // The schedule drives g along N0^T h N0; give those components room.
      MatrixField hf = dm.h;
      NConnection N0 = dm.N;
      MatrixField coupling([hf, N0](const auto& u) {
        auto Nu = N0(u);
        return (Nu.transpose() * hf(u) * Nu).eval();
      });
      std::vector<MatrixField> extra;
      try {
        extra = component_basis(coupling, dm.n, lat);
      } catch (const ConfigError&) {
      }
      s.g_basis.insert(s.g_basis.end(), extra.begin(), extra.end());
    }
    s.a_g = VecD::Zero(static_cast<int>(s.g_basis.size()));
    s.a_g.head(static_cast<int>(component_basis(dm.g, dm.n, lat).size())).setOnes();
    s.a_h = VecD::Ones(static_cast<int>(s.h_basis.size()));
  }
  return s;
}

namespace {

void check_regular(const FlowState& s) {
  for (int f = 0; f < s.lattice.size(); ++f) {
    const double dg = s.g[f].determinant(), dh = s.h[f].determinant();
    if (!std::isfinite(dg) || !std::isfinite(dh) || std::abs(dg) <= kDegeneracyTol || std::abs(dh) <= kDegeneracyTol)
      throw FlowSingularityError("metric block degenerates at chi = " + std::to_string(s.chi) + ", node " +
                                     std::to_string(f),
                                 s.chi, f);
  }
}

struct Rates {
  std::vector<MatD> g, h, frames;
  VecD a_g, a_h;
  double projection = 0.0;
};

// Weighted least squares of nodal rates onto the basis; returns the residual.
double project(const FlowState& s, const std::vector<MatrixField>& basis, const std::vector<MatD>& rates, VecD& out) {
  const int P = static_cast<int>(basis.size());
  MatD A = MatD::Zero(P, P);
  VecD b = VecD::Zero(P);
  std::vector<std::vector<MatD>> B(s.lattice.size());
  for (int f = 0; f < s.lattice.size(); ++f) {
    VecD u = s.lattice.node(f);
    const double w = s.lattice.weight(f);
    for (int p = 0; p < P; ++p) B[f].push_back(basis[p](u));
    for (int p = 0; p < P; ++p) {
      b[p] += w * B[f][p].cwiseProduct(rates[f]).sum();
      for (int q = 0; q < P; ++q) A(p, q) += w * B[f][p].cwiseProduct(B[f][q]).sum();
    }
  }
  out = A.completeOrthogonalDecomposition().solve(b);
  double res = 0.0;
  for (int f = 0; f < s.lattice.size(); ++f) {
    MatD r = rates[f];
    for (int p = 0; p < P; ++p) r -= out[p] * B[f][p];
    res = std::max(res, r.cwiseAbs().maxCoeff());
  }
  return res;
}

Rates flow_rates(const FlowState& s, double lambda, const std::vector<NodeGeometry>& geo) {
  const int n = s.n, m = s.m, D = n + m;
  Rates r;
  const NConnection N = s.N.at(s.chi);
  for (int f = 0; f < s.lattice.size(); ++f) {
    VecD u = s.lattice.node(f);
    const MatD& ric = geo[f].ricci;
    MatD Rh = ric.topLeftCorner(n, n), Sv = ric.bottomRightCorner(m, m);
    Rh = 0.5 * (Rh + Rh.transpose());
    Sv = 0.5 * (Sv + Sv.transpose());
    MatD dh = -2.0 * (Sv - lambda * s.h[f]);
    MatD Nu = N(u);
    MatD dg = -2.0 * (Rh - lambda * s.g[f]) - Nu.transpose() * dh * Nu;
    if (s.N.kappa != 0.0) {
      MatD dN = s.N.kappa * s.N.N0(u);
      MatD c = dN.transpose() * s.h[f] * Nu;
      dg -= c + c.transpose();
    }
    r.g.push_back(0.5 * (dg + dg.transpose()));
    r.h.push_back(0.5 * (dh + dh.transpose()));
    MatD G = MatD::Zero(D, D);
    G.topLeftCorner(n, n) = s.g[f];
    G.bottomRightCorner(m, m) = s.h[f];
    r.frames.push_back(G.inverse() * ric * s.frames[f]);
  }
  if (s.rep == Representation::Modal) {
    r.projection = std::max(project(s, s.g_basis, r.g, r.a_g), project(s, s.h_basis, r.h, r.a_h));
  }
  return r;
}

FlowState advance(const FlowState& s, const Rates& k, double dt) {
  FlowState out = s;
  out.chi = s.chi + dt;
  for (std::size_t f = 0; f < s.g.size(); ++f) {
    out.g[f] += dt * k.g[f];
    out.h[f] += dt * k.h[f];
    out.frames[f] += dt * k.frames[f];
  }
  if (s.rep == Representation::Modal) {
    out.a_g += dt * k.a_g;
    out.a_h += dt * k.a_h;
    sync_nodes(out);
  }
  return out;
}

FlowState step_with(const FlowState& s, double dchi, const std::vector<NodeGeometry>& geo0) {
  if (!(dchi > 0.0)) throw ConfigError("flow step needs dchi > 0");
  const double lambda = step_lambda(s, geo0);
  FlowState s0 = s;
  s0.lambda = lambda;
  Rates k1 = flow_rates(s0, lambda, geo0);
  FlowState s1 = advance(s0, k1, 0.5 * dchi);
  check_regular(s1);
  Rates k2 = flow_rates(s1, lambda, node_geometry(s1));
  FlowState s2 = advance(s0, k2, 0.5 * dchi);
  check_regular(s2);
  Rates k3 = flow_rates(s2, lambda, node_geometry(s2));
  FlowState s3 = advance(s0, k3, dchi);
  check_regular(s3);
  Rates k4 = flow_rates(s3, lambda, node_geometry(s3));
  FlowState out = s0;
  out.chi = s.chi + dchi;
  for (std::size_t f = 0; f < s.g.size(); ++f) {
    out.g[f] += dchi / 6.0 * (k1.g[f] + 2.0 * k2.g[f] + 2.0 * k3.g[f] + k4.g[f]);
    out.h[f] += dchi / 6.0 * (k1.h[f] + 2.0 * k2.h[f] + 2.0 * k3.h[f] + k4.h[f]);
    out.frames[f] += dchi / 6.0 * (k1.frames[f] + 2.0 * k2.frames[f] + 2.0 * k3.frames[f] + k4.frames[f]);
  }
  if (s.rep == Representation::Modal) {
    out.a_g += dchi / 6.0 * (k1.a_g + 2.0 * k2.a_g + 2.0 * k3.a_g + k4.a_g);
    out.a_h += dchi / 6.0 * (k1.a_h + 2.0 * k2.a_h + 2.0 * k3.a_h + k4.a_h);
    sync_nodes(out);
  }
  out.projection_residual = std::max({k1.projection, k2.projection, k3.projection, k4.projection});
  check_regular(out);
  return out;
}

}  // namespace

std::vector<NodeGeometry> node_geometry(const FlowState& s) {
  check_regular(s);
  DConnection dc = canonical_dconnection(s.dmetric());
  std::vector<NodeGeometry> geo;
  geo.reserve(s.lattice.size());
  for (int f = 0; f < s.lattice.size(); ++f) {
    auto r = ricci_at<double>(dc, s.lattice.node(f));
    NodeGeometry ng{r.full(), r.Rs, r.Ss};
    if (!ng.ricci.allFinite())
      throw FlowSingularityError("non-finite curvature at chi = " + std::to_string(s.chi), s.chi, f);
    geo.push_back(std::move(ng));
  }
  return geo;
}

double normalization_factor(const FlowState& s, const std::vector<NodeGeometry>& geo) {
  double num = 0.0, den = 0.0;
  for (int f = 0; f < s.lattice.size(); ++f) {
    const double w = s.lattice.weight(f) * std::sqrt(std::abs(s.g[f].determinant() * s.h[f].determinant()));
    num += w * (geo[f].R + geo[f].S);
    den += w;
  }
  return num / den;
}

double normalization_factor(const FlowState& s) { return normalization_factor(s, node_geometry(s)); }

double step_lambda(const FlowState& s, const std::vector<NodeGeometry>& geo) {
  switch (s.lambda_mode) {
    case LambdaMode::Fixed: return s.lambda;
    case LambdaMode::Normalized: return normalization_factor(s, geo) / 5.0;
    case LambdaMode::Dimension: return normalization_factor(s, geo) / (s.n + s.m);
  }
  return s.lambda;
}

FlowState ricci_flow_step(const FlowState& s, double dchi) { return step_with(s, dchi, node_geometry(s)); }

std::vector<MatD> frame_evolution_step(const FlowState& s, double dchi) { return ricci_flow_step(s, dchi).frames; }

Snapshot make_snapshot(const FlowState& s) {
  Snapshot snap;
  snap.state = s;
  snap.geo = node_geometry(s);
  snap.r = normalization_factor(s, snap.geo);
  snap.projection = s.projection_residual;
  const int n = s.n, m = s.m, N = s.lattice.size();
  DConnection dc = canonical_dconnection(s.dmetric());
  for (int f = 0; f < N; ++f) {
    const auto& g = snap.geo[f];
    snap.R_mean += g.R / N;
    snap.S_mean += g.S / N;
    snap.offdiag = std::max({snap.offdiag, g.ricci.topRightCorner(n, m).cwiseAbs().maxCoeff(),
                             g.ricci.bottomLeftCorner(m, n).cwiseAbs().maxCoeff()});
    snap.compat = std::max(snap.compat, compatibility_residual(dc, s.lattice.node(f)));
    snap.asym = std::max({snap.asym, (s.g[f] - s.g[f].transpose()).cwiseAbs().maxCoeff(),
                          (s.h[f] - s.h[f].transpose()).cwiseAbs().maxCoeff()});
    snap.triangular = std::max(snap.triangular, s.frames[f].topRightCorner(n, m).cwiseAbs().maxCoeff());
  }
  return snap;
}

FlowTrajectory run_ricci_flow(const FlowState& s0, double chi_end, double dchi,
                              const std::function<void(const Snapshot&)>& emit) {
  if (!(dchi > 0.0)) throw ConfigError("flow step needs dchi > 0");
  const int steps = static_cast<int>(std::llround((chi_end - s0.chi) / dchi));
  if (steps < 0) throw ConfigError("chi_end precedes the initial chi");
  FlowTrajectory t;
  t.dchi = dchi;
  FlowState s = s0;
  for (int k = 0;; ++k) {
    Snapshot snap = make_snapshot(s);
    if (emit) emit(snap);
    t.snaps.push_back(snap);
    if (k == steps) break;
    s = step_with(s, dchi, snap.geo);
    s.chi = s0.chi + (k + 1) * dchi;
  }
  return t;
}

std::pair<double, double> dlaplacians(const DMetric& dm, const MatrixField& f, const VecD& u) {
  const int n = dm.n, m = dm.m;
  auto fs = [&f](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return T(f(q)(0, 0));
  };
  auto c = dconnection_coefficients<double>(dm, ConnKind::Canonical, u);
  MatD gi = dm.g(u).inverse(), hi = dm.h(u).inverse();
  std::vector<double> e1(n + m);
  for (int a = 0; a < n + m; ++a) e1[a] = frame_derivative<double>(dm.N, fs, u, a);
  auto second = [&](int a, int b) {
    auto eb = [&](const auto& q) {
      using T = typename std::decay_t<decltype(q)>::Scalar;
      return frame_derivative<T>(dm.N, fs, q, b);
    };
    return frame_derivative<double>(dm.N, eb, u, a);
  };
  double lh = 0.0, lv = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double t = second(i, j);
      for (int k = 0; k < n; ++k) t -= c.Lh(k, j, i) * e1[k];
      lh += gi(i, j) * t;
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double t = second(n + a, n + b);
      for (int d = 0; d < m; ++d) t -= c.Cv(d, b, a) * e1[n + d];
      lv += hi(a, b) * t;
    }
  return {lh, lv};
}

namespace {

MatrixField nodal_scalar(const FlowState& s, const std::vector<NodeGeometry>& geo, bool vertical) {
  std::vector<MatD> vals;
  for (const auto& g : geo) vals.push_back(MatD::Constant(1, 1, vertical ? g.S : g.R));
  return ChebInterp(s.lattice, vals).field();
}

void require_neighbors(const FlowTrajectory& t, int index) {
  if (index <= 0 || index + 1 >= static_cast<int>(t.snaps.size()))
    throw NeedsNeighborsError("snapshot " + std::to_string(index) + " needs two neighbours for a central difference");
}

}  // namespace

std::pair<double, double> scalar_evolution_residual(const FlowTrajectory& t, int index) {
  require_neighbors(t, index);
  const Snapshot& s = t.snaps[index];
  const Snapshot& a = t.snaps[index - 1];
  const Snapshot& b = t.snaps[index + 1];
  const double dchi = b.state.chi - a.state.chi;
  const int n = s.state.n, m = s.state.m;
  DMetric dm = s.state.dmetric();
  MatrixField Rf = nodal_scalar(s.state, s.geo, false), Sf = nodal_scalar(s.state, s.geo, true);
  const double lambda = s.state.lambda;
  double rh = 0.0, rv = 0.0;
  for (int f = 0; f < s.state.lattice.size(); ++f) {
    VecD u = s.state.lattice.node(f);
    MatD gi = s.state.g[f].inverse(), hi = s.state.h[f].inverse();
    MatD Rij = s.geo[f].ricci.topLeftCorner(n, n), Sab = s.geo[f].ricci.bottomRightCorner(m, m);
    const double RR = (gi * Rij * gi * Rij.transpose()).trace();
    const double SS = (hi * Sab * hi * Sab.transpose()).trace();
    const double lapR = dlaplacians(dm, Rf, u).first;
    const double lapS = dlaplacians(dm, Sf, u).second;
    const double dR = (b.geo[f].R - a.geo[f].R) / dchi;
    const double dS = (b.geo[f].S - a.geo[f].S) / dchi;
    // The normalization term vanishes for lambda = 0.
    rh = std::max(rh, std::abs(dR - (lapR + 2.0 * RR - 2.0 * lambda * s.geo[f].R)));
    rv = std::max(rv, std::abs(dS - (lapS + 2.0 * SS - 2.0 * lambda * s.geo[f].S)));
  }
  return {rh, rv};
}

double einstein_residual(const FlowState& s, double lambda) {
  auto geo = node_geometry(s);
  double r = 0.0;
  for (int f = 0; f < s.lattice.size(); ++f) {
    MatD G = MatD::Zero(s.n + s.m, s.n + s.m);
    G.topLeftCorner(s.n, s.n) = s.g[f];
    G.bottomRightCorner(s.m, s.m) = s.h[f];
    r = std::max(r, (geo[f].ricci - lambda * G).cwiseAbs().maxCoeff());
  }
  return r;
}

ConstrainedStep einstein_constrained_step(const FlowState& s, double dchi, double tol) {
  if (!(dchi > 0.0)) throw ConfigError("flow step needs dchi > 0");
  ConstrainedStep out;
  out.residual_before = einstein_residual(s, s.lambda);
  FlowState t = s;
  t.chi = s.chi + dchi;
  if (s.N.kappa != 0.0) {
    // d/dchi (N N) = 2 kappa (1 + kappa chi) N0 N0; RK4 in chi with h frozen.
    auto rate = [&](double chi, int f) {
      MatD N0 = s.N.N0(s.lattice.node(f));
      return (-2.0 * s.N.kappa * s.N.factor(chi) * N0.transpose() * s.h[f] * N0).eval();
    };
    std::vector<MatD> inc;
    for (int f = 0; f < s.lattice.size(); ++f) {
      MatD k1 = rate(s.chi, f), k2 = rate(s.chi + 0.5 * dchi, f), k4 = rate(s.chi + dchi, f);
      MatD dg = dchi / 6.0 * (k1 + 4.0 * k2 + k4);
      inc.push_back(0.5 * (dg + dg.transpose()));
    }
    if (s.rep == Representation::Modal) {
      VecD da;
      t.projection_residual = project(s, s.g_basis, inc, da);
      t.a_g += da;
      sync_nodes(t);
    } else {
      for (int f = 0; f < s.lattice.size(); ++f) t.g[f] = s.g[f] + inc[f];
    }
  }
  out.residual_after = einstein_residual(t, s.lambda);
  out.violated = out.residual_before > tol || out.residual_after > tol;
  out.state = std::move(t);
  return out;
}

EinsteinReport einstein_extraction_check(const FlowTrajectory& t, int index) {
  if (index < 0 || index >= static_cast<int>(t.snaps.size())) throw ConfigError("snapshot index out of range");
  const Snapshot& s = t.snaps[index];
  const int n = s.state.n, m = s.state.m, N = s.state.lattice.size();
  EinsteinReport rep;
  for (int f = 0; f < N; ++f) {
    const double lh = s.geo[f].R / (n - 1);
    rep.lambda_hat += lh / N;
    rep.fe1 = std::max(rep.fe1, std::abs(s.geo[f].S - (m - 1) * lh));
    MatD G = MatD::Zero(n + m, n + m);
    G.topLeftCorner(n, n) = s.state.g[f];
    G.bottomRightCorner(m, m) = s.state.h[f];
    MatD iso = s.geo[f].ricci;
    iso.topLeftCorner(n, n) -= (s.geo[f].R / n) * s.state.g[f];
    iso.bottomRightCorner(m, m) -= (s.geo[f].S / m) * s.state.h[f];
    rep.einstein = std::max(rep.einstein, iso.cwiseAbs().maxCoeff());
  }
  if (index > 0 && index + 1 < static_cast<int>(t.snaps.size())) {
    rep.fe2_available = true;
    const Snapshot& a = t.snaps[index - 1];
    const Snapshot& b = t.snaps[index + 1];
    const double dchi = b.state.chi - a.state.chi;
    DMetric dm = s.state.dmetric();
    MatrixField Rf = nodal_scalar(s.state, s.geo, false);
    for (int f = 0; f < N; ++f) {
      const double lh = s.geo[f].R / (n - 1);
      const double dl = (b.geo[f].R - a.geo[f].R) / (n - 1) / dchi;
      const double lap = dlaplacians(dm, Rf, s.state.lattice.node(f)).first / (n - 1);
      rep.fe2 = std::max(rep.fe2, std::abs(dl - lh * lh - lap));
    }
  }
  return rep;
}

}  // namespace anholoflow
