#include "anholoflow/soliton.hpp"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "anholoflow/errors.hpp"

namespace anholoflow {

using CMat = Eigen::MatrixXcd;

const char* channel_name(Channel c) { return c == Channel::H ? "h" : "v"; }

Channel parse_channel(const std::string& s) {
  if (s == "h") return Channel::H;
  if (s == "v") return Channel::V;
  throw ConfigError("unknown channel '" + s + "' (expected h or v)");
}

Spectral::Spectral(PeriodicGrid grid) : grid_(grid) {
  if (grid_.M < 16 || grid_.M % 2 != 0) throw ConfigError("periodic grid needs an even M >= 16");
  if (!(grid_.L > 0.0)) throw ConfigError("periodic grid needs L > 0");
  k_.resize(grid_.M);
  for (int j = 0; j < grid_.M; ++j) k_[j] = 2.0 * M_PI / grid_.L * (j <= grid_.M / 2 ? j : j - grid_.M);
}

CMat Spectral::forward(const MatD& w) const {
  CMat out(grid_.M, w.cols());
  std::vector<double> col(grid_.M);
  std::vector<std::complex<double>> spec;
  for (int c = 0; c < w.cols(); ++c) {
    for (int j = 0; j < grid_.M; ++j) col[j] = w(j, c);
    fft_.fwd(spec, col);
    for (int j = 0; j < grid_.M; ++j) out(j, c) = spec[j];
  }
  return out;
}

MatD Spectral::inverse(const CMat& s) const {
  MatD out(grid_.M, s.cols());
  std::vector<std::complex<double>> spec(grid_.M);
  std::vector<double> col;
  for (int c = 0; c < s.cols(); ++c) {
    for (int j = 0; j < grid_.M; ++j) spec[j] = s(j, c);
    fft_.inv(col, spec);
    for (int j = 0; j < grid_.M; ++j) out(j, c) = col[j];
  }
  return out;
}

MatD Spectral::apply(const MatD& w, const std::function<std::complex<double>(int)>& symbol) const {
  if (w.rows() != grid_.M) throw DimensionError("field has " + std::to_string(w.rows()) + " rows, grid has " +
                                                std::to_string(grid_.M));
  CMat s = forward(w);
  for (int j = 0; j < grid_.M; ++j) s.row(j) *= symbol(j);
  return inverse(s);
}

MatD Spectral::derivative(const MatD& w, int order) const {
  const int nyq = grid_.M / 2;
  return apply(w, [&](int j) -> std::complex<double> {
    if (j == nyq && order % 2 == 1) return 0.0;
    return std::pow(std::complex<double>(0.0, k_[j]), order);
  });
}

MatD Spectral::antiderivative(const MatD& w, VecD* mean) const {
  if (mean) *mean = this->mean(w);
  const int nyq = grid_.M / 2;
  return apply(w, [&](int j) -> std::complex<double> {
    if (j == 0 || j == nyq) return 0.0;
    return 1.0 / std::complex<double>(0.0, k_[j]);
  });
}

MatD Spectral::shift(const MatD& w, double s) const {
  const int nyq = grid_.M / 2;
  return apply(w, [&](int j) -> std::complex<double> {
    if (j == nyq) return std::cos(k_[j] * s);
    return std::exp(std::complex<double>(0.0, -k_[j] * s));
  });
}

void CurveState::validate() const {
  if (grid.M < 16) throw ConfigError("curve grid needs M >= 16");
  for (const MatD* v : {&vh, &vv}) {
    if (v->size() == 0) continue;
    if (v->rows() != grid.M) throw DimensionError("curve channel rows do not match the grid");
    if (!v->allFinite()) throw ConfigError("curve channel has non-finite samples");
  }
}

VecD dot_field(const MatD& a, const MatD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("channel fields differ in shape");
  return a.cwiseProduct(b).rowwise().sum();
}

MatD wedge_field(const MatD& a, const MatD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("channel fields differ in shape");
  const int d = static_cast<int>(a.cols());
  MatD out(a.rows(), d * d);
  for (int r = 0; r < a.rows(); ++r)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(r, i * d + j) = a(r, i) * b(r, j) - b(r, i) * a(r, j);
  return out;
}

MatD hook_field(const MatD& v, const MatD& A) {
  const int d = static_cast<int>(v.cols());
  if (A.cols() != d * d || A.rows() != v.rows()) throw DimensionError("hook needs a d x d matrix field");
  MatD out = MatD::Zero(v.rows(), d);
  for (int r = 0; r < v.rows(); ++r)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(r, j) += v(r, i) * A(r, i * d + j);
  return out;
}

namespace {

void check_pair(const Spectral& sp, const MatD& v, const MatD& w) {
  if (v.rows() != sp.grid().M || w.rows() != sp.grid().M) throw DimensionError("field rows do not match the grid");
  if (v.cols() != w.cols())
    throw DimensionError("operand has " + std::to_string(w.cols()) + " components, channel has " +
                         std::to_string(v.cols()));
}

MatD scale_rows(const VecD& s, const MatD& w) { return s.asDiagonal() * w; }

}  // namespace

MatD apply_J(const Spectral& sp, const MatD& v, const MatD& w) {
  check_pair(sp, v, w);
  return sp.derivative(w) + scale_rows(sp.antiderivative(dot_field(v, w)), v);
}

MatD apply_H(const Spectral& sp, const MatD& v, const MatD& w) {
  check_pair(sp, v, w);
  return sp.derivative(w) + hook_field(v, sp.antiderivative(wedge_field(v, w)));
}

MatD recursion(const Spectral& sp, const MatD& v, const MatD& w) { return apply_H(sp, v, apply_J(sp, v, w)); }

MatD recursion_expanded(const Spectral& sp, const MatD& v, const MatD& w) {
  check_pair(sp, v, w);
  const MatD vl = sp.derivative(v);
  const VecD vw = dot_field(v, w);
  const MatD vw_wedge = wedge_field(v, w);
  MatD out = sp.derivative(w, 2) + scale_rows(dot_field(v, v), w) + scale_rows(sp.antiderivative(vw), vl) -
             hook_field(v, sp.antiderivative(wedge_field(vl, w)));
  // Zero modes: D^-1 D f = f - mean(f).
  out -= vw.mean() * v;
  MatD mean_wedge = vw_wedge.colwise().mean().replicate(v.rows(), 1);
  out -= hook_field(v, mean_wedge);
  return out;
}

namespace {

// Nonlinear part of flow k at zero curvature.
MatD nonlinear_part(const Spectral& sp, const MatD& v, int k) {
  if (k == 0) return MatD::Zero(v.rows(), v.cols());
  const VecD v2 = dot_field(v, v);
  const MatD vl = sp.derivative(v);
  if (k == 1) return scale_rows(1.5 * v2, vl);
  const MatD vll = sp.derivative(v, 2);
  const VecD v2ll = sp.derivative(v2, 2);
  const VecD vl2 = dot_field(vl, vl);
  const VecD bracket = v2ll - vl2 + 0.75 * v2.cwiseProduct(v2);
  return 2.5 * sp.derivative(scale_rows(v2, vll)) + scale_rows(2.5 * bracket, vl);
}

MatD nonlinear_with_curvature(const Spectral& sp, const MatD& v, int k, double curvature) {
  MatD out = nonlinear_part(sp, v, k);
  if (k == 2 && curvature != 0.0) out -= curvature * nonlinear_part(sp, v, 1);
  return out;
}

// Fourier symbol of the linear part of flow k.
std::complex<double> linear_symbol(int k, double curvature, double kj, bool nyquist) {
  if (nyquist) return 0.0;
  const std::complex<double> ik(0.0, kj);
  switch (k) {
    case 0:
      return ik;
    case 1:
      return ik * ik * ik - curvature * ik;
    default:
      return std::pow(ik, 5) - curvature * ik * ik * ik;
  }
}

void check_k(int k) {
  if (k < 0 || k > 2) throw ConfigError("hierarchy flow k = " + std::to_string(k) + " is not supported (0, 1, 2)");
}

}  // namespace

MatD hierarchy_flow(const Spectral& sp, const MatD& v, int k, double curvature) {
  check_k(k);
  if (v.rows() != sp.grid().M) throw DimensionError("field rows do not match the grid");
  MatD lin;
  switch (k) {
    case 0:
      lin = sp.derivative(v);
      break;
    case 1:
      lin = sp.derivative(v, 3) - curvature * sp.derivative(v);
      break;
    default:
      lin = sp.derivative(v, 5) - curvature * sp.derivative(v, 3);
  }
  return lin + nonlinear_with_curvature(sp, v, k, curvature);
}

double hamiltonian(const Spectral& sp, const MatD& v, int k) {
  check_k(k);
  const VecD v2 = dot_field(v, v);
  VecD density;
  if (k == 0) {
    density = 0.5 * v2;
  } else {
    const MatD vl = sp.derivative(v);
    const VecD vl2 = dot_field(vl, vl);
    if (k == 1) {
      density = -0.5 * vl2 + 0.125 * v2.cwiseProduct(v2);
    } else {
      const MatD vll = sp.derivative(v, 2);
      const VecD vvl = dot_field(v, vl);
      density = 0.5 * dot_field(vll, vll) - 0.75 * v2.cwiseProduct(vl2) - 0.5 * vvl.cwiseProduct(vvl) +
                v2.cwiseProduct(v2).cwiseProduct(v2) / 16.0;
    }
  }
  return sp.grid().dl() * density.sum();
}

double SolitonTrajectory::drift(int k) const {
  double d = 0.0;
  if (snaps.empty()) return d;
  const double h0 = snaps.front().H[k];
  const double scale = std::abs(h0) > 0.0 ? std::abs(h0) : 1.0;
  for (const auto& s : snaps) d = std::max(d, std::abs(s.H[k] - h0) / scale);
  return d;
}

double default_dtau(const PeriodicGrid& grid, int k, const MatD& v0) {
  check_k(k);
  const double k0 = 2.0 * M_PI / grid.L;
  const double kmax = k0 * (grid.M / 3);
  const double a = v0.size() ? v0.rowwise().squaredNorm().maxCoeff() : 0.0;
  double stiff = 0.0;
  if (k == 1) stiff = 1.5 * a * kmax;
  if (k == 2) stiff = 2.5 * a * kmax * kmax * kmax + 2.5 * a * a * kmax;
  double dt = std::min(0.01, 0.25 / (1.0 + stiff));
  if (k == 0 || v0.size() == 0) return dt;
  // Resolve the dispersive phase of the modes the data actually occupies.
  const Eigen::MatrixXcd f = Spectral(grid).forward(v0);
  const Eigen::VectorXd amp = f.rowwise().norm();
  const double peak = amp.maxCoeff();
  int active = 1;
  for (int j = 1; j <= grid.M / 2; ++j)
    if (amp[j] > 1e-8 * peak || amp[grid.M - j] > 1e-8 * peak) active = j;
  const double omega = std::pow(k0 * active, 2 * k + 1);
  return std::min(dt, 0.25 / omega);
}

SolitonTrajectory evolve(const CurveState& s, Channel c, int k, double tau_end, double dtau, int every) {
  check_k(k);
  s.validate();
  if (!(tau_end >= 0.0)) throw ConfigError("tau_end must be >= 0");
  if (every < 1) throw ConfigError("snapshot stride must be >= 1");
  const MatD& v0 = s.v(c);
  if (v0.cols() < 1) throw DimensionError(std::string("channel ") + channel_name(c) + " is empty");
  Spectral sp(s.grid);
  const double curvature = s.curvature(c);
  if (dtau <= 0.0) dtau = default_dtau(s.grid, k, v0);
  const int steps = tau_end > 0.0 ? static_cast<int>(std::ceil(tau_end / dtau - 1e-9)) : 0;
  const double h = steps ? tau_end / steps : dtau;

  SolitonTrajectory t;
  t.grid = s.grid;
  t.channel = c;
  t.k = k;
  t.curvature = curvature;
  t.dtau = h;
  auto record = [&](double tau, const MatD& v) {
    SolitonSnapshot snap;
    snap.tau = tau;
    snap.v = v;
    for (int q = 0; q < 3; ++q) snap.H[q] = hamiltonian(sp, v, q);
    t.snaps.push_back(std::move(snap));
  };

  const int M = s.grid.M;
  Eigen::VectorXcd E(M), E2(M);
  for (int j = 0; j < M; ++j) {
    const double kj = 2.0 * M_PI / s.grid.L * (j <= M / 2 ? j : j - M);
    const std::complex<double> L = linear_symbol(k, curvature, kj, j == M / 2);
    E[j] = std::exp(L * h);
    E2[j] = std::exp(L * (0.5 * h));
  }
  // 2/3-rule dealiasing of the nonlinear term.
  Eigen::VectorXd keep(M);
  for (int j = 0; j < M; ++j) keep[j] = std::abs(j <= M / 2 ? j : j - M) < M / 3 ? 1.0 : 0.0;
  auto N = [&](const CMat& vh) {
    CMat out = sp.forward(nonlinear_with_curvature(sp, sp.inverse(vh), k, curvature));
    return (keep.asDiagonal() * out).eval();
  };

  CMat vh = sp.forward(v0);
  record(0.0, v0);
  for (int i = 1; i <= steps; ++i) {
    const CMat k1 = N(vh);
    const CMat k2 = N(E2.asDiagonal() * (vh + 0.5 * h * k1));
    const CMat k3 = N(E2.asDiagonal() * vh + 0.5 * h * k2);
    const CMat k4 = N(E.asDiagonal() * vh + h * (E2.asDiagonal() * k3));
    vh = E.asDiagonal() * vh + (h / 6.0) * (E.asDiagonal() * k1 + 2.0 * (E2.asDiagonal() * (k2 + k3)) + k4);
    const double tau = i * h;
    if (!vh.allFinite()) throw BlowUpError("curve flow blew up at tau = " + std::to_string(tau), tau);
    if (i % every == 0 || i == steps) record(tau, sp.inverse(vh));
  }
  return t;
}

double SGState::conservation_residual() const {
  const VecD n = e_par.cwiseProduct(e_par) + e_perp.rowwise().squaredNorm();
  double r = 0.0;
  for (int k = 0; k + 1 < n.size(); ++k) r = std::max(r, std::abs(n[k + 1] - n[k]) / grid.dl());
  return r;
}

double SGState::norm_defect() const {
  const VecD n = e_par.cwiseProduct(e_par) + e_perp.rowwise().squaredNorm();
  return (n.array() - 1.0).abs().maxCoeff();
}

SGState sg_from_perp(const PeriodicGrid& grid, const MatD& e_perp) {
  Spectral sp(grid);
  if (e_perp.rows() != grid.M || e_perp.cols() < 1) throw DimensionError("e_perp must be M x d with d >= 1");
  const VecD p2 = e_perp.rowwise().squaredNorm();
  if (!(p2.maxCoeff() < 1.0)) throw HyperbolicityError("|e_perp| must stay below 1 for the square root");
  SGState s;
  s.grid = grid;
  s.e_perp = e_perp;
  s.e_par = (1.0 - p2.array()).sqrt().matrix();
  s.v = s.e_par.cwiseInverse().asDiagonal() * sp.derivative(e_perp);
  s.base.resize(e_perp.cols() + 1);
  s.base[0] = s.e_par[0];
  s.base.tail(e_perp.cols()) = e_perp.row(0).transpose();
  return s;
}

void sg_reconstruct(const Spectral& sp, const MatD& v, const VecD& base, VecD& e_par, MatD& e_perp) {
  const int M = sp.grid().M, d = static_cast<int>(v.cols());
  if (base.size() != d + 1) throw DimensionError("SG base frame must have d + 1 entries");
  const double h = sp.grid().dl();
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const MatD v1 = sp.shift(v, -c1 * h), v2 = sp.shift(v, -c2 * h);
  auto gen = [d](const auto& row) {
    MatD A = MatD::Zero(d + 1, d + 1);
    A.block(0, 1, 1, d) = -row;
    A.block(1, 0, d, 1) = row.transpose();
    return A;
  };
  e_par.resize(M);
  e_perp.resize(M, d);
  VecD e = base;
  for (int k = 0; k < M; ++k) {
    e_par[k] = e[0];
    e_perp.row(k) = e.tail(d).transpose();
    if (k + 1 == M) break;
    const MatD A1 = gen(v1.row(k)), A2 = gen(v2.row(k));
    const MatD Om = 0.5 * h * (A1 + A2) + std::sqrt(3.0) / 12.0 * h * h * (A2 * A1 - A1 * A2);
    e = Om.exp() * e;
  }
}

SGState sg_minus1_flow(const SGState& s, double dtau, double curvature) {
  if (!(dtau > 0.0)) throw ConfigError("SG step needs dtau > 0");
  Spectral sp(s.grid);
  auto rate = [&](const MatD& v) {
    VecD ep;
    MatD eq;
    sg_reconstruct(sp, v, s.base, ep, eq);
    return (-curvature * eq).eval();
  };
  const MatD k1 = rate(s.v);
  const MatD k2 = rate(s.v + 0.5 * dtau * k1);
  const MatD k3 = rate(s.v + 0.5 * dtau * k2);
  const MatD k4 = rate(s.v + dtau * k3);
  SGState out = s;
  out.tau = s.tau + dtau;
  out.v = s.v + dtau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.v.allFinite()) throw BlowUpError("SG flow blew up at tau = " + std::to_string(out.tau), out.tau);
  sg_reconstruct(sp, out.v, out.base, out.e_par, out.e_perp);
  if (!(out.e_par.minCoeff() > 0.0))
    throw HyperbolicityError("e_par left the positive branch at tau = " + std::to_string(out.tau) +
                             " (|v_tau| reached the curvature scale)");
  return out;
}

std::vector<std::string> curve_names() { return {"zero", "sine", "sech", "smooth-random"}; }

MatD make_curve(const std::string& name, const PeriodicGrid& grid, int dim, const std::map<std::string, double>& params) {
  if (dim < 1) throw DimensionError("curve dimension must be >= 1");
  auto get = [&](const std::string& key, double def) {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  };
  MatD v = MatD::Zero(grid.M, dim);
  const double L = grid.L;
  if (name == "zero") return v;
  if (name == "sine") {
    const double a = get("amp", 1.0), mode = get("mode", 1.0);
    for (int k = 0; k < grid.M; ++k)
      for (int c = 0; c < dim; ++c) v(k, c) = a * std::sin(2.0 * M_PI * mode * grid.node(k) / L + 0.7 * c);
    return v;
  }
  if (name == "sech") {
    const double a = get("amp", 1.0), w = get("width", 0.05 * L);
    for (int k = 0; k < grid.M; ++k)
      for (int c = 0; c < dim; ++c) {
        const double x = (grid.node(k) - 0.5 * L - 0.1 * L * c) / w;
        v(k, c) = a / std::cosh(x) * (c % 2 ? 0.5 : 1.0);
      }
    return v;
  }
  if (name == "smooth-random") {
    const double a = get("amp", 0.5);
    const int band = static_cast<int>(get("band", 6));
    std::mt19937_64 rng(static_cast<std::uint64_t>(get("seed", 1)));
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int c = 0; c < dim; ++c) {
      const double offset = a * 0.3 * nd(rng);
      for (int k = 0; k < grid.M; ++k) v(k, c) = offset;
      for (int j = 1; j <= band; ++j) {
        const double ca = a * nd(rng) / (j * j), sa = a * nd(rng) / (j * j);
        for (int k = 0; k < grid.M; ++k) {
          const double t = 2.0 * M_PI * j * grid.node(k) / L;
          v(k, c) += ca * std::cos(t) + sa * std::sin(t);
        }
      }
    }
    return v;
  }
  throw ConfigError("unknown curve '" + name + "'");
}

}  // namespace anholoflow
