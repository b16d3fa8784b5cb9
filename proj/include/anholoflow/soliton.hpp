#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "anholoflow/tensor_core.hpp"

namespace anholoflow {

// Curve fields are M x d matrices: one row per node, one column per component.
enum class Channel { H, V };

const char* channel_name(Channel c);
Channel parse_channel(const std::string& s);

struct PeriodicGrid {
  int M = 256;
  double L = 2.0 * M_PI;

  double dl() const { return L / M; }
  double node(int k) const { return k * dl(); }
};

// Fourier operators on the periodic grid. The Nyquist mode is dropped by odd
// derivatives and by the antiderivative.
class Spectral {
 public:
  explicit Spectral(PeriodicGrid grid);

  const PeriodicGrid& grid() const { return grid_; }
  MatD derivative(const MatD& w, int order = 1) const;
  // Zero-mean antiderivative of w - mean(w); removed column means go to *mean.
  MatD antiderivative(const MatD& w, VecD* mean = nullptr) const;
  // w(l - s), exact for band-limited fields.
  MatD shift(const MatD& w, double s) const;
  double inner(const MatD& a, const MatD& b) const { return grid_.dl() * a.cwiseProduct(b).sum(); }
  VecD mean(const MatD& w) const { return w.colwise().mean().transpose(); }
  Eigen::MatrixXcd forward(const MatD& w) const;
  MatD inverse(const Eigen::MatrixXcd& s) const;

 private:
  MatD apply(const MatD& w, const std::function<std::complex<double>(int)>& symbol) const;

  PeriodicGrid grid_;
  std::vector<double> k_;
  mutable Eigen::FFT<double> fft_;
};

struct CurveState {
  PeriodicGrid grid;
  MatD vh, vv;  // M x (n-1), M x (m-1)
  double R = 0.0, S = 0.0;

  const MatD& v(Channel c) const { return c == Channel::H ? vh : vv; }
  MatD& v(Channel c) { return c == Channel::H ? vh : vv; }
  double curvature(Channel c) const { return c == Channel::H ? R : S; }
  void validate() const;
};

// Nodewise products with the row-vector conventions A (x) B = A^T B and
// A _| (B (x) C) = (A.B) C. Wedge fields are stored as M x d*d row-major.
VecD dot_field(const MatD& a, const MatD& b);
MatD wedge_field(const MatD& a, const MatD& b);
MatD hook_field(const MatD& v, const MatD& A);

MatD apply_J(const Spectral& sp, const MatD& v, const MatD& w);
MatD apply_H(const Spectral& sp, const MatD& v, const MatD& w);
MatD recursion(const Spectral& sp, const MatD& v, const MatD& w);
// Closed form D^2 + |v|^2 + D^-1(v.)v_l - v _| D^-1(v_l ^), with the zero-mode
// terms of the zero-mean convention made explicit.
MatD recursion_expanded(const Spectral& sp, const MatD& v, const MatD& w);

// k = 0, 1, 2; the curvature enters as flow(k) - R flow(k-1).
MatD hierarchy_flow(const Spectral& sp, const MatD& v, int k, double curvature);
double hamiltonian(const Spectral& sp, const MatD& v, int k);

struct SolitonSnapshot {
  double tau = 0.0;
  MatD v;
  std::array<double, 3> H{};
};

struct SolitonTrajectory {
  PeriodicGrid grid;
  Channel channel = Channel::H;
  int k = 1;
  double curvature = 0.0;
  double dtau = 0.0;
  std::vector<SolitonSnapshot> snaps;

  // Max relative drift of H^(k) against the first snapshot.
  double drift(int k) const;
};

// Step bound for the nonlinear part and for the dispersive phase of the modes
// occupied by v0; the linear part itself is integrated exactly.
double default_dtau(const PeriodicGrid& grid, int k, const MatD& v0);

// Integrating-factor RK4 in tau with the dispersive symbol exact in Fourier space.
SolitonTrajectory evolve(const CurveState& s, Channel c, int k, double tau_end, double dtau = 0.0, int every = 1);

// -1 flow: frame (e_par, e_perp) transported along l by de_par = -v.e_perp,
// de_perp = e_par v, while v_tau = -R e_perp.
struct SGState {
  PeriodicGrid grid;
  double tau = 0.0;
  MatD v;          // M x d
  VecD e_par;      // M
  MatD e_perp;     // M x d
  VecD base;       // frame at l = 0, length d + 1

  // Max |d/dl (e_par^2 + |e_perp|^2)| by grid differences.
  double conservation_residual() const;
  double norm_defect() const;
};

SGState sg_from_perp(const PeriodicGrid& grid, const MatD& e_perp);
// Fourth-order Magnus transport of the base frame through v.
void sg_reconstruct(const Spectral& sp, const MatD& v, const VecD& base, VecD& e_par, MatD& e_perp);
SGState sg_minus1_flow(const SGState& s, double dtau, double curvature);

// Initial curve data: "sine" {amp, mode}, "sech" {amp, width}, "smooth-random"
// {amp, band, seed}, "zero". Components are phase-shifted copies.
MatD make_curve(const std::string& name, const PeriodicGrid& grid, int dim, const std::map<std::string, double>& params = {});
std::vector<std::string> curve_names();

}  // namespace anholoflow
