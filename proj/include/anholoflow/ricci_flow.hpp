#pragma once

// N-adapted Ricci flow of the h- and v-blocks on a Chebyshev lattice, with
// coframe evolution, normalization, scalar-curvature evolution residuals and
// Einstein-space checks.

#include "anholoflow/dgeometry.hpp"
#include "anholoflow/lattice.hpp"

namespace anholoflow {

// N(chi) = (1 + kappa chi) N0; kappa = 0 freezes N.
struct NSchedule {
  NConnection N0;
  double kappa = 0.0;

  NConnection at(double chi) const;
  double factor(double chi) const { return 1.0 + kappa * chi; }
};

enum class LambdaMode { Fixed, Normalized, Dimension };  // lambda, r/5, r/(n+m)

// Modal: each block is sum_p a_p(chi) B_p(u) over analytic basis fields and
// nodal rates are projected onto the basis. Spectral: blocks are Chebyshev
// interpolants of nodal values (no boundary data, so only short runs).
enum class Representation { Modal, Spectral };

struct FlowState {
  int n = 2, m = 2;
  double chi = 0.0;
  double lambda = 0.0;
  LambdaMode lambda_mode = LambdaMode::Fixed;
  Lattice lattice;
  NSchedule N;
  Representation rep = Representation::Modal;
  std::vector<MatD> g, h;    // blocks per node
  std::vector<MatD> frames;  // coframe coefficients e^alpha_(alpha bar) per node
  std::vector<MatrixField> g_basis, h_basis;
  VecD a_g, a_h;                     // modal amplitudes
  double projection_residual = 0.0;  // max nodal rate left out of the basis, last step

  // d-metric interpolating the nodal blocks at this chi.
  DMetric dmetric() const;
};

// Default modal basis: one field per nonzero upper-triangular component of
// the initial block, scaled independently.
FlowState initial_flow_state(const DMetric& dm, const Lattice& lat, double kappa = 0.0,
                             LambdaMode mode = LambdaMode::Fixed, double lambda = 0.0,
                             Representation rep = Representation::Modal);

struct NodeGeometry {
  MatD ricci;  // full D x D Ricci d-tensor
  double R = 0.0, S = 0.0;
};

std::vector<NodeGeometry> node_geometry(const FlowState& s);

// Volume-weighted mean of R + S; volume element sqrt|det g det h|.
double normalization_factor(const FlowState& s);
double normalization_factor(const FlowState& s, const std::vector<NodeGeometry>& geo);

// Lambda used for the next step according to the state's mode.
double step_lambda(const FlowState& s, const std::vector<NodeGeometry>& geo);

// One classical RK4 step of blocks and coframes; lambda held over the step.
FlowState ricci_flow_step(const FlowState& s, double dchi);

// Coframe coefficients after one coupled step.
std::vector<MatD> frame_evolution_step(const FlowState& s, double dchi);

struct Snapshot {
  FlowState state;
  std::vector<NodeGeometry> geo;
  double r = 0.0;
  double R_mean = 0.0, S_mean = 0.0;
  double offdiag = 0.0;      // max |mixed Ricci blocks|
  double compat = 0.0;       // max compatibility residual over nodes
  double asym = 0.0;         // max |g - g^T|, |h - h^T|
  double triangular = 0.0;   // max |e^i_(a bar)| block of the coframes
  double projection = 0.0;   // modal projection residual of the step that produced it
};

Snapshot make_snapshot(const FlowState& s);

struct FlowTrajectory {
  std::vector<Snapshot> snaps;
  double dchi = 0.0;
};

FlowTrajectory run_ricci_flow(const FlowState& s0, double chi_end, double dchi,
                              const std::function<void(const Snapshot&)>& emit = {});

// |lhs - rhs| of the h and v scalar-curvature evolution equations at an
// interior snapshot, maximized over nodes.
std::pair<double, double> scalar_evolution_residual(const FlowTrajectory& t, int index);

// h-Laplacian g^ij(e_i e_j f - L^k_ji e_k f) and v-Laplacian of a nodal field.
std::pair<double, double> dlaplacians(const DMetric& dm, const MatrixField& f, const VecD& u);

struct ConstrainedStep {
  FlowState state;
  double residual_before = 0.0;
  double residual_after = 0.0;
  bool violated = false;
};

// max |R_ij - lambda g_ij|, |S_ab - lambda h_ab| over nodes.
double einstein_residual(const FlowState& s, double lambda);

// h-block driven by -g_ab d(N N)/dchi only; v-block copied unchanged.
ConstrainedStep einstein_constrained_step(const FlowState& s, double dchi, double tol = 1e-8);

struct EinsteinReport {
  double fe1 = 0.0;          // max |S - (m-1) lambda_hat|, lambda_hat = R/(n-1)
  double einstein = 0.0;     // max |R_ab - lambda_hat g_ab| over both blocks
  double fe2 = 0.0;          // max |d lambda_hat/dchi - lambda_hat^2 - Lap lambda_hat|
  double lambda_hat = 0.0;   // mean over nodes
  bool fe2_available = false;
};

EinsteinReport einstein_extraction_check(const FlowTrajectory& t, int index);

}  // namespace anholoflow
