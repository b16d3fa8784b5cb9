#pragma once

// Vertical vielbeins that realize constant d-metric coefficients, and checks
// that curvature coefficients are constant in the orthonormal frame.

#include <map>

#include "anholoflow/dgeometry.hpp"

namespace anholoflow {

// e(x) with columns e_a, so that e^T g_v(x) e = g_ring for the v-completed base.
struct VielbeinField {
  MetricField base;
  int m = 2;
  MatD target;  // constant g_ring

  MatD operator()(const VecD& x) const;
  // max |1/2 d^2(e_a e_b y^a y^b g)/dy^e dy^f - g_ring_ef| at (x, y).
  double residual(const VecD& x, const VecD& y) const;
};

VielbeinField solve_vertical_vielbein(const MetricField& base, const MatD& target);

struct BlockSpread {
  double spread = 0.0;   // max |B(u) - mean B|
  double maximum = 0.0;  // max |B(u)|
  bool pass = false;
};

struct ConstantCurvatureReport {
  std::map<std::string, BlockSpread> curvature;  // Rh, Rv, Ph, Pv, Sh, Sv
  std::map<std::string, double> torsion;         // max per torsion block
  double coefficient_max = 0.0;                  // max canonical coefficient
  double tol = 1e-6;
  bool pass = false;
};

ConstantCurvatureReport constant_curvature_check(const DMetric& dm, const std::vector<VecD>& sample, double tol = 1e-6,
                                                 bool tm_mode = false);

// Curvature in the orthonormal frame: A^{-1} R A A A.
Tensor4<double> orthonormal_curvature(const DConnection& dc, const VecD& u);

// Skew-symmetry violation of the connection matrices contracted with the
// unit tangent X (N-adapted components), measured in the orthonormal frame.
double skew_structure_check(const DConnection& dc, const VecD& X, const VecD& u);
double skew_structure_check(const DMetric& dm, const VecD& X, const VecD& u);

}  // namespace anholoflow
