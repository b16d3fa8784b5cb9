#pragma once

// Chebyshev tensor lattices over a coordinate box and spectral interpolation
// of matrix-valued samples, evaluable at any scalar of the dual tower.

#include "anholoflow/tensor_core.hpp"

namespace anholoflow {

struct Lattice {
  Box box;
  std::vector<int> counts;  // nodes per axis; 1 = constant along the axis

  Lattice() = default;
  Lattice(Box b, std::vector<int> c);
  int dim() const { return static_cast<int>(counts.size()); }
  int size() const;
  VecD node(int flat) const;
  std::vector<int> multi(int flat) const;
  // Clenshaw-Curtis weight of a node (product over axes, scaled to the box).
  double weight(int flat) const;
  double volume() const;
  // Same box with every active axis refined to 2 counts - 1 nodes.
  Lattice refined() const;

 private:
  std::vector<std::vector<double>> nodes_, weights_;
};

class ChebInterp {
 public:
  ChebInterp() = default;
  ChebInterp(const Lattice& lat, const std::vector<MatD>& values);

  template <class S>
  Mat<S> operator()(const Vec<S>& u) const {
    const int D = lat_.dim();
    std::vector<std::vector<S>> T(D);
    for (int d = 0; d < D; ++d) {
      const int c = lat_.counts[d];
      T[d].resize(c);
      T[d][0] = S(1.0);
      if (c == 1) continue;
      const double mid = 0.5 * (lat_.box.lo[d] + lat_.box.hi[d]);
      const double half = 0.5 * (lat_.box.hi[d] - lat_.box.lo[d]);
      S xi = (u[d] - mid) / half;
      T[d][1] = xi;
      for (int k = 2; k < c; ++k) T[d][k] = 2.0 * xi * T[d][k - 1] - T[d][k - 2];
    }
    Mat<S> out = Mat<S>::Zero(rows_, cols_);
    std::vector<int> k(D, 0);
    for (std::size_t f = 0; f < coeffs_.size(); ++f) {
      S w = T[0][k[0]];
      for (int d = 1; d < D; ++d) w = w * T[d][k[d]];
      const MatD& c = coeffs_[f];
      for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) out(i, j) += w * c(i, j);
      for (int d = D - 1; d >= 0; --d) {
        if (++k[d] < lat_.counts[d]) break;
        k[d] = 0;
      }
    }
    return out;
  }

  MatrixField field() const;

 private:
  Lattice lat_;
  int rows_ = 0, cols_ = 0;
  std::vector<MatD> coeffs_;
};

}  // namespace anholoflow
