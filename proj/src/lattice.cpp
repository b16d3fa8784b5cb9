#include "anholoflow/lattice.hpp"

#include <cmath>
#include <numbers>

namespace anholoflow {

namespace {

// Clenshaw-Curtis weights on [-1, 1] for the Lobatto points cos(pi j / p).
std::vector<double> cc_weights(int count) {
  if (count == 1) return {2.0};
  const int p = count - 1;
  std::vector<double> w(count);
  for (int j = 0; j < count; ++j) {
    double s = 0.0;
    for (int k = 1; k <= p / 2; ++k) {
      const double b = (2 * k == p) ? 1.0 : 2.0;
      s += b / (4.0 * k * k - 1.0) * std::cos(2.0 * std::numbers::pi * j * k / p);
    }
    const double c = (j == 0 || j == p) ? 1.0 : 2.0;
    w[j] = c / p * (1.0 - s);
  }
  return w;
}

}  // namespace

Lattice::Lattice(Box b, std::vector<int> c) : box(std::move(b)), counts(std::move(c)) {
  if (static_cast<int>(counts.size()) != box.lo.size()) throw DimensionError("lattice counts do not match the box");
  for (int d = 0; d < dim(); ++d) {
    const int cnt = counts[d];
    if (cnt < 1) throw ConfigError("lattice axis needs at least one node");
    const double mid = 0.5 * (box.lo[d] + box.hi[d]);
    const double half = 0.5 * (box.hi[d] - box.lo[d]);
    std::vector<double> x(cnt);
    if (cnt == 1) {
      x[0] = mid;
    } else {
      for (int j = 0; j < cnt; ++j) x[j] = mid + half * std::cos(std::numbers::pi * j / (cnt - 1));
    }
    nodes_.push_back(x);
    std::vector<double> w = cc_weights(cnt);
    for (auto& v : w) v *= half;
    weights_.push_back(w);
  }
}

int Lattice::size() const {
  int s = 1;
  for (int c : counts) s *= c;
  return s;
}

std::vector<int> Lattice::multi(int flat) const {
  std::vector<int> k(dim());
  for (int d = dim() - 1; d >= 0; --d) {
    k[d] = flat % counts[d];
    flat /= counts[d];
  }
  return k;
}

VecD Lattice::node(int flat) const {
  auto k = multi(flat);
  VecD u(dim());
  for (int d = 0; d < dim(); ++d) u[d] = nodes_[d][k[d]];
  return u;
}

double Lattice::weight(int flat) const {
  auto k = multi(flat);
  double w = 1.0;
  for (int d = 0; d < dim(); ++d) w *= weights_[d][k[d]];
  return w;
}

double Lattice::volume() const {
  double v = 1.0;
  for (int d = 0; d < dim(); ++d) v *= box.hi[d] - box.lo[d];
  return v;
}

Lattice Lattice::refined() const {
  std::vector<int> c = counts;
  for (auto& x : c)
    if (x > 1) x = 2 * x - 1;
  return Lattice(box, c);
}

ChebInterp::ChebInterp(const Lattice& lat, const std::vector<MatD>& values) : lat_(lat) {
  if (static_cast<int>(values.size()) != lat.size()) throw DimensionError("sample count does not match the lattice");
  rows_ = static_cast<int>(values.front().rows());
  cols_ = static_cast<int>(values.front().cols());
  coeffs_ = values;
  // Separable discrete cosine transform, one axis at a time.
  const int D = lat.dim();
  std::vector<int> stride(D, 1);
  for (int d = D - 2; d >= 0; --d) stride[d] = stride[d + 1] * lat.counts[d + 1];
  for (int d = 0; d < D; ++d) {
    const int c = lat.counts[d];
    if (c == 1) continue;
    const int p = c - 1;
    std::vector<MatD> next(coeffs_.size(), MatD::Zero(rows_, cols_));
    for (int f = 0; f < lat.size(); ++f) {
      const int j = (f / stride[d]) % c;
      const int base = f - j * stride[d];
      const double hj = (j == 0 || j == p) ? 0.5 : 1.0;
      for (int k = 0; k < c; ++k) {
        const double hk = (k == 0 || k == p) ? 0.5 : 1.0;
        next[base + k * stride[d]] += (2.0 / p) * hj * hk * std::cos(std::numbers::pi * j * k / p) * coeffs_[f];
      }
    }
    coeffs_ = std::move(next);
  }
}

MatrixField ChebInterp::field() const {
  return MatrixField([self = *this](const auto& u) {
    using S = typename std::decay_t<decltype(u)>::Scalar;
    return self.template operator()<S>(u);
  });
}

}  // namespace anholoflow
