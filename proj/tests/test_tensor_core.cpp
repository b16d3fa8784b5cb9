#include "doctest.h"

#include <cmath>
#include <random>

#include "anholoflow/tensor_core.hpp"

using namespace anholoflow;

namespace {

double central(const ScalarField& f, VecD p, int k, double h) {
  VecD a = p, b = p;
  a[k] += h;
  b[k] -= h;
  return (f(a) - f(b)) / (2.0 * h);
}

}  // namespace

TEST_CASE("eval_derivative: bilinear, constant and sine") {
  ScalarField bil([](const auto& x) { return x[0] * x[1]; });
  VecD p(2);
  p << 0.3, -1.7;
  CHECK(eval_derivative(bil, p, {0, 1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_derivative(bil, p, {0}) == doctest::Approx(-1.7));

  ScalarField cst([](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return S(4.2);
  });
  CHECK(eval_derivative(cst, p, {1}) == 0.0);

  ScalarField sn([](const auto& x) {
    using std::sin;
    return sin(x[0]);
  });
  VecD z = VecD::Zero(2);
  const double h = 1e-4;
  VecD a = z, b = z;
  a[0] += h;
  b[0] -= h;
  double fd = (sn(a) - 2.0 * sn(z) + sn(b)) / (h * h);
  CHECK(std::abs(eval_derivative(sn, z, {0, 0}) - fd) < 1e-7);
  CHECK(eval_derivative(sn, z, {0, 0}) == 0.0);
}

TEST_CASE("dual first derivatives agree with central differences") {
  ScalarField f([](const auto& x) {
    using std::exp;
    using std::sin;
    using std::cos;
    return sin(x[0] * x[1]) + exp(0.3 * x[2]) * cos(x[0]) + x[1] * x[1] * x[2];
  });
  Rng rng(7);
  Box box{VecD::Constant(3, -1.0), VecD::Constant(3, 1.0)};
  for (int t = 0; t < 200; ++t) {
    VecD p = box.sample(rng);
    for (int k = 0; k < 3; ++k) {
      double d = eval_derivative(f, p, {k});
      double fd = central(f, p, k, 1e-5);
      CHECK(std::abs(d - fd) <= 1e-6 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST_CASE("invert_symmetric: examples and residual") {
  MatD id = MatD::Identity(3, 3);
  CHECK((invert_symmetric(id) - id).cwiseAbs().maxCoeff() == 0.0);

  MatD d = MatD::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  MatD di = invert_symmetric(d);
  CHECK(di(0, 0) == doctest::Approx(1.0));
  CHECK(di(1, 1) == doctest::Approx(0.25));

  Rng rng(11);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    MatD b(3, 3);
    for (int i = 0; i < 9; ++i) b.data()[i] = nd(rng);
    MatD a = b * b.transpose() + 0.5 * MatD::Identity(3, 3);
    MatD ai = invert_symmetric(a);
    CHECK((a * ai - MatD::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((invert_symmetric(ai) - a).cwiseAbs().maxCoeff() <= 1e-9);
  }

  MatD sing = MatD::Zero(2, 2);
  sing(0, 0) = 1.0;
  sing(1, 1) = 1e-14;
  CHECK_THROWS_AS(invert_symmetric(sing), SingularMetricError);
}

TEST_CASE("invert_symmetric works on dual scalars") {
  Mat<D1> a(2, 2);
  a << D1(2.0, 1.0), D1(0.5), D1(0.5), D1(3.0);
  Mat<D1> ai = invert_symmetric(a);
  // d(A^-1) = -A^-1 dA A^-1
  MatD av = to_double(a), da = MatD::Zero(2, 2);
  da(0, 0) = 1.0;
  MatD expect = -av.inverse() * da * av.inverse();
  CHECK((tangent(ai) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("base metric catalog") {
  for (const auto& name : base_metric_names()) {
    MetricField mf = make_base_metric(name, 2);
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      VecD x = mf.domain.sample(rng);
      MatD g = mf(x);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(std::abs(g.determinant()) > kDegeneracyTol);
    }
  }
  CHECK_THROWS_AS(make_base_metric("nope", 2), ConfigError);
}
