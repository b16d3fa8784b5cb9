#include "anholoflow/tensor_core.hpp"

#include <cmath>
#include <sstream>

namespace anholoflow {

Chart::Chart(int n_, int m_, bool tm) : n(n_), m(m_), tangent_bundle(tm) {
  for (int i = 0; i < n; ++i) labels.push_back("x" + std::to_string(i + 1));
  for (int a = 0; a < m; ++a) labels.push_back("y" + std::to_string(a + 1));
  validate();
}

void Chart::validate() const {
  if (n < 2) throw DimensionError("chart needs n >= 2");
  if (m < n) throw DimensionError("chart needs m >= n");
  if (tangent_bundle && m != n) throw DimensionError("tangent-bundle mode needs m == n");
}

VecD Box::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VecD p(lo.size());
  for (int i = 0; i < lo.size(); ++i) p[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
  return p;
}

bool Box::contains(const VecD& p) const {
  if (p.size() != lo.size()) return false;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

namespace {

std::string echo(const VecD& p) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

double eval_derivative(const ScalarField& f, const VecD& point, const std::vector<int>& mi) {
  if (mi.size() > 2) throw EvaluationError("derivative order above 2 is not supported");
  for (int k : mi)
    if (k < 0 || k >= point.size()) throw EvaluationError("derivative index out of range");
  double out = 0.0;
  if (mi.empty()) {
    out = f(point);
  } else if (mi.size() == 1) {
    out = partial<double>(f, point, mi[0]);
  } else {
    auto first = [&](const Vec<D1>& q) { return partial<D1>(f, q, mi[0]); };
    out = partial<double>(first, point, mi[1]);
  }
  if (!std::isfinite(out)) throw EvaluationError("non-finite field value at " + echo(point));
  return out;
}

MatD spd_sqrt(const MatD& a) {
  Eigen::SelfAdjointEigenSolver<MatD> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) throw SignatureError("matrix is not positive definite");
  return es.operatorSqrt();
}

namespace {

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

Box cube(int n, double lo, double hi) {
  return Box{VecD::Constant(n, lo), VecD::Constant(n, hi)};
}

}  // namespace

std::vector<std::string> base_metric_names() {
  return {"flat", "sphere", "conformal", "diagonal-polynomial", "polar"};
}

MetricField make_base_metric(const std::string& name, int n, const Params& params) {
  if (n < 2) throw DimensionError("base metric needs n >= 2");
  MetricField mf;
  mf.name = name;
  mf.n = n;
  if (name == "flat") {
    VecD eta = VecD::Ones(n);
    const int neg = static_cast<int>(param(params, "negative", 0.0));
    for (int i = 0; i < neg && i < n; ++i) eta[i] = -1.0;
    mf.g = MatrixField([eta](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Mat<S> g = Mat<S>::Zero(x.size(), x.size());
      for (int i = 0; i < x.size(); ++i) g(i, i) = S(eta[i]);
      return g;
    });
    mf.signature = eta;
    mf.domain = cube(n, -1.0, 1.0);
  } else if (name == "sphere") {
    // Round sphere of radius a in nested angular coordinates.
    const double a = param(params, "radius", 1.0);
    mf.g = MatrixField([a](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      using std::sin;
      const int d = static_cast<int>(x.size());
      Mat<S> g = Mat<S>::Zero(d, d);
      S f(a * a);
      for (int i = 0; i < d; ++i) {
        g(i, i) = f;
        S s = sin(x[i]);
        f = f * s * s;
      }
      return g;
    });
    mf.domain = cube(n, 0.6, 2.5);
  } else if (name == "conformal") {
    const double c = param(params, "slope", 1.0);
    const int axis = static_cast<int>(param(params, "axis", 0.0));
    if (axis < 0 || axis >= n) throw ConfigError("conformal axis out of range");
    mf.g = MatrixField([c, axis](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      using std::exp;
      S f = exp(2.0 * c * x[axis]);
      Mat<S> g = Mat<S>::Zero(x.size(), x.size());
      for (int i = 0; i < x.size(); ++i) g(i, i) = f;
      return g;
    });
    mf.domain = cube(n, -1.0, 1.0);
  } else if (name == "diagonal-polynomial") {
    const double a = param(params, "a", 0.5);
    const double b = param(params, "b", 0.25);
    mf.g = MatrixField([a, b](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      const int d = static_cast<int>(x.size());
      Mat<S> g = Mat<S>::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        const S& u = x[(i + 1) % d];
        const S& w = x[i];
        g(i, i) = 1.0 + a * u * u + b * w * w;
      }
      return g;
    });
    mf.domain = cube(n, -1.0, 1.0);
  } else if (name == "polar") {
    if (n != 2) throw ConfigError("polar fixture is two-dimensional");
    mf.g = MatrixField([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Mat<S> g = Mat<S>::Zero(2, 2);
      g(0, 0) = S(1.0);
      g(1, 1) = x[0] * x[0];
      return g;
    });
    mf.domain = Box{(VecD(2) << 0.5, -1.0).finished(), (VecD(2) << 2.5, 1.0).finished()};
  } else {
    throw ConfigError("unknown base metric fixture '" + name + "'");
  }
  return mf;
}

}  // namespace anholoflow
