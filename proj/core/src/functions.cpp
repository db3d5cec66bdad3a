#include "nlgrad/functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlgrad/errors.hpp"
#include "nlgrad/kernels.hpp"

namespace nlgrad {

namespace {

constexpr double kPi = std::numbers::pi;

// d/dt smooth_step(t).
double smooth_step_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double e = 1.0 / (1.0 - t) - 1.0 / t;
  if (e > 700.0 || e < -700.0) return 0.0;
  const double de = 1.0 / ((1.0 - t) * (1.0 - t)) + 1.0 / (t * t);
  const double ex = std::exp(e);
  return -ex * de / ((1.0 + ex) * (1.0 + ex));
}

struct Eval {
  std::span<const double> x;
  double* grad;  // may be null
  int n;

  double operator()(const term::Constant& t) const {
    if (grad) std::fill_n(grad, n, 0.0);
    return t.c;
  }

  double operator()(const term::Affine& t) const {
    double v = t.c;
    for (int k = 0; k < n; ++k) {
      v += t.b[k] * x[k];
      if (grad) grad[k] = t.b[k];
    }
    return v;
  }

  double operator()(const term::SineBump& t) const {
    double fac[3], dfac[3];
    for (int k = 0; k < n; ++k) {
      if (x[k] < t.lower[k] || x[k] > t.upper[k]) {
        if (grad) std::fill_n(grad, n, 0.0);
        return 0.0;
      }
      const double L = t.upper[k] - t.lower[k];
      const double w = t.k[k] * kPi / L;
      const double arg = w * (x[k] - t.lower[k]);
      fac[k] = std::sin(arg);
      dfac[k] = w * std::cos(arg);
    }
    double v = t.amplitude;
    for (int k = 0; k < n; ++k) v *= fac[k];
    if (grad) {
      for (int k = 0; k < n; ++k) {
        double g = t.amplitude * dfac[k];
        for (int j = 0; j < n; ++j)
          if (j != k) g *= fac[j];
        grad[k] = g;
      }
    }
    return v;
  }

  double operator()(const term::RadialBump& t) const {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += (x[k] - t.center[k]) * (x[k] - t.center[k]);
    const double q = r2 / (t.radius * t.radius);
    if (q >= 1.0) {
      if (grad) std::fill_n(grad, n, 0.0);
      return 0.0;
    }
    const double v = t.amplitude * std::exp(1.0 - 1.0 / (1.0 - q));
    if (grad) {
      // d/dx exp(1 - 1/(1-q)) = -exp(..) / (1-q)^2 * dq/dx, dq/dx = 2 (x-c)/R^2
      const double f = -v / ((1.0 - q) * (1.0 - q)) * 2.0 / (t.radius * t.radius);
      for (int k = 0; k < n; ++k) grad[k] = f * (x[k] - t.center[k]);
    }
    return v;
  }

  double operator()(const term::Oscillation& t) const {
    const double arg = t.frequency * x[t.axis] + t.phase;
    if (grad) {
      std::fill_n(grad, n, 0.0);
      grad[t.axis] = t.amplitude * t.frequency * std::cos(arg);
    }
    return t.amplitude * std::sin(arg);
  }

  double operator()(const term::Window& t) const {
    double fac[3], dfac[3];
    for (int k = 0; k < n; ++k) {
      const double below = (t.lower[k] - x[k]) / t.ramp;
      const double above = (x[k] - t.upper[k]) / t.ramp;
      const double a = smooth_step(below), b = smooth_step(above);
      fac[k] = a * b;
      dfac[k] = (-smooth_step_derivative(below) * b + a * smooth_step_derivative(above)) / t.ramp;
    }
    double v = 1.0;
    for (int k = 0; k < n; ++k) v *= fac[k];
    if (grad) {
      for (int k = 0; k < n; ++k) {
        double g = dfac[k];
        for (int j = 0; j < n; ++j)
          if (j != k) g *= fac[j];
        grad[k] = g;
      }
    }
    return v;
  }
};

const std::vector<double>& require(const FunctionDescriptor& d, const std::string& key, std::size_t size) {
  auto it = d.params.find(key);
  if (it == d.params.end())
    throw ParameterError("function '" + d.type + "': missing parameter '" + key + "'");
  if (size != 0 && it->second.size() != size)
    throw ParameterError("function '" + d.type + "': parameter '" + key + "' must have " + std::to_string(size) +
                         " entries");
  return it->second;
}

double optional(const FunctionDescriptor& d, const std::string& key, double fallback) {
  auto it = d.params.find(key);
  if (it == d.params.end() || it->second.empty()) return fallback;
  return it->second.front();
}

}  // namespace

double ScalarFunction::value(std::span<const double> x) const {
  const int n = static_cast<int>(x.size());
  double total = 0.0;
  for (const auto& prod : products_) {
    double v = 1.0;
    for (const auto& t : prod) v *= std::visit(Eval{x, nullptr, n}, t);
    total += v;
  }
  return total;
}

void ScalarFunction::gradient(std::span<const double> x, std::span<double> out) const {
  const int n = static_cast<int>(x.size());
  std::fill(out.begin(), out.end(), 0.0);
  double vals[8];
  double grads[8][3];
  for (const auto& prod : products_) {
    const std::size_t m = prod.size();
    if (m > 8) throw PreconditionError("ScalarFunction: at most 8 factors per product");
    for (std::size_t i = 0; i < m; ++i) vals[i] = std::visit(Eval{x, grads[i], n}, prod[i]);
    for (std::size_t i = 0; i < m; ++i) {
      double others = 1.0;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) others *= vals[j];
      for (int k = 0; k < n; ++k) out[k] += others * grads[i][k];
    }
  }
}

Vec ScalarFunction::gradient(const Vec& x) const {
  Vec g(x.size());
  gradient(std::span<const double>(x.data(), x.size()), std::span<double>(g.data(), g.size()));
  return g;
}

ScalarFunction& ScalarFunction::operator+=(const ScalarFunction& o) {
  products_.insert(products_.end(), o.products_.begin(), o.products_.end());
  return *this;
}

ScalarFunction& ScalarFunction::operator*=(double a) {
  for (auto& prod : products_) prod.push_back(term::Constant{a});
  return *this;
}

ScalarFunction operator*(const ScalarFunction& a, const ScalarFunction& b) {
  ScalarFunction out;
  for (const auto& pa : a.products_)
    for (const auto& pb : b.products_) {
      auto p = pa;
      p.insert(p.end(), pb.begin(), pb.end());
      out.products_.push_back(std::move(p));
    }
  return out;
}

VectorFunction VectorFunction::affine(const Mat& A, const Vec& c) {
  std::vector<ScalarFunction> comps;
  for (int i = 0; i < A.rows(); ++i) {
    std::vector<double> b(A.cols());
    for (int k = 0; k < A.cols(); ++k) b[k] = A(i, k);
    comps.emplace_back(term::Affine{b, c(i)});
  }
  return VectorFunction(std::move(comps));
}

VectorFunction VectorFunction::identity(int n) {
  return affine(Mat::Identity(n, n), Vec::Zero(n));
}

Vec VectorFunction::value(const Vec& x) const {
  Vec v(dim());
  for (int i = 0; i < dim(); ++i) v(i) = comps_[i].value(x);
  return v;
}

Mat VectorFunction::jacobian(const Vec& x) const {
  Mat J(dim(), x.size());
  for (int i = 0; i < dim(); ++i) J.row(i) = comps_[i].gradient(x).transpose();
  return J;
}

ScalarFunction make_scalar_function(const FunctionDescriptor& d, int n) {
  auto vec_int = [](const std::vector<double>& v, int n) {
    std::vector<int> out(n);
    for (int k = 0; k < n; ++k) out[k] = static_cast<int>(std::lround(v.size() == 1 ? v[0] : v[k]));
    return out;
  };
  if (d.type == "constant") return ScalarFunction(term::Constant{require(d, "c", 1)[0]});
  if (d.type == "affine") return ScalarFunction(term::Affine{require(d, "b", n), optional(d, "c", 0.0)});
  if (d.type == "sine_bump") {
    const auto& k = require(d, "k", 0);
    if (k.size() != 1 && static_cast<int>(k.size()) != n)
      throw ParameterError("function 'sine_bump': parameter 'k' must have 1 or n entries");
    return ScalarFunction(
        term::SineBump{require(d, "lower", n), require(d, "upper", n), vec_int(k, n), optional(d, "amplitude", 1.0)});
  }
  if (d.type == "radial_bump")
    return ScalarFunction(
        term::RadialBump{require(d, "center", n), require(d, "radius", 1)[0], optional(d, "amplitude", 1.0)});
  if (d.type == "oscillation") {
    const int axis = static_cast<int>(std::lround(require(d, "axis", 1)[0]));
    if (axis < 0 || axis >= n) throw ParameterError("function 'oscillation': axis out of range");
    return ScalarFunction(term::Oscillation{axis, require(d, "frequency", 1)[0], optional(d, "phase", 0.0),
                                            optional(d, "amplitude", 1.0)});
  }
  if (d.type == "window")
    return ScalarFunction(term::Window{require(d, "lower", n), require(d, "upper", n), require(d, "ramp", 1)[0]});
  if (d.type == "sum" || d.type == "product") {
    if (d.children.empty()) throw ParameterError("function '" + d.type + "': needs at least one child");
    ScalarFunction acc = make_scalar_function(d.children.front(), n);
    for (std::size_t i = 1; i < d.children.size(); ++i) {
      auto c = make_scalar_function(d.children[i], n);
      acc = d.type == "sum" ? acc + c : acc * c;
    }
    return acc;
  }
  throw ParameterError("unknown function descriptor type '" + d.type + "'");
}

Field sample_function(const GridPtr& grid, const ScalarFunction& f, Support support) {
  Field out = Field::scalar(grid, support);
  Vec x(grid->dim());
  for (std::size_t k = 0; k < out.size(); ++k) {
    grid->position(out.node(k), std::span<double>(x.data(), x.size()));
    out(k) = f.value(x);
  }
  return out;
}

Field sample_function(const GridPtr& grid, const VectorFunction& f, Support support) {
  if (f.dim() != grid->dim()) throw PreconditionError("sample_function: vector function dimension mismatch");
  Field out = Field::vector(grid, support);
  Vec x(grid->dim());
  for (std::size_t k = 0; k < out.size(); ++k) {
    grid->position(out.node(k), std::span<double>(x.data(), x.size()));
    for (int i = 0; i < f.dim(); ++i) out(k, i) = f[i].value(x);
  }
  return out;
}

Field sample_function(const GridPtr& grid, const FunctionDescriptor& desc, Support support) {
  return sample_function(grid, make_scalar_function(desc, grid->dim()), support);
}

Field sample_gradient(const GridPtr& grid, const ScalarFunction& f, Support support) {
  Field out = Field::vector(grid, support);
  Vec x(grid->dim());
  for (std::size_t k = 0; k < out.size(); ++k) {
    grid->position(out.node(k), std::span<double>(x.data(), x.size()));
    f.gradient(std::span<const double>(x.data(), x.size()), out.at(k));
  }
  return out;
}

std::vector<ScalarFunction> sine_bump_battery(const std::vector<double>& lower, const std::vector<double>& upper,
                                              const std::vector<int>& ks) {
  std::vector<ScalarFunction> out;
  for (int k : ks)
    out.emplace_back(term::SineBump{lower, upper, std::vector<int>(lower.size(), k), 1.0});
  return out;
}

}  // namespace nlgrad
