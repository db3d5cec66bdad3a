#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nlgrad/field.hpp"
#include "nlgrad/grid.hpp"

namespace nlgrad {

namespace term {

struct Constant {
  double c = 0.0;
};

/// b . x + c
struct Affine {
  std::vector<double> b;
  double c = 0.0;
};

/// amplitude * prod_i sin(k_i pi (x_i - a_i) / (b_i - a_i)) on [a, b], zero outside.
struct SineBump {
  std::vector<double> lower, upper;
  std::vector<int> k;
  double amplitude = 1.0;
};

/// amplitude * exp(1 - 1/(1 - |x-c|^2/R^2)) for |x-c| < R, zero outside.
struct RadialBump {
  std::vector<double> center;
  double radius = 1.0;
  double amplitude = 1.0;
};

/// amplitude * sin(frequency * x_axis + phase)
struct Oscillation {
  int axis = 0;
  double frequency = 1.0;
  double phase = 0.0;
  double amplitude = 1.0;
};

/// Smooth plateau: 1 on [a, b], decaying to 0 over `ramp` outside each face.
struct Window {
  std::vector<double> lower, upper;
  double ramp = 0.1;
};

}  // namespace term

using Term = std::variant<term::Constant, term::Affine, term::SineBump, term::RadialBump, term::Oscillation,
                          term::Window>;

/// Closed-form scalar function: a sum of products of elementary terms, with
/// analytic gradient.
class ScalarFunction {
 public:
  ScalarFunction() = default;
  ScalarFunction(Term t) : products_{{std::move(t)}} {}

  static ScalarFunction zero() { return ScalarFunction(); }

  double value(std::span<const double> x) const;
  /// Writes the gradient into out (size n).
  void gradient(std::span<const double> x, std::span<double> out) const;
  Vec gradient(const Vec& x) const;
  double value(const Vec& x) const { return value(std::span<const double>(x.data(), x.size())); }

  bool is_zero() const { return products_.empty(); }

  ScalarFunction& operator+=(const ScalarFunction& o);
  ScalarFunction& operator*=(double a);
  friend ScalarFunction operator+(ScalarFunction a, const ScalarFunction& b) { return a += b; }
  friend ScalarFunction operator*(double a, ScalarFunction f) { return f *= a; }
  friend ScalarFunction operator*(const ScalarFunction& a, const ScalarFunction& b);

 private:
  std::vector<std::vector<Term>> products_;
};

/// One ScalarFunction per component.
class VectorFunction {
 public:
  VectorFunction() = default;
  explicit VectorFunction(std::vector<ScalarFunction> comps) : comps_(std::move(comps)) {}

  /// x -> A x + c.
  static VectorFunction affine(const Mat& A, const Vec& c);
  static VectorFunction identity(int n);

  int dim() const { return static_cast<int>(comps_.size()); }
  const ScalarFunction& operator[](int i) const { return comps_[i]; }
  ScalarFunction& operator[](int i) { return comps_[i]; }

  Vec value(const Vec& x) const;
  Mat jacobian(const Vec& x) const;

 private:
  std::vector<ScalarFunction> comps_;
};

/// Untyped descriptor for a closed-form function, as read from a config.
///
/// Recognized types and parameters:
///   constant    c
///   affine      b (n), c
///   sine_bump   lower (n), upper (n), k (n or 1), amplitude
///   radial_bump center (n), radius, amplitude
///   oscillation axis, frequency, phase, amplitude
///   window      lower (n), upper (n), ramp
///   sum         children
///   product     children
struct FunctionDescriptor {
  std::string type;
  std::map<std::string, std::vector<double>> params;
  std::vector<FunctionDescriptor> children;
};

/// Throws ParameterError on unknown types or missing parameters.
ScalarFunction make_scalar_function(const FunctionDescriptor& desc, int n);

/// Evaluates f at every node of the support.
Field sample_function(const GridPtr& grid, const ScalarFunction& f, Support support = Support::closure);
Field sample_function(const GridPtr& grid, const VectorFunction& f, Support support = Support::closure);
Field sample_function(const GridPtr& grid, const FunctionDescriptor& desc, Support support = Support::closure);

/// Analytic gradient of f sampled on the support (vector field).
Field sample_gradient(const GridPtr& grid, const ScalarFunction& f, Support support = Support::omega);

/// Tensor-product sine bumps sin(k pi (x - a)/(b - a)) on the box [lower, upper],
/// one per k in ks.
std::vector<ScalarFunction> sine_bump_battery(const std::vector<double>& lower, const std::vector<double>& upper,
                                              const std::vector<int>& ks = {1, 2, 3});

}  // namespace nlgrad
