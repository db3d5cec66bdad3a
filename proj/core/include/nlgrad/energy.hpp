#pragma once

#include <vector>

#include "nlgrad/field.hpp"
#include "nlgrad/grid.hpp"
#include "nlgrad/operators.hpp"

namespace nlgrad {

/// Cofactor with cof(A) A^T = det(A) I. For n=2, cof [[a,b],[c,d]] = [[d,-c],[-b,a]].
Mat cof(const Mat& F);
double det(const Mat& F);

/// Minor vector mu(F): entries of F (row-major), entries of cof F
/// (row-major), det F. Length 5 for n=2 (the cofactor block is omitted
/// because its entries repeat the 1x1 minors), 19 for n=3.
std::vector<double> minors(const Mat& F);

/// Polyconvex integrand W(x, y, F).
///
///   QUADRATIC      alpha |F|^2
///   POLY_COERCIVE  alpha |F|^p + beta |cof F|^q + h(det F)
///                  h(t) = gamma1 (t-1)^2, or gamma1 t^2 - gamma2 log t with
///                  the barrier flag (infinite for t <= 0)
///
/// Both forms add -f.y for a constant body force f (empty means none).
/// Non-even powers use |X|_eps = sqrt(|X|^2 + eps^2).
struct StoredEnergy {
  enum class Form { quadratic, poly_coercive };

  Form form = Form::quadratic;
  double alpha = 1.0;
  double beta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double p = 2.0;
  double q = 2.0;
  bool barrier = false;
  std::vector<double> body_force;
  double eps_reg = 1e-10;

  /// Throws ParameterError on negative coefficients or exponents outside
  /// p >= n-1, p > 1, q >= n/(n-1).
  void validate(int n) const;

  double W(const Vec& x, const Vec& y, const Mat& F) const;
  Vec DyW(const Vec& x, const Vec& y, const Mat& F) const;
  Mat DFW(const Vec& x, const Vec& y, const Mat& F) const;

  static StoredEnergy quadratic(double alpha = 1.0);
  static StoredEnergy poly_coercive(double alpha = 1.0, double beta = 1.0, double gamma1 = 1.0, double p = 2.0,
                                    double q = 2.0);
};

/// sum over closure(Omega) nodes of omega_x W(x, u(x), G[u](x)). Throws
/// EvaluationError naming the node when W is not finite.
double eval_energy(const Field& u, const NonlocalOperator& op, const StoredEnergy& W);

/// Gradient of eval_energy with respect to every nodal value of u (vector
/// field on Omega_delta).
Field eval_energy_gradient_full(const Field& u, const NonlocalOperator& op, const StoredEnergy& W);

/// The same gradient restricted to the free (INTERIOR) nodes.
Field eval_energy_gradient(const Field& u, const NonlocalOperator& op, const StoredEnergy& W);

}  // namespace nlgrad
