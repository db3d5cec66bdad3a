#include "nlgrad/energy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nlgrad/errors.hpp"
#include "nlgrad/parallel.hpp"

namespace nlgrad {

Mat cof(const Mat& F) {
  const auto n = F.rows();
  if (F.cols() != n || (n != 2 && n != 3)) throw PreconditionError("cof: expected a 2x2 or 3x3 matrix");
  Mat C(n, n);
  if (n == 2) {
    C << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
    return C;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3, j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      C(i, j) = F(i1, j1) * F(i2, j2) - F(i1, j2) * F(i2, j1);
    }
  return C;
}

double det(const Mat& F) {
  const auto n = F.rows();
  if (F.cols() != n || (n != 2 && n != 3)) throw PreconditionError("det: expected a 2x2 or 3x3 matrix");
  if (n == 2) return F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
  return F(0, 0) * (F(1, 1) * F(2, 2) - F(1, 2) * F(2, 1)) - F(0, 1) * (F(1, 0) * F(2, 2) - F(1, 2) * F(2, 0)) +
         F(0, 2) * (F(1, 0) * F(2, 1) - F(1, 1) * F(2, 0));
}

std::vector<double> minors(const Mat& F) {
  const auto n = F.rows();
  std::vector<double> mu;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mu.push_back(F(i, j));
  if (n == 3) {
    const Mat C = cof(F);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mu.push_back(C(i, j));
  }
  mu.push_back(det(F));
  return mu;
}

namespace {

// |X|^p and its derivative factor d/dX = factor * X.
double norm_pow(double sq, double p, double eps) {
  if (p == 2.0) return sq;
  return std::pow(sq + eps * eps, 0.5 * p);
}

double norm_pow_factor(double sq, double p, double eps) {
  if (p == 2.0) return 2.0;
  return p * std::pow(sq + eps * eps, 0.5 * p - 1.0);
}

// d/dF of |cof F|^2 / 2.
Mat half_cof_sq_derivative(const Mat& F) {
  if (F.rows() == 2) return F;
  return F.squaredNorm() * F - F * F.transpose() * F;
}

double h_value(const StoredEnergy& e, double t) {
  if (!e.barrier) return e.gamma1 * (t - 1.0) * (t - 1.0);
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  return e.gamma1 * t * t - e.gamma2 * std::log(t);
}

double h_derivative(const StoredEnergy& e, double t) {
  if (!e.barrier) return 2.0 * e.gamma1 * (t - 1.0);
  if (t <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * e.gamma1 * t - e.gamma2 / t;
}

double body_term(const StoredEnergy& e, const Vec& y) {
  double v = 0.0;
  for (std::size_t i = 0; i < e.body_force.size(); ++i) v -= e.body_force[i] * y(i);
  return v;
}

}  // namespace

void StoredEnergy::validate(int n) const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma1 >= 0.0) || !(gamma2 >= 0.0))
    throw ParameterError("energy: coefficients must be nonnegative");
  if (!(eps_reg >= 0.0)) throw ParameterError("energy: eps_reg must be nonnegative");
  if (!body_force.empty() && static_cast<int>(body_force.size()) != n)
    throw ParameterError("energy: body_force must have n entries");
  if (form == Form::poly_coercive) {
    if (!(p > 1.0) || p < n - 1) throw ParameterError("energy: exponent p must satisfy p > 1 and p >= n-1");
    if (q < double(n) / (n - 1)) throw ParameterError("energy: exponent q must satisfy q >= n/(n-1)");
  }
}

double StoredEnergy::W(const Vec&, const Vec& y, const Mat& F) const {
  double v = body_term(*this, y);
  if (form == Form::quadratic) return v + alpha * F.squaredNorm();
  v += alpha * norm_pow(F.squaredNorm(), p, eps_reg);
  if (beta != 0.0) v += beta * norm_pow(cof(F).squaredNorm(), q, eps_reg);
  if (gamma1 != 0.0 || gamma2 != 0.0) v += h_value(*this, det(F));
  return v;
}

Vec StoredEnergy::DyW(const Vec&, const Vec& y, const Mat&) const {
  Vec g = Vec::Zero(y.size());
  for (std::size_t i = 0; i < body_force.size(); ++i) g(i) = -body_force[i];
  return g;
}

Mat StoredEnergy::DFW(const Vec&, const Vec&, const Mat& F) const {
  if (form == Form::quadratic) return 2.0 * alpha * F;
  Mat G = alpha * norm_pow_factor(F.squaredNorm(), p, eps_reg) * F;
  if (beta != 0.0) G += beta * norm_pow_factor(cof(F).squaredNorm(), q, eps_reg) * half_cof_sq_derivative(F);
  if (gamma1 != 0.0 || gamma2 != 0.0) G += h_derivative(*this, det(F)) * cof(F);
  return G;
}

StoredEnergy StoredEnergy::quadratic(double alpha) {
  StoredEnergy e;
  e.form = Form::quadratic;
  e.alpha = alpha;
  return e;
}

StoredEnergy StoredEnergy::poly_coercive(double alpha, double beta, double gamma1, double p, double q) {
  StoredEnergy e;
  e.form = Form::poly_coercive;
  e.alpha = alpha;
  e.beta = beta;
  e.gamma1 = gamma1;
  e.p = p;
  e.q = q;
  return e;
}

namespace {

void check_state(const Field& u, const NonlocalOperator& op, const char* who) {
  if (u.grid() != op.grid()) throw PreconditionError(std::string(who) + ": operator and field live on different grids");
  if (!u.is_vector() || u.support() != Support::closure)
    throw PreconditionError(std::string(who) + ": expected a vector field on Omega_delta");
}

}  // namespace

double eval_energy(const Field& u, const NonlocalOperator& op, const StoredEnergy& W) {
  check_state(u, op, "eval_energy");
  const Grid& g = *op.grid();
  const Field F = apply_gradient_vec(op, u);
  const auto& nodes = g.omega_nodes();
  std::vector<double> local(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t node = nodes[k];
      const Vec x = g.position(node);
      const Vec y = u.map(node);
      local[k] = g.omega_weight(node) * W.W(x, y, F.map(k));
    }
  });
  double total = 0.0;
  for (std::size_t k = 0; k < local.size(); ++k) {
    if (!std::isfinite(local[k])) throw EvaluationError("eval_energy: non-finite stored energy", long(nodes[k]));
    total += local[k];
  }
  return total;
}

Field eval_energy_gradient_full(const Field& u, const NonlocalOperator& op, const StoredEnergy& W) {
  check_state(u, op, "eval_energy_gradient");
  const Grid& g = *op.grid();
  const Field F = apply_gradient_vec(op, u);
  const auto& nodes = g.omega_nodes();
  Field P = Field::matrix(op.grid(), Support::omega);
  Field Y = Field::vector(op.grid(), Support::omega);
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t node = nodes[k];
      const Vec x = g.position(node);
      const Vec y = u.map(node);
      const double w = g.omega_weight(node);
      P.map(k) = w * W.DFW(x, y, F.map(k));
      Y.map(k) = w * W.DyW(x, y, F.map(k));
    }
  });
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (double v : P.at(k))
      if (!std::isfinite(v)) throw EvaluationError("eval_energy_gradient: non-finite derivative", long(nodes[k]));
  Field out = apply_gradient_adjoint(op, P);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (int i = 0; i < g.dim(); ++i) out(nodes[k], i) += Y(k, i);
  return out;
}

Field eval_energy_gradient(const Field& u, const NonlocalOperator& op, const StoredEnergy& W) {
  return eval_energy_gradient_full(u, op, W).restrict_to(Support::interior);
}

}  // namespace nlgrad
