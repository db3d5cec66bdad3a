#pragma once

#include <vector>

#include "nlgrad/energy.hpp"
#include "nlgrad/field.hpp"
#include "nlgrad/functions.hpp"
#include "nlgrad/operators.hpp"

namespace nlgrad {

/// Minimize the discrete energy over the INTERIOR nodal values; every other
/// node is pinned to the datum g.
struct DirichletProblem {
  OperatorPtr op;
  StoredEnergy energy;
  VectorFunction datum;

  const GridPtr& grid() const { return op->grid(); }
  /// g sampled on Omega_delta.
  Field datum_field() const;
  void validate() const;
};

struct OptimizerConfig {
  int max_iter = 500;
  double grad_tol = 1e-8;  // on the Euclidean norm of the free-node gradient
  int memory = 10;
  double c1 = 1e-4;        // sufficient decrease
  double c2 = 0.9;         // curvature
  int max_line_search = 60;
  bool precondition = true;  // scale the L-BFGS seed matrix by the free-node normal operator
};

struct SolveReport {
  Field state;
  std::vector<double> energy_history;  // initial energy, then one entry per accepted step
  double grad_norm = 0.0;
  int iterations = 0;
  int fallback_steps = 0;
  bool converged = false;
  bool line_search_failed = false;
  double wall_seconds = 0.0;
};

/// L-BFGS with a strong Wolfe line search, starting from `initial` (the
/// datum when null). With `precondition`, the seed matrix of the two-loop
/// recursion is gamma N^{-1}, N = sum_d G_d^T diag(omega) G_d on the free
/// nodes (factored once). `initial` must agree with g off the free nodes.
/// Throws EvaluationError when the initial energy is not finite.
SolveReport minimize(const DirichletProblem& problem, const OptimizerConfig& config, const Field* initial = nullptr);

/// Weak Euler-Lagrange pairings sum omega [D_yW . phi e_i + D_FW : D(phi e_i)]
/// for each battery function and each direction e_i, ordered function-major.
/// Battery functions must vanish off the free nodes.
std::vector<double> el_residual(const Field& state, const DirichletProblem& problem,
                                const std::vector<ScalarFunction>& battery);

/// Nodal Euclidean norm of each battery function (one entry per pairing of
/// el_residual); at a state with free-node gradient norm g, every pairing is
/// bounded by g times this scale.
std::vector<double> el_scale(const DirichletProblem& problem, const std::vector<ScalarFunction>& battery);

/// Smallest C with ||u||_{L2(Omega)} <= C ||Du||_{L2(Omega)} over discrete
/// scalar u vanishing off the INTERIOR nodes, by inverse iteration on the
/// free-node normal operator. Throws ConvergenceError after max_iter steps.
double estimate_poincare(const NonlocalOperator& G, double tol = 1e-6, int max_iter = 10000);

}  // namespace nlgrad
