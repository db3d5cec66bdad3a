#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <nlgrad/errors.hpp>
#include <nlgrad/solve.hpp>

using namespace nlgrad;

namespace {

struct Problem {
  explicit Problem(double divisor, StoredEnergy W, VectorFunction g) {
    auto grid = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / divisor);
    problem.op = std::make_shared<const NonlocalOperator>(assemble_gradient(grid, kernel));
    problem.energy = std::move(W);
    problem.datum = std::move(g);
  }
  KernelParams kernel{2, 0.5, 0.25, 1.0, 0.5};
  DirichletProblem problem;
};

VectorFunction affine_datum() {
  Mat A(2, 2);
  A << 1.2, 0.3, -0.1, 0.9;
  Vec c(2);
  c << 0.05, -0.02;
  return VectorFunction::affine(A, c);
}

VectorFunction wavy_datum() {
  VectorFunction g = affine_datum();
  g[0] += 0.1 * ScalarFunction(term::Oscillation{1, 2 * M_PI, 0, 1});
  g[1] += 0.1 * ScalarFunction(term::Oscillation{0, 2 * M_PI, 0.3, 1});
  return g;
}

Field perturb_free(const DirichletProblem& p, double amplitude, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-amplitude, amplitude);
  Field u = p.datum_field();
  for (std::size_t node : p.grid()->interior_nodes())
    for (int c = 0; c < 2; ++c) u(node, c) += U(rng);
  return u;
}

double max_diff(const Field& a, const Field& b) { return (a - b).max_abs(); }

}  // namespace

TEST(Minimize, RecoversAffineMinimizerFromPerturbedStart) {
  Problem P(4, StoredEnergy::quadratic(), affine_datum());
  const Field start = perturb_free(P.problem, 0.05, 1);
  const auto rep = minimize(P.problem, {}, &start);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(max_diff(rep.state, P.problem.datum_field()), 1e-6);
}

TEST(Minimize, AffineDatumIsAlreadyStationary) {
  Problem P(8, StoredEnergy::quadratic(), affine_datum());
  const auto rep = minimize(P.problem, {});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
}

TEST(Minimize, QuadraticMatchesDirectSolve) {
  Problem P(4, StoredEnergy::quadratic(), wavy_datum());
  const auto& p = P.problem;
  const Field g0 = p.datum_field();
  // The free-node gradient is affine in the free values: assemble it column by column.
  const auto& free_nodes = p.grid()->interior_nodes();
  const int N = static_cast<int>(free_nodes.size()) * 2;
  const Field base = eval_energy_gradient(g0, *p.op, p.energy);
  Eigen::MatrixXd A(N, N);
  Eigen::VectorXd b(N);
  for (int j = 0; j < N; ++j) {
    Field u = g0;
    u(free_nodes[j / 2], j % 2) += 1.0;
    const Field gj = eval_energy_gradient(u, *p.op, p.energy);
    for (int i = 0; i < N; ++i) A(i, j) = gj(i / 2, i % 2) - base(i / 2, i % 2);
  }
  for (int i = 0; i < N; ++i) b(i) = -base(i / 2, i % 2);
  const Eigen::VectorXd du = A.ldlt().solve(b);

  OptimizerConfig cfg;
  cfg.grad_tol = 1e-10;
  const auto rep = minimize(p, cfg);
  ASSERT_TRUE(rep.converged);
  for (int j = 0; j < N; ++j)
    EXPECT_NEAR(rep.state(free_nodes[j / 2], j % 2), g0(free_nodes[j / 2], j % 2) + du(j), 1e-8);
}

TEST(Minimize, PolyCoerciveConvergesWithMonotoneEnergy) {
  Problem P(8, StoredEnergy::poly_coercive(), wavy_datum());
  const auto rep = minimize(P.problem, {});
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.grad_norm, 1e-8);
  EXPECT_LE(rep.iterations, 500);
  for (std::size_t i = 1; i < rep.energy_history.size(); ++i)
    EXPECT_LE(rep.energy_history[i], rep.energy_history[i - 1] + 1e-12 * std::abs(rep.energy_history[i - 1]));
  // pinned nodes are untouched
  const Field g = P.problem.datum_field();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (P.problem.grid()->node_class(k) != NodeClass::interior) EXPECT_EQ(rep.state(k, 0), g(k, 0));
}

TEST(Minimize, UnpreconditionedStillDescends) {
  Problem P(4, StoredEnergy::poly_coercive(), wavy_datum());
  OptimizerConfig cfg;
  cfg.precondition = false;
  cfg.max_iter = 50;
  const auto rep = minimize(P.problem, cfg);
  EXPECT_LT(rep.energy_history.back(), rep.energy_history.front());
}

TEST(Minimize, NonFiniteInitialEnergyThrows) {
  auto W = StoredEnergy::poly_coercive(1, 1, 1, 2, 2);
  W.barrier = true;
  W.gamma2 = 1.0;
  Mat A = Mat::Identity(2, 2);
  A(0, 0) = -1.0;
  Problem P(4, W, VectorFunction::affine(A, Vec::Zero(2)));
  EXPECT_THROW(minimize(P.problem, {}), EvaluationError);
}

TEST(EulerLagrange, SmallAtMinimizerLargeWhenPerturbed) {
  Problem P(8, StoredEnergy::poly_coercive(), wavy_datum());
  const auto battery = sine_bump_battery({0.25, 0.25}, {0.75, 0.75});
  OptimizerConfig cfg;
  const auto rep = minimize(P.problem, cfg);
  ASSERT_TRUE(rep.converged);
  const auto pair = el_residual(rep.state, P.problem, battery);
  const auto scale = el_scale(P.problem, battery);
  ASSERT_EQ(pair.size(), 6u);
  ASSERT_EQ(scale.size(), 6u);
  for (std::size_t i = 0; i < pair.size(); ++i) EXPECT_LE(std::abs(pair[i]), 10 * cfg.grad_tol * scale[i]);

  Field bad = rep.state;
  for (std::size_t node : P.problem.grid()->interior_nodes()) {
    const Vec x = P.problem.grid()->position(node);
    bad(node, 0) += 0.05 * std::sin(2 * M_PI * x(0)) * std::sin(2 * M_PI * x(1));
  }
  double worst = 0.0;
  for (double v : el_residual(bad, P.problem, battery)) worst = std::max(worst, std::abs(v));
  EXPECT_GT(worst, 1e-2);
}

TEST(Poincare, PositiveAndRefinementStable) {
  const KernelParams k{2, 0.5, 0.25, 1.0, 0.5};
  double prev = 0.0;
  for (double d : {8.0, 16.0}) {
    const auto grid = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / d);
    const double C = estimate_poincare(assemble_gradient(grid, k));
    EXPECT_GT(C, 0.0);
    EXPECT_TRUE(std::isfinite(C));
    if (prev > 0) EXPECT_LE(std::abs(C - prev) / prev, 0.1);
    prev = C;
  }
}

TEST(Poincare, IterationCapThrows) {
  const KernelParams k{2, 0.5, 0.25, 1.0, 0.5};
  const auto grid = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 4);
  EXPECT_THROW(estimate_poincare(assemble_gradient(grid, k), 1e-14, 1), ConvergenceError);
}

TEST(DirichletProblem, ValidateRejectsDimensionMismatch) {
  Problem P(4, StoredEnergy::quadratic(), VectorFunction::identity(3));
  EXPECT_ANY_THROW(P.problem.validate());
}
