#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <nlgrad/energy.hpp>
#include <nlgrad/errors.hpp>
#include <nlgrad/functions.hpp>

using namespace nlgrad;

namespace {

Mat random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = U(rng);
  return A;
}

Vec point(int n) { return Vec::Constant(n, 0.5); }

}  // namespace

TEST(Minors, IdentityAndLayout) {
  EXPECT_EQ(cof(Mat::Identity(2, 2)), Mat::Identity(2, 2));
  EXPECT_EQ(det(Mat::Identity(2, 2)), 1.0);
  EXPECT_EQ(minors(Mat::Identity(2, 2)), (std::vector<double>{1, 0, 0, 1, 1}));
  EXPECT_EQ(minors(Mat::Identity(3, 3)).size(), 19u);
}

TEST(Minors, AlgebraicIdentities) {
  std::mt19937_64 rng(1);
  for (int n : {2, 3})
    for (int t = 0; t < 1000; ++t) {
      const Mat A = random_matrix(rng, n, 2.0), B = random_matrix(rng, n, 2.0);
      EXPECT_LE((cof(A) * A.transpose() - det(A) * Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-13);
      EXPECT_NEAR(det(A * B), det(A) * det(B), 1e-12 * (1 + std::abs(det(A) * det(B))));
      const auto mu = minors(A);
      // det by first-column cofactor expansion against the stored entry
      const Mat C = cof(A);
      double expansion = 0.0;
      for (int i = 0; i < n; ++i) expansion += A(i, 0) * C(i, 0);
      EXPECT_NEAR(expansion, mu.back(), 1e-13);
    }
}

TEST(StoredEnergy, HandValues) {
  const Vec x = point(2), y = Vec::Zero(2);
  const auto Q = StoredEnergy::quadratic(1.0);
  EXPECT_DOUBLE_EQ(Q.W(x, y, Mat::Identity(2, 2)), 2.0);
  EXPECT_EQ(Q.DFW(x, y, Mat::Identity(2, 2)), 2.0 * Mat::Identity(2, 2));
  const auto P = StoredEnergy::poly_coercive(1, 1, 1, 2, 2);
  EXPECT_DOUBLE_EQ(P.W(x, y, Mat::Identity(2, 2)), 4.0);
}

TEST(StoredEnergy, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::vector<StoredEnergy> forms{StoredEnergy::quadratic(1.3), StoredEnergy::poly_coercive(1, 0.7, 1.2, 2, 2),
                                  StoredEnergy::poly_coercive(1, 1, 1, 3.0, 1.7)};
  forms.back().body_force = {0.3, -0.2};
  for (const auto& W : forms)
    for (int t = 0; t < 100; ++t) {
      const Mat F = Mat::Identity(2, 2) + random_matrix(rng, 2, 0.5);
      const Mat dir = random_matrix(rng, 2);
      const Vec x = point(2);
      Vec y(2);
      y << 0.1 * t, -0.2;
      const double e = 1e-5;
      const double fd = (W.W(x, y, F + e * dir) - W.W(x, y, F - e * dir)) / (2 * e);
      const double an = (W.DFW(x, y, F).array() * dir.array()).sum();
      EXPECT_NEAR(fd, an, 1e-6 * std::max(1.0, std::abs(an)));
      Vec dy = Vec::Zero(2);
      dy(0) = 1.0;
      const double fdy = (W.W(x, y + e * dy, F) - W.W(x, y - e * dy, F)) / (2 * e);
      EXPECT_NEAR(fdy, W.DyW(x, y, F)(0), 1e-8);
    }
}

TEST(StoredEnergy, ThreeDimensionalDerivative) {
  std::mt19937_64 rng(3);
  const auto W = StoredEnergy::poly_coercive(1, 1, 1, 2, 2);
  for (int t = 0; t < 100; ++t) {
    const Mat F = Mat::Identity(3, 3) + random_matrix(rng, 3, 0.4);
    const Mat dir = random_matrix(rng, 3);
    const double e = 1e-5;
    const double fd = (W.W(point(3), Vec::Zero(3), F + e * dir) - W.W(point(3), Vec::Zero(3), F - e * dir)) / (2 * e);
    EXPECT_NEAR(fd, (W.DFW(point(3), Vec::Zero(3), F).array() * dir.array()).sum(), 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(StoredEnergy, Coercivity) {
  std::mt19937_64 rng(4);
  const auto W = StoredEnergy::poly_coercive();
  for (int t = 0; t < 1000; ++t) {
    const Mat F = random_matrix(rng, 2, 3.0);
    EXPECT_GE(W.W(point(2), Vec::Zero(2), F), W.alpha * std::pow(F.norm(), W.p));
  }
}

TEST(StoredEnergy, PolyconvexAlongMinorSegments) {
  // Phi(mu) for n=2 with p=q=2: alpha |F|^2 + beta |F|^2 + gamma1 (d-1)^2 in
  // terms of mu = (F entries, det), midpoint-convex along segments.
  std::mt19937_64 rng(5);
  const auto W = StoredEnergy::poly_coercive();
  std::uniform_real_distribution<double> U(-3, 3);
  auto Phi = [&](const std::vector<double>& mu) {
    double f2 = 0.0;
    for (int i = 0; i < 4; ++i) f2 += mu[i] * mu[i];
    return W.alpha * f2 + W.beta * f2 + W.gamma1 * (mu[4] - 1) * (mu[4] - 1);
  };
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(5), b(5), m(5);
    for (int i = 0; i < 5; ++i) {
      a[i] = U(rng);
      b[i] = U(rng);
      m[i] = 0.5 * (a[i] + b[i]);
    }
    EXPECT_LE(Phi(m), 0.5 * (Phi(a) + Phi(b)) + 1e-12);
  }
  // Phi agrees with W on actual minors.
  const Mat F = random_matrix(rng, 2);
  EXPECT_NEAR(Phi(minors(F)), W.W(point(2), Vec::Zero(2), F), 1e-12);
}

TEST(StoredEnergy, Validation) {
  EXPECT_THROW(StoredEnergy::quadratic(-1.0).validate(2), ParameterError);
  EXPECT_THROW(StoredEnergy::poly_coercive(1, 1, 1, 1.0, 2).validate(2), ParameterError);  // p > 1
  EXPECT_THROW(StoredEnergy::poly_coercive(1, 1, 1, 2, 1.2).validate(3), ParameterError);  // q >= 3/2
  EXPECT_THROW(StoredEnergy::poly_coercive(1, -1, 1, 2, 2).validate(2), ParameterError);
  EXPECT_NO_THROW(StoredEnergy::poly_coercive().validate(3));
}

TEST(StoredEnergy, BarrierIsInfiniteForNonpositiveDet) {
  auto W = StoredEnergy::poly_coercive(1, 1, 1, 2, 2);
  W.barrier = true;
  W.gamma2 = 1.0;
  Mat F = Mat::Identity(2, 2);
  F(0, 0) = -1.0;
  EXPECT_TRUE(std::isinf(W.W(point(2), Vec::Zero(2), F)));
  EXPECT_TRUE(std::isfinite(W.W(point(2), Vec::Zero(2), Mat::Identity(2, 2))));
}

class DiscreteEnergy : public ::testing::Test {
 protected:
  KernelParams k{2, 0.5, 0.25, 1.0, 0.5};
  GridPtr grid = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 4);
  NonlocalOperator G = assemble_gradient(grid, k);
};

TEST_F(DiscreteEnergy, ZeroIdentityAndScaling) {
  const auto W = StoredEnergy::quadratic();
  EXPECT_EQ(eval_energy(Field::vector(grid, Support::closure), G, W), 0.0);
  const Field id = sample_function(grid, VectorFunction::identity(2));
  const double m = affine_gradient_constant(k);
  EXPECT_NEAR(eval_energy(id, G, W), 2 * m * m, 0.04 * 2 * m * m);  // |Omega| = 1
  EXPECT_NEAR(eval_energy(3.0 * id, G, W), 9 * eval_energy(id, G, W), 1e-12);
}

TEST_F(DiscreteEnergy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  auto W = StoredEnergy::poly_coercive(1, 0.5, 2.0, 2, 2);
  W.body_force = {0.1, 0.2};
  VectorFunction f = VectorFunction::identity(2);
  f[0] += 0.1 * ScalarFunction(term::Oscillation{1, 3.0, 0.2, 1});
  f[1] += 0.05 * ScalarFunction(term::Oscillation{0, 5.0, 0.0, 1});
  Field u = sample_function(grid, f);
  const Field g = eval_energy_gradient(u, G, W);
  const auto& nodes = grid->interior_nodes();
  std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t slot = pick(rng);
    const int comp = t % 2;
    const double e = 1e-6;
    Field up = u, um = u;
    up(nodes[slot], comp) += e;
    um(nodes[slot], comp) -= e;
    const double fd = (eval_energy(up, G, W) - eval_energy(um, G, W)) / (2 * e);
    EXPECT_NEAR(fd, g(slot, comp), 1e-5 * std::max(std::abs(fd), 1e-3 * g.max_abs()));
  }
}

TEST_F(DiscreteEnergy, AllZeroParametersGiveZeroGradient) {
  StoredEnergy W = StoredEnergy::poly_coercive(0, 0, 0, 2, 2);
  const Field u = sample_function(grid, VectorFunction::identity(2));
  EXPECT_EQ(eval_energy_gradient(u, G, W).max_abs(), 0.0);
}

TEST_F(DiscreteEnergy, NonFiniteEnergyNamesNode) {
  auto W = StoredEnergy::poly_coercive(1, 1, 1, 2, 2);
  W.barrier = true;
  W.gamma2 = 1.0;
  const Field u = -1.0 * sample_function(grid, VectorFunction::identity(2));  // det > 0 still; flip one axis
  Field v = sample_function(grid, VectorFunction::identity(2));
  for (std::size_t k2 = 0; k2 < v.size(); ++k2) v(k2, 0) = -v(k2, 0);
  try {
    eval_energy(v, G, W);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_GE(e.node(), 0);
  }
  (void)u;
}
