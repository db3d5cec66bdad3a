#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <nlgrad/calculus.hpp>
#include <nlgrad/energy.hpp>
#include <nlgrad/errors.hpp>

using namespace nlgrad;

namespace {

struct Rig {
  explicit Rig(double divisor = 8)
      : grid(Grid::build(BoxDomain::unit(2, 0.25), 0.25 / divisor)), G(assemble_gradient(grid, kernel)),
        Q(assemble_convolution(grid, build_Q_profile(kernel))) {}
  KernelParams kernel{2, 0.5, 0.25, 1.0, 0.5};
  GridPtr grid;
  NonlocalOperator G, Q;
};

Field random_field(const GridPtr& g, int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Field f(g, Support::closure, rows, cols);
  for (double& v : f.data()) v = U(rng);
  return f;
}

// Vector field from two battery bumps, zero on every node touching the collar.
Field omega_pair(const GridPtr& g) {
  const auto battery = sine_bump_battery({0, 0}, {1, 1});
  Field phi = Field::vector(g, Support::closure);
  for (std::size_t k = 0; k < g->num_nodes(); ++k) {
    if (g->collar_fraction(k) > 0) continue;
    const Vec x = g->position(k);
    phi(k, 0) = battery[0].value(x);
    phi(k, 1) = battery[1].value(x);
  }
  return phi;
}

constexpr double kM = 0.30999471093204554;

}  // namespace

TEST(Duality, TrivialCases) {
  Rig s;
  const Field phi = omega_pair(s.grid);
  const auto zero = residual_duality(s.G, Field::scalar(s.grid, Support::closure), phi);
  EXPECT_EQ(zero.abs_residual, 0.0);
  const auto one = residual_duality(s.G, Field::scalar(s.grid, Support::closure, 1.0), phi);
  // Du = 0 and the pairings cancel up to rounding
  EXPECT_LE(one.abs_residual, 1e-13);
}

TEST(Duality, BumpPairWithinTwoPercent) {
  Rig s;
  const Field u = sample_function(s.grid, ScalarFunction(term::RadialBump{{0.4, 0.55}, 0.7, 1.0}));
  const auto r = residual_duality(s.G, u, omega_pair(s.grid));
  EXPECT_LE(r.rel_residual, 0.02);
  EXPECT_GT(std::abs(r.lhs[0]), 1e-3);  // not a trivially small pairing
}

TEST(Duality, RejectsPhiOnCollar) {
  Rig s(4);
  EXPECT_THROW(residual_duality(s.G, random_field(s.grid, 1, 1, 1), random_field(s.grid, 2, 1, 2)),
               PreconditionError);
}

TEST(ProductRules, RoundingLevel) {
  Rig s;
  const Field phi = random_field(s.grid, 1, 1, 3);
  EXPECT_LE(residual_product_scalar(s.G, phi, random_field(s.grid, 1, 1, 4)).rel_residual, 1e-12);
  EXPECT_LE(residual_product_vector(s.G, phi, random_field(s.grid, 2, 1, 5)).rel_residual, 1e-12);
  EXPECT_LE(residual_product_divergence(s.G, phi, random_field(s.grid, 2, 1, 6)).rel_residual, 1e-12);
  const auto mat = residual_product_divergence(s.G, phi, random_field(s.grid, 2, 2, 7));
  EXPECT_EQ(mat.name, "product_divergence_matrix");
  EXPECT_LE(mat.rel_residual, 1e-12);
}

TEST(ProductRules, ConstantAndAffineMultipliers) {
  Rig s;
  const Field g = random_field(s.grid, 1, 1, 8);
  EXPECT_LE(residual_product_scalar(s.G, Field::scalar(s.grid, Support::closure, 2.5), g).rel_residual, 1e-13);
  const Field phi = sample_function(s.grid, ScalarFunction(term::Affine{{1.0, 0.0}, 0.0}));
  const auto r = residual_product_scalar(s.G, phi, Field::scalar(s.grid, Support::closure, 3.0));
  EXPECT_LE(r.rel_residual, 1e-12);
  EXPECT_NEAR(r.lhs[0], 3 * kM, 0.02 * 3 * kM);
}

TEST(Trace, Cases) {
  Rig s;
  EXPECT_EQ(residual_trace(s.G, Field::vector(s.grid, Support::closure, 1.0)).abs_residual, 0.0);
  const auto id = residual_trace(s.G, sample_function(s.grid, VectorFunction::identity(2)));
  EXPECT_LE(id.rel_residual, 1e-13);
  EXPECT_NEAR(id.rhs[0], 2 * kM, 0.04 * kM);
  EXPECT_LE(residual_trace(s.G, random_field(s.grid, 2, 1, 9)).rel_residual, 1e-13);
  EXPECT_LE(residual_K_trace(s.G, random_field(s.grid, 1, 1, 10), random_field(s.grid, 2, 1, 11)).rel_residual,
            1e-12);
}

TEST(GradientEquivalence, Cases) {
  Rig s;
  EXPECT_EQ(residual_gradient_equivalence(s.G, s.Q, Field::scalar(s.grid, Support::closure)).abs_residual, 0.0);
  const ScalarFunction bump(term::SineBump{{-0.125, -0.125}, {1.125, 1.125}, {1, 1}, 1.0});
  EXPECT_LE(residual_gradient_equivalence(s.G, s.Q, sample_function(s.grid, bump)).rel_residual, 0.05);
  EXPECT_THROW(residual_gradient_equivalence(s.G, s.Q, Field::scalar(s.grid, Support::closure, 1.0)),
               PreconditionError);
}

TEST(GradientEquivalence, MaskedAffineDeepInside) {
  Rig s;
  // b.x under a plateau window covering Omega_{-delta} + B(0, delta).
  const ScalarFunction u = ScalarFunction(term::Affine{{1.0, -2.0}, 0.0}) *
                           ScalarFunction(term::Window{{0.0, 0.0}, {1.0, 1.0}, 0.1});
  const Field Du = apply_gradient(s.G, sample_function(s.grid, u));
  for (std::size_t node : s.grid->interior_nodes()) {
    const long k = Du.slot(node);
    EXPECT_NEAR(Du(k, 0), kM, 0.02 * kM);
    EXPECT_NEAR(Du(k, 1), -2 * kM, 0.04 * kM);
  }
}

TEST(Piola, AffineIsExactlyZeroAndPerturbedIsSmall) {
  Rig s;
  const auto battery = sine_bump_battery({0, 0}, {1, 1});
  Mat A(2, 2);
  A << 1.1, 0.2, -0.3, 0.9;
  const auto aff = residual_piola(s.G, sample_function(s.grid, VectorFunction::affine(A, Vec::Zero(2))), battery);
  EXPECT_LE(aff.weak.rel_residual, 1e-12);
  EXPECT_LE(aff.pointwise.abs_residual, 1e-12);

  VectorFunction u = VectorFunction::identity(2);
  u[0] += 0.1 * ScalarFunction(term::Oscillation{1, M_PI, 0, 1});
  u[1] += 0.1 * ScalarFunction(term::Oscillation{0, M_PI, 0, 1});
  EXPECT_LE(residual_piola(s.G, sample_function(s.grid, u), battery).weak.rel_residual, 0.02);
}

TEST(Piola, CofactorConvention) {
  Mat F(2, 2);
  F << 1, 2, 3, 4;
  Mat expected(2, 2);
  expected << 4, -3, -2, 1;
  EXPECT_EQ(cof(F), expected);
  EXPECT_EQ(det(F), -2.0);
  EXPECT_EQ(cof(F) * F.transpose(), -2.0 * Mat::Identity(2, 2));
}

TEST(DetIbp, ZeroAndPerturbedIdentity) {
  Rig s;
  const auto battery = sine_bump_battery({0, 0}, {1, 1});
  const auto zero = residual_det_ibp(s.G, s.Q, Field::vector(s.grid, Support::closure), battery[0]);
  EXPECT_EQ(zero.abs_residual, 0.0);
  VectorFunction u = VectorFunction::identity(2);
  u[0] += 0.1 * ScalarFunction(term::Oscillation{1, M_PI, 0, 1});
  u[1] += 0.1 * ScalarFunction(term::Oscillation{0, M_PI, 0, 1});
  for (const auto& phi : battery) EXPECT_LE(residual_det_ibp(s.G, s.Q, sample_function(s.grid, u), phi).rel_residual, 0.02);
}

TEST(WeakContinuity, ZeroAmplitudeAndReliabilityFlag) {
  Rig s(4);
  const ScalarFunction phi(term::RadialBump{{0.5, 0.5}, 0.45, 1.0});
  Vec e(2);
  e << 1, 0;
  const auto flat = weak_continuity_probe(s.G, VectorFunction::identity(2), {2, 4}, phi, e, 0.0);
  ASSERT_EQ(flat.size(), 6u);
  for (const auto& r : flat) EXPECT_EQ(r.abs_residual, 0.0);
  const auto reports = weak_continuity_probe(s.G, VectorFunction::identity(2), {2, 64}, phi, e);
  EXPECT_TRUE(reports.front().reliable);
  EXPECT_FALSE(reports.back().reliable);  // 64 h > pi
  EXPECT_THROW(weak_continuity_probe(s.G, VectorFunction::identity(2), {4, 2}, phi, e), PreconditionError);
}

TEST(Hspd, Cases) {
  Rig s(4);
  EXPECT_EQ(hspd_norm(s.G, Field::scalar(s.grid, Support::closure), 2.0), 0.0);
  const double vol = s.grid->num_nodes() * s.grid->cell_volume();
  EXPECT_NEAR(hspd_norm(s.G, Field::scalar(s.grid, Support::closure, 1.0), 3.0), std::cbrt(vol), 1e-12);
  const Field u = random_field(s.grid, 2, 1, 12);
  for (double p : {1.0, 1.5, 2.0, 4.0})
    EXPECT_NEAR(hspd_norm(s.G, 2.0 * u, p), 2 * hspd_norm(s.G, u, p), 1e-12 * hspd_norm(s.G, u, p));
  EXPECT_THROW(hspd_norm(s.G, u, 0.5), ParameterError);
}

TEST(Slope, ExactPowerLaw) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 1.5, 0.75, 0.375}), -1.0, 1e-14);
  EXPECT_THROW(loglog_slope({1}, {1}), PreconditionError);
}

TEST(Relative, ZeroOverZero) {
  EXPECT_EQ(relative(0.0, 0.0), 0.0);
  EXPECT_EQ(relative(1.0, 4.0), 0.25);
}
