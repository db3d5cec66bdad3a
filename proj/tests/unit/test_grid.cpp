#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <nlgrad/errors.hpp>
#include <nlgrad/field.hpp>
#include <nlgrad/functions.hpp>
#include <nlgrad/grid.hpp>

using namespace nlgrad;

namespace {

// Brute-force enumeration of lattice points with coordinates strictly
// inside (delta, 1 - delta) on the unit box.
std::size_t brute_interior(double h, double delta, int n) {
  std::size_t count = 0;
  const int lo = static_cast<int>(std::floor(-delta / h)) - 1, hi = static_cast<int>(std::ceil((1 + delta) / h)) + 1;
  std::vector<int> idx(n, lo);
  while (true) {
    bool inside = true;
    for (int d = 0; d < n; ++d) {
      const double x = idx[d] * h;
      inside = inside && x > delta && x < 1 - delta;
    }
    count += inside;
    int d = n - 1;
    while (d >= 0 && ++idx[d] > hi) idx[d--] = lo;
    if (d < 0) break;
  }
  return count;
}

}  // namespace

TEST(Grid, InteriorCountAtQuarterHorizon) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.0625);
  EXPECT_EQ(g->count(NodeClass::interior), 49u);
  EXPECT_EQ(brute_interior(0.0625, 0.25, 2), 49u);
}

TEST(Grid, InteriorCountMatchesBruteForce) {
  for (double h : {0.25 / 8, 0.25 / 16}) {
    auto g = Grid::build(BoxDomain::unit(2, 0.25), h);
    EXPECT_EQ(g->count(NodeClass::interior), brute_interior(h, 0.25, 2));
  }
  auto g3 = Grid::build(BoxDomain::unit(3, 0.25), 0.0625);
  EXPECT_EQ(g3->count(NodeClass::interior), brute_interior(0.0625, 0.25, 3));
}

TEST(Grid, PartitionAndClassification) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 8);
  EXPECT_EQ(g->count(NodeClass::interior) + g->count(NodeClass::core) + g->count(NodeClass::collar), g->num_nodes());
  for (std::size_t k = 0; k < g->num_nodes(); ++k) {
    const Vec x = g->position(k);
    const double to_boundary = std::min({x(0), x(1), 1 - x(0), 1 - x(1)});
    switch (g->node_class(k)) {
      case NodeClass::interior:
        EXPECT_GT(to_boundary, 0.25);
        break;
      case NodeClass::core:
        EXPECT_GE(to_boundary, 0.0);
        EXPECT_LE(to_boundary, 0.25);
        break;
      case NodeClass::collar:
        EXPECT_LT(to_boundary, 0.0);
        EXPECT_LT(g->distance_to_omega(k), 0.25);
        break;
    }
  }
}

TEST(Grid, FractionalBoundaryWeights) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.0625);
  double total = 0.0;
  for (std::size_t k = 0; k < g->num_nodes(); ++k) total += g->omega_weight(k);
  EXPECT_NEAR(total, 1.0, 1e-14);  // |Omega|
  const long corner = g->find(std::vector<int>{0, 0});
  ASSERT_GE(corner, 0);
  EXPECT_NEAR(g->omega_weight(corner), g->cell_volume() / 4, 1e-16);
  EXPECT_NEAR(g->collar_fraction(corner), 0.75, 1e-15);
}

TEST(Grid, CoveringProperty) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.0625);
  const int r = 4;  // delta / h
  for (std::size_t node : g->omega_nodes()) {
    const auto li = g->lattice_index(node);
    for (int a = -r; a <= r; ++a)
      for (int b = -r; b <= r; ++b) {
        if (a * a + b * b >= r * r) continue;
        const std::vector<int> q{li[0] + a, li[1] + b};
        EXPECT_GE(g->find(q), 0);
      }
  }
}

TEST(Grid, RefinementQuadruplesNodes) {
  auto a = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 8);
  auto b = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 16);
  const double ratio = double(b->num_nodes()) / a->num_nodes();
  EXPECT_GT(ratio, 3.6);
  EXPECT_LT(ratio, 4.2);
}

TEST(Grid, DeterministicOrderingAndHash) {
  auto a = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 8);
  auto b = Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 8);
  ASSERT_EQ(a->num_nodes(), b->num_nodes());
  for (std::size_t k = 0; k < a->num_nodes(); ++k) EXPECT_EQ(a->position(k), b->position(k));
  EXPECT_EQ(a->hash(), b->hash());
  EXPECT_NE(a->hash(), Grid::build(BoxDomain::unit(2, 0.25), 0.25 / 16)->hash());
}

TEST(Grid, RejectsBadInputs) {
  EXPECT_THROW(Grid::build(BoxDomain::unit(2, 0.5), 0.125), ParameterError);  // Omega_{-delta} empty
  EXPECT_THROW(Grid::build(BoxDomain::unit(2, 0.25), 0.1), ParameterError);   // h > delta/4
  EXPECT_THROW(Grid::build(BoxDomain::unit(2, 0.25), -1.0), ParameterError);
}

TEST(SampleFunction, ClosedForms) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.0625);
  const Field c = sample_function(g, ScalarFunction(term::Constant{3.5}));
  for (double v : c.data()) EXPECT_EQ(v, 3.5);

  const Field a = sample_function(g, ScalarFunction(term::Affine{{2.0, -1.0}, 0.5}));
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vec x = g->position(a.node(k));
    EXPECT_DOUBLE_EQ(a(k), 2 * x(0) - x(1) + 0.5);
  }

  const ScalarFunction bump(term::SineBump{{0, 0}, {1, 1}, {1, 1}, 1.0});
  const long centre = g->find(std::vector<int>{8, 8});
  ASSERT_GE(centre, 0);
  EXPECT_NEAR(sample_function(g, bump)(centre), 1.0, 1e-15);
}

TEST(SampleFunction, DescriptorsAndGradients) {
  FunctionDescriptor d{"product", {}, {}};
  d.children.push_back({"oscillation", {{"axis", {0}}, {"frequency", {std::numbers::pi}}}, {}});
  d.children.push_back({"affine", {{"b", {0.0, 2.0}}}, {}});
  const ScalarFunction f = make_scalar_function(d, 2);
  Vec x(2);
  x << 0.3, 0.7;
  EXPECT_NEAR(f.value(x), std::sin(std::numbers::pi * 0.3) * 1.4, 1e-15);
  const Vec gr = f.gradient(x);
  EXPECT_NEAR(gr(0), std::numbers::pi * std::cos(std::numbers::pi * 0.3) * 1.4, 1e-14);
  EXPECT_NEAR(gr(1), 2 * std::sin(std::numbers::pi * 0.3), 1e-14);

  EXPECT_THROW(make_scalar_function({"nope", {}, {}}, 2), ParameterError);
  EXPECT_THROW(make_scalar_function({"affine", {}, {}}, 2), ParameterError);
}

TEST(SampleFunction, AnalyticGradientMatchesDifferences) {
  const ScalarFunction f = ScalarFunction(term::RadialBump{{0.4, 0.6}, 0.5, 1.3}) +
                           ScalarFunction(term::Window{{0.2, 0.2}, {0.8, 0.7}, 0.15}) *
                               ScalarFunction(term::SineBump{{0, 0}, {1, 1}, {2, 1}, 1.0});
  const double e = 1e-6;
  for (double px : {0.1, 0.35, 0.62, 0.9})
    for (double py : {0.15, 0.5, 0.77}) {
      Vec x(2);
      x << px, py;
      const Vec g = f.gradient(x);
      for (int i = 0; i < 2; ++i) {
        Vec xp = x, xm = x;
        xp(i) += e;
        xm(i) -= e;
        EXPECT_NEAR(g(i), (f.value(xp) - f.value(xm)) / (2 * e), 1e-7);
      }
    }
}

TEST(Field, RestrictAndNorms) {
  auto g = Grid::build(BoxDomain::unit(2, 0.25), 0.0625);
  Field one = Field::scalar(g, Support::closure, 1.0);
  const Field om = one.restrict_to(Support::omega);
  EXPECT_EQ(om.size(), g->omega_nodes().size());
  EXPECT_NEAR(lp_norm(om, 2.0), 1.0, 1e-14);  // |Omega| = 1
  EXPECT_NEAR(lp_norm(one, 1.0), g->num_nodes() * g->cell_volume(), 1e-12);
  Field v = Field::vector(g, Support::closure, 2.0);
  EXPECT_EQ(v.components(), 2);
  EXPECT_EQ((v - v).max_abs(), 0.0);
  EXPECT_THROW(one += v, PreconditionError);
}
