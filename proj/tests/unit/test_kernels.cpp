#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include <nlgrad/errors.hpp>
#include <nlgrad/kernels.hpp>

using namespace nlgrad;

namespace {

KernelParams params(int n, double s, double delta) {
  KernelParams p;
  p.n = n;
  p.s = s;
  p.delta = delta;
  return p;
}

// mpmath, 30 digits: sigma_{n-1} int_0^delta w(r) r^{-s} dr / gamma(1-s).
struct NormOracle {
  int n;
  double s, delta, l1;
};
constexpr NormOracle kNorms[] = {
    {2, 0.25, 0.125, 0.16239112534763283}, {2, 0.25, 0.25, 0.27310823034768213},
    {2, 0.5, 0.125, 0.29226581630935064},  {2, 0.5, 0.25, 0.41332628124272739},
    {2, 0.75, 0.125, 0.53777234473563688}, {2, 0.75, 0.25, 0.63952269861131549},
    {3, 0.25, 0.125, 0.12029383050050449}, {3, 0.25, 0.25, 0.20230930169002436},
    {3, 0.5, 0.125, 0.24393289519556815},  {3, 0.5, 0.25, 0.34497320869450728},
    {3, 0.75, 0.125, 0.4950226797658828},  {3, 0.75, 0.25, 0.58868449286530135},
};

}  // namespace

TEST(Gamma, MatchesHighPrecisionOracle) {
  EXPECT_NEAR(gamma_const(0.5, 2), 13.145047206596874, 1e-12 * 13.15);
  EXPECT_NEAR(gamma_const(0.5, 3), 31.499219891444839, 1e-12 * 31.5);
  EXPECT_NEAR(gamma_const(0.25, 2), 25.831026096727174, 1e-12 * 25.8);
  EXPECT_NEAR(gamma_const(0.75, 3), 23.571830603143327, 1e-12 * 23.6);
  EXPECT_NEAR(gamma_const(1.0, 2), 2 * std::numbers::pi, 1e-13);
}

TEST(Gamma, RejectsOutOfRange) {
  EXPECT_THROW(gamma_const(0.0, 2), ParameterError);
  EXPECT_THROW(gamma_const(2.0, 2), ParameterError);
  EXPECT_THROW(cns_const(1.0, 2), ParameterError);
}

TEST(Cns, Oracle) {
  EXPECT_NEAR(cns_const(0.5, 2), 0.11411141979370156, 1e-15);
  EXPECT_NEAR(cns_const(0.5, 3), 0.079367044917801212, 1e-15);
}

TEST(Cns, CancelsGamma) {
  for (int n : {2, 3})
    for (double s : {0.1, 0.25, 0.5, 0.75, 0.9})
      EXPECT_NEAR(cns_const(s, n) * gamma_const(1 - s, n), n - 1 + s, 1e-14 * (n + s));
}

TEST(Cutoff, PlateauSupportAndMonotone) {
  const auto p = params(2, 0.5, 0.25);
  EXPECT_EQ(cutoff_w(0.0, p), 1.0);
  EXPECT_EQ(cutoff_w(p.b0 * p.delta, p), 1.0);
  EXPECT_EQ(cutoff_w(p.delta, p), 0.0);
  EXPECT_NEAR(cutoff_w(0.1875, p), 0.5, 1e-15);  // midpoint of the transition
  double prev = cutoff_w(0.0, p);
  for (int i = 1; i <= 2000; ++i) {
    const double w = cutoff_w(0.3 * i / 2000, p);
    EXPECT_LE(w, prev);
    prev = w;
  }
}

TEST(Rho, PlateauValueAndSupport) {
  const auto p = params(2, 0.5, 0.25);
  const double r = p.b0 * p.delta;
  EXPECT_NEAR(rho(r, p), 1.0 / (gamma_const(0.5, 2) * std::pow(r, 1.5)), 1e-14);
  EXPECT_EQ(rho(p.delta, p), 0.0);
  EXPECT_EQ(rho(1.0, p), 0.0);
  EXPECT_THROW(rho(0.0, p), SingularityError);
  // mpmath
  EXPECT_NEAR(rho(0.2, p), 0.25766207741949264, 1e-13);
}

TEST(RhoNorm, MatchesRadialOracle) {
  for (const auto& o : kNorms) {
    SCOPED_TRACE(testing::Message() << "n=" << o.n << " s=" << o.s << " delta=" << o.delta);
    EXPECT_NEAR(rho_l1_norm(params(o.n, o.s, o.delta)), o.l1, 1e-11 * o.l1);
  }
}

TEST(RhoNorm, LinearInA0) {
  auto p = params(2, 0.5, 0.25);
  const double base = rho_l1_norm(p);
  p.a0 = 2.0;
  EXPECT_NEAR(rho_l1_norm(p), 2 * base, 1e-14);
}

TEST(RhoNorm, BallMassIncreasesToNorm) {
  const auto p = params(2, 0.5, 0.25);
  double prev = 0.0;
  for (double r : {0.01, 0.05, 0.125, 0.2, 0.25}) {
    const double m = rho_ball_mass(r, p);
    EXPECT_GT(m, prev);
    prev = m;
  }
  EXPECT_NEAR(prev, rho_l1_norm(p), 1e-12);
}

TEST(QProfile, MassIdentityAcrossMatrix) {
  for (const auto& o : kNorms) {
    SCOPED_TRACE(testing::Message() << "n=" << o.n << " s=" << o.s << " delta=" << o.delta);
    const auto Q = build_Q_profile(params(o.n, o.s, o.delta));
    const double m = (o.n - 1 + o.s) / o.n * o.l1;
    EXPECT_NEAR(Q.mass(), m, 1e-8 * m);
  }
}

TEST(QProfile, PointValuesMatchOracle) {
  const auto Q = build_Q_profile(params(2, 0.5, 0.25));
  EXPECT_NEAR(Q(0.01), 75.115523541115197, 1e-9 * 75.1);
  EXPECT_NEAR(Q(0.05), 5.8455341231203347, 1e-9 * 5.85);
  EXPECT_NEAR(Q(0.125), 0.762608131915781, 1e-9);
  EXPECT_NEAR(Q(0.2), 0.020744166393428083, 1e-10);
  EXPECT_NEAR(Q(0.24), 3.0707815178415916e-8, 1e-12);
  EXPECT_EQ(Q(0.25), 0.0);
  EXPECT_EQ(Q.tail_value(), 0.0);
  EXPECT_NEAR(build_Q_profile(params(3, 0.75, 0.25))(0.1), 8.1244022533805319, 1e-9 * 8.12);
}

TEST(QProfile, SlopeMatchesRho) {
  const auto p = params(2, 0.5, 0.25);
  const auto Q = build_Q_profile(p);
  const double e = 1e-6;
  for (double r : {0.02, 0.07, 0.13, 0.16, 0.19, 0.22}) {
    const double slope = (Q(r + e) - Q(r - e)) / (2 * e);
    const double expected = -(p.n - 1 + p.s) * rho(r, p) / r;
    EXPECT_NEAR(slope, expected, 1e-6 * std::abs(expected)) << "r=" << r;
  }
}

TEST(QProfile, TableIsValid) {
  const auto Q = build_Q_profile(params(3, 0.25, 0.125));
  const auto& r = Q.radii();
  ASSERT_FALSE(r.empty());
  EXPECT_GT(r.front(), 0.0);
  EXPECT_EQ(r.back(), 0.125);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LT(r[i - 1], r[i]);
  for (double v : Q.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_DOUBLE_EQ(Q.singular_exponent(), 2.25);
  std::ostringstream csv;
  Q.write_csv(csv);
  EXPECT_NE(csv.str().find("radius,value"), std::string::npos);
}

TEST(KernelParams, Validation) {
  KernelParams p;
  EXPECT_NO_THROW(p.validate());
  for (auto mutate : {+[](KernelParams& k) { k.s = 1.0; }, +[](KernelParams& k) { k.delta = 0.0; },
                      +[](KernelParams& k) { k.b0 = 1.0; }, +[](KernelParams& k) { k.a0 = -1.0; },
                      +[](KernelParams& k) { k.n = 4; }}) {
    KernelParams q;
    mutate(q);
    EXPECT_THROW(q.validate(), ParameterError);
  }
}
