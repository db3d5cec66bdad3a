#pragma once

#include <string>
#include <vector>

#include "nlgrad/field.hpp"
#include "nlgrad/functions.hpp"
#include "nlgrad/kernels.hpp"
#include "nlgrad/operators.hpp"

namespace nlgrad {

/// Outcome of one discrete identity check.
struct IdentityReport {
  std::string name;
  std::vector<double> lhs;
  std::vector<double> rhs;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
  double h = 0.0;
  KernelParams kernel;
  int frequency = 0;      // weak-continuity probe only
  bool reliable = true;   // false when the probed oscillation is under-resolved
};

/// |a| / scale, with 0/0 read as 0.
double relative(double abs_residual, double scale);

/// Max over closure(Omega) of |G 1|, relative to the row weight magnitude.
IdentityReport residual_constant_annihilation(const NonlocalOperator& G);

/// A = sum omega phi . Du, B = -sum omega u div phi,
/// C = sum_x omega_x phi(x) . sum_y collar_fraction(y) G_xy u(y).
/// Residual |A - B - C| relative to max(|A|,|B|,|C|). phi (vector, on
/// Omega_delta) must vanish on every node whose cell is not fully inside Omega.
IdentityReport residual_duality(const NonlocalOperator& G, const Field& u, const Field& phi);

/// D(phi g) - phi Dg - K_phi(g), scalar g.
IdentityReport residual_product_scalar(const NonlocalOperator& G, const Field& phi, const Field& g);
/// D(phi g) - phi Dg - K_phi(g), vector g (matrix-valued, outer variant).
IdentityReport residual_product_vector(const NonlocalOperator& G, const Field& phi, const Field& g);
/// div(phi Phi) - phi div Phi - K_phi(Phi) for vector Phi (dot variant) or
/// matrix Phi (matrix variant).
IdentityReport residual_product_divergence(const NonlocalOperator& G, const Field& phi, const Field& Phi);
/// tr D phi - div phi.
IdentityReport residual_trace(const NonlocalOperator& G, const Field& phi);
/// tr K_phi(U^T) - K_phi(U) for vector U.
IdentityReport residual_K_trace(const NonlocalOperator& G, const Field& phi, const Field& U);

/// Du against central differences (spacing h) of Q*u at INTERIOR nodes; max
/// deviation relative to max |Du|. u must vanish on nodes farther than
/// delta - h from Omega.
IdentityReport residual_gradient_equivalence(const NonlocalOperator& G, const NonlocalOperator& Q, const Field& u);

struct PiolaReport {
  IdentityReport pointwise;  // central-difference divergence of cof(Du) at INTERIOR nodes, over max |grad cof(Du)|
  IdentityReport weak;       // worst test function of the battery
};

/// u vector on Omega_delta; battery functions must vanish outside Omega.
PiolaReport residual_piola(const NonlocalOperator& G, const Field& u, const std::vector<ScalarFunction>& battery);

/// sum omega det(Du) phi against -(1/n) sum omega (Q*u) . cof(Du) D phi.
IdentityReport residual_det_ibp(const NonlocalOperator& G, const NonlocalOperator& Q, const Field& u,
                                const ScalarFunction& phi);

/// Oscillation probe u_j = u + (amplitude/j) sin(j x_1) e. For each j, three
/// reports (names wc_entries, wc_cof, wc_det) holding |sum omega (mu(Du_j) -
/// mu(Du)) phi| per minor in lhs and the Euclidean norm over minors in
/// abs_residual; rel_residual is that norm divided by sum omega |mu(Du)||phi|.
std::vector<IdentityReport> weak_continuity_probe(const NonlocalOperator& G, const VectorFunction& u,
                                                  const std::vector<int>& schedule, const ScalarFunction& phi,
                                                  const Vec& direction, double amplitude = 1.0);

/// (||u||_p^p over Omega_delta + ||Du||_p^p over Omega)^(1/p); scalar or vector u.
double hspd_norm(const NonlocalOperator& G, const Field& u, double p);

/// Least-squares slope of log(values) against log(abscissae).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nlgrad
