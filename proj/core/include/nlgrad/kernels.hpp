#pragma once

#include <iosfwd>
#include <vector>

namespace nlgrad {

/// Parameters of the truncated kernel family.
///
/// The cut-off is w(r) = a0 * step((r - b0*delta) / ((1 - b0)*delta)) where
/// step is the C-infinity transition from 1 (t <= 0) to 0 (t >= 1). It is
/// radial, nonincreasing, equal to a0 on B(0, b0*delta) and supported in
/// B(0, delta).
struct KernelParams {
  int n = 2;
  double s = 0.5;
  double delta = 0.25;
  double a0 = 1.0;
  double b0 = 0.5;

  /// Throws ParameterError unless n in {2,3}, 0<s<1, delta>0, a0>0, 0<b0<1.
  void validate() const;

  /// Radius of the plateau region, b0*delta.
  double plateau_radius() const { return b0 * delta; }

  /// Exponent n-1+s of the kernel singularity.
  double singular_exponent() const { return n - 1 + s; }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// pi^{n/2} 2^s Gamma(s/2) / Gamma((n-s)/2), for 0 < s < n.
double gamma_const(double s, int n);

/// (n-1+s) / gamma_const(1-s, n), for 0 < s < 1.
double cns_const(double s, int n);

/// Surface measure of the unit sphere in R^n.
double sphere_area(int n);

/// C-infinity monotone transition: 1 for t <= 0, 0 for t >= 1.
double smooth_step(double t);

double cutoff_w(double r, const KernelParams& params);

/// w(r) / (gamma(1-s) r^{n-1+s}). Throws SingularityError at r == 0.
double rho(double r, const KernelParams& params);

/// Integral of rho over R^n.
double rho_l1_norm(const KernelParams& params);

/// Integral of rho over the ball B(0, radius).
double rho_ball_mass(double radius, const KernelParams& params);

/// Tabulated radial function with exact evaluation between samples.
///
/// Samples cover (0, delta]: a log-spaced block on the plateau and a uniform
/// block on the transition annulus [b0*delta, delta]. On the plateau the
/// profile has a closed form; on the annulus, evaluation integrates from the
/// next tabulated radius with a 20-point Gauss-Legendre rule.
class RadialProfile {
 public:
  enum class Kind { rho, q };

  RadialProfile() = default;

  Kind kind() const { return kind_; }
  const KernelParams& params() const { return params_; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& values() const { return values_; }
  double singular_exponent() const { return params_.singular_exponent(); }
  double tail_value() const { return values_.empty() ? 0.0 : values_.back(); }

  /// Profile value at r > 0; zero for r >= delta.
  double operator()(double r) const;

  /// Integral of the radial function over R^n.
  double mass() const;

  /// Two-column CSV (radius,value).
  void write_csv(std::ostream& out) const;

  friend RadialProfile build_Q_profile(const KernelParams&, int);
  friend RadialProfile tabulate_rho(const KernelParams&, int);

 private:
  double annulus_integral(double from, double to) const;

  Kind kind_ = Kind::q;
  KernelParams params_;
  std::vector<double> radii_;
  std::vector<double> values_;
  int plateau_cells_ = 0;
  double plateau_offset_ = 0.0;  // Q(r) - rho(r) on the plateau
};

/// Q(r) = integral_r^delta (n-1+s) rho(t)/t dt, tabulated with `resolution`
/// cells on each of the plateau and annulus blocks. Requires resolution >= 64.
RadialProfile build_Q_profile(const KernelParams& params, int resolution = 256);

/// rho tabulated on the same radial layout as build_Q_profile.
RadialProfile tabulate_rho(const KernelParams& params, int resolution = 256);

}  // namespace nlgrad
