#include "nlgrad/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nlgrad/errors.hpp"

namespace nlgrad {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

constexpr double kPi = std::numbers::pi;

// Smallest tabulated radius, relative to the plateau radius.
constexpr double kInnerRadiusFraction = 1e-6;

std::string fmt(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

// Integral of w(r) r^{-s} over [b0*delta, R], R <= delta.
double annulus_moment(double R, const KernelParams& p) {
  const double b = p.plateau_radius();
  if (R <= b) return 0.0;
  auto f = [&](double r) { return cutoff_w(r, p) * std::pow(r, -p.s); };
  return gauss_kronrod<double, 61>::integrate(f, b, std::min(R, p.delta), 15, 1e-15);
}

}  // namespace

void KernelParams::validate() const {
  if (n != 2 && n != 3) throw ParameterError("kernel: n must be 2 or 3, got " + std::to_string(n));
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("kernel: s must lie in (0,1), got " + fmt(s));
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ParameterError("kernel: delta must be positive, got " + fmt(delta));
  if (!(a0 > 0.0) || !std::isfinite(a0)) throw ParameterError("kernel: a0 must be positive, got " + fmt(a0));
  if (!(b0 > 0.0 && b0 < 1.0)) throw ParameterError("kernel: b0 must lie in (0,1), got " + fmt(b0));
}

double gamma_const(double s, int n) {
  if (n < 1) throw ParameterError("gamma_const: dimension must be positive");
  if (!(s > 0.0 && s < n)) throw ParameterError("gamma_const: s must lie in (0,n), got " + fmt(s));
  return std::pow(kPi, 0.5 * n) * std::exp2(s) * std::tgamma(0.5 * s) / std::tgamma(0.5 * (n - s));
}

double cns_const(double s, int n) {
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("cns_const: s must lie in (0,1), got " + fmt(s));
  return (n - 1 + s) / gamma_const(1.0 - s, n);
}

double sphere_area(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
  }
}

double smooth_step(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  // e^{-1/(1-t)} / (e^{-1/(1-t)} + e^{-1/t}) rewritten to avoid underflow.
  return 1.0 / (1.0 + std::exp(1.0 / (1.0 - t) - 1.0 / t));
}

double cutoff_w(double r, const KernelParams& p) {
  const double b = p.plateau_radius();
  return p.a0 * smooth_step((r - b) / (p.delta - b));
}

double rho(double r, const KernelParams& p) {
  if (r == 0.0) throw SingularityError("rho: kernel is singular at r = 0");
  if (r >= p.delta) return 0.0;
  return cutoff_w(r, p) / (gamma_const(1.0 - p.s, p.n) * std::pow(r, p.singular_exponent()));
}

double rho_ball_mass(double radius, const KernelParams& p) {
  p.validate();
  if (radius <= 0.0) return 0.0;
  const double R = std::min(radius, p.delta);
  const double b = p.plateau_radius();
  const double inner = std::min(R, b);
  // sigma/gamma * integral_0^R w(r) r^{-s} dr; the plateau part is exact.
  const double plateau = p.a0 * std::pow(inner, 1.0 - p.s) / (1.0 - p.s);
  return sphere_area(p.n) / gamma_const(1.0 - p.s, p.n) * (plateau + annulus_moment(R, p));
}

double rho_l1_norm(const KernelParams& p) { return rho_ball_mass(p.delta, p); }

// ---------------------------------------------------------------------------

double RadialProfile::annulus_integral(double from, double to) const {
  // integral_from^to (n-1+s) rho(t)/t dt, i.e. Q(from) - Q(to).
  const double k = params_.singular_exponent();
  const double g = gamma_const(1.0 - params_.s, params_.n);
  auto f = [&](double t) { return k * cutoff_w(t, params_) / (g * std::pow(t, k + 1.0)); };
  return gauss<double, 20>::integrate(f, from, to);
}

double RadialProfile::operator()(double r) const {
  if (!(r > 0.0)) throw SingularityError("RadialProfile: evaluation requires r > 0");
  const KernelParams& p = params_;
  if (r >= p.delta) return 0.0;
  if (kind_ == Kind::rho) return rho(r, p);

  const double b = p.plateau_radius();
  if (r <= b) return rho(r, p) + plateau_offset_;

  // Annulus: radii_[plateau_cells_] == b, radii_.back() == delta.
  auto first = radii_.begin() + plateau_cells_;
  auto it = std::upper_bound(first, radii_.end(), r);
  if (it == radii_.end()) return 0.0;
  const auto k = static_cast<std::size_t>(it - radii_.begin());
  return values_[k] + annulus_integral(r, radii_[k]);
}

double RadialProfile::mass() const {
  const KernelParams& p = params_;
  const double b = p.plateau_radius();
  const double g = gamma_const(1.0 - p.s, p.n);
  // Plateau: rho(r) r^{n-1} = a0 r^{-s} / g, plus the constant offset.
  double inner = p.a0 * std::pow(b, 1.0 - p.s) / ((1.0 - p.s) * g);
  if (kind_ == Kind::q) inner += plateau_offset_ * std::pow(b, p.n) / p.n;

  double outer = 0.0;
  for (std::size_t k = plateau_cells_; k + 1 < radii_.size(); ++k) {
    auto f = [&](double t) { return (*this)(t) * std::pow(t, p.n - 1); };
    outer += gauss<double, 20>::integrate(f, radii_[k], radii_[k + 1]);
  }
  return sphere_area(p.n) * (inner + outer);
}

void RadialProfile::write_csv(std::ostream& out) const {
  out << "radius,value\n";
  char buf[64];
  for (std::size_t i = 0; i < radii_.size(); ++i) {
    auto r1 = std::to_chars(buf, buf + sizeof buf, radii_[i], std::chars_format::general, 17);
    *r1.ptr++ = ',';
    auto r2 = std::to_chars(r1.ptr, buf + sizeof buf, values_[i], std::chars_format::general, 17);
    *r2.ptr++ = '\n';
    out.write(buf, r2.ptr - buf);
  }
}

namespace {

void build_radii(const KernelParams& p, int resolution, std::vector<double>& radii) {
  const double b = p.plateau_radius();
  const double r0 = b * kInnerRadiusFraction;
  radii.clear();
  radii.reserve(2 * resolution + 1);
  const double ratio = std::log(b / r0);
  for (int i = 0; i < resolution; ++i) radii.push_back(r0 * std::exp(ratio * i / resolution));
  for (int i = 0; i < resolution; ++i) radii.push_back(b + (p.delta - b) * i / resolution);
  radii.push_back(p.delta);
}

}  // namespace

RadialProfile build_Q_profile(const KernelParams& params, int resolution) {
  params.validate();
  if (resolution < 64)
    throw ParameterError("build_Q_profile: resolution must be >= 64, got " + std::to_string(resolution));

  RadialProfile prof;
  prof.kind_ = RadialProfile::Kind::q;
  prof.params_ = params;
  prof.plateau_cells_ = resolution;
  build_radii(params, resolution, prof.radii_);

  const std::size_t m = prof.radii_.size();
  prof.values_.assign(m, 0.0);
  // Backward accumulation from Q(delta) = 0 across the annulus.
  for (std::size_t k = m - 1; k-- > static_cast<std::size_t>(resolution);)
    prof.values_[k] = prof.values_[k + 1] + prof.annulus_integral(prof.radii_[k], prof.radii_[k + 1]);

  const double b = params.plateau_radius();
  const double q_b = prof.values_[resolution];
  prof.plateau_offset_ = q_b - rho(b, params);
  for (int k = 0; k < resolution; ++k) prof.values_[k] = rho(prof.radii_[k], params) + prof.plateau_offset_;
  return prof;
}

RadialProfile tabulate_rho(const KernelParams& params, int resolution) {
  params.validate();
  if (resolution < 64)
    throw ParameterError("tabulate_rho: resolution must be >= 64, got " + std::to_string(resolution));
  RadialProfile prof;
  prof.kind_ = RadialProfile::Kind::rho;
  prof.params_ = params;
  prof.plateau_cells_ = resolution;
  build_radii(params, resolution, prof.radii_);
  prof.values_.resize(prof.radii_.size());
  for (std::size_t k = 0; k < prof.radii_.size(); ++k) prof.values_[k] = rho(prof.radii_[k], params);
  return prof;
}

}  // namespace nlgrad
