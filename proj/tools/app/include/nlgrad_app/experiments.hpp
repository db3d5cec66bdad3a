#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <nlgrad/calculus.hpp>
#include <nlgrad/functions.hpp>
#include <nlgrad/operators.hpp>

#include "nlgrad_app/config.hpp"

namespace nlgrad::app {

/// Assembled operators keyed by (grid hash, kernel). With a directory, dumps
/// are read from and written to it.
class OperatorCache {
 public:
  explicit OperatorCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}

  OperatorPtr gradient(const GridPtr& grid, const KernelParams& kernel);
  OperatorPtr convolution(const GridPtr& grid, const KernelParams& kernel);

  /// Operators built from scratch (not found in memory or on disk).
  int assembled() const { return assembled_; }

 private:
  using Key = std::tuple<int, std::uint64_t, int, double, double, double, double>;
  OperatorPtr get(OperatorKind kind, const GridPtr& grid, const KernelParams& kernel);

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<Key, OperatorPtr> ops_;
  int assembled_ = 0;
};

/// One refinement level of an identity sweep.
struct Level {
  double divisor = 0.0;
  GridPtr grid;
  OperatorPtr G;
  OperatorPtr Q;
};

Level make_level(const ExperimentConfig& cfg, double divisor, OperatorCache& cache);

/// Result of one identity across the configured levels.
struct Check {
  std::string name;
  std::vector<IdentityReport> rows;
  bool pass = true;
  std::string criterion;
  std::vector<double> ratios;   // consecutive residual ratios
  std::optional<double> slope;  // weak-continuity entries only
};

/// Seeded source of random test data.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  /// i.i.d. uniform(-1, 1) nodal values.
  Field field(const GridPtr& grid, Support support, int rows, int cols = 1);
  /// Random affine function plus two radial bumps inside the box.
  ScalarFunction smooth(const std::vector<double>& lower, const std::vector<double>& upper);
  Mat matrix(int n, double scale = 1.0);
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// x + 0.1 (sin(pi x_{i+1}))_i: each component perturbed along the next axis.
VectorFunction perturbed_identity(int n);
/// Identity with a non-separable perturbation of the first two components.
VectorFunction skew_perturbed_identity(const std::vector<double>& lower, const std::vector<double>& upper,
                                       double delta);
/// Sine bumps on the box enlarged by delta/2, vanishing on the outer collar.
std::vector<ScalarFunction> collar_bumps(const std::vector<double>& lower, const std::vector<double>& upper,
                                         double delta);
/// C-infinity bump centred in the box, radius 0.45 of the shortest edge.
ScalarFunction centred_bump(const std::vector<double>& lower, const std::vector<double>& upper);

/// max over trials of ||K_phi(U)|| / ((n-1+s) Lip(phi) ||rho||_1 ||U||).
IdentityReport K_bound_trials(const Level& level, Sampler& sampler, int trials);
/// max over trials of ||Du||_Omega / ((n-1+s) ||rho||_1 ||grad u||_{Omega_delta}).
IdentityReport gradient_bound_trials(const Level& level, Sampler& sampler, int trials);
/// max over trials of |cof(A) A^T - det(A) I| / |A|^n.
IdentityReport cofactor_trials(const Level& level, Sampler& sampler, int trials);
/// max over Omega nodes of |D(b.x) - m b| / (m |b|).
IdentityReport affine_gradient_error(const Level& level, const Vec& b);

/// Ratio-based refinement test: every residual at h <= delta/8 is at most
/// `tolerance` and consecutive residuals shrink by `ratio` unless the finer
/// one is already below `floor`.
void judge_refinement(Check& check, const std::vector<double>& divisors, double tolerance, const Tolerances& tol);

/// Weak-continuity judgement: reliable gaps nonincreasing in j and the last
/// at most `fraction` of the first.
void judge_weak_continuity(Check& check, double fraction);
/// Least-squares slope of the reliable gaps against j.
double weak_continuity_slope(const Check& check);

/// The full battery over cfg.h_divisors. Weak continuity runs on the finest
/// level only.
std::vector<Check> identity_battery(const ExperimentConfig& cfg, OperatorCache& cache);

}  // namespace nlgrad::app
