#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlgrad/energy.hpp>
#include <nlgrad/functions.hpp>
#include <nlgrad/grid.hpp>
#include <nlgrad/kernels.hpp>
#include <nlgrad/solve.hpp>

namespace nlgrad::app {

/// Malformed or invalid configuration; `field` is the dotted path of the
/// offending entry (or "<document>" for parse errors).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Pass/fail thresholds. Relative residuals unless noted.
struct Tolerances {
  double rounding = 1e-12;       // per-sample algebraic identities
  double affine = 0.02;
  double equivalence = 0.05;
  double duality = 0.02;
  double piola = 0.02;
  double det_ibp = 0.02;
  double refinement_ratio = 0.7; // residual(h/2) <= ratio * residual(h)
  double ratio_floor = 1e-10;    // residuals below this skip the ratio test
  double bound_slack = 0.05;
  double wc_final_fraction = 0.1;
  std::optional<double> wc_slope;  // expected log-log slope of the entry gaps
  double wc_slope_window = 0.3;
  double poincare_stability = 0.1;
  std::optional<double> max_deviation;  // minimize: max |u - g| over the grid
};

struct SweepAxes {
  std::string target = "poincare";  // poincare | minimize
  std::vector<double> s;
  std::vector<double> delta;
  std::vector<double> h_divisors;
};

struct ExperimentConfig {
  std::string command;
  KernelParams kernel;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Grid spacings as divisors of delta (h = delta / d).
  std::vector<double> h_divisors;
  StoredEnergy energy;
  std::vector<FunctionDescriptor> datum;  // one per component
  OptimizerConfig optimizer;
  SweepAxes sweep;
  Tolerances tolerances;
  std::vector<int> wc_schedule{2, 4, 8, 16, 32};
  int bound_trials = 20;
  std::filesystem::path output = "out";
  std::filesystem::path operator_cache;  // empty: no disk cache
  int threads = 1;
  std::uint64_t seed = 0;
  std::string canonical;   // compact, key-sorted JSON of the document
  std::uint64_t hash = 0;  // see refresh_hash

  BoxDomain domain(double delta) const;
  BoxDomain domain() const { return domain(kernel.delta); }
  VectorFunction datum_function() const;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"identities", "minimize", "poincare", "sweep"};
  return c;
}

/// Parses and validates a config for `command`. Every failure is a
/// ConfigError naming the field.
ExperimentConfig parse_config(const std::string& text, const std::string& command);
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command);

/// FNV-1a over the canonical document, seed and thread count. Call after
/// command-line overrides.
void refresh_hash(ExperimentConfig& cfg);

}  // namespace nlgrad::app
