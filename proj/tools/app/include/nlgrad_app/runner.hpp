#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlgrad/solve.hpp>

#include "nlgrad_app/config.hpp"
#include "nlgrad_app/experiments.hpp"

namespace nlgrad::app {

/// A runtime failure tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("stage '" + stage + "': " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunResult {
  bool pass = false;
  std::vector<std::filesystem::path> files;
  std::string summary;  // one line for the terminal
};

/// Outcome of one minimization.
struct MinimizeOutcome {
  SolveReport report;
  double max_deviation = 0.0;  // max |u - g| over all nodes
  std::vector<double> el_pairings;
  std::vector<double> el_scales;
  bool el_ok = false;  // every |pairing| <= 10 grad_tol scale
  bool pass = false;
};

MinimizeOutcome solve_point(const ExperimentConfig& cfg, const KernelParams& kernel, double divisor,
                            OperatorCache& cache);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Runs cfg.command, writing artifacts under `out`. Throws StageError.
RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

}  // namespace nlgrad::app
