#pragma once

#include <filesystem>

#include "nlgrad/operators.hpp"

namespace nlgrad {

/// Binary operator cache, native little-endian.
///
///   "NLGO" | u32 version | u32 kind | u32 n | u32 width
///   f64 s, delta, a0, b0, h | f64 lower[n], upper[n] | u64 grid hash
///   f64 near_mass | u64 rows | u64 nnz
///   per row: u64 target node, u64 count, then count x (u32 source, f64 weight[width])
void save_operator(const NonlocalOperator& op, const std::filesystem::path& path);

/// Loads a dump and checks it against the grid and kernel; throws
/// ParameterError on any mismatch or a malformed file.
NonlocalOperator load_operator(const std::filesystem::path& path, const GridPtr& grid, const KernelParams& kernel);

inline constexpr std::uint32_t kOperatorFormatVersion = 1;

}  // namespace nlgrad
