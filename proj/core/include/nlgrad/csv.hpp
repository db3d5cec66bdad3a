#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nlgrad/field.hpp"
#include "nlgrad/kernels.hpp"

namespace nlgrad {

/// 17 significant digits, '.' decimal, locale independent.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// "# config_hash=<16 hex>,n=..,s=..,delta=..,a0=..,b0=.." (no newline).
std::string header_comment(std::uint64_t config_hash, const KernelParams& kernel);

/// Comma-separated rows with LF endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void comment(std::string_view text);
  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ostream& out_;
  bool fresh_ = true;
};

/// One row per node: index, x1..xn, class, v1..vk.
void write_field_csv(std::ostream& out, const Field& f, std::string_view comment);

}  // namespace nlgrad
