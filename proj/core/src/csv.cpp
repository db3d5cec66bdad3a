#include "nlgrad/csv.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

namespace nlgrad {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string header_comment(std::uint64_t config_hash, const KernelParams& k) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  return std::string("# config_hash=") + hex + ",n=" + std::to_string(k.n) + ",s=" + format_double(k.s) +
         ",delta=" + format_double(k.delta) + ",a0=" + format_double(k.a0) + ",b0=" + format_double(k.b0);
}

void CsvWriter::comment(std::string_view text) {
  if (!text.empty() && text.front() != '#') out_ << "# ";
  out_ << text << '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) cell(c);
  end_row();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (!fresh_) out_ << ',';
  out_ << text;
  fresh_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  out_ << '\n';
  fresh_ = true;
}

void write_field_csv(std::ostream& out, const Field& f, std::string_view comment) {
  const Grid& g = *f.grid();
  CsvWriter w(out);
  if (!comment.empty()) w.comment(comment);
  std::vector<std::string> cols{"index"};
  for (int d = 0; d < g.dim(); ++d) cols.push_back("x" + std::to_string(d + 1));
  cols.push_back("class");
  for (int c = 0; c < f.components(); ++c) cols.push_back("v" + std::to_string(c + 1));
  w.header(cols);
  Vec x(g.dim());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const std::size_t node = f.node(k);
    g.position(node, std::span<double>(x.data(), x.size()));
    w.cell(node);
    for (int d = 0; d < g.dim(); ++d) w.cell(x(d));
    w.cell(to_string(g.node_class(node)));
    for (double v : f.at(k)) w.cell(v);
    w.end_row();
  }
}

}  // namespace nlgrad
