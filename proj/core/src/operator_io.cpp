#include "nlgrad/operator_io.hpp"

#include <cstring>
#include <fstream>

#include "nlgrad/errors.hpp"

namespace nlgrad {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'G', 'O'};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParameterError("operator dump: truncated file");
  return v;
}

}  // namespace

void save_operator(const NonlocalOperator& op, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_operator: cannot open " + path.string());
  const auto& g = *op.grid();
  const auto& k = op.kernel();
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kOperatorFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(op.kind()));
  put<std::uint32_t>(out, k.n);
  put<std::uint32_t>(out, op.width());
  for (double v : {k.s, k.delta, k.a0, k.b0, g.h()}) put<double>(out, v);
  for (double v : g.domain().lower) put<double>(out, v);
  for (double v : g.domain().upper) put<double>(out, v);
  put<std::uint64_t>(out, g.hash());
  put<double>(out, op.near_mass());
  put<std::uint64_t>(out, op.rows());
  put<std::uint64_t>(out, op.nonzeros());
  for (std::size_t r = 0; r < op.rows(); ++r) {
    const auto row = op.row(r);
    put<std::uint64_t>(out, g.omega_nodes()[r]);
    put<std::uint64_t>(out, row.cols.size());
    for (std::size_t j = 0; j < row.cols.size(); ++j) {
      put<std::uint32_t>(out, row.cols[j]);
      for (int d = 0; d < op.width(); ++d) put<double>(out, row.weights[j * op.width() + d]);
    }
  }
  if (!out) throw std::runtime_error("save_operator: write failed for " + path.string());
}

NonlocalOperator load_operator(const std::filesystem::path& path, const GridPtr& grid, const KernelParams& kernel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("load_operator: cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ParameterError("operator dump: bad magic");
  if (get<std::uint32_t>(in) != kOperatorFormatVersion) throw ParameterError("operator dump: unsupported version");
  const auto kind_raw = get<std::uint32_t>(in);
  if (kind_raw != 1 && kind_raw != 2) throw ParameterError("operator dump: unknown operator kind");
  const auto kind = static_cast<OperatorKind>(kind_raw);
  KernelParams k;
  k.n = static_cast<int>(get<std::uint32_t>(in));
  const int width = static_cast<int>(get<std::uint32_t>(in));
  k.s = get<double>(in);
  k.delta = get<double>(in);
  k.a0 = get<double>(in);
  k.b0 = get<double>(in);
  const double h = get<double>(in);
  if (!(k == kernel)) throw ParameterError("operator dump: kernel parameters differ");
  if (k.n != grid->dim() || h != grid->h()) throw ParameterError("operator dump: grid differs");
  for (int i = 0; i < 2 * k.n; ++i) get<double>(in);  // box, covered by the hash
  if (get<std::uint64_t>(in) != grid->hash()) throw ParameterError("operator dump: grid hash differs");
  const double near_mass = get<double>(in);
  const auto rows = get<std::uint64_t>(in);
  const auto nnz = get<std::uint64_t>(in);
  if (rows != grid->omega_nodes().size()) throw ParameterError("operator dump: row count differs");
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  cols.reserve(nnz);
  weights.reserve(nnz * width);
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (get<std::uint64_t>(in) != grid->omega_nodes()[r]) throw ParameterError("operator dump: row target differs");
    const auto count = get<std::uint64_t>(in);
    for (std::uint64_t j = 0; j < count; ++j) {
      cols.push_back(get<std::uint32_t>(in));
      for (int d = 0; d < width; ++d) weights.push_back(get<double>(in));
    }
    row_ptr.push_back(cols.size());
  }
  if (cols.size() != nnz) throw ParameterError("operator dump: nonzero count differs");
  return NonlocalOperator::from_csr(kind, grid, kernel, std::move(row_ptr), std::move(cols), std::move(weights),
                                    near_mass);
}

}  // namespace nlgrad
