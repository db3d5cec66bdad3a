#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "nlgrad/grid.hpp"

namespace nlgrad {

/// Node set a field is stored on.
///   closure  - every node of Omega_delta
///   omega    - nodes of closure(Omega) (Grid::omega_nodes)
///   interior - nodes of Omega_{-delta} (Grid::interior_nodes)
enum class Support { closure, omega, interior };

/// Nodal values with a fixed per-node shape (rows x cols, row-major).
///
/// Scalars are 1x1, vectors n x 1, matrices n x n. Value semantics; copies
/// own independent storage and share only the immutable grid.
class Field {
 public:
  using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstRowMajorMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Field() = default;
  Field(GridPtr grid, Support support, int rows, int cols = 1, double fill = 0.0);

  static Field scalar(GridPtr grid, Support support, double fill = 0.0) {
    return Field(std::move(grid), support, 1, 1, fill);
  }
  static Field vector(GridPtr grid, Support support, double fill = 0.0) {
    const int n = grid->dim();
    return Field(std::move(grid), support, n, 1, fill);
  }
  static Field matrix(GridPtr grid, Support support, double fill = 0.0) {
    const int n = grid->dim();
    return Field(std::move(grid), support, n, n, fill);
  }

  const GridPtr& grid() const { return grid_; }
  Support support() const { return support_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int components() const { return rows_ * cols_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  bool is_vector() const { return cols_ == 1 && rows_ == grid_->dim(); }
  bool is_matrix() const { return cols_ == grid_->dim() && rows_ == grid_->dim(); }

  /// Number of nodes carried.
  std::size_t size() const { return data_.size() / components(); }
  /// Grid node index of a slot.
  std::size_t node(std::size_t slot) const;
  /// Slot of a grid node, or -1 when the node is outside the support.
  long slot(std::size_t node) const;

  std::span<double> at(std::size_t slot) { return {data_.data() + slot * components(), std::size_t(components())}; }
  std::span<const double> at(std::size_t slot) const {
    return {data_.data() + slot * components(), std::size_t(components())};
  }
  double& operator()(std::size_t slot, int comp = 0) { return data_[slot * components() + comp]; }
  double operator()(std::size_t slot, int comp = 0) const { return data_[slot * components() + comp]; }

  RowMajorMap map(std::size_t slot) { return {data_.data() + slot * components(), rows_, cols_}; }
  ConstRowMajorMap map(std::size_t slot) const { return {data_.data() + slot * components(), rows_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Copy of the values on a smaller support (closure -> omega -> interior).
  Field restrict_to(Support target) const;

  /// Largest absolute entry.
  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double a);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  void check_compatible(const Field& other) const;

  GridPtr grid_;
  Support support_ = Support::closure;
  int rows_ = 1;
  int cols_ = 1;
  std::vector<double> data_;
};

/// Pointwise product phi * U where phi is scalar on the same grid; phi must
/// cover U's support.
Field pointwise_product(const Field& phi, const Field& U);

/// Per-node Frobenius norms, weighted by omega quadrature weights (omega
/// support) or cell volumes (closure support), raised to p and summed: the
/// quadrature L^p norm.
double lp_norm(const Field& f, double p = 2.0);

}  // namespace nlgrad
