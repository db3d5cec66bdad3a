#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nlgrad/field.hpp"
#include "nlgrad/grid.hpp"
#include "nlgrad/kernels.hpp"

namespace nlgrad {

enum class OperatorKind : std::uint32_t { gradient = 1, convolution = 2 };

/// Precomputed sparse realization of a nonlocal operator.
///
/// Rows are the nodes of closure(Omega) (Grid::omega_nodes order); columns are
/// grid nodes. Each entry carries width() weights: n for GRADIENT (the vector
/// coefficient of u(y) in D u(x)), 1 for CONVOLUTION. Columns within a row are
/// ascending.
class NonlocalOperator {
 public:
  struct Row {
    std::span<const std::uint32_t> cols;
    std::span<const double> weights;  // width() per column
  };

  OperatorKind kind() const { return kind_; }
  const GridPtr& grid() const { return grid_; }
  const KernelParams& kernel() const { return kernel_; }
  int width() const { return width_; }
  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t nonzeros() const { return cols_.size(); }

  Row row(std::size_t r) const {
    const std::size_t b = row_ptr_[r], e = row_ptr_[r + 1];
    return {{cols_.data() + b, e - b}, {weights_.data() + b * width_, (e - b) * width_}};
  }

  /// Kernel mass not represented by the far-field lattice sum; it is carried
  /// by the near-field correction (see assemble_gradient).
  double near_mass() const { return near_mass_; }

  /// Builds an operator from raw CSR arrays (used by the binary loader).
  static NonlocalOperator from_csr(OperatorKind kind, GridPtr grid, const KernelParams& kernel,
                                   std::vector<std::size_t> row_ptr, std::vector<std::uint32_t> cols,
                                   std::vector<double> weights, double near_mass);

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_indices() const { return cols_; }
  const std::vector<double>& weight_values() const { return weights_; }

 private:
  friend NonlocalOperator assemble_gradient(const GridPtr&, const KernelParams&, double);
  friend NonlocalOperator assemble_convolution(const GridPtr&, const RadialProfile&);

  OperatorKind kind_ = OperatorKind::gradient;
  GridPtr grid_;
  KernelParams kernel_;
  int width_ = 1;
  double near_mass_ = 0.0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
};

using OperatorPtr = std::shared_ptr<const NonlocalOperator>;

/// ((n-1+s)/n) * ||rho||_1: the factor m with D(b.x) = m b.
double affine_gradient_constant(const KernelParams& params);

/// Near-field cutoff radius in units of h.
inline constexpr double kNearFieldCells = 2.0;

/// Default odd-even stabilization strength, as a fraction of m.
inline constexpr double kDefaultStabilization = 0.25;

/// Discrete nonlocal gradient.
///
/// Sources at distance r in (2h, delta) get the midpoint weight
/// h^n (n-1+s) rho(r) (y - x)/r^2. Inside the cutoff ball the field is taken
/// as locally linear, so the contribution is (n-1+s)/n * M * Du(x) with Du(x)
/// from central differences; M is ||rho||_1 minus the far-field lattice sum,
/// which makes the zeroth kernel moment exact and affine fields differentiate
/// exactly. The u(x) coefficient is minus the sum of all other coefficients.
///
/// Every antisymmetric node stencil is blind to the odd-even (checkerboard)
/// modes, whose discrete gradient then shrinks like the near-field mass.
/// `stabilization` adds -beta m/h times the axis third difference
/// u(x+2e) - u(x-2e) - 2(u(x+e) - u(x-e)), with m = affine_gradient_constant.
/// The term vanishes on affine fields, is O(h^2) on smooth ones, and keeps
/// those modes at an h-independent energy.
NonlocalOperator assemble_gradient(const GridPtr& grid, const KernelParams& params,
                                   double stabilization = kDefaultStabilization);

/// Discrete convolution with Q: midpoint weights h^n Q(r) for r > 2h, and the
/// remaining mass integral(Q) - sum placed on u(x).
NonlocalOperator assemble_convolution(const GridPtr& grid, const RadialProfile& q_profile);

/// Scalar field on Omega_delta -> vector field on closure(Omega).
Field apply_gradient(const NonlocalOperator& op, const Field& u);
/// Vector field -> matrix field; row i is the gradient of component i.
Field apply_gradient_vec(const NonlocalOperator& op, const Field& u);
/// Vector field -> scalar field, contracting the same weights.
Field apply_divergence(const NonlocalOperator& op, const Field& phi);
/// Matrix field -> vector field of row divergences.
Field apply_divergence_mat(const NonlocalOperator& op, const Field& Phi);
/// Any-shape field on Omega_delta -> same shape on closure(Omega).
Field apply_convolution(const NonlocalOperator& op, const Field& u);

/// Variants of the product-rule operator K_phi.
enum class KVariant {
  scalar,  ///< U scalar, result vector: (phi(x)-phi(y)) U(y) z
  matrix,  ///< U matrix, result vector: (phi(x)-phi(y)) U(y) z
  dot,     ///< U vector, result scalar: (phi(x)-phi(y)) U(y) . z
  outer,   ///< U vector, result matrix: (phi(x)-phi(y)) U(y) (x) z
};

/// K_phi(U)(x) = sum_y G_xy (phi(y) - phi(x)) (.) U(y) with the gradient
/// weights G, so that D(phi g) = phi D g + K_phi(g) holds per entry.
Field apply_K(const NonlocalOperator& op, const Field& phi, const Field& U, KVariant variant);

/// Transpose of apply_gradient / apply_gradient_vec: given P on closure(Omega)
/// (vector for scalar fields, matrix for vector fields), returns
/// out(y) = sum_x G_xy^T P(x) on Omega_delta.
Field apply_gradient_adjoint(const NonlocalOperator& op, const Field& P);

}  // namespace nlgrad
