#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nlgrad {

/// Small dense vector/matrix types with at most three rows/columns.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Open box Omega = (lower, upper) together with the horizon defining
/// Omega_delta = Omega + B(0, delta).
struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;
  double delta = 0.25;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;

  static BoxDomain unit(int n, double delta);
};

/// INTERIOR: in Omega_{-delta}. CORE: in closure(Omega) but not Omega_{-delta}.
/// COLLAR: in Omega_delta outside closure(Omega).
enum class NodeClass : std::uint8_t { interior, core, collar };

std::string_view to_string(NodeClass c);

/// Uniform lattice covering Omega_delta.
///
/// Nodes are the points lower + i*h (i integer) whose distance to Omega is
/// below delta, enumerated lexicographically by lattice index (last axis
/// fastest). Nodes on the boundary of Omega are CORE; they carry the
/// fractional quadrature weight of the part of their cell inside Omega.
class Grid {
 public:
  static std::shared_ptr<const Grid> build(const BoxDomain& domain, double h);

  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  double h() const { return h_; }
  double delta() const { return domain_.delta; }
  double cell_volume() const { return cell_volume_; }

  std::size_t num_nodes() const { return classes_.size(); }
  NodeClass node_class(std::size_t node) const { return classes_[node]; }
  std::span<const int> lattice_index(std::size_t node) const;
  Vec position(std::size_t node) const;
  void position(std::size_t node, std::span<double> out) const;

  /// Node index at the given lattice index, or -1.
  long find(std::span<const int> lattice) const;

  /// Nodes in closure(Omega) (INTERIOR and CORE), in node order.
  const std::vector<std::size_t>& omega_nodes() const { return omega_nodes_; }
  /// INTERIOR nodes, in node order.
  const std::vector<std::size_t>& interior_nodes() const { return interior_nodes_; }
  /// Position of a node in omega_nodes(), or -1.
  long omega_slot(std::size_t node) const { return omega_slot_[node]; }
  long interior_slot(std::size_t node) const { return interior_slot_[node]; }

  /// Quadrature weight of a node's cell inside Omega (0 for COLLAR nodes).
  double omega_weight(std::size_t node) const { return omega_weight_[node]; }
  /// Fraction of a node's cell lying in the nonlocal boundary Omega_delta \ Omega.
  double collar_fraction(std::size_t node) const { return 1.0 - omega_weight_[node] / cell_volume_; }

  /// Distance from a node to closure(Omega).
  double distance_to_omega(std::size_t node) const;

  std::size_t count(NodeClass c) const;

  /// Structural hash of (domain, h); stable across runs.
  std::uint64_t hash() const;

 private:
  Grid() = default;

  BoxDomain domain_;
  double h_ = 0.0;
  double cell_volume_ = 0.0;
  std::array<int, 3> lo_{};     // smallest lattice index per axis
  std::array<int, 3> extent_{}; // lattice box size per axis
  std::vector<long> lookup_;    // dense lattice box -> node
  std::vector<int> lattice_;    // dim ints per node
  std::vector<NodeClass> classes_;
  std::vector<double> omega_weight_;
  std::vector<std::size_t> omega_nodes_;
  std::vector<std::size_t> interior_nodes_;
  std::vector<long> omega_slot_;
  std::vector<long> interior_slot_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace nlgrad
