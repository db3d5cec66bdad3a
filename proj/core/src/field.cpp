#include "nlgrad/field.hpp"

#include <cmath>

#include "nlgrad/errors.hpp"

namespace nlgrad {

namespace {

std::size_t support_size(const Grid& g, Support s) {
  switch (s) {
    case Support::closure: return g.num_nodes();
    case Support::omega: return g.omega_nodes().size();
    case Support::interior: return g.interior_nodes().size();
  }
  return 0;
}

int rank(Support s) {
  switch (s) {
    case Support::closure: return 0;
    case Support::omega: return 1;
    case Support::interior: return 2;
  }
  return 0;
}

}  // namespace

Field::Field(GridPtr grid, Support support, int rows, int cols, double fill)
    : grid_(std::move(grid)), support_(support), rows_(rows), cols_(cols) {
  if (!grid_) throw PreconditionError("Field: null grid");
  if (rows < 1 || cols < 1) throw PreconditionError("Field: shape must be positive");
  data_.assign(support_size(*grid_, support) * rows * cols, fill);
}

std::size_t Field::node(std::size_t slot) const {
  switch (support_) {
    case Support::closure: return slot;
    case Support::omega: return grid_->omega_nodes()[slot];
    case Support::interior: return grid_->interior_nodes()[slot];
  }
  return slot;
}

long Field::slot(std::size_t node) const {
  switch (support_) {
    case Support::closure: return static_cast<long>(node);
    case Support::omega: return grid_->omega_slot(node);
    case Support::interior: return grid_->interior_slot(node);
  }
  return -1;
}

Field Field::restrict_to(Support target) const {
  if (rank(target) < rank(support_)) throw PreconditionError("Field::restrict_to: target support is larger");
  Field out(grid_, target, rows_, cols_);
  const int c = components();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const long src = slot(out.node(k));
    std::copy_n(data_.data() + src * c, c, out.data_.data() + k * c);
  }
  return out;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Field::check_compatible(const Field& other) const {
  if (grid_ != other.grid_ || support_ != other.support_ || rows_ != other.rows_ || cols_ != other.cols_)
    throw PreconditionError("Field: incompatible operands");
}

Field& Field::operator+=(const Field& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Field& Field::operator*=(double a) {
  for (double& v : data_) v *= a;
  return *this;
}

Field pointwise_product(const Field& phi, const Field& U) {
  if (!phi.is_scalar()) throw PreconditionError("pointwise_product: multiplier must be scalar");
  if (phi.grid() != U.grid()) throw PreconditionError("pointwise_product: grid mismatch");
  Field out = U;
  const int c = U.components();
  for (std::size_t k = 0; k < U.size(); ++k) {
    const long ps = phi.slot(U.node(k));
    if (ps < 0) throw PreconditionError("pointwise_product: multiplier does not cover the field support");
    const double a = phi(static_cast<std::size_t>(ps));
    for (int j = 0; j < c; ++j) out(k, j) *= a;
  }
  return out;
}

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw ParameterError("lp_norm: p must be >= 1");
  const Grid& g = *f.grid();
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const std::size_t node = f.node(k);
    const double w = f.support() == Support::closure ? g.cell_volume() : g.omega_weight(node);
    double sq = 0.0;
    for (double v : f.at(k)) sq += v * v;
    acc += w * std::pow(std::sqrt(sq), p);
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace nlgrad
