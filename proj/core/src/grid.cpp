#include "nlgrad/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlgrad/errors.hpp"

namespace nlgrad {

namespace {

// Relative slack (in units of h) used to resolve lattice points that sit
// exactly on a classification surface.
constexpr double kTieSlack = 1e-9;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void BoxDomain::validate() const {
  const int n = dim();
  if (n != 2 && n != 3) throw ParameterError("box: dimension must be 2 or 3");
  if (static_cast<int>(upper.size()) != n) throw ParameterError("box: lower/upper dimension mismatch");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("box: delta must be positive");
  for (int k = 0; k < n; ++k) {
    if (!(lower[k] < upper[k])) throw ParameterError("box: lower must be < upper componentwise");
    if (!(upper[k] - lower[k] > 2.0 * delta))
      throw ParameterError("box: edge " + std::to_string(k) +
                           " is not longer than 2*delta; Omega_{-delta} would be empty");
  }
}

BoxDomain BoxDomain::unit(int n, double delta) {
  return BoxDomain{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), delta};
}

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::interior: return "interior";
    case NodeClass::core: return "core";
    case NodeClass::collar: return "collar";
  }
  return "?";
}

std::shared_ptr<const Grid> Grid::build(const BoxDomain& domain, double h) {
  domain.validate();
  const double delta = domain.delta;
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("grid: h must be positive");
  if (h > delta / 4.0 * (1.0 + 1e-12))
    throw ParameterError("grid: h must satisfy h <= delta/4 (got h = " + std::to_string(h) +
                         ", delta = " + std::to_string(delta) + ")");

  std::shared_ptr<Grid> g(new Grid());
  g->domain_ = domain;
  g->h_ = h;
  const int n = domain.dim();
  g->cell_volume_ = std::pow(h, n);

  const double slack = kTieSlack * h;
  for (int k = 0; k < 3; ++k) {
    if (k < n) {
      g->lo_[k] = static_cast<int>(std::floor(-delta / h)) - 1;
      const int hi = static_cast<int>(std::ceil((domain.upper[k] - domain.lower[k] + delta) / h)) + 1;
      g->extent_[k] = hi - g->lo_[k] + 1;
    } else {
      g->lo_[k] = 0;
      g->extent_[k] = 1;
    }
  }
  const std::size_t box = static_cast<std::size_t>(g->extent_[0]) * g->extent_[1] * g->extent_[2];
  g->lookup_.assign(box, -1);

  std::array<int, 3> idx{};
  std::array<double, 3> x{};
  for (std::size_t flat = 0; flat < box; ++flat) {
    std::size_t rem = flat;
    for (int k = 2; k >= 0; --k) {
      idx[k] = g->lo_[k] + static_cast<int>(rem % g->extent_[k]);
      rem /= g->extent_[k];
    }
    double dist2 = 0.0;
    bool inside_open = true;
    bool inside_closed = true;
    double margin = std::numeric_limits<double>::infinity();
    double weight = g->cell_volume_;
    for (int k = 0; k < n; ++k) {
      x[k] = domain.lower[k] + idx[k] * h;
      const double below = domain.lower[k] - x[k];
      const double above = x[k] - domain.upper[k];
      const double out = std::max({below, above, 0.0});
      dist2 += out * out;
      const bool on_face = std::abs(below) <= slack || std::abs(above) <= slack;
      if (on_face) {
        inside_open = false;
        weight *= 0.5;
      } else if (out > 0.0) {
        inside_open = false;
        inside_closed = false;
      }
      margin = std::min(margin, std::min(-below, -above));
    }
    const double dist = std::sqrt(dist2);
    if (!inside_closed && !(dist < delta - 0.5 * slack)) continue;

    NodeClass cls;
    if (inside_open && margin > delta + slack) {
      cls = NodeClass::interior;
    } else if (inside_closed) {
      cls = NodeClass::core;
    } else {
      cls = NodeClass::collar;
      weight = 0.0;
    }
    const std::size_t node = g->classes_.size();
    g->lookup_[flat] = static_cast<long>(node);
    g->classes_.push_back(cls);
    g->omega_weight_.push_back(weight);
    for (int k = 0; k < n; ++k) g->lattice_.push_back(idx[k]);
  }

  const std::size_t N = g->classes_.size();
  g->omega_slot_.assign(N, -1);
  g->interior_slot_.assign(N, -1);
  for (std::size_t i = 0; i < N; ++i) {
    if (g->classes_[i] != NodeClass::collar) {
      g->omega_slot_[i] = static_cast<long>(g->omega_nodes_.size());
      g->omega_nodes_.push_back(i);
    }
    if (g->classes_[i] == NodeClass::interior) {
      g->interior_slot_[i] = static_cast<long>(g->interior_nodes_.size());
      g->interior_nodes_.push_back(i);
    }
  }
  if (g->interior_nodes_.empty())
    throw ParameterError("grid: no lattice point lies in Omega_{-delta}; refine h or enlarge the box");
  return g;
}

std::span<const int> Grid::lattice_index(std::size_t node) const {
  return {lattice_.data() + node * dim(), static_cast<std::size_t>(dim())};
}

Vec Grid::position(std::size_t node) const {
  Vec x(dim());
  position(node, std::span<double>(x.data(), dim()));
  return x;
}

void Grid::position(std::size_t node, std::span<double> out) const {
  const int* li = lattice_.data() + node * dim();
  for (int k = 0; k < dim(); ++k) out[k] = domain_.lower[k] + li[k] * h_;
}

long Grid::find(std::span<const int> lattice) const {
  std::size_t flat = 0;
  for (int k = 0; k < 3; ++k) {
    const int v = k < dim() ? lattice[k] - lo_[k] : 0;
    if (v < 0 || v >= extent_[k]) return -1;
    flat = flat * extent_[k] + v;
  }
  return lookup_[flat];
}

double Grid::distance_to_omega(std::size_t node) const {
  double d2 = 0.0;
  const int* li = lattice_.data() + node * dim();
  for (int k = 0; k < dim(); ++k) {
    const double x = domain_.lower[k] + li[k] * h_;
    const double out = std::max({domain_.lower[k] - x, x - domain_.upper[k], 0.0});
    d2 += out * out;
  }
  return std::sqrt(d2);
}

std::size_t Grid::count(NodeClass c) const {
  return static_cast<std::size_t>(std::count(classes_.begin(), classes_.end(), c));
}

std::uint64_t Grid::hash() const {
  std::uint64_t hv = 14695981039346656037ULL;
  const int n = dim();
  hv = fnv1a(hv, &n, sizeof n);
  hv = fnv1a(hv, domain_.lower.data(), sizeof(double) * n);
  hv = fnv1a(hv, domain_.upper.data(), sizeof(double) * n);
  hv = fnv1a(hv, &domain_.delta, sizeof(double));
  hv = fnv1a(hv, &h_, sizeof(double));
  return hv;
}

}  // namespace nlgrad
