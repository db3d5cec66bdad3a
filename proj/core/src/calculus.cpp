#include "nlgrad/calculus.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlgrad/energy.hpp"
#include "nlgrad/errors.hpp"

namespace nlgrad {

double relative(double abs_residual, double scale) {
  if (scale == 0.0) return abs_residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return abs_residual / scale;
}

namespace {

IdentityReport make_report(std::string name, const NonlocalOperator& G) {
  IdentityReport r;
  r.name = std::move(name);
  r.h = G.grid()->h();
  r.kernel = G.kernel();
  return r;
}

// Fills abs/rel from two fields of equal shape: max entry difference over
// max entry magnitude.
void compare_fields(IdentityReport& r, const Field& lhs, const Field& rhs) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < lhs.data().size(); ++i) {
    diff = std::max(diff, std::abs(lhs.data()[i] - rhs.data()[i]));
    scale = std::max({scale, std::abs(lhs.data()[i]), std::abs(rhs.data()[i])});
  }
  r.lhs = {lhs.max_abs()};
  r.rhs = {rhs.max_abs()};
  r.abs_residual = diff;
  r.rel_residual = relative(diff, scale);
}

// phi(x) * F(x) for F on closure(Omega) and phi on Omega_delta.
Field scale_rows(const Field& phi, const Field& F) {
  Field out = F;
  const int c = F.components();
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double a = phi(F.node(k));
    for (int j = 0; j < c; ++j) out(k, j) *= a;
  }
  return out;
}

void require_scalar_closure(const Field& f, const GridPtr& grid, const char* who) {
  if (f.grid() != grid || f.support() != Support::closure || !f.is_scalar())
    throw PreconditionError(std::string(who) + ": expected a scalar field on Omega_delta");
}

}  // namespace

IdentityReport residual_constant_annihilation(const NonlocalOperator& G) {
  auto r = make_report("constant_annihilation", G);
  const Field one = Field::scalar(G.grid(), Support::closure, 1.0);
  const Field D = apply_gradient(G, one);
  double row_scale = 0.0;
  for (std::size_t k = 0; k < G.rows(); ++k) {
    double s = 0.0;
    for (double w : G.row(k).weights) s += std::abs(w);
    row_scale = std::max(row_scale, s);
  }
  r.lhs = {D.max_abs()};
  r.rhs = {0.0};
  r.abs_residual = D.max_abs();
  r.rel_residual = relative(r.abs_residual, row_scale);
  return r;
}

IdentityReport residual_duality(const NonlocalOperator& G, const Field& u, const Field& phi) {
  auto r = make_report("duality", G);
  const GridPtr& grid = G.grid();
  require_scalar_closure(u, grid, "residual_duality");
  if (phi.grid() != grid || phi.support() != Support::closure || !phi.is_vector())
    throw PreconditionError("residual_duality: phi must be a vector field on Omega_delta");
  for (std::size_t node = 0; node < grid->num_nodes(); ++node)
    if (grid->collar_fraction(node) > 0.0)
      for (double v : phi.at(node))
        if (v != 0.0) throw PreconditionError("residual_duality: phi must vanish outside Omega");

  const Field Du = apply_gradient(G, u);
  const Field div = apply_divergence(G, phi);
  Field u_collar = u;
  for (std::size_t node = 0; node < grid->num_nodes(); ++node) u_collar(node) *= grid->collar_fraction(node);
  const Field Dc = apply_gradient(G, u_collar);

  const int n = grid->dim();
  const auto& nodes = grid->omega_nodes();
  double A = 0.0, B = 0.0, C = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double w = grid->omega_weight(nodes[k]);
    const auto p = phi.at(nodes[k]);
    double a = 0.0, c = 0.0;
    for (int d = 0; d < n; ++d) {
      a += p[d] * Du(k, d);
      c += p[d] * Dc(k, d);
    }
    A += w * a;
    C += w * c;
    B -= w * u(nodes[k]) * div(k);
  }
  r.lhs = {A};
  r.rhs = {B, C};
  r.abs_residual = std::abs(A - B - C);
  r.rel_residual = relative(r.abs_residual, std::max({std::abs(A), std::abs(B), std::abs(C)}));
  return r;
}

IdentityReport residual_product_scalar(const NonlocalOperator& G, const Field& phi, const Field& g) {
  auto r = make_report("product_scalar", G);
  require_scalar_closure(phi, G.grid(), "residual_product_scalar");
  require_scalar_closure(g, G.grid(), "residual_product_scalar");
  const Field lhs = apply_gradient(G, pointwise_product(phi, g));
  const Field rhs = scale_rows(phi, apply_gradient(G, g)) + apply_K(G, phi, g, KVariant::scalar);
  compare_fields(r, lhs, rhs);
  return r;
}

IdentityReport residual_product_vector(const NonlocalOperator& G, const Field& phi, const Field& g) {
  auto r = make_report("product_vector", G);
  require_scalar_closure(phi, G.grid(), "residual_product_vector");
  const Field lhs = apply_gradient_vec(G, pointwise_product(phi, g));
  const Field rhs = scale_rows(phi, apply_gradient_vec(G, g)) + apply_K(G, phi, g, KVariant::outer);
  compare_fields(r, lhs, rhs);
  return r;
}

IdentityReport residual_product_divergence(const NonlocalOperator& G, const Field& phi, const Field& Phi) {
  auto r = make_report("product_divergence", G);
  require_scalar_closure(phi, G.grid(), "residual_product_divergence");
  const Field prod = pointwise_product(phi, Phi);
  if (Phi.is_matrix()) {
    r.name = "product_divergence_matrix";
    const Field lhs = apply_divergence_mat(G, prod);
    const Field rhs = scale_rows(phi, apply_divergence_mat(G, Phi)) + apply_K(G, phi, Phi, KVariant::matrix);
    compare_fields(r, lhs, rhs);
  } else {
    const Field lhs = apply_divergence(G, prod);
    const Field rhs = scale_rows(phi, apply_divergence(G, Phi)) + apply_K(G, phi, Phi, KVariant::dot);
    compare_fields(r, lhs, rhs);
  }
  return r;
}

IdentityReport residual_trace(const NonlocalOperator& G, const Field& phi) {
  auto r = make_report("trace", G);
  const Field D = apply_gradient_vec(G, phi);
  const Field div = apply_divergence(G, phi);
  Field tr = Field::scalar(G.grid(), Support::omega);
  for (std::size_t k = 0; k < D.size(); ++k) tr(k) = D.map(k).trace();
  compare_fields(r, tr, div);
  return r;
}

IdentityReport residual_K_trace(const NonlocalOperator& G, const Field& phi, const Field& U) {
  auto r = make_report("K_trace", G);
  const Field outer = apply_K(G, phi, U, KVariant::outer);
  const Field dot = apply_K(G, phi, U, KVariant::dot);
  Field tr = Field::scalar(G.grid(), Support::omega);
  for (std::size_t k = 0; k < outer.size(); ++k) tr(k) = outer.map(k).trace();
  compare_fields(r, tr, dot);
  return r;
}

IdentityReport residual_gradient_equivalence(const NonlocalOperator& G, const NonlocalOperator& Q, const Field& u) {
  auto r = make_report("gradient_equivalence", G);
  const GridPtr& grid = G.grid();
  require_scalar_closure(u, grid, "residual_gradient_equivalence");
  if (Q.grid() != grid) throw PreconditionError("residual_gradient_equivalence: operators on different grids");
  const double h = grid->h();
  const double outer = grid->delta() - h * (1.0 + 1e-9);
  for (std::size_t node = 0; node < grid->num_nodes(); ++node)
    if (grid->distance_to_omega(node) > outer && u(node) != 0.0)
      throw PreconditionError("residual_gradient_equivalence: u must vanish on the outermost collar layer");

  const Field Du = apply_gradient(G, u);
  const Field Qu = apply_convolution(Q, u);
  const int n = grid->dim();
  double dev = 0.0, scale = 0.0;
  std::array<int, 3> idx{};
  for (std::size_t node : grid->interior_nodes()) {
    const long k = grid->omega_slot(node);
    const auto li = grid->lattice_index(node);
    double norm2 = 0.0;
    for (int d = 0; d < n; ++d) {
      std::copy(li.begin(), li.end(), idx.begin());
      idx[d] += 1;
      const long plus = grid->find(std::span<const int>(idx.data(), n));
      idx[d] -= 2;
      const long minus = grid->find(std::span<const int>(idx.data(), n));
      const double fd = (Qu(grid->omega_slot(plus)) - Qu(grid->omega_slot(minus))) / (2.0 * h);
      dev = std::max(dev, std::abs(Du(k, d) - fd));
      norm2 += Du(k, d) * Du(k, d);
    }
    scale = std::max(scale, std::sqrt(norm2));
  }
  r.lhs = {scale};
  r.rhs = {};
  r.abs_residual = dev;
  r.rel_residual = relative(dev, scale);
  return r;
}

PiolaReport residual_piola(const NonlocalOperator& G, const Field& u, const std::vector<ScalarFunction>& battery) {
  PiolaReport out{make_report("piola_pointwise", G), make_report("piola_weak", G)};
  const GridPtr& grid = G.grid();
  const int n = grid->dim();
  const double h = grid->h();
  const Field F = apply_gradient_vec(G, u);
  Field C = Field::matrix(grid, Support::omega);
  for (std::size_t k = 0; k < F.size(); ++k) C.map(k) = cof(Mat(F.map(k)));

  double worst = 0.0, terms = 0.0;
  std::array<int, 3> idx{};
  for (std::size_t node : grid->interior_nodes()) {
    const auto li = grid->lattice_index(node);
    double div[3] = {0, 0, 0}, mag = 0.0;
    for (int d = 0; d < n; ++d) {
      std::copy(li.begin(), li.end(), idx.begin());
      idx[d] += 1;
      const long plus = grid->omega_slot(grid->find(std::span<const int>(idx.data(), n)));
      idx[d] -= 2;
      const long minus = grid->omega_slot(grid->find(std::span<const int>(idx.data(), n)));
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < n; ++c) {
          const double t = (C.map(plus)(i, c) - C.map(minus)(i, c)) / (2.0 * h);
          if (c == d) div[i] += t;
          mag += t * t;
        }
      }
    }
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) nrm += div[i] * div[i];
    worst = std::max(worst, std::sqrt(nrm));
    terms = std::max(terms, std::sqrt(mag));
  }
  out.pointwise.lhs = {worst};
  out.pointwise.rhs = {0.0};
  out.pointwise.abs_residual = worst;
  out.pointwise.rel_residual = relative(worst, terms);

  const auto& nodes = grid->omega_nodes();
  Vec x(n), grad(n);
  for (const auto& phi : battery) {
    Vec v = Vec::Zero(n);
    double scale = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double w = grid->omega_weight(nodes[k]);
      if (w == 0.0) continue;
      grid->position(nodes[k], std::span<double>(x.data(), n));
      phi.gradient(std::span<const double>(x.data(), n), std::span<double>(grad.data(), n));
      const Mat Ck = C.map(k);
      v += w * (Ck * grad);
      scale += w * Ck.norm() * grad.norm();
    }
    const double rel = relative(v.norm(), scale);
    if (rel >= out.weak.rel_residual) {
      out.weak.lhs = std::vector<double>(v.data(), v.data() + n);
      out.weak.rhs = {scale};
      out.weak.abs_residual = v.norm();
      out.weak.rel_residual = rel;
    }
  }
  return out;
}

IdentityReport residual_det_ibp(const NonlocalOperator& G, const NonlocalOperator& Q, const Field& u,
                                const ScalarFunction& phi) {
  auto r = make_report("det_ibp", G);
  const GridPtr& grid = G.grid();
  const int n = grid->dim();
  const Field F = apply_gradient_vec(G, u);
  const Field Qu = apply_convolution(Q, u);
  const auto& nodes = grid->omega_nodes();
  double L = 0.0, R = 0.0;
  Vec x(n), grad(n);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double w = grid->omega_weight(nodes[k]);
    if (w == 0.0) continue;
    grid->position(nodes[k], std::span<double>(x.data(), n));
    const double p = phi.value(x);
    phi.gradient(std::span<const double>(x.data(), n), std::span<double>(grad.data(), n));
    const Mat Fk = F.map(k);
    const Vec qk = Qu.map(k);
    L += w * det(Fk) * p;
    R -= w * qk.dot(cof(Fk) * grad) / n;
  }
  r.lhs = {L};
  r.rhs = {R};
  r.abs_residual = std::abs(L - R);
  r.rel_residual = relative(r.abs_residual, std::max(std::abs(L), std::abs(R)));
  return r;
}

std::vector<IdentityReport> weak_continuity_probe(const NonlocalOperator& G, const VectorFunction& u,
                                                  const std::vector<int>& schedule, const ScalarFunction& phi,
                                                  const Vec& direction, double amplitude) {
  const GridPtr& grid = G.grid();
  const int n = grid->dim();
  if (u.dim() != n || direction.size() != n) throw PreconditionError("weak_continuity_probe: dimension mismatch");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1]) throw PreconditionError("weak_continuity_probe: schedule must increase");

  const auto& nodes = grid->omega_nodes();
  const Field phis = sample_function(grid, phi, Support::omega);
  const Field F0 = apply_gradient_vec(G, sample_function(grid, u));

  // Minor blocks: entries [0, n^2), cofactors [n^2, 2n^2), det.
  const int nn = n * n;
  auto minor_row = [&](const Mat& F) {
    std::vector<double> m(2 * nn + 1);
    const Mat C = cof(F);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        m[i * n + j] = F(i, j);
        m[nn + i * n + j] = C(i, j);
      }
    m[2 * nn] = det(F);
    return m;
  };

  std::vector<double> base_scale(3, 0.0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double w = grid->omega_weight(nodes[k]) * std::abs(phis(k));
    const auto m = minor_row(F0.map(k));
    double e = 0.0, c = 0.0;
    for (int i = 0; i < nn; ++i) {
      e += m[i] * m[i];
      c += m[nn + i] * m[nn + i];
    }
    base_scale[0] += w * std::sqrt(e);
    base_scale[1] += w * std::sqrt(c);
    base_scale[2] += w * std::abs(m[2 * nn]);
  }

  std::vector<IdentityReport> out;
  for (int j : schedule) {
    VectorFunction uj = u;
    for (int i = 0; i < n; ++i)
      if (direction(i) != 0.0)
        uj[i] += ScalarFunction(term::Oscillation{0, double(j), 0.0, amplitude * direction(i) / j});
    const Field Fj = apply_gradient_vec(G, sample_function(grid, uj));
    std::vector<double> gap(2 * nn + 1, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double w = grid->omega_weight(nodes[k]) * phis(k);
      if (w == 0.0) continue;
      const auto a = minor_row(F0.map(k));
      const auto b = minor_row(Fj.map(k));
      for (int i = 0; i <= 2 * nn; ++i) gap[i] += w * (b[i] - a[i]);
    }
    const bool reliable = j * grid->h() <= std::numbers::pi;
    const std::pair<int, int> blocks[3] = {{0, nn}, {nn, 2 * nn}, {2 * nn, 2 * nn + 1}};
    const char* names[3] = {"wc_entries", "wc_cof", "wc_det"};
    for (int b = 0; b < 3; ++b) {
      auto r = make_report(names[b], G);
      r.frequency = j;
      r.reliable = reliable;
      double s = 0.0;
      for (int i = blocks[b].first; i < blocks[b].second; ++i) {
        r.lhs.push_back(gap[i]);
        s += gap[i] * gap[i];
      }
      r.rhs = {base_scale[b]};
      r.abs_residual = std::sqrt(s);
      r.rel_residual = relative(r.abs_residual, base_scale[b]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

double hspd_norm(const NonlocalOperator& G, const Field& u, double p) {
  if (!(p >= 1.0)) throw ParameterError("hspd_norm: p must be >= 1");
  if (u.grid() != G.grid() || u.support() != Support::closure)
    throw PreconditionError("hspd_norm: expected a field on Omega_delta");
  Field D;
  if (u.is_scalar())
    D = apply_gradient(G, u);
  else if (u.is_vector())
    D = apply_gradient_vec(G, u);
  else
    throw PreconditionError("hspd_norm: expected a scalar or vector field");
  const double a = std::pow(lp_norm(u, p), p);
  const double b = std::pow(lp_norm(D, p), p);
  return std::pow(a + b, 1.0 / p);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  const double m = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / m;
    my += std::log(y[i]) / m;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace nlgrad
