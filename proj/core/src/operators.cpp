#include "nlgrad/operators.hpp"

#include <cmath>
#include <string>

#include "nlgrad/errors.hpp"
#include "nlgrad/parallel.hpp"

namespace nlgrad {

namespace {

struct StencilPoint {
  std::array<int, 3> offset{};
  double r = 0.0;  // physical distance
};

// Lattice offsets with |o| h < delta, lexicographic (last axis fastest).
std::vector<StencilPoint> stencil_offsets(int n, double h, double delta) {
  const int reach = static_cast<int>(std::ceil(delta / h));
  const double limit = delta * (1.0 - 1e-12);
  std::vector<StencilPoint> out;
  std::array<int, 3> o{};
  const int span = 2 * reach + 1;
  long total = 1;
  for (int k = 0; k < n; ++k) total *= span;
  for (long lin = 0; lin < total; ++lin) {
    long rem = lin;
    for (int k = n - 1; k >= 0; --k) {
      o[k] = static_cast<int>(rem % span) - reach;
      rem /= span;
    }
    long r2 = 0;
    for (int k = 0; k < n; ++k) r2 += long(o[k]) * o[k];
    const double r = h * std::sqrt(double(r2));
    if (r < limit) out.push_back({o, r});
  }
  return out;
}

bool is_near(const StencilPoint& p, double h) { return p.r <= kNearFieldCells * h * (1.0 + 1e-12); }

// Fills CSR columns: every omega node gets the full stencil.
void fill_columns(const Grid& g, const std::vector<StencilPoint>& st, std::vector<std::size_t>& row_ptr,
                  std::vector<std::uint32_t>& cols) {
  const auto& rows = g.omega_nodes();
  const int n = g.dim();
  const std::size_t S = st.size();
  row_ptr.resize(rows.size() + 1);
  for (std::size_t k = 0; k <= rows.size(); ++k) row_ptr[k] = k * S;
  cols.resize(rows.size() * S);
  parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
    std::array<int, 3> idx{};
    for (std::size_t k = b; k < e; ++k) {
      const auto base = g.lattice_index(rows[k]);
      for (std::size_t j = 0; j < S; ++j) {
        for (int d = 0; d < n; ++d) idx[d] = base[d] + st[j].offset[d];
        const long node = g.find(std::span<const int>(idx.data(), n));
        if (node < 0) throw EvaluationError("operator assembly: stencil leaves the node set", long(rows[k]));
        cols[k * S + j] = static_cast<std::uint32_t>(node);
      }
    }
  });
}

void check_closure(const NonlocalOperator& op, const Field& f, const char* who) {
  if (f.grid() != op.grid()) throw PreconditionError(std::string(who) + ": field/grid mismatch");
  if (f.support() != Support::closure) throw PreconditionError(std::string(who) + ": input must live on Omega_delta");
}

void check_kind(const NonlocalOperator& op, OperatorKind kind, const char* who) {
  if (op.kind() != kind) throw PreconditionError(std::string(who) + ": wrong operator kind");
}

}  // namespace

NonlocalOperator NonlocalOperator::from_csr(OperatorKind kind, GridPtr grid, const KernelParams& kernel,
                                            std::vector<std::size_t> row_ptr, std::vector<std::uint32_t> cols,
                                            std::vector<double> weights, double near_mass) {
  if (!grid) throw PreconditionError("NonlocalOperator: null grid");
  NonlocalOperator op;
  op.kind_ = kind;
  op.grid_ = std::move(grid);
  op.kernel_ = kernel;
  op.width_ = kind == OperatorKind::gradient ? kernel.n : 1;
  op.near_mass_ = near_mass;
  if (row_ptr.size() != op.grid_->omega_nodes().size() + 1 || row_ptr.front() != 0 || row_ptr.back() != cols.size() ||
      weights.size() != cols.size() * std::size_t(op.width_))
    throw PreconditionError("NonlocalOperator: inconsistent CSR arrays");
  for (auto c : cols)
    if (c >= op.grid_->num_nodes()) throw PreconditionError("NonlocalOperator: column out of range");
  op.row_ptr_ = std::move(row_ptr);
  op.cols_ = std::move(cols);
  op.weights_ = std::move(weights);
  return op;
}

double affine_gradient_constant(const KernelParams& params) {
  return params.singular_exponent() / params.n * rho_l1_norm(params);
}

NonlocalOperator assemble_gradient(const GridPtr& grid, const KernelParams& params, double stabilization) {
  params.validate();
  if (!grid) throw PreconditionError("assemble_gradient: null grid");
  if (grid->dim() != params.n) throw ParameterError("assemble_gradient: kernel dimension does not match grid");
  if (std::abs(grid->delta() - params.delta) > 1e-12 * params.delta)
    throw ParameterError("assemble_gradient: kernel delta does not match grid horizon");
  if (!(stabilization >= 0.0)) throw ParameterError("assemble_gradient: stabilization must be nonnegative");

  const int n = params.n;
  const double h = grid->h();
  const double hn = grid->cell_volume();
  const double e = params.singular_exponent();
  const auto st = stencil_offsets(n, h, params.delta);

  double far_mass = 0.0;
  std::vector<double> w(st.size() * n, 0.0);
  std::size_t centre = 0;
  for (std::size_t j = 0; j < st.size(); ++j) {
    const auto& p = st[j];
    if (p.r == 0.0) centre = j;
    if (is_near(p, h)) continue;
    const double rv = rho(p.r, params);
    far_mass += hn * rv;
    const double f = e * hn * rv / (p.r * p.r);
    for (int d = 0; d < n; ++d) w[j * n + d] = f * p.offset[d] * h;
  }
  const double near_mass = rho_l1_norm(params) - far_mass;
  const double kappa = e / n * near_mass / (2.0 * h);
  // Third difference u(x+2e) - u(x-2e) - 2(u(x+e) - u(x-e)) per axis.
  const double tau = stabilization * e / n * rho_l1_norm(params) / h;
  for (std::size_t j = 0; j < st.size(); ++j) {
    int axis = -1, step = 0, nonzero = 0;
    for (int d = 0; d < n; ++d)
      if (st[j].offset[d] != 0) {
        ++nonzero;
        axis = d;
        step = st[j].offset[d];
      }
    if (nonzero != 1) continue;
    if (step == 1 || step == -1) w[j * n + axis] += step * (kappa + 2.0 * tau);
    if (step == 2 || step == -2) w[j * n + axis] -= step / 2 * tau;
  }
  for (int d = 0; d < n; ++d) {
    double sum = 0.0;
    for (std::size_t j = 0; j < st.size(); ++j)
      if (j != centre) sum += w[j * n + d];
    w[centre * n + d] = -sum;
  }

  NonlocalOperator op;
  op.kind_ = OperatorKind::gradient;
  op.grid_ = grid;
  op.kernel_ = params;
  op.width_ = n;
  op.near_mass_ = near_mass;
  fill_columns(*grid, st, op.row_ptr_, op.cols_);
  const std::size_t R = op.rows(), S = st.size();
  op.weights_.resize(R * S * n);
  parallel_for(R, [&](std::size_t b, std::size_t end) {
    for (std::size_t k = b; k < end; ++k) std::copy(w.begin(), w.end(), op.weights_.begin() + k * S * n);
  });
  return op;
}

NonlocalOperator assemble_convolution(const GridPtr& grid, const RadialProfile& q) {
  const KernelParams& params = q.params();
  if (!grid) throw PreconditionError("assemble_convolution: null grid");
  if (q.kind() != RadialProfile::Kind::q) throw PreconditionError("assemble_convolution: expected a Q profile");
  if (grid->dim() != params.n) throw ParameterError("assemble_convolution: kernel dimension does not match grid");
  if (std::abs(grid->delta() - params.delta) > 1e-12 * params.delta)
    throw ParameterError("assemble_convolution: profile delta does not match grid horizon");

  const double h = grid->h();
  const double hn = grid->cell_volume();
  const auto st = stencil_offsets(params.n, h, params.delta);
  std::vector<double> w(st.size(), 0.0);
  double far = 0.0;
  std::size_t centre = 0;
  for (std::size_t j = 0; j < st.size(); ++j) {
    if (st[j].r == 0.0) centre = j;
    if (is_near(st[j], h)) continue;
    w[j] = hn * q(st[j].r);
    far += w[j];
  }
  w[centre] = q.mass() - far;

  NonlocalOperator op;
  op.kind_ = OperatorKind::convolution;
  op.grid_ = grid;
  op.kernel_ = params;
  op.width_ = 1;
  op.near_mass_ = w[centre];
  fill_columns(*grid, st, op.row_ptr_, op.cols_);
  const std::size_t R = op.rows(), S = st.size();
  op.weights_.resize(R * S);
  for (std::size_t k = 0; k < R; ++k) std::copy(w.begin(), w.end(), op.weights_.begin() + k * S);
  return op;
}

Field apply_gradient(const NonlocalOperator& op, const Field& u) {
  check_kind(op, OperatorKind::gradient, "apply_gradient");
  check_closure(op, u, "apply_gradient");
  if (!u.is_scalar()) throw PreconditionError("apply_gradient: expected a scalar field");
  const int n = op.width();
  Field out = Field::vector(op.grid(), Support::omega);
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      double acc[3] = {0, 0, 0};
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const double v = u(row.cols[j]);
        for (int d = 0; d < n; ++d) acc[d] += row.weights[j * n + d] * v;
      }
      for (int d = 0; d < n; ++d) out(k, d) = acc[d];
    }
  });
  return out;
}

Field apply_gradient_vec(const NonlocalOperator& op, const Field& u) {
  check_kind(op, OperatorKind::gradient, "apply_gradient_vec");
  check_closure(op, u, "apply_gradient_vec");
  if (!u.is_vector()) throw PreconditionError("apply_gradient_vec: expected a vector field");
  const int n = op.width();
  Field out = Field::matrix(op.grid(), Support::omega);
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      double acc[9] = {};
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const auto v = u.at(row.cols[j]);
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < n; ++d) acc[i * n + d] += row.weights[j * n + d] * v[i];
      }
      std::copy_n(acc, n * n, out.at(k).data());
    }
  });
  return out;
}

Field apply_divergence(const NonlocalOperator& op, const Field& phi) {
  check_kind(op, OperatorKind::gradient, "apply_divergence");
  check_closure(op, phi, "apply_divergence");
  if (!phi.is_vector()) throw PreconditionError("apply_divergence: expected a vector field");
  const int n = op.width();
  Field out = Field::scalar(op.grid(), Support::omega);
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      // Accumulate per axis, then contract, so the result matches tr(D phi) bit for bit.
      double acc[3] = {0, 0, 0};
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const auto v = phi.at(row.cols[j]);
        for (int d = 0; d < n; ++d) acc[d] += row.weights[j * n + d] * v[d];
      }
      double s = 0.0;
      for (int d = 0; d < n; ++d) s += acc[d];
      out(k) = s;
    }
  });
  return out;
}

Field apply_divergence_mat(const NonlocalOperator& op, const Field& Phi) {
  check_kind(op, OperatorKind::gradient, "apply_divergence_mat");
  check_closure(op, Phi, "apply_divergence_mat");
  if (!Phi.is_matrix()) throw PreconditionError("apply_divergence_mat: expected a matrix field");
  const int n = op.width();
  Field out = Field::vector(op.grid(), Support::omega);
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      double acc[9] = {};
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const auto v = Phi.at(row.cols[j]);
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < n; ++d) acc[i * n + d] += row.weights[j * n + d] * v[i * n + d];
      }
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += acc[i * n + d];
        out(k, i) = s;
      }
    }
  });
  return out;
}

Field apply_convolution(const NonlocalOperator& op, const Field& u) {
  check_kind(op, OperatorKind::convolution, "apply_convolution");
  check_closure(op, u, "apply_convolution");
  const int c = u.components();
  Field out(op.grid(), Support::omega, u.rows(), u.cols());
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    std::vector<double> acc(c);
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const auto v = u.at(row.cols[j]);
        for (int i = 0; i < c; ++i) acc[i] += row.weights[j] * v[i];
      }
      std::copy(acc.begin(), acc.end(), out.at(k).begin());
    }
  });
  return out;
}

Field apply_K(const NonlocalOperator& op, const Field& phi, const Field& U, KVariant variant) {
  check_kind(op, OperatorKind::gradient, "apply_K");
  check_closure(op, phi, "apply_K");
  check_closure(op, U, "apply_K");
  if (!phi.is_scalar()) throw PreconditionError("apply_K: multiplier must be scalar");
  const int n = op.width();
  Field out;
  switch (variant) {
    case KVariant::scalar:
      if (!U.is_scalar()) throw PreconditionError("apply_K: scalar variant needs a scalar U");
      out = Field::vector(op.grid(), Support::omega);
      break;
    case KVariant::matrix:
      if (!U.is_matrix()) throw PreconditionError("apply_K: matrix variant needs a matrix U");
      out = Field::vector(op.grid(), Support::omega);
      break;
    case KVariant::dot:
      if (!U.is_vector()) throw PreconditionError("apply_K: dot variant needs a vector U");
      out = Field::scalar(op.grid(), Support::omega);
      break;
    case KVariant::outer:
      if (!U.is_vector()) throw PreconditionError("apply_K: outer variant needs a vector U");
      out = Field::matrix(op.grid(), Support::omega);
      break;
  }
  const auto& rows = op.grid()->omega_nodes();
  parallel_for(op.rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto row = op.row(k);
      const double px = phi(rows[k]);
      double acc[9] = {};
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const std::size_t y = row.cols[j];
        const double f = phi(y) - px;
        const double* z = row.weights.data() + j * n;
        const auto v = U.at(y);
        switch (variant) {
          case KVariant::scalar:
            for (int d = 0; d < n; ++d) acc[d] += z[d] * f * v[0];
            break;
          case KVariant::matrix:
            for (int i = 0; i < n; ++i)
              for (int d = 0; d < n; ++d) acc[i * n + d] += z[d] * f * v[i * n + d];
            break;
          case KVariant::dot:
            for (int d = 0; d < n; ++d) acc[d] += z[d] * f * v[d];
            break;
          case KVariant::outer:
            for (int i = 0; i < n; ++i)
              for (int d = 0; d < n; ++d) acc[i * n + d] += z[d] * f * v[i];
            break;
        }
      }
      auto dst = out.at(k);
      switch (variant) {
        case KVariant::scalar:
          std::copy_n(acc, n, dst.data());
          break;
        case KVariant::matrix:
          for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int d = 0; d < n; ++d) s += acc[i * n + d];
            dst[i] = s;
          }
          break;
        case KVariant::dot: {
          double s = 0.0;
          for (int d = 0; d < n; ++d) s += acc[d];
          dst[0] = s;
          break;
        }
        case KVariant::outer:
          std::copy_n(acc, n * n, dst.data());
          break;
      }
    }
  });
  return out;
}

Field apply_gradient_adjoint(const NonlocalOperator& op, const Field& P) {
  check_kind(op, OperatorKind::gradient, "apply_gradient_adjoint");
  if (P.grid() != op.grid() || P.support() != Support::omega)
    throw PreconditionError("apply_gradient_adjoint: input must live on closure(Omega)");
  const int n = op.width();
  int comps;
  if (P.is_vector())
    comps = 1;
  else if (P.is_matrix())
    comps = n;
  else
    throw PreconditionError("apply_gradient_adjoint: expected a vector or matrix field");
  Field out(op.grid(), Support::closure, comps, 1);
  auto& dst = out.data();
  for (std::size_t k = 0; k < op.rows(); ++k) {
    const auto row = op.row(k);
    const auto p = P.at(k);
    for (std::size_t j = 0; j < row.cols.size(); ++j) {
      const double* z = row.weights.data() + j * n;
      double* o = dst.data() + std::size_t(row.cols[j]) * comps;
      for (int i = 0; i < comps; ++i) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += z[d] * p[i * n + d];
        o[i] += s;
      }
    }
  }
  return out;
}

}  // namespace nlgrad
