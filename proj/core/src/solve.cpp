#include "nlgrad/solve.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "nlgrad/errors.hpp"

namespace nlgrad {

Field DirichletProblem::datum_field() const { return sample_function(grid(), datum); }

void DirichletProblem::validate() const {
  if (!op) throw PreconditionError("DirichletProblem: missing operator");
  if (op->kind() != OperatorKind::gradient) throw PreconditionError("DirichletProblem: expected a gradient operator");
  if (datum.dim() != grid()->dim()) throw ParameterError("DirichletProblem: datum dimension does not match grid");
  energy.validate(grid()->dim());
}

namespace {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

struct Point {
  double f = std::numeric_limits<double>::infinity();
  Vector g;
  bool finite() const { return std::isfinite(f); }
};

// Energy and free-node gradient as functions of the free values.
class Objective {
 public:
  Objective(const DirichletProblem& p, Field base) : p_(p), state_(std::move(base)) {
    const auto& nodes = p_.grid()->interior_nodes();
    n_ = p_.grid()->dim();
    size_ = nodes.size() * n_;
  }

  std::size_t size() const { return size_; }

  Vector free_values() const {
    Vector x(size_);
    const auto& nodes = p_.grid()->interior_nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (int i = 0; i < n_; ++i) x[k * n_ + i] = state_(nodes[k], i);
    return x;
  }

  const Field& state_at(const Vector& x) {
    const auto& nodes = p_.grid()->interior_nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k)
      for (int i = 0; i < n_; ++i) state_(nodes[k], i) = x[k * n_ + i];
    return state_;
  }

  Point operator()(const Vector& x) {
    Point pt;
    const Field& u = state_at(x);
    try {
      pt.f = eval_energy(u, *p_.op, p_.energy);
      pt.g = eval_energy_gradient(u, *p_.op, p_.energy).data();
    } catch (const EvaluationError&) {
      pt.f = std::numeric_limits<double>::infinity();
      pt.g.clear();
    }
    return pt;
  }

 private:
  const DirichletProblem& p_;
  Field state_;
  int n_ = 0;
  std::size_t size_ = 0;
};

// sum_d G_d^T diag(omega) G_d restricted to the free (INTERIOR) columns.
Eigen::SparseMatrix<double> free_normal_operator(const NonlocalOperator& G) {
  const Grid& grid = *G.grid();
  const int n = grid.dim();
  const std::size_t rows = G.rows();
  const std::size_t m = grid.interior_nodes().size();
  Eigen::SparseMatrix<double> N(m, m);
  for (int d = 0; d < n; ++d) {
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t k = 0; k < rows; ++k) {
      const auto row = G.row(k);
      const double sw = std::sqrt(grid.omega_weight(grid.omega_nodes()[k]));
      for (std::size_t j = 0; j < row.cols.size(); ++j) {
        const long c = grid.interior_slot(row.cols[j]);
        if (c >= 0) t.emplace_back(int(k), int(c), sw * row.weights[j * n + d]);
      }
    }
    Eigen::SparseMatrix<double> Gd(rows, m);
    Gd.setFromTriplets(t.begin(), t.end());
    N += Eigen::SparseMatrix<double>(Gd.transpose() * Gd);
  }
  return N;
}

struct LineResult {
  double alpha = 0.0;
  Point point;
  bool wolfe = false;
};

// Strong Wolfe search along d (Nocedal and Wright, Algorithms 3.5/3.6). When
// the curvature condition cannot be met, the best point with sufficient
// decrease is returned with wolfe = false.
std::optional<LineResult> line_search(Objective& obj, const Vector& x, const Point& p0, const Vector& d,
                                      double alpha0, const OptimizerConfig& cfg) {
  const double dphi0 = dot(p0.g, d);
  Vector trial(x.size());
  auto eval = [&](double a) {
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + a * d[i];
    return obj(trial);
  };
  auto armijo = [&](double a, const Point& p) { return p.finite() && p.f <= p0.f + cfg.c1 * a * dphi0 && p.f <= p0.f; };

  std::optional<LineResult> best;
  auto remember = [&](double a, const Point& p) {
    if (armijo(a, p) && (!best || p.f < best->point.f)) best = LineResult{a, p, false};
  };

  int evals = 0;
  auto zoom = [&](double lo, Point plo, double hi, Point phi) -> std::optional<LineResult> {
    double dlo = plo.g.empty() ? dphi0 : dot(plo.g, d);
    while (evals < cfg.max_line_search) {
      double a = 0.5 * (lo + hi);
      if (phi.finite()) {
        // Quadratic through (lo, f_lo, d_lo) and (hi, f_hi), safeguarded.
        const double span = hi - lo;
        const double denom = 2.0 * (phi.f - plo.f - dlo * span);
        if (denom > 0.0) {
          const double cand = lo - dlo * span * span / denom;
          const double a_min = std::min(lo, hi) + 0.1 * std::abs(span);
          const double a_max = std::max(lo, hi) - 0.1 * std::abs(span);
          if (cand >= a_min && cand <= a_max) a = cand;
        }
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(std::abs(lo), std::abs(hi))) break;
      Point p = eval(a);
      ++evals;
      remember(a, p);
      if (!armijo(a, p) || p.f >= plo.f) {
        hi = a;
        phi = std::move(p);
        continue;
      }
      const double da = dot(p.g, d);
      if (std::abs(da) <= -cfg.c2 * dphi0) return LineResult{a, std::move(p), true};
      if (da * (hi - lo) >= 0.0) {
        hi = lo;
        phi = plo;
      }
      lo = a;
      dlo = da;
      plo = std::move(p);
    }
    return best;
  };

  double prev = 0.0;
  Point pprev = p0;
  double a = alpha0;
  while (evals < cfg.max_line_search) {
    Point p = eval(a);
    ++evals;
    remember(a, p);
    if (!armijo(a, p) || (prev > 0.0 && p.f >= pprev.f)) return zoom(prev, pprev, a, std::move(p));
    const double da = dot(p.g, d);
    if (std::abs(da) <= -cfg.c2 * dphi0) return LineResult{a, std::move(p), true};
    if (da >= 0.0) return zoom(a, p, prev, pprev);
    prev = a;
    pprev = std::move(p);
    a *= 4.0;
  }
  return best;
}

}  // namespace

SolveReport minimize(const DirichletProblem& problem, const OptimizerConfig& cfg, const Field* initial) {
  problem.validate();
  if (cfg.max_iter < 0 || cfg.memory < 1 || !(cfg.grad_tol > 0.0) || !(cfg.c1 > 0.0 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0))
    throw ParameterError("minimize: invalid optimizer configuration");
  const auto t0 = std::chrono::steady_clock::now();
  const GridPtr& grid = problem.grid();
  Field base = problem.datum_field();
  if (initial) {
    if (initial->grid() != grid || initial->support() != Support::closure || !initial->is_vector())
      throw PreconditionError("minimize: initial state must be a vector field on Omega_delta");
    for (std::size_t node = 0; node < grid->num_nodes(); ++node) {
      if (grid->node_class(node) == NodeClass::interior) continue;
      for (int i = 0; i < grid->dim(); ++i)
        if ((*initial)(node, i) != base(node, i))
          throw PreconditionError("minimize: initial state differs from the datum off the free nodes");
    }
    base = *initial;
  }

  Objective obj(problem, base);
  Vector x = obj.free_values();
  Point cur = obj(x);
  if (!cur.finite()) throw EvaluationError("minimize: initial energy is not finite");

  SolveReport rep;
  rep.energy_history.push_back(cur.f);
  std::deque<std::pair<Vector, Vector>> mem;  // (s, y)
  Vector d(x.size());

  // Fixed preconditioner: the normal operator of the gradient on the free
  // nodes, applied per component. It is the Hessian of sum omega |Du|^2 / 2.
  std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> P;
  if (cfg.precondition && !x.empty()) {
    P.emplace(free_normal_operator(*problem.op));
    if (P->info() != Eigen::Success) P.reset();
  }
  const int ncomp = grid->dim();
  const std::size_t nfree = grid->interior_nodes().size();
  auto precondition = [&](Vector& v) {
    if (!P) return;
    Eigen::VectorXd c(nfree);
    for (int i = 0; i < ncomp; ++i) {
      for (std::size_t k = 0; k < nfree; ++k) c[k] = v[k * ncomp + i];
      c = P->solve(c);
      for (std::size_t k = 0; k < nfree; ++k) v[k * ncomp + i] = c[k];
    }
  };

  while (true) {
    rep.grad_norm = norm(cur.g);
    if (rep.grad_norm <= cfg.grad_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_iter) break;

    // Two-loop recursion.
    Vector q = cur.g;
    std::vector<double> alphas(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
      const auto& [s, y] = mem[i];
      alphas[i] = dot(s, q) / dot(y, s);
      for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alphas[i] * y[k];
    }
    double gamma = 1.0;
    if (!mem.empty()) {
      Vector Py = mem.back().second;
      precondition(Py);
      gamma = dot(mem.back().first, mem.back().second) / dot(mem.back().second, Py);
    }
    precondition(q);
    for (double& v : q) v *= gamma;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      const double beta = dot(y, q) / dot(y, s);
      for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alphas[i] - beta) * s[k];
    }
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = -q[k];

    std::optional<LineResult> ls;
    if ((P || !mem.empty()) && dot(d, cur.g) < 0.0) ls = line_search(obj, x, cur, d, 1.0, cfg);
    if (!ls) {
      // Steepest descent with a fresh memory.
      mem.clear();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = -cur.g[k];
      ++rep.fallback_steps;
      ls = line_search(obj, x, cur, d, 1.0 / rep.grad_norm, cfg);
      if (!ls) {
        rep.line_search_failed = true;
        break;
      }
    }

    Vector s(x.size()), y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      s[k] = ls->alpha * d[k];
      y[k] = ls->point.g[k] - cur.g[k];
      x[k] += s[k];
    }
    if (dot(s, y) > 1e-300) {
      mem.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
    }
    cur = std::move(ls->point);
    rep.energy_history.push_back(cur.f);
    ++rep.iterations;
  }

  rep.state = obj.state_at(x);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

namespace {

Field battery_field(const GridPtr& grid, const ScalarFunction& phi) {
  Field f = sample_function(grid, phi);
  const double peak = f.max_abs();
  for (std::size_t node = 0; node < grid->num_nodes(); ++node) {
    if (grid->node_class(node) == NodeClass::interior) continue;
    if (std::abs(f(node)) > 1e-12 * peak)
      throw PreconditionError("el_residual: test function does not vanish off the free nodes");
    f(node) = 0.0;
  }
  return f;
}

}  // namespace

std::vector<double> el_residual(const Field& state, const DirichletProblem& problem,
                                const std::vector<ScalarFunction>& battery) {
  problem.validate();
  const GridPtr& grid = problem.grid();
  if (state.grid() != grid || state.support() != Support::closure || !state.is_vector())
    throw PreconditionError("el_residual: state must be a vector field on Omega_delta");
  const int n = grid->dim();
  const Field F = apply_gradient_vec(*problem.op, state);
  const auto& nodes = grid->omega_nodes();
  std::vector<Mat> dF(nodes.size());
  std::vector<Vec> dY(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vec x = grid->position(nodes[k]);
    const Vec y = state.map(nodes[k]);
    dF[k] = problem.energy.DFW(x, y, F.map(k));
    dY[k] = problem.energy.DyW(x, y, F.map(k));
  }
  std::vector<double> out;
  for (const auto& phi : battery) {
    const Field f = battery_field(grid, phi);
    const Field Df = apply_gradient(*problem.op, f);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        double t = dY[k](i) * f(nodes[k]);
        for (int d = 0; d < n; ++d) t += dF[k](i, d) * Df(k, d);
        s += grid->omega_weight(nodes[k]) * t;
      }
      out.push_back(s);
    }
  }
  return out;
}

std::vector<double> el_scale(const DirichletProblem& problem, const std::vector<ScalarFunction>& battery) {
  const GridPtr& grid = problem.grid();
  std::vector<double> out;
  for (const auto& phi : battery) {
    const Field f = battery_field(grid, phi);
    double s = 0.0;
    for (double v : f.data()) s += v * v;
    out.insert(out.end(), grid->dim(), std::sqrt(s));
  }
  return out;
}

double estimate_poincare(const NonlocalOperator& G, double tol, int max_iter) {
  if (G.kind() != OperatorKind::gradient) throw PreconditionError("estimate_poincare: expected a gradient operator");
  const Grid& grid = *G.grid();
  const std::size_t m = grid.interior_nodes().size();
  const Eigen::SparseMatrix<double> N = free_normal_operator(G);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(N);
  if (solver.info() != Eigen::Success) throw ConvergenceError("estimate_poincare: normal operator is singular");

  Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
  double lambda = v.dot(N * v);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = solver.solve(v);
    v = w.normalized();
    const Eigen::VectorXd Nv = N * v;
    lambda = v.dot(Nv);
    if ((Nv - lambda * v).norm() <= tol * lambda) {
      const double continuous = lambda / grid.cell_volume();
      if (!(continuous > 0.0) || !std::isfinite(continuous))
        throw ConvergenceError("estimate_poincare: non-positive eigenvalue");
      return 1.0 / std::sqrt(continuous);
    }
  }
  throw ConvergenceError("estimate_poincare: inverse iteration did not converge");
}

}  // namespace nlgrad
