#include "nlgrad_app/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include <nlgrad/csv.hpp>
#include <nlgrad/parallel.hpp>

namespace nlgrad::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

json kernel_json(const KernelParams& k) {
  return {{"n", k.n}, {"s", k.s}, {"delta", k.delta}, {"a0", k.a0}, {"b0", k.b0}};
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path emit(RunResult& res, const fs::path& path, const std::string& content) {
  stage("write", [&] {
    write_atomic(path, content);
    return 0;
  });
  res.files.push_back(path);
  return path;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- identities

RunResult run_identities(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  OperatorCache cache(cfg.operator_cache);
  const auto checks = stage("identities", [&] { return identity_battery(cfg, cache); });

  RunResult res;
  std::ostringstream csv;
  CsvWriter w(csv);
  w.comment(header_comment(cfg.hash, cfg.kernel));
  w.header({"identity", "h", "s", "delta", "abs_residual", "rel_residual", "frequency", "reliable"});
  json items = json::array();
  res.pass = true;
  for (const auto& c : checks) {
    for (const auto& r : c.rows) {
      w.cell(r.name).cell(r.h).cell(r.kernel.s).cell(r.kernel.delta).cell(r.abs_residual).cell(r.rel_residual);
      w.cell(r.frequency).cell(r.reliable ? "1" : "0");
      w.end_row();
    }
    json item = {{"identity", c.name}, {"pass", c.pass}, {"criterion", c.criterion}, {"rows", c.rows.size()}};
    json rel = json::array();
    for (const auto& r : c.rows) rel.push_back(r.rel_residual);
    item["rel_residuals"] = rel;
    if (!c.ratios.empty()) item["ratios"] = c.ratios;
    if (c.slope) item["slope"] = *c.slope;
    items.push_back(item);
    res.pass = res.pass && c.pass;
    log << (c.pass ? "  ok    " : "  FAIL  ") << c.name << "  (" << c.criterion << ")\n";
  }
  emit(res, out / "identities.csv", csv.str());
  json summary = {{"command", "identities"}, {"config_hash", hex(cfg.hash)}, {"kernel", kernel_json(cfg.kernel)},
                  {"h_divisors", cfg.h_divisors}, {"identities", items}, {"pass", res.pass}};
  emit(res, out / "summary.json", dump(summary));
  int failed = 0;
  for (const auto& c : checks) failed += !c.pass;
  res.summary = std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) + " identities pass";
  return res;
}

// ------------------------------------------------------------------ minimize

std::string state_csv(const ExperimentConfig& cfg, const KernelParams& kernel, const MinimizeOutcome& o,
                      const Field& datum) {
  const Field& u = o.report.state;
  const Grid& g = *u.grid();
  std::ostringstream s;
  CsvWriter w(s);
  w.comment(header_comment(cfg.hash, kernel));
  std::vector<std::string> cols{"index"};
  for (int d = 0; d < g.dim(); ++d) cols.push_back("x" + std::to_string(d + 1));
  cols.push_back("class");
  for (int d = 0; d < g.dim(); ++d) cols.push_back("u" + std::to_string(d + 1));
  cols.push_back("deviation");
  w.header(cols);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Vec x = g.position(k);
    w.cell(k);
    for (int d = 0; d < g.dim(); ++d) w.cell(x(d));
    w.cell(to_string(g.node_class(k)));
    double dev = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      w.cell(u(k, d));
      dev = std::max(dev, std::abs(u(k, d) - datum(k, d)));
    }
    w.cell(dev);
    w.end_row();
  }
  return s.str();
}

json report_json(const ExperimentConfig& cfg, const KernelParams& kernel, double divisor, const MinimizeOutcome& o) {
  const auto& r = o.report;
  return {{"command", "minimize"},
          {"config_hash", hex(cfg.hash)},
          {"kernel", kernel_json(kernel)},
          {"h", kernel.delta / divisor},
          {"converged", r.converged},
          {"line_search_failed", r.line_search_failed},
          {"iterations", r.iterations},
          {"fallback_steps", r.fallback_steps},
          {"grad_norm", r.grad_norm},
          {"grad_tol", cfg.optimizer.grad_tol},
          {"final_energy", r.energy_history.back()},
          {"energy_history", r.energy_history},
          {"max_deviation", o.max_deviation},
          {"el_pairings", o.el_pairings},
          {"el_scales", o.el_scales},
          {"el_ok", o.el_ok},
          {"wall_seconds", r.wall_seconds},
          {"pass", o.pass}};
}

RunResult run_minimize(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  OperatorCache cache(cfg.operator_cache);
  const double divisor = cfg.h_divisors.front();
  const MinimizeOutcome o = solve_point(cfg, cfg.kernel, divisor, cache);
  RunResult res;
  res.pass = o.pass;
  emit(res, out / "solve_report.json", dump(report_json(cfg, cfg.kernel, divisor, o)));
  const Field datum = sample_function(o.report.state.grid(), cfg.datum_function());
  emit(res, out / "state.csv", state_csv(cfg, cfg.kernel, o, datum));
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s after %d iterations, |grad| = %.3e, max deviation %.3e",
                o.report.converged ? "converged" : "not converged", o.report.iterations, o.report.grad_norm,
                o.max_deviation);
  res.summary = buf;
  log << "  " << buf << "\n";
  return res;
}

// ------------------------------------------------------------------ poincare

struct PoincareRow {
  double s, delta, divisor, h, C;
};

bool judge_poincare(const std::vector<PoincareRow>& rows, double stability, std::ostream& log) {
  bool ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].C > 0 && std::isfinite(rows[i].C))) ok = false;
    if (i > 0 && rows[i].s == rows[i - 1].s && rows[i].delta == rows[i - 1].delta) {
      const double change = std::abs(rows[i].C - rows[i - 1].C) / rows[i - 1].C;
      if (change > stability) {
        ok = false;
        log << "  FAIL  C changes by " << change << " between h=" << rows[i - 1].h << " and h=" << rows[i].h << "\n";
      }
    }
  }
  return ok;
}

std::string poincare_csv(const ExperimentConfig& cfg, const std::vector<PoincareRow>& rows) {
  std::ostringstream s;
  CsvWriter w(s);
  w.comment(header_comment(cfg.hash, cfg.kernel));
  w.header({"s", "delta", "h_divisor", "h", "poincare_constant"});
  for (const auto& r : rows) {
    w.cell(r.s).cell(r.delta).cell(r.divisor).cell(r.h).cell(r.C);
    w.end_row();
  }
  return s.str();
}

RunResult run_poincare(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  OperatorCache cache(cfg.operator_cache);
  std::vector<PoincareRow> rows;
  for (double d : cfg.h_divisors) {
    const GridPtr g = stage("grid", [&] { return Grid::build(cfg.domain(), cfg.kernel.delta / d); });
    const OperatorPtr G = stage("assembly", [&] { return cache.gradient(g, cfg.kernel); });
    const double C = stage("poincare", [&] { return estimate_poincare(*G); });
    rows.push_back({cfg.kernel.s, cfg.kernel.delta, d, g->h(), C});
    log << "  h = delta/" << d << "  C = " << format_double(C) << "\n";
  }
  RunResult res;
  res.pass = judge_poincare(rows, cfg.tolerances.poincare_stability, log);
  emit(res, out / "poincare.csv", poincare_csv(cfg, rows));
  json C = json::array();
  for (const auto& r : rows) C.push_back({{"h", r.h}, {"constant", r.C}});
  emit(res, out / "summary.json",
       dump({{"command", "poincare"}, {"config_hash", hex(cfg.hash)}, {"kernel", kernel_json(cfg.kernel)},
             {"constants", C}, {"stability", cfg.tolerances.poincare_stability}, {"pass", res.pass}}));
  res.summary = std::string("Poincare constants ") + (res.pass ? "stable" : "NOT stable") + " under refinement";
  return res;
}

// --------------------------------------------------------------------- sweep

RunResult run_sweep(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  struct Point {
    KernelParams kernel;
    double divisor;
  };
  std::vector<Point> points;
  for (double s : cfg.sweep.s)
    for (double delta : cfg.sweep.delta)
      for (double d : cfg.sweep.h_divisors) {
        KernelParams k = cfg.kernel;
        k.s = s;
        k.delta = delta;
        points.push_back({k, d});
      }

  OperatorCache cache(cfg.operator_cache);
  const bool minimize_target = cfg.sweep.target == "minimize";
  const fs::path dir = out / "sweep";
  stage("write", [&] { return fs::create_directories(dir); });

  struct Outcome {
    double h = 0.0, C = 0.0;
    MinimizeOutcome m;
    std::string error;
  };
  std::vector<Outcome> outcomes(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    ScopedThreadCount single(1);
    for (std::size_t i; (i = next++) < points.size();) {
      const auto& p = points[i];
      Outcome& o = outcomes[i];
      try {
        o.h = p.kernel.delta / p.divisor;
        char name[32];
        std::snprintf(name, sizeof name, "point_%04zu.csv", i);
        if (minimize_target) {
          o.m = solve_point(cfg, p.kernel, p.divisor, cache);
          const Field datum = sample_function(o.m.report.state.grid(), cfg.datum_function());
          write_atomic(dir / name, state_csv(cfg, p.kernel, o.m, datum));
        } else {
          const GridPtr g = Grid::build(cfg.domain(p.kernel.delta), o.h);
          o.C = estimate_poincare(*cache.gradient(g, p.kernel));
          write_atomic(dir / name, poincare_csv(cfg, {{p.kernel.s, p.kernel.delta, p.divisor, o.h, o.C}}));
        }
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < points.size(); ++i)
    if (!outcomes[i].error.empty())
      throw StageError(minimize_target ? "minimize" : "poincare",
                       "sweep point " + std::to_string(i) + ": " + outcomes[i].error);

  RunResult res;
  for (std::size_t i = 0; i < points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%04zu.csv", i);
    res.files.push_back(dir / name);
  }
  std::ostringstream s;
  CsvWriter w(s);
  w.comment(header_comment(cfg.hash, cfg.kernel));
  if (minimize_target) {
    w.header({"point", "s", "delta", "h", "final_energy", "grad_norm", "iterations", "converged", "max_deviation"});
    res.pass = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& m = outcomes[i].m;
      w.cell(i).cell(points[i].kernel.s).cell(points[i].kernel.delta).cell(outcomes[i].h);
      w.cell(m.report.energy_history.back()).cell(m.report.grad_norm).cell(m.report.iterations);
      w.cell(m.report.converged ? "1" : "0").cell(m.max_deviation);
      w.end_row();
      res.pass = res.pass && m.pass;
    }
  } else {
    std::vector<PoincareRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i)
      rows.push_back({points[i].kernel.s, points[i].kernel.delta, points[i].divisor, outcomes[i].h, outcomes[i].C});
    res.pass = judge_poincare(rows, cfg.tolerances.poincare_stability, log);
    w.header({"point", "s", "delta", "h_divisor", "h", "poincare_constant"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w.cell(i).cell(rows[i].s).cell(rows[i].delta).cell(rows[i].divisor).cell(rows[i].h).cell(rows[i].C);
      w.end_row();
    }
  }
  emit(res, out / "sweep.csv", s.str());
  emit(res, out / "summary.json",
       dump({{"command", "sweep"}, {"target", cfg.sweep.target}, {"config_hash", hex(cfg.hash)},
             {"points", points.size()}, {"operators_assembled", cache.assembled()}, {"pass", res.pass}}));
  res.summary = std::to_string(points.size()) + " sweep points, " + (res.pass ? "all pass" : "some fail");
  return res;
}

}  // namespace

MinimizeOutcome solve_point(const ExperimentConfig& cfg, const KernelParams& kernel, double divisor,
                            OperatorCache& cache) {
  const GridPtr g = stage("grid", [&] { return Grid::build(cfg.domain(kernel.delta), kernel.delta / divisor); });
  DirichletProblem problem;
  problem.op = stage("assembly", [&] { return cache.gradient(g, kernel); });
  problem.energy = cfg.energy;
  problem.datum = cfg.datum_function();

  MinimizeOutcome o;
  o.report = stage("minimize", [&] { return minimize(problem, cfg.optimizer); });

  stage("euler-lagrange", [&] {
    const Field datum = problem.datum_field();
    for (std::size_t i = 0; i < datum.data().size(); ++i)
      o.max_deviation = std::max(o.max_deviation, std::abs(o.report.state.data()[i] - datum.data()[i]));
    std::vector<double> lo = cfg.lower, up = cfg.upper;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] += kernel.delta;
      up[i] -= kernel.delta;
    }
    const auto battery = sine_bump_battery(lo, up, {1, 2, 3});
    o.el_pairings = el_residual(o.report.state, problem, battery);
    o.el_scales = el_scale(problem, battery);
    o.el_ok = true;
    for (std::size_t i = 0; i < o.el_pairings.size(); ++i)
      if (!(std::abs(o.el_pairings[i]) <= 10 * cfg.optimizer.grad_tol * o.el_scales[i])) o.el_ok = false;
    return 0;
  });

  o.pass = o.report.converged && o.el_ok;
  if (cfg.tolerances.max_deviation && !(o.max_deviation <= *cfg.tolerances.max_deviation)) o.pass = false;
  return o;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

RunResult run(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  set_thread_count(cfg.threads);
  stage("write", [&] { return fs::create_directories(out); });
  if (cfg.command == "identities") return run_identities(cfg, out, log);
  if (cfg.command == "minimize") return run_minimize(cfg, out, log);
  if (cfg.command == "poincare") return run_poincare(cfg, out, log);
  if (cfg.command == "sweep") return run_sweep(cfg, out, log);
  throw StageError("dispatch", "unknown command '" + cfg.command + "'");
}

}  // namespace nlgrad::app
