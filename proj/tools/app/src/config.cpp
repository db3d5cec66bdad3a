#include "nlgrad_app/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <nlgrad/csv.hpp>
#include <nlgrad/errors.hpp>

namespace nlgrad::app {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& object(const json& obj, const std::string& path, const std::string& key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "required block missing");
  if (!v->is_object()) throw ConfigError(join(path, key), "expected an object");
  return *v;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

double number(const json& obj, const std::string& path, const std::string& key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "required field missing");
  return number(*v, join(path, key));
}

double number_or(const json& obj, const std::string& path, const std::string& key, double fallback) {
  const json* v = find(obj, key);
  return v ? number(*v, join(path, key)) : fallback;
}

long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(field, "expected an integer");
  return v.get<long>();
}

long integer_or(const json& obj, const std::string& path, const std::string& key, long fallback) {
  const json* v = find(obj, key);
  return v ? integer(*v, join(path, key)) : fallback;
}

std::vector<double> numbers(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

bool boolean_or(const json& obj, const std::string& path, const std::string& key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string string_or(const json& obj, const std::string& path, const std::string& key, std::string fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(join(path, key), "expected a string");
  return v->get<std::string>();
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
  }
}

KernelParams parse_kernel(const json& k) {
  reject_unknown(k, "kernel", {"n", "s", "delta", "a0", "b0"});
  KernelParams p;
  const json* n = find(k, "n");
  if (!n) throw ConfigError("kernel.n", "required field missing");
  p.n = static_cast<int>(integer(*n, "kernel.n"));
  if (p.n != 2 && p.n != 3) throw ConfigError("kernel.n", "must be 2 or 3");
  p.s = number(k, "kernel", "s");
  if (!(p.s > 0 && p.s < 1)) throw ConfigError("kernel.s", "must lie in (0, 1)");
  p.delta = number(k, "kernel", "delta");
  if (!(p.delta > 0)) throw ConfigError("kernel.delta", "must be positive");
  p.a0 = number_or(k, "kernel", "a0", 1.0);
  if (!(p.a0 > 0)) throw ConfigError("kernel.a0", "must be positive");
  p.b0 = number_or(k, "kernel", "b0", 0.5);
  if (!(p.b0 > 0 && p.b0 < 1)) throw ConfigError("kernel.b0", "must lie in (0, 1)");
  return p;
}

std::vector<double> parse_divisors(const json& v, const std::string& field) {
  auto d = numbers(v, field);
  if (d.empty()) throw ConfigError(field, "must not be empty");
  for (double x : d)
    if (!(x >= 4.0)) throw ConfigError(field, "every divisor must be >= 4 (h <= delta/4)");
  return d;
}

void parse_grid(const json& g, ExperimentConfig& cfg) {
  reject_unknown(g, "grid", {"lower", "upper", "h", "h_divisors"});
  const int n = cfg.kernel.n;
  const json* lo = find(g, "lower");
  const json* up = find(g, "upper");
  cfg.lower = lo ? numbers(*lo, "grid.lower") : std::vector<double>(n, 0.0);
  cfg.upper = up ? numbers(*up, "grid.upper") : std::vector<double>(n, 1.0);
  if (static_cast<int>(cfg.lower.size()) != n) throw ConfigError("grid.lower", "needs kernel.n entries");
  if (static_cast<int>(cfg.upper.size()) != n) throw ConfigError("grid.upper", "needs kernel.n entries");
  for (int i = 0; i < n; ++i)
    if (!(cfg.upper[i] > cfg.lower[i])) throw ConfigError("grid.upper", "must exceed grid.lower on every axis");

  const json* h = find(g, "h");
  const json* d = find(g, "h_divisors");
  if (h && d) throw ConfigError("grid.h", "give either h or h_divisors, not both");
  if (h) {
    std::vector<double> hs = h->is_array() ? numbers(*h, "grid.h") : std::vector<double>{number(*h, "grid.h")};
    if (hs.empty()) throw ConfigError("grid.h", "must not be empty");
    for (double x : hs) {
      if (!(x > 0)) throw ConfigError("grid.h", "must be positive");
      if (x > cfg.kernel.delta / 4 * (1 + 1e-12)) throw ConfigError("grid.h", "must satisfy h <= delta/4");
      cfg.h_divisors.push_back(cfg.kernel.delta / x);
    }
  } else if (d) {
    cfg.h_divisors = parse_divisors(*d, "grid.h_divisors");
  } else {
    throw ConfigError("grid.h", "required field missing (or grid.h_divisors)");
  }
  for (int i = 0; i < n; ++i)
    if (!(cfg.upper[i] - cfg.lower[i] > 2 * cfg.kernel.delta))
      throw ConfigError("grid.upper", "box edges must exceed 2*delta so that the eroded interior is nonempty");
}

StoredEnergy parse_energy(const json& e, int n) {
  reject_unknown(e, "energy", {"form", "alpha", "beta", "gamma1", "gamma2", "p", "q", "barrier", "body_force"});
  const std::string form = string_or(e, "energy", "form", "");
  StoredEnergy W;
  if (form == "quadratic") {
    W = StoredEnergy::quadratic(number_or(e, "energy", "alpha", 1.0));
  } else if (form == "poly_coercive") {
    W = StoredEnergy::poly_coercive(number_or(e, "energy", "alpha", 1.0), number_or(e, "energy", "beta", 1.0),
                                    number_or(e, "energy", "gamma1", 1.0), number_or(e, "energy", "p", 2.0),
                                    number_or(e, "energy", "q", 2.0));
    W.gamma2 = number_or(e, "energy", "gamma2", 0.0);
    W.barrier = boolean_or(e, "energy", "barrier", false);
  } else if (form.empty()) {
    throw ConfigError("energy.form", "required field missing");
  } else {
    throw ConfigError("energy.form", "expected 'quadratic' or 'poly_coercive', got '" + form + "'");
  }
  if (const json* f = find(e, "body_force")) {
    W.body_force = numbers(*f, "energy.body_force");
    if (static_cast<int>(W.body_force.size()) != n) throw ConfigError("energy.body_force", "needs kernel.n entries");
  }
  try {
    W.validate(n);
  } catch (const ParameterError& err) {
    throw ConfigError("energy", err.what());
  }
  return W;
}

FunctionDescriptor parse_descriptor(const json& v, const std::string& field, int n) {
  if (!v.is_object()) throw ConfigError(field, "expected a function object");
  FunctionDescriptor d;
  d.type = string_or(v, field, "type", "");
  if (d.type.empty()) throw ConfigError(join(field, "type"), "required field missing");
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (it.key() == "type") continue;
    const std::string sub = join(field, it.key());
    if (it.key() == "children") {
      if (!it->is_array()) throw ConfigError(sub, "expected an array of functions");
      for (std::size_t i = 0; i < it->size(); ++i)
        d.children.push_back(parse_descriptor((*it)[i], sub + "[" + std::to_string(i) + "]", n));
    } else if (it->is_array()) {
      d.params[it.key()] = numbers(*it, sub);
    } else {
      d.params[it.key()] = {number(*it, sub)};
    }
  }
  try {
    make_scalar_function(d, n);
  } catch (const ParameterError& err) {
    throw ConfigError(field, err.what());
  }
  return d;
}

std::vector<FunctionDescriptor> parse_datum(const json& v, int n) {
  std::vector<FunctionDescriptor> out;
  if (v.is_object()) {
    // {"A": [[..]], "c": [..]} shorthand for x -> A x + c
    reject_unknown(v, "datum", {"A", "c"});
    const json* A = find(v, "A");
    if (!A) throw ConfigError("datum.A", "required field missing");
    if (!A->is_array() || static_cast<int>(A->size()) != n) throw ConfigError("datum.A", "expected n rows");
    std::vector<double> c(n, 0.0);
    if (const json* cj = find(v, "c")) {
      c = numbers(*cj, "datum.c");
      if (static_cast<int>(c.size()) != n) throw ConfigError("datum.c", "needs kernel.n entries");
    }
    for (int i = 0; i < n; ++i) {
      const std::string f = "datum.A[" + std::to_string(i) + "]";
      auto row = numbers((*A)[i], f);
      if (static_cast<int>(row.size()) != n) throw ConfigError(f, "needs kernel.n entries");
      FunctionDescriptor d;
      d.type = "affine";
      d.params["b"] = row;
      d.params["c"] = {c[i]};
      out.push_back(d);
    }
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ConfigError("datum", "expected an affine block {A, c} or an array of kernel.n functions");
  for (int i = 0; i < n; ++i) out.push_back(parse_descriptor(v[i], "datum[" + std::to_string(i) + "]", n));
  return out;
}

OptimizerConfig parse_optimizer(const json& o) {
  reject_unknown(o, "optimizer", {"max_iter", "grad_tol", "memory", "c1", "c2", "max_line_search", "precondition"});
  OptimizerConfig c;
  c.max_iter = static_cast<int>(integer_or(o, "optimizer", "max_iter", c.max_iter));
  c.grad_tol = number_or(o, "optimizer", "grad_tol", c.grad_tol);
  c.memory = static_cast<int>(integer_or(o, "optimizer", "memory", c.memory));
  c.c1 = number_or(o, "optimizer", "c1", c.c1);
  c.c2 = number_or(o, "optimizer", "c2", c.c2);
  c.max_line_search = static_cast<int>(integer_or(o, "optimizer", "max_line_search", c.max_line_search));
  c.precondition = boolean_or(o, "optimizer", "precondition", c.precondition);
  if (c.max_iter < 0) throw ConfigError("optimizer.max_iter", "must be >= 0");
  if (!(c.grad_tol > 0)) throw ConfigError("optimizer.grad_tol", "must be positive");
  if (c.memory < 1) throw ConfigError("optimizer.memory", "must be >= 1");
  if (!(c.c1 > 0 && c.c1 < c.c2 && c.c2 < 1)) throw ConfigError("optimizer.c2", "need 0 < c1 < c2 < 1");
  if (c.max_line_search < 1) throw ConfigError("optimizer.max_line_search", "must be >= 1");
  return c;
}

void parse_tolerances(const json& t, Tolerances& tol) {
  reject_unknown(t, "tolerances",
                 {"rounding", "affine", "equivalence", "duality", "piola", "det_ibp", "refinement_ratio",
                  "ratio_floor", "bound_slack", "wc_final_fraction", "wc_slope", "wc_slope_window",
                  "poincare_stability", "max_deviation"});
  auto pos = [&](const char* key, double& dst) {
    dst = number_or(t, "tolerances", key, dst);
    if (!(dst >= 0)) throw ConfigError(join("tolerances", key), "must be nonnegative");
  };
  pos("rounding", tol.rounding);
  pos("affine", tol.affine);
  pos("equivalence", tol.equivalence);
  pos("duality", tol.duality);
  pos("piola", tol.piola);
  pos("det_ibp", tol.det_ibp);
  pos("refinement_ratio", tol.refinement_ratio);
  pos("ratio_floor", tol.ratio_floor);
  pos("bound_slack", tol.bound_slack);
  pos("wc_final_fraction", tol.wc_final_fraction);
  pos("wc_slope_window", tol.wc_slope_window);
  pos("poincare_stability", tol.poincare_stability);
  if (const json* v = find(t, "wc_slope")) tol.wc_slope = number(*v, "tolerances.wc_slope");
  if (const json* v = find(t, "max_deviation")) {
    tol.max_deviation = number(*v, "tolerances.max_deviation");
    if (!(*tol.max_deviation >= 0)) throw ConfigError("tolerances.max_deviation", "must be nonnegative");
  }
}

void parse_sweep(const json& s, ExperimentConfig& cfg) {
  reject_unknown(s, "sweep", {"target", "s", "delta", "h_divisors"});
  auto& ax = cfg.sweep;
  ax.target = string_or(s, "sweep", "target", ax.target);
  if (ax.target != "poincare" && ax.target != "minimize")
    throw ConfigError("sweep.target", "expected 'poincare' or 'minimize'");
  auto axis = [&](const char* key, std::vector<double> fallback) {
    const json* v = find(s, key);
    auto out = v ? numbers(*v, join("sweep", key)) : fallback;
    if (out.empty()) throw ConfigError(join("sweep", key), "sweep axes must be nonempty");
    return out;
  };
  ax.s = axis("s", {cfg.kernel.s});
  ax.delta = axis("delta", {cfg.kernel.delta});
  ax.h_divisors = find(s, "h_divisors") ? parse_divisors(s["h_divisors"], "sweep.h_divisors") : cfg.h_divisors;
  for (double v : ax.s)
    if (!(v > 0 && v < 1)) throw ConfigError("sweep.s", "every entry must lie in (0, 1)");
  for (double v : ax.delta) {
    if (!(v > 0)) throw ConfigError("sweep.delta", "every entry must be positive");
    for (int i = 0; i < cfg.kernel.n; ++i)
      if (!(cfg.upper[i] - cfg.lower[i] > 2 * v))
        throw ConfigError("sweep.delta", "box edges must exceed 2*delta for every entry");
  }
}

}  // namespace

BoxDomain ExperimentConfig::domain(double delta) const { return BoxDomain{lower, upper, delta}; }

VectorFunction ExperimentConfig::datum_function() const {
  std::vector<ScalarFunction> comps;
  for (const auto& d : datum) comps.push_back(make_scalar_function(d, kernel.n));
  return VectorFunction(std::move(comps));
}

ExperimentConfig parse_config(const std::string& text, const std::string& command) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
  reject_unknown(doc, "", {"command", "kernel", "grid", "energy", "datum", "optimizer", "sweep", "identities",
                           "tolerances", "output", "operator_cache", "threads", "seed", "description"});

  ExperimentConfig cfg;
  cfg.command = command;
  if (const json* c = find(doc, "command")) {
    if (!c->is_string()) throw ConfigError("command", "expected a string");
    if (c->get<std::string>() != command)
      throw ConfigError("command", "config is for '" + c->get<std::string>() + "' but '" + command + "' was requested");
  }
  bool known = false;
  for (const auto& c : commands()) known = known || c == command;
  if (!known) throw ConfigError("command", "unknown command '" + command + "'");

  cfg.kernel = parse_kernel(object(doc, "", "kernel"));
  parse_grid(object(doc, "", "grid"), cfg);

  if (command == "minimize" || (command == "sweep" && find(doc, "sweep") &&
                                string_or(doc["sweep"], "sweep", "target", "poincare") == "minimize")) {
    cfg.energy = parse_energy(object(doc, "", "energy"), cfg.kernel.n);
    const json* d = find(doc, "datum");
    if (!d) throw ConfigError("datum", "required block missing");
    cfg.datum = parse_datum(*d, cfg.kernel.n);
  }
  if (const json* o = find(doc, "optimizer")) {
    if (!o->is_object()) throw ConfigError("optimizer", "expected an object");
    cfg.optimizer = parse_optimizer(*o);
  }
  if (command == "minimize" && cfg.h_divisors.size() != 1)
    throw ConfigError("grid.h", "minimize takes a single grid spacing");
  if (command == "sweep") parse_sweep(object(doc, "", "sweep"), cfg);
  if (const json* t = find(doc, "tolerances")) {
    if (!t->is_object()) throw ConfigError("tolerances", "expected an object");
    parse_tolerances(*t, cfg.tolerances);
  }
  if (const json* id = find(doc, "identities")) {
    if (!id->is_object()) throw ConfigError("identities", "expected an object");
    reject_unknown(*id, "identities", {"wc_schedule", "bound_trials"});
    if (const json* w = find(*id, "wc_schedule")) {
      cfg.wc_schedule.clear();
      for (double j : numbers(*w, "identities.wc_schedule")) {
        if (j < 1 || j != std::floor(j)) throw ConfigError("identities.wc_schedule", "entries must be positive integers");
        if (!cfg.wc_schedule.empty() && j <= cfg.wc_schedule.back())
          throw ConfigError("identities.wc_schedule", "must be increasing");
        cfg.wc_schedule.push_back(static_cast<int>(j));
      }
      if (cfg.wc_schedule.size() < 2) throw ConfigError("identities.wc_schedule", "needs at least two frequencies");
    }
    cfg.bound_trials = static_cast<int>(integer_or(*id, "identities", "bound_trials", cfg.bound_trials));
    if (cfg.bound_trials < 1) throw ConfigError("identities.bound_trials", "must be >= 1");
  }
  cfg.output = string_or(doc, "", "output", cfg.output.string());
  cfg.operator_cache = string_or(doc, "", "operator_cache", "");
  cfg.threads = static_cast<int>(integer_or(doc, "", "threads", cfg.threads));
  if (cfg.threads < 1) throw ConfigError("threads", "must be >= 1");
  const long seed = integer_or(doc, "", "seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  doc.erase("output");
  doc.erase("threads");
  doc.erase("seed");
  cfg.canonical = doc.dump();
  refresh_hash(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), command);
}

void refresh_hash(ExperimentConfig& cfg) {
  cfg.hash = fnv1a(cfg.canonical + "|seed=" + std::to_string(cfg.seed) + "|threads=" + std::to_string(cfg.threads));
}

}  // namespace nlgrad::app
