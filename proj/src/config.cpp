#include "fdegrow/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace fdegrow {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object())
    throw config_error(path, "expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw config_error(join(path, it.key()), "unknown key");
  }
}

double get_num(const json& obj, const std::string& path, const char* key,
               double def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number())
    throw config_error(join(path, key), "expected a number");
  return it->get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            int def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number_integer())
    throw config_error(join(path, key), "expected an integer");
  return it->get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_boolean())
    throw config_error(join(path, key), "expected a boolean");
  return it->get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_string())
    throw config_error(join(path, key), "expected a string");
  return it->get<std::string>();
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw config_error(path, "must be a positive finite number, got " + fmt_g(v));
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fde_growth: return "fde-growth";
    case ExperimentKind::hw_compare: return "hw-compare";
    case ExperimentKind::f_diagnostics: return "f-diagnostics";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

Nonlinearity NonlinearitySpec::build() const {
  if (family == "paper-example") return Nonlinearity::paper_example(alpha);
  if (family == "power") return Nonlinearity::power(p);
  if (family == "linear-test") return Nonlinearity::linear_test();
  if (family == "constant-test") return Nonlinearity::constant_test(value);
  if (family == "loglinear-test") return Nonlinearity::loglinear_test(c);
  throw config_error("nonlinearity.family", "unknown family '" + family + "'");
}

json NonlinearitySpec::echo() const {
  json j;
  j["family"] = family;
  if (family == "paper-example") j["alpha"] = alpha;
  if (family == "power") j["p"] = p;
  if (family == "constant-test") j["value"] = value;
  if (family == "loglinear-test") j["c"] = c;
  return j;
}

DensityPiece DensitySpec::build() const {
  DensityPiece piece;
  piece.a = a;
  piece.b = b;
  piece.label = label.empty() ? expression + " on [" + fmt_g(a) + ", " + fmt_g(b) + "]"
                              : label;
  if (expression == "constant") {
    const double v = value;
    piece.density = [v](double) { return v; };
  } else if (expression == "linear") {
    const double va = v0, vb = v1, lo = a, span = b - a;
    piece.density = [va, vb, lo, span](double s) {
      return va + (vb - va) * (s - lo) / span;
    };
  } else if (expression == "exp") {
    const double amp = amplitude, r = rate;
    piece.density = [amp, r](double s) { return amp * std::exp(r * s); };
  } else {
    throw config_error("measure.densities.expression",
                       "unknown expression '" + expression + "'");
  }
  return piece;
}

json DensitySpec::echo() const {
  json j;
  j["a"] = a;
  j["b"] = b;
  j["expression"] = expression;
  if (expression == "constant") j["value"] = value;
  if (expression == "linear") {
    j["v0"] = v0;
    j["v1"] = v1;
  }
  if (expression == "exp") {
    j["amplitude"] = amplitude;
    j["rate"] = rate;
  }
  if (!label.empty()) j["label"] = label;
  return j;
}

DelayMeasure MeasureSpec::build(double quad_rel_tol) const {
  std::vector<Atom> as;
  as.reserve(atoms.size());
  for (const AtomSpec& a : atoms) as.push_back({a.location, a.weight});
  std::vector<DensityPiece> ps;
  ps.reserve(densities.size());
  for (const DensitySpec& d : densities) ps.push_back(d.build());
  return DelayMeasure(tau, std::move(as), std::move(ps), quad_rel_tol);
}

json MeasureSpec::echo() const {
  json j;
  j["tau"] = tau;
  j["atoms"] = json::array();
  for (const AtomSpec& a : atoms)
    j["atoms"].push_back({{"location", a.location}, {"weight", a.weight}});
  if (!densities.empty()) {
    j["densities"] = json::array();
    for (const DensitySpec& d : densities) j["densities"].push_back(d.echo());
  }
  return j;
}

std::string MeasureSpec::summary() const {
  std::ostringstream os;
  os << "tau=" << fmt_g(tau);
  for (const AtomSpec& a : atoms)
    os << " atom(" << fmt_g(a.location) << ";" << fmt_g(a.weight) << ")";
  for (const DensitySpec& d : densities)
    os << " " << d.expression << "[" << fmt_g(d.a) << "," << fmt_g(d.b) << "]";
  return os.str();
}

HistoryFunction HistorySpec::build(double tau) const {
  HistoryFunction h = [&] {
    if (kind == "constant") return HistoryFunction::constant(value);
    if (kind == "affine") return HistoryFunction::affine(a, b);
    if (kind == "exp") return HistoryFunction::exponential(value, rate);
    throw config_error("history.kind", "unknown kind '" + kind + "'");
  }();
  for (int k = 0; k <= 64; ++k) {
    const double s = -tau * k / 64.0;
    const double v = h(s);
    if (!(v > 0.0) || !std::isfinite(v))
      throw config_error("history",
                         "history must be strictly positive on [-tau, 0]; got " +
                             fmt_g(v) + " at s = " + fmt_g(s));
  }
  return h;
}

json HistorySpec::echo() const {
  json j;
  j["kind"] = kind;
  if (kind == "constant") j["value"] = value;
  if (kind == "affine") {
    j["a"] = a;
    j["b"] = b;
  }
  if (kind == "exp") {
    j["value"] = value;
    j["rate"] = rate;
  }
  return j;
}

namespace {

NonlinearitySpec parse_nonlinearity(const json& j, const std::string& path) {
  expect_object(j, path);
  NonlinearitySpec s;
  s.family = get_str(j, path, "family", s.family);
  if (s.family == "paper-example") {
    check_keys(j, path, {"family", "alpha"});
    s.alpha = get_num(j, path, "alpha", s.alpha);
  } else if (s.family == "power") {
    check_keys(j, path, {"family", "p"});
    s.p = get_num(j, path, "p", s.p);
  } else if (s.family == "linear-test") {
    check_keys(j, path, {"family"});
  } else if (s.family == "constant-test") {
    check_keys(j, path, {"family", "value"});
    s.value = get_num(j, path, "value", s.value);
  } else if (s.family == "loglinear-test") {
    check_keys(j, path, {"family", "c"});
    s.c = get_num(j, path, "c", s.c);
  } else {
    throw config_error(join(path, "family"), "unknown family '" + s.family + "'");
  }
  return s;
}

MeasureSpec parse_measure(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"tau", "atoms", "densities"});
  MeasureSpec s;
  s.tau = get_num(j, path, "tau", s.tau);
  if (auto it = j.find("atoms"); it != j.end()) {
    if (!it->is_array()) throw config_error(join(path, "atoms"), "expected an array");
    s.atoms.clear();
    int i = 0;
    for (const json& aj : *it) {
      const std::string apath = join(path, "atoms[" + std::to_string(i++) + "]");
      expect_object(aj, apath);
      check_keys(aj, apath, {"location", "weight"});
      AtomSpec a;
      a.location = get_num(aj, apath, "location", 0.0);
      a.weight = get_num(aj, apath, "weight", 1.0);
      s.atoms.push_back(a);
    }
  }
  if (auto it = j.find("densities"); it != j.end()) {
    if (!it->is_array())
      throw config_error(join(path, "densities"), "expected an array");
    int i = 0;
    for (const json& dj : *it) {
      const std::string dpath = join(path, "densities[" + std::to_string(i++) + "]");
      expect_object(dj, dpath);
      check_keys(dj, dpath,
                 {"a", "b", "expression", "value", "v0", "v1", "amplitude",
                  "rate", "label"});
      DensitySpec d;
      d.a = get_num(dj, dpath, "a", d.a);
      d.b = get_num(dj, dpath, "b", d.b);
      d.expression = get_str(dj, dpath, "expression", d.expression);
      d.value = get_num(dj, dpath, "value", d.value);
      d.v0 = get_num(dj, dpath, "v0", d.v0);
      d.v1 = get_num(dj, dpath, "v1", d.v1);
      d.amplitude = get_num(dj, dpath, "amplitude", d.amplitude);
      d.rate = get_num(dj, dpath, "rate", d.rate);
      d.label = get_str(dj, dpath, "label", "");
      s.densities.push_back(d);
    }
  }
  return s;
}

HistorySpec parse_history(const json& j, const std::string& path) {
  expect_object(j, path);
  HistorySpec s;
  s.kind = get_str(j, path, "kind", s.kind);
  if (s.kind == "constant") {
    check_keys(j, path, {"kind", "value"});
    s.value = get_num(j, path, "value", s.value);
  } else if (s.kind == "affine") {
    check_keys(j, path, {"kind", "a", "b"});
    s.a = get_num(j, path, "a", s.a);
    s.b = get_num(j, path, "b", s.b);
  } else if (s.kind == "exp") {
    check_keys(j, path, {"kind", "value", "rate"});
    s.value = get_num(j, path, "value", s.value);
    s.rate = get_num(j, path, "rate", s.rate);
  } else {
    throw config_error(join(path, "kind"), "unknown kind '" + s.kind + "'");
  }
  return s;
}

GeomGridSpec parse_geom_grid(const json& j, const std::string& path,
                             GeomGridSpec def) {
  expect_object(j, path);
  check_keys(j, path, {"lo", "hi", "points_per_decade"});
  def.lo = get_num(j, path, "lo", def.lo);
  def.hi = get_num(j, path, "hi", def.hi);
  def.points_per_decade = get_int(j, path, "points_per_decade", def.points_per_decade);
  require_positive(def.lo, join(path, "lo"));
  if (!(def.hi > def.lo)) throw config_error(join(path, "hi"), "must exceed lo");
  if (def.points_per_decade < 1)
    throw config_error(join(path, "points_per_decade"), "must be at least 1");
  return def;
}

const std::set<std::string>& allowed_checks(ExperimentKind k) {
  static const std::set<std::string> growth{"ratio", "f-over-t", "delta"};
  static const std::set<std::string> hw{"hw-mu", "hw-ratio"};
  static const std::set<std::string> diag{"lambda", "rv0"};
  switch (k) {
    case ExperimentKind::hw_compare: return hw;
    case ExperimentKind::f_diagnostics: return diag;
    default: return growth;  // fde-growth and sweep sub-runs
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  expect_object(doc, "");
  check_keys(doc, "",
             {"kind", "name", "nonlinearity", "measure", "history", "horizon",
              "step", "grid", "tolerances", "extrapolation", "lambda", "u_grid",
              "rv_sigma", "perturbation", "x0", "y0", "expected_mu", "checks",
              "sweep"});

  ExperimentConfig cfg;
  const std::string kind_str = get_str(doc, "", "kind", "fde-growth");
  if (kind_str == "fde-growth") cfg.kind = ExperimentKind::fde_growth;
  else if (kind_str == "hw-compare") cfg.kind = ExperimentKind::hw_compare;
  else if (kind_str == "f-diagnostics") cfg.kind = ExperimentKind::f_diagnostics;
  else if (kind_str == "sweep") cfg.kind = ExperimentKind::sweep;
  else throw config_error("kind", "unknown experiment kind '" + kind_str + "'");

  cfg.name = get_str(doc, "", "name", cfg.name);

  if (auto it = doc.find("nonlinearity"); it != doc.end())
    cfg.f = parse_nonlinearity(*it, "nonlinearity");
  if (auto it = doc.find("measure"); it != doc.end())
    cfg.measure = parse_measure(*it, "measure");
  if (auto it = doc.find("history"); it != doc.end())
    cfg.history = parse_history(*it, "history");

  cfg.horizon = get_num(doc, "", "horizon", cfg.horizon);
  require_positive(cfg.horizon, "horizon");

  if (auto it = doc.find("step"); it != doc.end()) {
    expect_object(*it, "step");
    check_keys(*it, "step", {"h", "adaptive", "tol"});
    cfg.step.h = get_num(*it, "step", "h", cfg.step.h);
    cfg.step.adaptive = get_bool(*it, "step", "adaptive", cfg.step.adaptive);
    cfg.step.tol = get_num(*it, "step", "tol", cfg.step.tol);
    require_positive(cfg.step.h, "step.h");
    require_positive(cfg.step.tol, "step.tol");
  }
  if (cfg.step.adaptive &&
      (cfg.kind == ExperimentKind::fde_growth || cfg.kind == ExperimentKind::sweep))
    throw config_error("step.adaptive",
                       "adaptive stepping is not supported by the delay integrator");

  if (auto it = doc.find("grid"); it != doc.end()) {
    expect_object(*it, "grid");
    check_keys(*it, "grid", {"t_min", "points_per_decade"});
    cfg.grid.t_min = get_num(*it, "grid", "t_min", cfg.grid.t_min);
    cfg.grid.points_per_decade =
        get_int(*it, "grid", "points_per_decade", cfg.grid.points_per_decade);
    require_positive(cfg.grid.t_min, "grid.t_min");
    if (cfg.grid.points_per_decade < 1)
      throw config_error("grid.points_per_decade", "must be at least 1");
  }

  if (auto it = doc.find("tolerances"); it != doc.end()) {
    expect_object(*it, "tolerances");
    check_keys(*it, "tolerances",
               {"ratio", "f_over_t", "delta", "hw_mu", "hw_ratio", "rv",
                "quadrature", "f_quadrature", "inversion"});
    ToleranceSpec& t = cfg.tolerances;
    t.ratio = get_num(*it, "tolerances", "ratio", t.ratio);
    t.f_over_t = get_num(*it, "tolerances", "f_over_t", t.f_over_t);
    t.delta = get_num(*it, "tolerances", "delta", t.delta);
    t.hw_mu = get_num(*it, "tolerances", "hw_mu", t.hw_mu);
    t.hw_ratio = get_num(*it, "tolerances", "hw_ratio", t.hw_ratio);
    t.rv = get_num(*it, "tolerances", "rv", t.rv);
    t.quadrature = get_num(*it, "tolerances", "quadrature", t.quadrature);
    t.f_quadrature = get_num(*it, "tolerances", "f_quadrature", t.f_quadrature);
    t.inversion = get_num(*it, "tolerances", "inversion", t.inversion);
    for (double v : {t.ratio, t.f_over_t, t.delta, t.hw_mu, t.hw_ratio, t.rv,
                     t.quadrature, t.f_quadrature, t.inversion})
      require_positive(v, "tolerances");
  }

  if (auto it = doc.find("extrapolation"); it != doc.end()) {
    expect_object(*it, "extrapolation");
    check_keys(*it, "extrapolation", {"model", "window_decades"});
    cfg.extrapolation.model =
        get_str(*it, "extrapolation", "model", cfg.extrapolation.model);
    cfg.extrapolation.window_decades = get_num(
        *it, "extrapolation", "window_decades", cfg.extrapolation.window_decades);
    if (!parse_limit_model(cfg.extrapolation.model))
      throw config_error("extrapolation.model",
                         "unknown model '" + cfg.extrapolation.model +
                             "' (raw | aitken | log-fit)");
    require_positive(cfg.extrapolation.window_decades,
                     "extrapolation.window_decades");
  }

  if (auto it = doc.find("lambda"); it != doc.end()) {
    expect_object(*it, "lambda");
    check_keys(*it, "lambda", {"override", "grid"});
    if (auto ov = it->find("override"); ov != it->end() && !ov->is_null()) {
      if (!ov->is_number())
        throw config_error("lambda.override", "expected a number or null");
      cfg.lambda_override = ov->get<double>();
      if (!(*cfg.lambda_override >= 0.0))
        throw config_error("lambda.override", "must be nonnegative");
    }
    if (auto g = it->find("grid"); g != it->end())
      cfg.lambda_grid = parse_geom_grid(*g, "lambda.grid", cfg.lambda_grid);
  }
  if (cfg.lambda_grid.build().decades() < 3.0 - 1e-9)
    throw config_error("lambda.grid", "must span at least 3 decades");

  if (auto it = doc.find("u_grid"); it != doc.end())
    cfg.u_grid = parse_geom_grid(*it, "u_grid", cfg.u_grid);

  cfg.rv_sigma = get_num(doc, "", "rv_sigma", cfg.rv_sigma);
  require_positive(cfg.rv_sigma, "rv_sigma");
  if (std::abs(cfg.rv_sigma - 1.0) < 1e-9)
    throw config_error("rv_sigma", "sigma = 1 makes the probe trivial");

  if (auto it = doc.find("perturbation"); it != doc.end()) {
    expect_object(*it, "perturbation");
    check_keys(*it, "perturbation", {"kind", "c"});
    cfg.perturbation.kind =
        get_str(*it, "perturbation", "kind", cfg.perturbation.kind);
    cfg.perturbation.c = get_num(*it, "perturbation", "c", cfg.perturbation.c);
    if (cfg.perturbation.kind != "scaled-ffprime" &&
        cfg.perturbation.kind != "scaled-f")
      throw config_error("perturbation.kind",
                         "unknown kind '" + cfg.perturbation.kind +
                             "' (scaled-ffprime | scaled-f)");
    require_positive(cfg.perturbation.c, "perturbation.c");
    if (cfg.perturbation.kind == "scaled-f" && cfg.perturbation.c >= 1.0)
      throw config_error("perturbation.c",
                         "scaled-f with c >= 1 makes eps >= f; the perturbed "
                         "equation loses positivity");
  }

  cfg.x0 = get_num(doc, "", "x0", cfg.x0);
  cfg.y0 = get_num(doc, "", "y0", cfg.y0);
  require_positive(cfg.x0, "x0");
  require_positive(cfg.y0, "y0");
  if (auto it = doc.find("expected_mu"); it != doc.end() && !it->is_null()) {
    if (!it->is_number())
      throw config_error("expected_mu", "expected a number or null");
    cfg.expected_mu = it->get<double>();
    if (!(*cfg.expected_mu >= 0.0))
      throw config_error("expected_mu", "must be nonnegative");
  }

  // Validate the domain specs by constructing them.
  try {
    cfg.f.build();
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error("nonlinearity", e.what());
  }
  double delay_C = 0.0;
  try {
    DelayMeasure m = cfg.measure.build(cfg.tolerances.quadrature);
    delay_C = m.delay_moment();
    cfg.history.build(m.tau());
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error("measure", e.what());
  }

  // Sweep ranges (only meaningful for kind = sweep).
  if (auto it = doc.find("sweep"); it != doc.end()) {
    if (cfg.kind != ExperimentKind::sweep)
      throw config_error("sweep", "only valid for kind = sweep");
    expect_object(*it, "sweep");
    check_keys(*it, "sweep", {"alphas", "measures", "max_runs"});
    if (auto a = it->find("alphas"); a != it->end()) {
      if (!a->is_array()) throw config_error("sweep.alphas", "expected an array");
      if (a->empty()) throw config_error("sweep.alphas", "empty range");
      for (const json& v : *a) {
        if (!v.is_number())
          throw config_error("sweep.alphas", "expected numbers");
        const double alpha = v.get<double>();
        if (!(alpha > 0.0) || !std::isfinite(alpha))
          throw config_error("sweep.alphas",
                             "alpha must be positive, got " + fmt_g(alpha));
        cfg.sweep.alphas.push_back(alpha);
      }
    }
    if (auto ms = it->find("measures"); ms != it->end()) {
      if (!ms->is_array())
        throw config_error("sweep.measures", "expected an array");
      if (ms->empty()) throw config_error("sweep.measures", "empty range");
      int i = 0;
      for (const json& mj : *ms) {
        const std::string mpath = "sweep.measures[" + std::to_string(i++) + "]";
        MeasureSpec m = parse_measure(mj, mpath);
        try {
          m.build(cfg.tolerances.quadrature);
        } catch (const std::exception& e) {
          throw config_error(mpath, e.what());
        }
        cfg.sweep.measures.push_back(std::move(m));
      }
    }
    cfg.sweep.max_runs = get_int(*it, "sweep", "max_runs", cfg.sweep.max_runs);
    if (cfg.sweep.max_runs < 1)
      throw config_error("sweep.max_runs", "must be at least 1");
  }
  if (cfg.kind == ExperimentKind::sweep) {
    if (cfg.sweep.alphas.empty()) cfg.sweep.alphas.push_back(cfg.f.alpha);
    if (cfg.sweep.measures.empty()) cfg.sweep.measures.push_back(cfg.measure);
    const std::size_t runs = cfg.sweep.alphas.size() * cfg.sweep.measures.size();
    if (runs > static_cast<std::size_t>(cfg.sweep.max_runs))
      throw config_error("sweep", "range produces " + std::to_string(runs) +
                                      " runs, cap is " +
                                      std::to_string(cfg.sweep.max_runs));
    if (cfg.f.family != "paper-example" && !cfg.sweep.alphas.empty() &&
        cfg.sweep.alphas.size() > 1)
      throw config_error("sweep.alphas",
                         "alpha sweeps require the paper-example family");
  }

  // Resolve the check list.
  const std::set<std::string>& allowed = allowed_checks(cfg.kind);
  if (auto it = doc.find("checks"); it != doc.end()) {
    if (!it->is_array()) throw config_error("checks", "expected an array");
    if (it->empty()) throw config_error("checks", "must not be empty");
    for (const json& c : *it) {
      if (!c.is_string()) throw config_error("checks", "expected strings");
      const std::string name = c.get<std::string>();
      if (!allowed.count(name))
        throw config_error("checks", "check '" + name + "' is not available for kind " +
                                         to_string(cfg.kind));
      if (name == "delta") {
        if (cfg.kind == ExperimentKind::fde_growth && delay_C == 0.0)
          throw config_error("checks",
                             "the delta check is degenerate when the delay "
                             "moment C is 0");
        for (std::size_t i = 0; i < cfg.sweep.measures.size(); ++i)
          if (cfg.sweep.measures[i].build(cfg.tolerances.quadrature).delay_moment() == 0.0)
            throw config_error("checks", "the delta check is degenerate for "
                                         "sweep.measures[" + std::to_string(i) +
                                         "] (C = 0)");
      }
      cfg.checks.push_back(name);
    }
  } else {
    switch (cfg.kind) {
      case ExperimentKind::fde_growth:
        cfg.checks = {"ratio", "f-over-t"};
        if (delay_C > 0.0) cfg.checks.push_back("delta");
        break;
      case ExperimentKind::hw_compare:
        cfg.checks = {"hw-mu", "hw-ratio"};
        break;
      case ExperimentKind::f_diagnostics:
        cfg.checks = {"lambda", "rv0"};
        break;
      case ExperimentKind::sweep:
        cfg.checks = {"ratio"};
        break;
    }
  }

  // Extrapolation needs a real tail to chew on.
  if (cfg.kind == ExperimentKind::fde_growth || cfg.kind == ExperimentKind::sweep ||
      cfg.kind == ExperimentKind::hw_compare) {
    if (!(cfg.horizon > cfg.grid.t_min))
      throw config_error("horizon", "must exceed grid.t_min");
    const GeomGrid tg{cfg.grid.t_min, cfg.horizon, cfg.grid.points_per_decade};
    if (tg.points().size() < 6)
      throw config_error("grid", "diagnostic grid has fewer than 6 points; "
                                 "raise the horizon or the grid density");
  }

  return cfg;
}

json ExperimentConfig::echo() const {
  json j;
  j["kind"] = to_string(kind);
  j["name"] = name;
  j["nonlinearity"] = f.echo();
  const bool growth = kind == ExperimentKind::fde_growth || kind == ExperimentKind::sweep;
  if (growth) {
    j["measure"] = measure.echo();
    j["history"] = history.echo();
  }
  if (growth || kind == ExperimentKind::hw_compare) {
    j["horizon"] = horizon;
    j["step"] = {{"h", step.h}, {"adaptive", step.adaptive}, {"tol", step.tol}};
    j["grid"] = {{"t_min", grid.t_min},
                 {"points_per_decade", grid.points_per_decade}};
    j["extrapolation"] = {{"model", extrapolation.model},
                          {"window_decades", extrapolation.window_decades}};
  }
  j["tolerances"] = {{"ratio", tolerances.ratio},
                     {"f_over_t", tolerances.f_over_t},
                     {"delta", tolerances.delta},
                     {"hw_mu", tolerances.hw_mu},
                     {"hw_ratio", tolerances.hw_ratio},
                     {"rv", tolerances.rv},
                     {"quadrature", tolerances.quadrature},
                     {"f_quadrature", tolerances.f_quadrature},
                     {"inversion", tolerances.inversion}};
  if (growth) {
    j["lambda"] = json::object();
    j["lambda"]["override"] = lambda_override ? json(*lambda_override) : json();
    j["lambda"]["grid"] = {{"lo", lambda_grid.lo},
                           {"hi", lambda_grid.hi},
                           {"points_per_decade", lambda_grid.points_per_decade}};
  }
  if (kind == ExperimentKind::f_diagnostics) {
    j["lambda"] = json::object();
    j["lambda"]["grid"] = {{"lo", lambda_grid.lo},
                           {"hi", lambda_grid.hi},
                           {"points_per_decade", lambda_grid.points_per_decade}};
    j["u_grid"] = {{"lo", u_grid.lo},
                   {"hi", u_grid.hi},
                   {"points_per_decade", u_grid.points_per_decade}};
    j["rv_sigma"] = rv_sigma;
  }
  if (kind == ExperimentKind::hw_compare) {
    j["perturbation"] = {{"kind", perturbation.kind}, {"c", perturbation.c}};
    j["x0"] = x0;
    j["y0"] = y0;
    j["expected_mu"] = expected_mu ? json(*expected_mu) : json();
    j["u_grid"] = {{"lo", u_grid.lo},
                   {"hi", u_grid.hi},
                   {"points_per_decade", u_grid.points_per_decade}};
  }
  j["checks"] = checks;
  if (kind == ExperimentKind::sweep) {
    json sj;
    sj["alphas"] = sweep.alphas;
    sj["measures"] = json::array();
    for (const MeasureSpec& m : sweep.measures) sj["measures"].push_back(m.echo());
    sj["max_runs"] = sweep.max_runs;
    j["sweep"] = sj;
  }
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path, "cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(path, e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("--override",
                       "expected key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    tokens.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (const std::string& t : tokens)
    if (t.empty()) throw config_error("--override", "empty path segment in '" + path + "'");

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // not valid JSON: keep as a string

  json* cur = &doc;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const bool numeric = !tok.empty() &&
                         tok.find_first_not_of("0123456789") == std::string::npos;
    if (cur->is_array()) {
      if (!numeric)
        throw config_error("--override", "'" + tok + "' indexes an array; use a number");
      const std::size_t idx = std::stoul(tok);
      if (idx >= cur->size())
        throw config_error("--override", "index " + tok + " out of range");
      cur = &(*cur)[idx];
    } else {
      if (!cur->is_object()) *cur = json::object();
      cur = &(*cur)[tok];
    }
  }
  const std::string& last = tokens.back();
  if (cur->is_array()) {
    const bool numeric =
        last.find_first_not_of("0123456789") == std::string::npos;
    if (!numeric)
      throw config_error("--override", "'" + last + "' indexes an array; use a number");
    const std::size_t idx = std::stoul(last);
    if (idx >= cur->size())
      throw config_error("--override", "index " + last + " out of range");
    (*cur)[idx] = value;
  } else {
    if (!cur->is_object()) *cur = json::object();
    (*cur)[last] = value;
  }
}

}  // namespace fdegrow
