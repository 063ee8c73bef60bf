#include "fdegrow/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "fdegrow/asymptotics.hpp"
#include "fdegrow/quadrature.hpp"
#include "fdegrow/version.hpp"

namespace fdegrow {

namespace {

namespace fs = std::filesystem;
using clock_t_ = std::chrono::steady_clock;

double ms_since(clock_t_::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_t_::now() - t0).count();
}

json num_or_null(double v) {
  return std::isfinite(v) ? json(v) : json();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string series_csv(const DiagnosticSeries& s) {
  std::string out = s.scale.empty() ? "t,value\n" : "t,value,scale\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += format_g17(s.t[i]);
    out += ',';
    out += format_g17(s.value[i]);
    if (!s.scale.empty()) {
      out += ',';
      out += format_g17(s.scale[i]);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const Trajectory& tr) {
  const std::vector<double>& ts = tr.mesh();
  const std::vector<double>& vs = tr.mesh_v();
  const std::vector<double>& dvs = tr.mesh_dv();
  const std::size_t n = ts.size();
  const std::size_t stride = n <= 4096 ? 1 : (n + 4095) / 4096;
  std::string out = "t,log_x,dlog_x_dt,x\n";
  auto row = [&](std::size_t i) {
    out += format_g17(ts[i]);
    out += ',';
    out += format_g17(vs[i]);
    out += ',';
    out += format_g17(dvs[i]);
    out += ',';
    if (vs[i] <= 709.0) out += format_g17(std::exp(vs[i]));
    out += '\n';
  };
  std::size_t last_written = 0;
  for (std::size_t i = 0; i < n; i += stride) {
    row(i);
    last_written = i;
  }
  if (last_written != n - 1) row(n - 1);
  return out;
}

json limit_to_json(const LimitEstimate& l) {
  json j;
  j["estimate"] = num_or_null(l.estimate);
  j["uncertainty"] = num_or_null(l.uncertainty);
  j["model"] = to_string(l.model);
  j["samples_used"] = l.samples_used;
  j["inconclusive"] = l.inconclusive;
  j["divergent"] = l.divergent;
  return j;
}

json verdict_to_json(const TheoremVerdict& v) {
  json j;
  j["name"] = v.name;
  j["regime"] = v.regime;
  j["predicted"] = num_or_null(v.predicted);
  j["estimated"] = num_or_null(v.estimated);
  j["deviation"] = num_or_null(v.deviation);
  j["tolerance"] = v.tolerance;
  j["pass"] = v.pass;
  j["inconclusive"] = v.inconclusive;
  j["limit"] = limit_to_json(v.limit);
  return j;
}

int exit_code_from_verdicts(const std::vector<TheoremVerdict>& vs) {
  bool any_fail = false, any_inconclusive = false;
  for (const TheoremVerdict& v : vs) {
    if (v.inconclusive) any_inconclusive = true;
    else if (!v.pass) any_fail = true;
  }
  return any_fail ? 2 : any_inconclusive ? 3 : 0;
}

std::string sanitize_filename(std::string name) {
  for (char& c : name)
    if (c == '-' || c == '/' || c == ' ') c = '_';
  return name;
}

struct ReportBuilder {
  json series = json::object();
  std::vector<TheoremVerdict> verdicts;
  std::vector<std::string> warnings;
  json timings = json::object();

  void add_series(const fs::path& outdir, const DiagnosticSeries& s) {
    const std::string file = sanitize_filename(s.name) + ".csv";
    write_file(outdir / file, series_csv(s));
    series[s.name] = file;
  }

  json finish(const ExperimentConfig& cfg, double total_ms, int& exit_code) {
    json doc;
    doc["tool"] = {{"name", std::string(tool_name)},
                   {"version", std::string(tool_version)}};
    doc["kind"] = to_string(cfg.kind);
    doc["name"] = cfg.name;
    doc["config"] = cfg.echo();
    doc["series"] = series;
    json vj = json::array();
    for (const TheoremVerdict& v : verdicts) vj.push_back(verdict_to_json(v));
    doc["verdicts"] = vj;
    doc["warnings"] = warnings;
    timings["total_ms"] = total_ms;
    doc["timings_ms"] = timings;
    exit_code = exit_code_from_verdicts(verdicts);
    doc["exit_code"] = exit_code;
    return doc;
  }
};

void warn_test_only(ReportBuilder& rb, const Nonlinearity& f) {
  if (f.test_only())
    rb.warnings.push_back("nonlinearity '" + f.descriptor() +
                          "' is test-only: it violates the growth-theorem "
                          "hypotheses, verdicts are not theorem checks");
}

LimitModel model_of(const ExperimentConfig& cfg) {
  return *parse_limit_model(cfg.extrapolation.model);
}

StepControl step_control(const StepSpec& s) { return {s.h, s.adaptive, s.tol}; }

RunReport run_fde_growth(const ExperimentConfig& cfg, const fs::path& outdir) {
  const auto t0 = clock_t_::now();
  ReportBuilder rb;

  const Nonlinearity f = cfg.f.build();
  warn_test_only(rb, f);
  const DelayMeasure m = cfg.measure.build(cfg.tolerances.quadrature);
  const HistoryFunction psi = cfg.history.build(m.tau());

  VerifyOptions opt;
  opt.tolerance = cfg.tolerances.ratio;
  opt.model = model_of(cfg);
  opt.window_decades = cfg.extrapolation.window_decades;
  opt.grid_t_min = cfg.grid.t_min;
  opt.grid_points_per_decade = cfg.grid.points_per_decade;
  opt.lambda_override = cfg.lambda_override;
  opt.lambda_grid = cfg.lambda_grid.build();
  opt.f_quadrature_tol = cfg.tolerances.f_quadrature;
  opt.inversion_tol = cfg.tolerances.inversion;

  Theorem22Result res =
      verify_theorem22(f, m, psi, cfg.horizon, step_control(cfg.step), opt);
  rb.timings["pipeline_ms"] = ms_since(t0);

  write_file(outdir / "trajectory.csv", trajectory_csv(res.trajectory));
  rb.series["trajectory"] = "trajectory.csv";
  rb.add_series(outdir, res.ratio);
  if (res.lambda.series.size() > 0) rb.add_series(outdir, res.lambda.series);

  const GeomGrid tgrid{cfg.grid.t_min, cfg.horizon, cfg.grid.points_per_decade};
  RateTransform rt(f, cfg.tolerances.f_quadrature, cfg.tolerances.inversion);

  for (const std::string& check : cfg.checks) {
    if (check == "ratio") {
      rb.verdicts.push_back(res.verdict);
    } else if (check == "f-over-t") {
      DiagnosticSeries s = f_over_t_series(res.trajectory, rt, tgrid);
      TheoremVerdict v;
      v.name = "f-over-t";
      v.regime = to_string(res.lambda.regime);
      v.predicted = m.total_mass();
      v.tolerance = cfg.tolerances.f_over_t;
      v.limit = extrapolate_limit(s, LimitModel::aitken,
                                  cfg.extrapolation.window_decades);
      v.estimated = v.limit.estimate;
      v.inconclusive = v.limit.inconclusive;
      v.deviation = std::abs(v.estimated - v.predicted) / v.predicted;
      v.pass = !v.inconclusive && v.deviation <= v.tolerance;
      rb.verdicts.push_back(v);
      rb.add_series(outdir, s);
    } else if (check == "delta") {
      DiagnosticSeries s = delta_series(res.trajectory, f, m, tgrid);
      TheoremVerdict v;
      v.name = "delta";
      v.regime = to_string(res.lambda.regime);
      v.predicted = 1.0;
      v.tolerance = cfg.tolerances.delta;
      if (s.degenerate || s.size() < 6) {
        v.regime = s.degenerate ? s.degenerate_reason : "too few usable points";
        v.inconclusive = true;
        v.deviation = std::numeric_limits<double>::infinity();
      } else {
        v.limit = extrapolate_limit(s, LimitModel::raw,
                                    cfg.extrapolation.window_decades);
        v.estimated = v.limit.estimate;
        v.inconclusive = v.limit.inconclusive;
        v.deviation = std::abs(v.estimated - v.predicted) / v.predicted;
        v.pass = !v.inconclusive && v.deviation <= v.tolerance;
      }
      rb.verdicts.push_back(v);
      rb.add_series(outdir, s);
    }
  }

  json lj;
  lj["regime"] = to_string(res.lambda.regime);
  lj["value"] = num_or_null(res.lambda.value);
  lj["uncertainty"] = num_or_null(res.lambda.uncertainty);
  lj["overridden"] = cfg.lambda_override.has_value();

  RunReport report;
  report.document = rb.finish(cfg, ms_since(t0), report.exit_code);
  report.document["lambda"] = lj;
  write_file(outdir / "report.json", report.document.dump(2) + "\n");
  return report;
}

RunReport run_hw_compare(const ExperimentConfig& cfg, const fs::path& outdir) {
  const auto t0 = clock_t_::now();
  ReportBuilder rb;

  const Nonlinearity f = cfg.f.build();
  warn_test_only(rb, f);
  const Perturbation eps =
      cfg.perturbation.kind == "scaled-ffprime"
          ? Perturbation::scaled_ffprime(f, cfg.perturbation.c)
          : Perturbation::scaled_f(f, cfg.perturbation.c);

  HwOptions opt;
  opt.tolerance = cfg.tolerances.hw_ratio;
  opt.mu_tolerance = cfg.tolerances.hw_mu;
  opt.model = model_of(cfg);
  opt.window_decades = cfg.extrapolation.window_decades;
  opt.grid_t_min = cfg.grid.t_min;
  opt.grid_points_per_decade = cfg.grid.points_per_decade;
  opt.mu_horizon_u = cfg.u_grid.hi;
  opt.mu_points_per_decade = cfg.u_grid.points_per_decade;

  HwResult res = hw_experiment(f, eps, cfg.x0, cfg.y0, cfg.horizon, step_control(cfg.step),
                               opt, cfg.expected_mu);
  rb.timings["pipeline_ms"] = ms_since(t0);

  write_file(outdir / "trajectory_x.csv", trajectory_csv(res.x));
  write_file(outdir / "trajectory_y.csv", trajectory_csv(res.y));
  rb.series["trajectory_x"] = "trajectory_x.csv";
  rb.series["trajectory_y"] = "trajectory_y.csv";
  rb.add_series(outdir, res.ratio);
  rb.add_series(outdir, res.mu_series);

  for (const std::string& check : cfg.checks) {
    if (check == "hw-mu") rb.verdicts.push_back(res.mu_verdict);
    else if (check == "hw-ratio") rb.verdicts.push_back(res.ratio_verdict);
  }

  RunReport report;
  report.document = rb.finish(cfg, ms_since(t0), report.exit_code);
  write_file(outdir / "report.json", report.document.dump(2) + "\n");
  return report;
}

RunReport run_f_diagnostics(const ExperimentConfig& cfg, const fs::path& outdir) {
  const auto t0 = clock_t_::now();
  ReportBuilder rb;

  const Nonlinearity f = cfg.f.build();
  warn_test_only(rb, f);

  for (const std::string& check : cfg.checks) {
    if (check == "lambda") {
      LambdaEstimate est = estimate_lambda(f, cfg.lambda_grid.build());
      TheoremVerdict v;
      v.name = "lambda";
      v.regime = to_string(est.regime);
      v.estimated = est.value;
      v.predicted = est.value;
      v.tolerance = 0.0;
      v.inconclusive = est.regime == LambdaRegime::inconclusive;
      v.pass = !v.inconclusive;
      v.limit.estimate = est.value;
      v.limit.uncertainty = est.uncertainty;
      v.limit.model = LimitModel::aitken;
      v.limit.samples_used = static_cast<int>(est.series.size());
      v.limit.inconclusive = v.inconclusive;
      rb.verdicts.push_back(v);
      if (est.series.size()) rb.add_series(outdir, est.series);
    } else if (check == "rv0") {
      TheoremVerdict v;
      v.name = "rv0";
      v.predicted = 1.0;
      v.tolerance = cfg.tolerances.rv;
      try {
        RvCheck rv = check_rv_index_fprime(f, cfg.rv_sigma, cfg.u_grid.build(),
                                           cfg.tolerances.rv);
        v.regime = rv.consistent_rv0 ? "rv0-consistent" : "rv0-violated";
        v.limit = rv.limit;
        v.estimated = rv.limit.estimate;
        v.inconclusive = rv.limit.inconclusive;
        v.deviation = std::abs(v.estimated - 1.0);
        v.pass = rv.consistent_rv0;
        rb.add_series(outdir, rv.series);
      } catch (const std::domain_error& e) {
        // f' vanishes somewhere on the probe grid; the RV(0) ratio is undefined.
        v.regime = "rv0-undefined";
        v.inconclusive = true;
        v.pass = false;
        rb.warnings.push_back(std::string("rv0 probe undefined: ") + e.what());
      }
      rb.verdicts.push_back(v);
    }
  }
  rb.timings["pipeline_ms"] = ms_since(t0);

  RunReport report;
  report.document = rb.finish(cfg, ms_since(t0), report.exit_code);
  write_file(outdir / "report.json", report.document.dump(2) + "\n");
  return report;
}

RunReport run_sweep(const ExperimentConfig& cfg, const fs::path& outdir,
                    int jobs) {
  const auto t0 = clock_t_::now();

  struct SubRun {
    ExperimentConfig cfg;
    fs::path dir;
    std::string dir_name;
    double alpha = 0.0;
    std::string measure;
    double M = 0.0, C = 0.0;
    int exit_code = 0;
    std::string error;
    json verdicts;  // from the sub-report
  };

  std::vector<SubRun> runs;
  std::size_t index = 0;
  for (double alpha : cfg.sweep.alphas) {
    for (const MeasureSpec& mspec : cfg.sweep.measures) {
      SubRun r;
      r.cfg = cfg;
      r.cfg.kind = ExperimentKind::fde_growth;
      r.cfg.sweep = SweepSpec{};
      if (cfg.f.family == "paper-example") r.cfg.f.alpha = alpha;
      r.cfg.measure = mspec;
      char buf[16];
      std::snprintf(buf, sizeof buf, "run_%03zu", index);
      r.dir_name = buf;
      r.cfg.name = cfg.name + "/" + r.dir_name;
      r.dir = outdir / r.dir_name;
      r.alpha = alpha;
      r.measure = mspec.summary();
      DelayMeasure m = mspec.build(cfg.tolerances.quadrature);
      r.M = m.total_mass();
      r.C = m.delay_moment();
      runs.push_back(std::move(r));
      ++index;
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&runs, &next] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      SubRun& r = runs[i];
      try {
        RunReport rep = run_experiment(r.cfg, r.dir, 1);
        r.exit_code = rep.exit_code;
        r.verdicts = rep.document["verdicts"];
      } catch (const config_error& e) {
        r.exit_code = 1;
        r.error = e.what();
      } catch (const std::invalid_argument& e) {
        r.exit_code = 1;
        r.error = e.what();
      } catch (const std::exception& e) {
        r.exit_code = 4;
        r.error = e.what();
      }
    }
  };
  const int workers = std::max(
      1, std::min<int>(jobs, static_cast<int>(runs.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  // Aggregate: table rows in run order, one verdict summary per sub-run.
  json table = json::array();
  std::string csv =
      "run,alpha,measure,M,C,regime,predicted,estimated,deviation,pass,exit_code\n";
  int agg = 0;
  auto raise = [&agg](int code) {  // precedence 4 > 2 > 3 > 0
    static const auto rank = [](int c) { return c == 4 ? 3 : c == 2 ? 2 : c == 3 ? 1 : 0; };
    if (rank(code) > rank(agg)) agg = code;
  };
  for (const SubRun& r : runs) {
    json row;
    row["dir"] = r.dir_name;
    row["alpha"] = r.alpha;
    row["measure"] = r.measure;
    row["M"] = r.M;
    row["C"] = r.C;
    row["exit_code"] = r.exit_code;
    std::string regime = "error", pred = "", est = "", dev = "";
    bool pass = false;
    if (!r.error.empty()) {
      row["error"] = r.error;
    } else {
      row["verdicts"] = r.verdicts;
      for (const json& v : r.verdicts) {
        if (v["name"] == "ratio") {
          regime = v["regime"].get<std::string>();
          pred = v["predicted"].is_null() ? "" : format_g17(v["predicted"].get<double>());
          est = v["estimated"].is_null() ? "" : format_g17(v["estimated"].get<double>());
          dev = v["deviation"].is_null() ? "" : format_g17(v["deviation"].get<double>());
          pass = v["pass"].get<bool>();
        }
      }
    }
    csv += r.dir_name + "," + format_g17(r.alpha) + "," + r.measure + "," +
           format_g17(r.M) + "," + format_g17(r.C) + "," + regime + "," + pred +
           "," + est + "," + dev + "," + (pass ? "1" : "0") + "," +
           std::to_string(r.exit_code) + "\n";
    table.push_back(row);
    raise(r.exit_code);
  }
  write_file(outdir / "sweep_summary.csv", csv);

  RunReport report;
  report.exit_code = agg;
  json doc;
  doc["tool"] = {{"name", std::string(tool_name)},
                 {"version", std::string(tool_version)}};
  doc["kind"] = "sweep";
  doc["name"] = cfg.name;
  doc["config"] = cfg.echo();
  doc["series"] = {{"summary", "sweep_summary.csv"}};
  doc["runs"] = table;
  doc["timings_ms"] = {{"total_ms", ms_since(t0)}};
  doc["exit_code"] = agg;
  report.document = std::move(doc);
  write_file(outdir / "report.json", report.document.dump(2) + "\n");
  return report;
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& outdir, int jobs) {
  std::filesystem::create_directories(outdir);
  switch (cfg.kind) {
    case ExperimentKind::fde_growth: return run_fde_growth(cfg, outdir);
    case ExperimentKind::hw_compare: return run_hw_compare(cfg, outdir);
    case ExperimentKind::f_diagnostics: return run_f_diagnostics(cfg, outdir);
    case ExperimentKind::sweep: return run_sweep(cfg, outdir, jobs);
  }
  throw std::logic_error("unreachable experiment kind");
}

}  // namespace fdegrow
