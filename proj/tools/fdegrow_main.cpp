#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdegrow/config.hpp"
#include "fdegrow/experiment.hpp"
#include "fdegrow/integrator.hpp"
#include "fdegrow/quadrature.hpp"
#include "fdegrow/version.hpp"

namespace {

std::string pct(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g%%", 100.0 * v);
  return buf;
}

void print_verdicts(const fdegrow::json& doc) {
  if (!doc.contains("verdicts")) return;
  for (const fdegrow::json& v : doc["verdicts"]) {
    const bool pass = v["pass"].get<bool>();
    const bool inconclusive = v["inconclusive"].get<bool>();
    const char* tag = inconclusive ? "[INCONCLUSIVE]" : pass ? "[PASS]" : "[FAIL]";
    std::printf("%s %s (%s)", tag, v["name"].get<std::string>().c_str(),
                v["regime"].get<std::string>().c_str());
    if (!v["estimated"].is_null())
      std::printf(": estimated %.6g", v["estimated"].get<double>());
    if (!v["predicted"].is_null())
      std::printf(", predicted %.6g", v["predicted"].get<double>());
    if (!v["deviation"].is_null())
      std::printf(" | deviation %s vs tolerance %s",
                  pct(v["deviation"].get<double>()).c_str(),
                  pct(v["tolerance"].get<double>()).c_str());
    std::printf("\n");
  }
}

void print_sweep_table(const fdegrow::json& doc) {
  if (!doc.contains("runs")) return;
  for (const fdegrow::json& r : doc["runs"]) {
    std::printf("%s: alpha=%g %s -> exit %d", r["dir"].get<std::string>().c_str(),
                r["alpha"].get<double>(), r["measure"].get<std::string>().c_str(),
                r["exit_code"].get<int>());
    if (r.contains("error"))
      std::printf(" (%s)", r["error"].get<std::string>().c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fdegrow: delay-equation growth experiments and diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory (default: .)");
    sub->add_option("--jobs", jobs, "parallel sweep sub-runs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--override", overrides,
                    "config override key.path=value (repeatable)");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment");
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a parameter sweep");
  CLI::App* cmd_checkf =
      app.add_subcommand("check-f", "nonlinearity diagnostics only");
  CLI::App* cmd_version = app.add_subcommand("version", "print version");
  add_common(cmd_run);
  add_common(cmd_sweep);
  add_common(cmd_checkf);

  CLI11_PARSE(app, argc, argv);

  if (cmd_version->parsed()) {
    std::printf("%s %s\n", std::string(fdegrow::tool_name).c_str(),
                std::string(fdegrow::tool_version).c_str());
    return 0;
  }

  try {
    fdegrow::json doc = fdegrow::load_json_file(config_path);
    for (const std::string& o : overrides) fdegrow::apply_override(doc, o);

    if (cmd_checkf->parsed()) {
      if (doc.is_object() && doc.contains("kind") &&
          doc["kind"] != "f-diagnostics")
        throw fdegrow::config_error(
            "kind", "check-f requires kind = f-diagnostics (or no kind)");
      if (doc.is_object()) doc["kind"] = "f-diagnostics";
    }

    fdegrow::ExperimentConfig cfg = fdegrow::parse_config(doc);
    if (cmd_run->parsed() && cfg.kind == fdegrow::ExperimentKind::sweep)
      throw fdegrow::config_error("kind", "kind = sweep needs the sweep subcommand");
    if (cmd_sweep->parsed() && cfg.kind != fdegrow::ExperimentKind::sweep)
      throw fdegrow::config_error("kind", "the sweep subcommand requires kind = sweep");

    const fdegrow::RunReport report =
        fdegrow::run_experiment(cfg, out_dir, jobs);

    if (report.document.contains("warnings"))
      for (const fdegrow::json& w : report.document["warnings"])
        std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
    print_verdicts(report.document);
    print_sweep_table(report.document);
    const auto report_path = std::filesystem::path(out_dir) / "report.json";
    std::printf("report: %s (exit %d)\n", report_path.string().c_str(),
                report.exit_code);
    return report.exit_code;
  } catch (const fdegrow::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const fdegrow::integration_error& e) {
    std::fprintf(stderr, "integration failed (last good t = %g): %s\n",
                 e.last_good_t, e.what());
    return 4;
  } catch (const fdegrow::quadrature_error& e) {
    std::fprintf(stderr, "quadrature failed: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
