#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// End-to-end tests: drive the installed binary as a black box through
// std::system and assert on exit codes, stdout/stderr, and the files it
// writes. FDEGROW_CLI_PATH is injected by the build.

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("fdegrow_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path of = scratch / "_stdout.txt";
  const fs::path ef = scratch / "_stderr.txt";
  const std::string cmd = std::string("\"") + FDEGROW_CLI_PATH + "\" " + args +
                          " >\"" + of.string() + "\" 2>\"" + ef.string() + "\"";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  r.out = slurp(of);
  r.err = slurp(ef);
  return r;
}

fs::path write_config(const fs::path& dir, const json& doc,
                      const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << doc.dump(2) << "\n";
  return p;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

// Critical-case base config: alpha = 1, delta_0 + delta_{-1} (M = 2, C = 1).
json growth_config(double alpha, double horizon, double h) {
  json j;
  j["kind"] = "fde-growth";
  j["name"] = "cli-test";
  j["nonlinearity"] = {{"family", "paper-example"}, {"alpha", alpha}};
  j["measure"] = {{"tau", 1.0},
                  {"atoms", json::array({json{{"location", 0.0}, {"weight", 1.0}},
                                         json{{"location", -1.0}, {"weight", 1.0}}})}};
  j["history"] = {{"kind", "constant"}, {"value", 1.0}};
  j["horizon"] = horizon;
  j["step"] = {{"h", h}};
  return j;
}

json load_report(const fs::path& outdir) {
  const fs::path p = outdir / "report.json";
  REQUIRE_MESSAGE(fs::exists(p), "missing " << p.string());
  return json::parse(slurp(p));
}

json find_verdict(const json& report, const std::string& name) {
  for (const json& v : report["verdicts"])
    if (v["name"] == name) return v;
  REQUIRE_MESSAGE(false, "no verdict named " << name);
  return {};
}

}  // namespace

TEST_CASE("cli: version prints the tool id") {
  TempDir tmp;
  const RunResult r = run_cli("version", tmp.path);
  CHECK(r.code == 0);
  CHECK(r.out == "fdegrow 0.1.0\n");
  CHECK(r.err.empty());
}

TEST_CASE("cli: usage errors are reported by the parser") {
  TempDir tmp;
  const RunResult none = run_cli("", tmp.path);
  CHECK(none.code != 0);
  const RunResult bare = run_cli("run", tmp.path);  // --config is required
  CHECK(bare.code != 0);
  CHECK(!bare.err.empty());
}

TEST_CASE("cli: critical growth run passes end to end") {
  TempDir tmp;
  const fs::path cfile = write_config(tmp.path, growth_config(1.0, 400.0, 0.05));
  const fs::path out = tmp.path / "deep" / "out";  // --out dirs are created
  const RunResult r =
      run_cli("run --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "[PASS] ratio (finite)"));
  CHECK(contains(r.out, "report:"));

  const json rep = load_report(out);
  CHECK(rep["exit_code"].get<int>() == 0);
  CHECK(rep["kind"] == "fde-growth");
  CHECK(rep["tool"]["name"] == "fdegrow");
  CHECK(rep["tool"]["version"] == "0.1.0");
  CHECK(rep["lambda"]["regime"] == "finite");

  // Default checks for a measure with C > 0: ratio, f-over-t, delta.
  const json ratio = find_verdict(rep, "ratio");
  CHECK(ratio["pass"].get<bool>());
  CHECK(!ratio["inconclusive"].get<bool>());
  CHECK(ratio["predicted"].get<double>() ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  const json fot = find_verdict(rep, "f-over-t");
  CHECK(fot["pass"].get<bool>());
  CHECK(fot["predicted"].get<double>() == 2.0);  // total mass
  const json delta = find_verdict(rep, "delta");
  CHECK(delta["pass"].get<bool>());
  CHECK(delta["predicted"].get<double>() == 1.0);

  CHECK(rep["series"]["ratio"] == "ratio.csv");
  for (const char* f : {"trajectory.csv", "ratio.csv", "f_over_t.csv",
                        "delta.csv", "lambda_probe.csv"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK(slurp(out / "trajectory.csv").rfind("t,log_x,dlog_x_dt,x\n", 0) == 0);
  CHECK(slurp(out / "ratio.csv").rfind("t,value,scale\n", 0) == 0);
}

TEST_CASE("cli: identical runs produce byte-identical artifacts") {
  TempDir tmp;
  json cfg = growth_config(1.0, 100.0, 0.05);
  cfg["checks"] = json::array({"ratio"});
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path a = tmp.path / "a";
  const fs::path b = tmp.path / "b";
  const RunResult ra =
      run_cli("run --config " + quoted(cfile) + " --out " + quoted(a), tmp.path);
  const RunResult rb =
      run_cli("run --config " + quoted(cfile) + " --out " + quoted(b), tmp.path);
  CHECK(ra.code == rb.code);
  for (const char* f : {"trajectory.csv", "ratio.csv", "lambda_probe.csv"}) {
    const std::string fa = slurp(a / f);
    REQUIRE(!fa.empty());
    CHECK_MESSAGE(fa == slurp(b / f), f);
  }
}

TEST_CASE("cli: an impossible tolerance fails the ratio verdict") {
  TempDir tmp;
  json cfg = growth_config(1.0, 50.0, 0.05);
  cfg["checks"] = json::array({"ratio"});
  cfg["tolerances"] = {{"ratio", 1e-6}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r =
      run_cli("run --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CHECK(r.code == 2);
  CHECK(contains(r.out, "[FAIL] ratio"));
  const json v = find_verdict(load_report(out), "ratio");
  CHECK(!v["pass"].get<bool>());
  CHECK(!v["inconclusive"].get<bool>());
  CHECK(v["deviation"].get<double>() > 1e-6);
}

TEST_CASE("cli: rejected configs name the offending field") {
  TempDir tmp;
  const fs::path out = tmp.path / "out";
  auto expect_rejects = [&](const json& doc, const std::string& subcmd,
                            const std::string& needle, const std::string& fname) {
    const fs::path c = write_config(tmp.path, doc, fname);
    const RunResult r = run_cli(
        subcmd + " --config " + quoted(c) + " --out " + quoted(out), tmp.path);
    CAPTURE(fname);
    CAPTURE(r.err);
    CHECK(r.code == 1);
    CHECK(contains(r.err, "config error:"));
    CHECK(contains(r.err, needle));
  };

  json neg = growth_config(1.0, 100.0, 0.05);
  neg["measure"]["atoms"][1]["weight"] = -2.0;
  expect_rejects(neg, "run", "atom 1", "neg_atom.json");

  expect_rejects(json{{"horzon", 100.0}}, "run", "horzon: unknown key",
                 "typo.json");

  expect_rejects(json{{"nonlinearity", {{"family", "cubic"}}}}, "run",
                 "unknown family 'cubic'", "family.json");

  json adapt = growth_config(1.0, 100.0, 0.05);
  adapt["step"]["adaptive"] = true;
  expect_rejects(adapt, "run", "step.adaptive", "adaptive.json");

  json low = growth_config(1.0, 0.5, 0.05);
  expect_rejects(low, "run", "must exceed grid.t_min", "low_horizon.json");

  json wrongcheck = growth_config(1.0, 100.0, 0.05);
  wrongcheck["checks"] = json::array({"hw-mu"});
  expect_rejects(wrongcheck, "run", "not available for kind", "checks.json");

  json nodelay = growth_config(1.0, 100.0, 0.05);  // C = 0: delta is 0/0
  nodelay["measure"]["atoms"] = json::array({json{{"location", 0.0}, {"weight", 1.0}}});
  nodelay["checks"] = json::array({"delta"});
  expect_rejects(nodelay, "run", "degenerate", "nodelay.json");

  json emptysweep = growth_config(1.0, 100.0, 0.05);
  emptysweep["kind"] = "sweep";
  emptysweep["sweep"] = {{"alphas", json::array()}};
  expect_rejects(emptysweep, "sweep", "sweep.alphas: empty range", "sweep0.json");

  json powersweep = growth_config(1.0, 100.0, 0.05);
  powersweep["kind"] = "sweep";
  powersweep["nonlinearity"] = {{"family", "power"}, {"p", 0.5}};
  powersweep["sweep"] = {{"alphas", json::array({0.5, 1.0})}};
  expect_rejects(powersweep, "sweep", "alpha sweeps require", "sweep_pow.json");

  json badeps;  // scaled-f with c = 1 kills positivity of f - eps
  badeps["kind"] = "hw-compare";
  badeps["perturbation"] = {{"kind", "scaled-f"}, {"c", 1.0}};
  expect_rejects(badeps, "run", "perturbation.c", "badeps.json");

  json sweepkind = growth_config(1.0, 100.0, 0.05);
  sweepkind["kind"] = "sweep";
  expect_rejects(sweepkind, "run", "needs the sweep subcommand", "k1.json");
  expect_rejects(growth_config(1.0, 100.0, 0.05), "sweep",
                 "requires kind = sweep", "k2.json");
  expect_rejects(growth_config(1.0, 100.0, 0.05), "check-f",
                 "check-f requires kind = f-diagnostics", "k3.json");

  const RunResult missing = run_cli(
      "run --config " + quoted(tmp.path / "nope.json") + " --out " + quoted(out),
      tmp.path);
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "cannot open config file"));

  const fs::path mangled = tmp.path / "mangled.json";
  std::ofstream(mangled) << "{ not json";
  const RunResult parse = run_cli(
      "run --config " + quoted(mangled) + " --out " + quoted(out), tmp.path);
  CHECK(parse.code == 1);
  CHECK(contains(parse.err, "config error:"));

  const fs::path ok = write_config(tmp.path, growth_config(1.0, 100.0, 0.05));
  const RunResult badov = run_cli("run --config " + quoted(ok) + " --out " +
                                      quoted(out) + " --override horizon",
                                  tmp.path);
  CHECK(badov.code == 1);
  CHECK(contains(badov.err, "--override"));
}

TEST_CASE("cli: check-f classifies the regular family and probes the index") {
  TempDir tmp;
  json cfg;
  cfg["name"] = "diag";
  cfg["nonlinearity"] = {{"family", "paper-example"}, {"alpha", 1.0}};
  const fs::path cfile = write_config(tmp.path, cfg);  // no kind: check-f fills it
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli(
      "check-f --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "[PASS] lambda (finite)"));
  CHECK(contains(r.out, "[PASS] rv0 (rv0-consistent)"));

  const json rep = load_report(out);
  CHECK(rep["kind"] == "f-diagnostics");
  const json rv = find_verdict(rep, "rv0");
  CHECK(rv["pass"].get<bool>());
  CHECK(rv["estimated"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(fs::exists(out / "lambda_probe.csv"));
  CHECK(fs::exists(out / "rv_fprime_ratio.csv"));
}

TEST_CASE("cli: check-f surfaces a violated index hypothesis") {
  TempDir tmp;
  json cfg;
  cfg["nonlinearity"] = {{"family", "power"}, {"p", 0.5}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli(
      "check-f --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CHECK(r.code == 2);
  CHECK(contains(r.out, "[FAIL] rv0 (rv0-violated)"));
  CHECK(contains(r.err, "test-only"));

  const json rep = load_report(out);
  const json lam = find_verdict(rep, "lambda");
  CHECK(lam["regime"] == "zero");
  CHECK(lam["pass"].get<bool>());
  // RV index of x^p is p: the sigma = 2 probe converges to 2^{p-1}, not 1.
  const json rv = find_verdict(rep, "rv0");
  CHECK(!rv["pass"].get<bool>());
  CHECK(rv["estimated"].get<double>() ==
        doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-6));
}

TEST_CASE("cli: check-f reports an undefined probe as inconclusive") {
  TempDir tmp;
  json cfg;
  cfg["nonlinearity"] = {{"family", "constant-test"}, {"value", 2.0}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli(
      "check-f --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 3);  // f' == 0: the ratio probe has no value, nothing failed
  CHECK(contains(r.out, "[INCONCLUSIVE] rv0 (rv0-undefined)"));
  CHECK(contains(r.err, "rv0 probe undefined"));
  const json rep = load_report(out);
  CHECK(find_verdict(rep, "lambda")["regime"] == "bounded-f trivial regime");
  CHECK(find_verdict(rep, "rv0")["inconclusive"].get<bool>());
}

TEST_CASE("cli: hartman-wintner comparison passes through the CLI") {
  TempDir tmp;
  json cfg;
  cfg["kind"] = "hw-compare";
  cfg["nonlinearity"] = {{"family", "paper-example"}, {"alpha", 1.0}};
  cfg["perturbation"] = {{"kind", "scaled-ffprime"}, {"c", 0.5}};
  cfg["x0"] = 1.0;
  cfg["y0"] = 1.0;
  cfg["expected_mu"] = 0.5;
  cfg["horizon"] = 400.0;
  cfg["step"] = {{"h", 0.05}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r =
      run_cli("run --config " + quoted(cfile) + " --out " + quoted(out), tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 0);

  const json rep = load_report(out);
  const json mu = find_verdict(rep, "hw-mu");
  CHECK(mu["pass"].get<bool>());
  CHECK(mu["estimated"].get<double>() == doctest::Approx(0.5).epsilon(1e-3));
  const json ratio = find_verdict(rep, "hw-ratio");
  CHECK(ratio["pass"].get<bool>());
  CHECK(ratio["predicted"].get<double>() ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  for (const char* f : {"trajectory_x.csv", "trajectory_y.csv", "hw_mu.csv",
                        "hw_ratio.csv"})
    CHECK_MESSAGE(fs::exists(out / f), f);
}

TEST_CASE("cli: sweep spans the three growth regimes") {
  TempDir tmp;
  json cfg = growth_config(1.0, 400.0, 0.05);
  cfg["kind"] = "sweep";
  cfg["checks"] = json::array({"ratio"});
  cfg["sweep"] = {{"alphas", json::array({0.5, 1.0, 2.0})}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli("sweep --config " + quoted(cfile) + " --out " +
                                  quoted(out) + " --jobs 3",
                              tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "run_000: alpha=0.5"));

  const json rep = load_report(out);
  REQUIRE(rep["runs"].size() == 3);
  const char* regimes[] = {"infinite", "finite", "zero"};
  for (int i = 0; i < 3; ++i) {
    const json& row = rep["runs"][i];
    CHECK(row["exit_code"].get<int>() == 0);
    CHECK(find_verdict(row, "ratio")["regime"] == regimes[i]);
    CHECK(fs::exists(out / row["dir"].get<std::string>() / "report.json"));
  }
  const std::string csv = slurp(out / "sweep_summary.csv");
  CHECK(csv.rfind("run,alpha,measure,M,C,regime", 0) == 0);
  CHECK(contains(csv, "run_002"));
  CHECK(contains(csv, "infinite"));
}

TEST_CASE("cli: sweep covers measures with distinct predictions") {
  TempDir tmp;
  json cfg = growth_config(1.0, 600.0, 0.05);
  cfg["kind"] = "sweep";
  cfg["checks"] = json::array({"ratio"});
  const json far_atom = {{"tau", 2.0},
                         {"atoms", json::array({json{{"location", -2.0},
                                                     {"weight", 1.0}}})}};
  cfg["sweep"] = {{"measures", json::array({cfg["measure"], far_atom})}};
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli("sweep --config " + quoted(cfile) + " --out " +
                                  quoted(out) + " --jobs 2",
                              tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);
  CHECK(r.code == 0);

  const json rep = load_report(out);
  REQUIRE(rep["runs"].size() == 2);
  // lambda = 1 at the critical alpha, so the limit is e^{-C}: C = 1 vs C = 2.
  CHECK(find_verdict(rep["runs"][0], "ratio")["predicted"].get<double>() ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(find_verdict(rep["runs"][1], "ratio")["predicted"].get<double>() ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(find_verdict(rep["runs"][1], "ratio")["pass"].get<bool>());
}

TEST_CASE("cli: overrides reshape the config before validation") {
  TempDir tmp;
  json cfg = growth_config(1.0, 400.0, 0.05);
  cfg["checks"] = json::array({"ratio"});
  const fs::path cfile = write_config(tmp.path, cfg);
  const fs::path out = tmp.path / "out";
  const RunResult r = run_cli(
      "run --config " + quoted(cfile) + " --out " + quoted(out) +
          " --override horizon=80 --override nonlinearity.alpha=2.0" +
          " --override extrapolation.model=aitken" +
          " --override measure.atoms.1.weight=3",
      tmp.path);
  CAPTURE(r.out);
  CAPTURE(r.err);

  const json echo = load_report(out)["config"];
  CHECK(echo["horizon"].get<double>() == 80.0);
  CHECK(echo["nonlinearity"]["alpha"].get<double>() == 2.0);
  CHECK(echo["extrapolation"]["model"] == "aitken");
  CHECK(echo["measure"]["atoms"][1]["weight"].get<double>() == 3.0);
}
