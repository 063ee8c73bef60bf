#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdegrow/integrator.hpp"
#include "fdegrow/measure.hpp"
#include "fdegrow/nonlinearity.hpp"

namespace fdegrow {

using json = nlohmann::ordered_json;

// Configuration problem with the offending field path; the CLI maps this to
// exit code 1.
struct config_error : std::runtime_error {
  std::string field;
  config_error(std::string field_, const std::string& msg)
      : std::runtime_error(field_.empty() ? msg : field_ + ": " + msg),
        field(std::move(field_)) {}
};

enum class ExperimentKind { fde_growth, hw_compare, f_diagnostics, sweep };

std::string to_string(ExperimentKind k);

struct NonlinearitySpec {
  std::string family = "paper-example";
  double alpha = 1.0;  // paper-example
  double p = 0.5;      // power
  double value = 1.0;  // constant-test
  double c = 1.0;      // loglinear-test

  Nonlinearity build() const;
  json echo() const;
};

struct AtomSpec {
  double location = 0.0;
  double weight = 1.0;
};

struct DensitySpec {
  double a = -1.0, b = 0.0;
  std::string expression = "constant";  // constant | linear | exp
  double value = 1.0;                   // constant
  double v0 = 1.0, v1 = 1.0;            // linear: values at a and b
  double amplitude = 1.0, rate = 0.0;   // exp: amplitude * e^{rate s}
  std::string label;

  DensityPiece build() const;
  json echo() const;
};

struct MeasureSpec {
  double tau = 1.0;
  std::vector<AtomSpec> atoms{{0.0, 1.0}, {-1.0, 1.0}};
  std::vector<DensitySpec> densities;

  DelayMeasure build(double quad_rel_tol) const;
  json echo() const;
  std::string summary() const;  // compact one-line descriptor for tables
};

struct HistorySpec {
  std::string kind = "constant";  // constant | affine | exp
  double value = 1.0;             // constant / exp start value
  double a = 1.0, b = 0.0;        // affine: psi(s) = a + b s
  double rate = 0.0;              // exp

  // Positivity on [-tau, 0] is sample-checked here; failures are config
  // errors, not integrator crashes.
  HistoryFunction build(double tau) const;
  json echo() const;
};

struct StepSpec {
  double h = 0.02;
  bool adaptive = false;
  double tol = 1e-8;
};

struct GridSpec {
  double t_min = 1.0;
  int points_per_decade = 16;
};

struct ToleranceSpec {
  double ratio = 0.10;
  double f_over_t = 0.02;
  double delta = 0.15;
  double hw_mu = 0.05;
  double hw_ratio = 0.10;
  double rv = 0.01;
  double quadrature = 1e-10;    // delay-measure density pieces
  double f_quadrature = 1e-9;   // rate-transform knots
  double inversion = 1e-10;     // F inversion
};

struct ExtrapolationSpec {
  std::string model = "log-fit";
  double window_decades = 1.0;
};

struct PerturbationSpec {
  std::string kind = "scaled-ffprime";  // scaled-ffprime | scaled-f
  double c = 0.5;
};

struct GeomGridSpec {
  double lo = 10.0;
  double hi = 1e4;
  int points_per_decade = 8;

  GeomGrid build() const { return {lo, hi, points_per_decade}; }
};

struct SweepSpec {
  std::vector<double> alphas;        // empty: inherit base alpha
  std::vector<MeasureSpec> measures; // empty: inherit base measure
  int max_runs = 64;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::fde_growth;
  std::string name = "experiment";
  NonlinearitySpec f;
  MeasureSpec measure;
  HistorySpec history;
  double horizon = 1000.0;
  StepSpec step;
  GridSpec grid;
  ToleranceSpec tolerances;
  ExtrapolationSpec extrapolation;
  std::optional<double> lambda_override;
  GeomGridSpec lambda_grid;                 // lambda classification grid (u-domain)
  GeomGridSpec u_grid;                      // RV probe / hw-mu horizon (u-domain)
  double rv_sigma = 2.0;
  PerturbationSpec perturbation;            // hw-compare
  double x0 = 1.0, y0 = 1.0;                // hw-compare
  std::optional<double> expected_mu;        // hw-compare analytic target
  std::vector<std::string> checks;          // resolved (defaults applied)
  SweepSpec sweep;

  json echo() const;  // fully resolved config, sufficient to re-run exactly
};

// Parse + validate a config document. Unknown keys, wrong types, and values
// the constructors would reject all surface as config_error with a field
// path. Defaults are filled; `checks` is resolved against the experiment
// kind.
ExperimentConfig parse_config(const json& doc);

// Read and parse a JSON file; parse errors carry the filename.
json load_json_file(const std::string& path);

// Apply one --override key=value: dotted path into the document, value parsed
// as JSON when possible, literal string otherwise. Numeric path tokens index
// arrays.
void apply_override(json& doc, const std::string& assignment);

}  // namespace fdegrow
