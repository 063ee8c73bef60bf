#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fdegrow {

// A sampled diagnostic s(t) on a strictly increasing grid. `scale`, when
// present, carries the natural convergence scale of the series (for growth
// ratios this is log x(t)); the log-fit extrapolation regresses against its
// reciprocal and falls back to 1/log t for plain series.
struct DiagnosticSeries {
  std::string name;
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> scale;  // empty or same length as t
  std::string meta;
  bool degenerate = false;
  std::string degenerate_reason;

  std::size_t size() const { return t.size(); }
};

enum class LimitModel { raw, aitken, log_fit };

std::string to_string(LimitModel m);
std::optional<LimitModel> parse_limit_model(const std::string& name);

struct LimitEstimate {
  double estimate = 0.0;
  double uncertainty = 0.0;  // heuristic half-width
  LimitModel model = LimitModel::raw;
  int samples_used = 0;
  bool inconclusive = false;
  bool divergent = false;
};

// One pass of Aitken delta-squared; entries with a vanishing second
// difference are dropped. Exact on sequences L + c*r^n.
std::vector<double> aitken_pass(const std::vector<double>& v);

// Extrapolate the t->infinity limit of a series from its tail (the last
// `window_decades` of the t-range, at least 6 samples).
//   raw:     last value, half-spread of the last three as uncertainty
//   aitken:  iterated delta-squared acceleration of the tail
//   log_fit: least squares of value ~ L + a*z + b*z*log(1/z), z = 1/scale(t)
// An oscillating, non-contracting tail yields an inconclusive estimate with
// infinite uncertainty. Fewer than 6 samples is a precondition violation.
LimitEstimate extrapolate_limit(const DiagnosticSeries& s, LimitModel model,
                                double window_decades = 1.0);

}  // namespace fdegrow
