#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdegrow/series.hpp"

namespace fdegrow {

// Geometric grid lo * 10^(k/points_per_decade), ..., hi (hi always included).
struct GeomGrid {
  double lo = 1.0;
  double hi = 1e4;
  int points_per_decade = 8;

  std::vector<double> points() const;
  double decades() const;
};

// The nonlinearity f with derivative and log-domain channels. Families are
// registered with closed-form derivatives; no runtime differentiation.
// Log-domain channels take u = log x and stay finite for u up to 1e6.
class Nonlinearity {
 public:
  double f(double x) const { return f_(x); }
  double fprime(double x) const { return fprime_(x); }
  double logf(double u) const { return logf_(u); }            // log f(e^u)
  double logfprime(double u) const { return logfprime_(u); }  // log f'(e^u)

  double x1() const { return x1_; }  // f' > 0 for x > x1
  const std::string& descriptor() const { return descriptor_; }
  const std::string& family() const { return family_; }
  std::optional<double> parameter(const std::string& key) const;

  bool bounded() const { return bounded_; }      // finite limit at infinity
  bool test_only() const { return test_only_; }  // violates theorem hypotheses

  // f(x) = (x+1)/log^alpha(2+x); x1 = e^alpha - 2.
  static Nonlinearity paper_example(double alpha);
  // f(x) = (1+x)^p, 0 < p < 1 (test-only: f' is RV(p-1), not RV(0)).
  static Nonlinearity power(double p);
  // f(x) = x (test-only: f' does not vanish at infinity).
  static Nonlinearity linear_test();
  // f = c (test-only: bounded).
  static Nonlinearity constant_test(double c = 1.0);
  // f(x) = c x / log(x+e); critical rate exactly c.
  static Nonlinearity loglinear_test(double c);

 private:
  std::function<double(double)> f_, fprime_;
  std::function<double(double)> logf_, logfprime_;
  double x1_ = 0.0;
  std::string descriptor_, family_;
  std::map<std::string, double> params_;
  bool bounded_ = false;
  bool test_only_ = false;
};

enum class LambdaRegime { zero, finite, infinite, bounded_trivial, inconclusive };

std::string to_string(LambdaRegime r);

struct LambdaEstimate {
  LambdaRegime regime = LambdaRegime::inconclusive;
  double value = 0.0;  // meaningful for finite
  double uncertainty = 0.0;
  DiagnosticSeries series;  // r(u) samples, abscissa u = log x
};

// Classify lambda = lim f(x)/(x/log x) from r(u) = u f(e^u) e^{-u} sampled on
// a log-domain grid spanning at least 3 decades:
//   bounded f        -> bounded_trivial (theorem verification short-circuits)
//   tail strictly increasing with clearly positive log-log slope (or r > 1e3)
//                    -> infinite
//   tail decreasing below 1e-3 (or accelerated limit below 1e-6) -> zero
//   accelerated tail stable to <1% across the last decade -> finite(value)
//   otherwise        -> inconclusive (never a fabricated number)
LambdaEstimate estimate_lambda(const Nonlinearity& f,
                               const GeomGrid& grid = {10.0, 1e4, 8});

struct RvCheck {
  DiagnosticSeries series;  // f'(sigma x)/f'(x) against u = log x
  LimitEstimate limit;
  bool consistent_rv0 = false;
};

// Regular-variation probe for f': the ratio f'(sigma x)/f'(x) tends to
// sigma^beta for f' in RV(beta); the theorems need beta = 0.
RvCheck check_rv_index_fprime(const Nonlinearity& f, double sigma,
                              const GeomGrid& grid = {10.0, 1e4, 8},
                              double tol = 1e-2);

}  // namespace fdegrow
