#pragma once

#include <mutex>
#include <vector>

#include "fdegrow/nonlinearity.hpp"
#include "fdegrow/series.hpp"

namespace fdegrow {

// F(x) = integral_1^x du/f(u) and its inverse, computed entirely in
// u = log x coordinates: F(e^u) = integral_0^u exp(w - logf(w)) dw.
// A monotone knot cache holds cumulative quadrature sums; evaluation adds an
// exact partial-segment quadrature from the nearest knot, so cached and fresh
// queries agree to the quadrature tolerance. The cache extends on demand and
// is internally synchronized; reads see a consistent monotone table.
class RateTransform {
 public:
  explicit RateTransform(Nonlinearity f, double quad_rel_tol = 1e-9,
                         double inversion_tol = 1e-10);
  RateTransform(const RateTransform&) = delete;
  RateTransform& operator=(const RateTransform&) = delete;

  const Nonlinearity& source() const { return f_; }
  double inversion_tolerance() const { return inv_tol_; }

  // F(e^u); u may be negative (x < 1 gives negative values).
  double value_log(double u) const;

  // u with |F(e^u) - t| <= inversion_tol * max(1,|t|); bracketing plus
  // safeguarded Newton on the monotone map u -> F(e^u).
  double invert(double t) const;

  // Series F(e^u)(1+alpha)/u^{alpha+1} over a geometric u-grid; the source
  // must be the paper family with this alpha.
  DiagnosticSeries asymptotic_ratio_series(double alpha, double u_max,
                                           int points_per_decade = 8) const;

 private:
  void extend_to(double u) const;  // caller holds lock_
  double segment_integral(double a, double b) const;

  Nonlinearity f_;
  double quad_tol_;
  double inv_tol_;
  mutable std::mutex lock_;
  mutable std::vector<double> ku_;  // knot positions in u, strictly increasing
  mutable std::vector<double> kF_;  // cumulative F(e^u) at knots
};

}  // namespace fdegrow
