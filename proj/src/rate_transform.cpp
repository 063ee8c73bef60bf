#include "fdegrow/rate_transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdegrow/quadrature.hpp"

namespace fdegrow {

RateTransform::RateTransform(Nonlinearity f, double quad_rel_tol,
                             double inversion_tol)
    : f_(std::move(f)), quad_tol_(quad_rel_tol), inv_tol_(inversion_tol) {
  ku_.push_back(0.0);  // F(1) = 0
  kF_.push_back(0.0);
}

double RateTransform::segment_integral(double a, double b) const {
  return integrate([this](double w) { return std::exp(w - f_.logf(w)); }, a, b,
                   quad_tol_);
}

// Knot ladder is fixed (geometric-ish in u), so the cache contents depend only
// on how far it has been extended, never on query order: determinism.
void RateTransform::extend_to(double u) const {
  while (ku_.back() < u) {
    const double next = std::max(ku_.back() * 1.05, ku_.back() + 0.05);
    kF_.push_back(kF_.back() + segment_integral(ku_.back(), next));
    ku_.push_back(next);
  }
}

double RateTransform::value_log(double u) const {
  if (!std::isfinite(u)) throw std::invalid_argument("non-finite u");
  if (u < 0.0) return -segment_integral(u, 0.0);
  std::lock_guard<std::mutex> lk(lock_);
  extend_to(u);
  // Last knot at or below u, then an exact partial segment on top.
  const auto it = std::upper_bound(ku_.begin(), ku_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - ku_.begin()) - 1;
  if (ku_[i] == u) return kF_[i];
  return kF_[i] + segment_integral(ku_[i], u);
}

double RateTransform::invert(double t) const {
  if (!std::isfinite(t)) throw std::domain_error("non-finite t");
  std::lock_guard<std::mutex> lk(lock_);

  double lo, hi;
  if (t >= 0.0) {
    extend_to(0.05);
    while (kF_.back() < t) {
      const double next = std::max(ku_.back() * 1.05, ku_.back() + 0.05);
      kF_.push_back(kF_.back() + segment_integral(ku_.back(), next));
      ku_.push_back(next);
    }
    const auto it = std::lower_bound(kF_.begin(), kF_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - kF_.begin());
    if (kF_[j] == t) return ku_[j];
    lo = ku_[j - 1];
    hi = ku_[j];
  } else {
    hi = 0.0;
    lo = -0.5;
    while (-segment_integral(lo, 0.0) > t) {
      hi = lo;
      lo *= 2.0;
      if (lo < -60.0)
        throw std::domain_error("t = " + std::to_string(t) +
                                " is below the range of F");
    }
  }

  auto F = [&](double u) {
    if (u >= 0.0) {
      const auto it = std::upper_bound(ku_.begin(), ku_.end(), u);
      const std::size_t i = static_cast<std::size_t>(it - ku_.begin()) - 1;
      return ku_[i] == u ? kF_[i] : kF_[i] + segment_integral(ku_[i], u);
    }
    return -segment_integral(u, 0.0);
  };

  double u = 0.5 * (lo + hi);
  double g = F(u) - t;
  const double target = inv_tol_ * std::max(1.0, std::abs(t));
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(g) <= target) return u;
    if (g > 0.0) hi = u; else lo = u;
    const double slope = std::exp(u - f_.logf(u));  // F'(u) > 0
    double next = u - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // safeguard
    u = next;
    g = F(u) - t;
  }
  throw std::runtime_error("F inversion failed to converge at t = " +
                           std::to_string(t));
}

DiagnosticSeries RateTransform::asymptotic_ratio_series(
    double alpha, double u_max, int points_per_decade) const {
  const auto a = f_.parameter("alpha");
  if (f_.family() != "paper-example" || !a ||
      std::abs(*a - alpha) > 1e-12 * std::max(1.0, std::abs(alpha)))
    throw std::invalid_argument(
        "asymptotic ratio series requires the paper family with alpha = " +
        std::to_string(alpha));
  DiagnosticSeries s;
  s.name = "F-asymptotic-ratio";
  s.meta = f_.descriptor();
  for (double u : GeomGrid{10.0, u_max, points_per_decade}.points()) {
    s.t.push_back(u);
    s.value.push_back(value_log(u) * (1.0 + alpha) /
                      std::pow(u, alpha + 1.0));
    s.scale.push_back(u);
  }
  return s;
}

}  // namespace fdegrow
