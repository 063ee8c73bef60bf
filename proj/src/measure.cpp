#include "fdegrow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fdegrow/quadrature.hpp"

namespace fdegrow {
namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

DelayMeasure::DelayMeasure(double tau, std::vector<Atom> atoms,
                           std::vector<DensityPiece> pieces,
                           double quad_rel_tol)
    : tau_(tau),
      atoms_(std::move(atoms)),
      pieces_(std::move(pieces)),
      quad_tol_(quad_rel_tol) {
  if (!(tau_ > 0.0) || !std::isfinite(tau_))
    throw std::invalid_argument("delay horizon tau must be positive, got " +
                                fmt(tau_));
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (!std::isfinite(a.location) || a.location < -tau_ || a.location > 0.0)
      throw std::invalid_argument("atom " + std::to_string(i) + ": location " +
                                  fmt(a.location) + " outside [-" + fmt(tau_) +
                                  ", 0]");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight))
      throw std::invalid_argument("atom " + std::to_string(i) + ": weight " +
                                  fmt(a.weight) + " must be strictly positive");
  }
  std::vector<std::pair<double, double>> spans;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const DensityPiece& p = pieces_[i];
    if (!p.density)
      throw std::invalid_argument("density piece " + std::to_string(i) +
                                  " (" + p.label + "): no density function");
    if (!(p.a < p.b) || p.a < -tau_ - 1e-15 || p.b > 1e-15)
      throw std::invalid_argument("density piece " + std::to_string(i) + " (" +
                                  p.label + "): [" + fmt(p.a) + ", " +
                                  fmt(p.b) + "] is not a subinterval of [-" +
                                  fmt(tau_) + ", 0]");
    for (int k = 0; k <= 32; ++k) {
      const double s = p.a + (p.b - p.a) * k / 32.0;
      if (p.density(s) < -1e-12)
        throw std::invalid_argument("density piece " + std::to_string(i) +
                                    " (" + p.label + "): negative at s = " +
                                    fmt(s));
    }
    spans.emplace_back(p.a, p.b);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].first < spans[i - 1].second - 1e-15)
      throw std::invalid_argument(
          "density pieces overlap: [" + fmt(spans[i - 1].first) + ", " +
          fmt(spans[i - 1].second) + "] and [" + fmt(spans[i].first) + ", " +
          fmt(spans[i].second) + "]");

  mass_ = integrate_against([](double) { return 1.0; });
  moment_ = integrate_against([](double s) { return std::abs(s); });
  if (!(mass_ > 0.0) || !std::isfinite(mass_))
    throw std::invalid_argument("measure has no positive finite mass (M = " +
                                fmt(mass_) + ")");
}

double DelayMeasure::integrate_against(
    const std::function<double(double)>& g) const {
  double total = 0.0;
  for (const Atom& a : atoms_) total += a.weight * g(a.location);
  for (const DensityPiece& p : pieces_) {
    try {
      total += integrate([&](double s) { return p.density(s) * g(s); }, p.a,
                         p.b, quad_tol_);
    } catch (const quadrature_error& e) {
      throw quadrature_error("density piece '" + p.label + "': " + e.what(),
                             e.a, e.b);
    }
  }
  return total;
}

double DelayMeasure::atom_weight_at_zero() const {
  double w = 0.0;
  for (const Atom& a : atoms_)
    if (a.location == 0.0) w += a.weight;
  return w;
}

bool DelayMeasure::has_mass_inside(double gap) const {
  for (const Atom& a : atoms_)
    if (a.location > -gap && a.location < 0.0) return true;
  for (const DensityPiece& p : pieces_)
    if (p.b > -gap) return true;
  return false;
}

}  // namespace fdegrow
