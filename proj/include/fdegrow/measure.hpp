#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fdegrow {

struct Atom {
  double location = 0.0;  // s in [-tau, 0]
  double weight = 1.0;    // > 0
};

struct DensityPiece {
  double a = 0.0;
  double b = 0.0;  // [a,b] subset of [-tau,0], a < b
  std::function<double(double)> density;  // nonnegative on [a,b]
  std::string label = "density";
};

// Finite positive Borel measure on [-tau,0]: atoms plus piecewise densities.
// Immutable after construction; construction rejects invalid input instead of
// clamping. Total mass M and first absolute moment C are computed through the
// same pairing used by integrate_against and cached.
class DelayMeasure {
 public:
  DelayMeasure(double tau, std::vector<Atom> atoms,
               std::vector<DensityPiece> pieces = {},
               double quad_rel_tol = 1e-10);

  double tau() const { return tau_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<DensityPiece>& pieces() const { return pieces_; }
  double quadrature_tolerance() const { return quad_tol_; }

  double total_mass() const { return mass_; }      // M
  double delay_moment() const { return moment_; }  // C = integral of |s|

  // Integral of g against the measure: exact atom summation plus adaptive
  // quadrature on each density piece.
  double integrate_against(const std::function<double(double)>& g) const;

  bool purely_atomic() const { return pieces_.empty(); }
  double atom_weight_at_zero() const;
  // True when the measure carries mass strictly inside (-gap, 0); the
  // integrator uses this to decide whether a corrector pass is needed.
  bool has_mass_inside(double gap) const;

 private:
  double tau_;
  std::vector<Atom> atoms_;
  std::vector<DensityPiece> pieces_;
  double quad_tol_;
  double mass_ = 0.0;
  double moment_ = 0.0;
};

}  // namespace fdegrow
