#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace fdegrow {

struct quadrature_error : std::runtime_error {
  double a;
  double b;
  quadrature_error(const std::string& what, double a_, double b_)
      : std::runtime_error(what), a(a_), b(b_) {}
};

// Adaptive Gauss-Legendre integration of g over [a,b].
// Refines by bisection until the panel-vs-halves discrepancy meets a budget
// proportional to rel_tol * |integral|; abs_floor guards the all-zero case.
// Throws quadrature_error naming the subinterval when refinement stalls.
double integrate(const std::function<double(double)>& g, double a, double b,
                 double rel_tol = 1e-10, double abs_floor = 1e-300);

}  // namespace fdegrow
