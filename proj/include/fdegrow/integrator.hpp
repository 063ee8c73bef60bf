#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdegrow/measure.hpp"
#include "fdegrow/nonlinearity.hpp"

namespace fdegrow {

struct integration_error : std::runtime_error {
  double last_good_t;
  integration_error(const std::string& what, double t)
      : std::runtime_error(what), last_good_t(t) {}
};

// Initial history psi on [-tau,0], strictly positive and continuous.
class HistoryFunction {
 public:
  double operator()(double s) const { return value_(s); }
  double log_value(double s) const { return log_value_(s); }
  const std::string& descriptor() const { return descriptor_; }

  static HistoryFunction constant(double value);
  static HistoryFunction affine(double a, double b);  // psi(s) = a + b s
  static HistoryFunction exponential(double value, double rate);  // value e^{rate s}

 private:
  std::function<double(double)> value_, log_value_;
  std::string descriptor_;
};

struct StepControl {
  double h = 0.05;        // base step (snapped to divide tau in the FDE path)
  bool adaptive = false;  // honored by solve_ode only
  double tol = 1e-8;      // local error control in adaptive mode
};

// Densely evaluable solution curve stored in log-domain: v(t) = log x(t) with
// the logarithmic-derivative channel dv = x'/x. Piecewise cubic Hermite
// between accepted steps (slopes are exact right-hand-side evaluations), so
// the dense output matches the fourth-order stepper. History values come from
// psi on [-tau, 0]. Immutable after the solver returns.
class Trajectory {
 public:
  Trajectory(std::vector<double> ts, std::vector<double> vs,
             std::vector<double> dvs, double uniform_h, double tau,
             std::function<double(double)> log_history);

  double t_min() const { return -tau_; }
  double t_max() const { return ts_.back(); }

  double v(double t) const;   // log x(t), t in [-tau, T]
  double dv(double t) const;  // x'(t)/x(t), t in [0, T]
  double x(double t) const;   // exp(v(t)); +inf when not representable

  const std::vector<double>& mesh() const { return ts_; }
  const std::vector<double>& mesh_v() const { return vs_; }
  const std::vector<double>& mesh_dv() const { return dvs_; }

 private:
  std::size_t segment(double t) const;

  std::vector<double> ts_, vs_, dvs_;
  double h_;    // > 0 for a uniform mesh, else 0
  double tau_;  // history extent (0 for plain ODE runs)
  std::function<double(double)> log_history_;
};

// y' = M f(y), integrated as v' = M exp(logf(v) - v) by classic fourth-order
// Runge-Kutta; adaptive mode uses step doubling with local extrapolation.
Trajectory solve_ode(const Nonlinearity& f, double M, double y0, double T,
                     StepControl sc = {});

// Generic scalar autonomous log-domain right-hand side v' = g(v); used for
// the Hartman-Wintner perturbed equation. Same stepper as solve_ode.
Trajectory solve_scalar_log_rhs(const std::function<double(double)>& g,
                                double v0, double T, StepControl sc = {});

// Method of steps for x'(t) = integral mu(ds) f(x(t+s)). The step is snapped
// so that an integer number of steps spans tau (and h <= tau/4). Stage
// look-backs use the dense interpolant (psi for t+s <= 0); an atom at s = 0
// consumes the current stage value, so a pure unit atom at zero reproduces
// solve_ode. When mu has mass strictly inside (-h, 0) the step is closed with
// one predictor-corrector pass. The right-hand side is assembled with a
// max-shift log-sum-exp so nothing overflows even when x(t) ~ e^{1e6}.
// Adaptive step control is not supported here.
Trajectory solve_fde(const Nonlinearity& f, const DelayMeasure& m,
                     const HistoryFunction& psi, double T, StepControl sc = {});

}  // namespace fdegrow
