#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fdegrow/integrator.hpp"
#include "fdegrow/measure.hpp"
#include "fdegrow/nonlinearity.hpp"
#include "fdegrow/rate_transform.hpp"

using namespace fdegrow;

namespace {

DelayMeasure two_atoms() { return DelayMeasure(1.0, {{0.0, 1.0}, {-1.0, 1.0}}); }

}  // namespace

TEST_CASE("history functions") {
  auto c = HistoryFunction::constant(2.0);
  CHECK(c(-0.3) == 2.0);
  CHECK(c.log_value(-0.3) == std::log(2.0));

  auto a = HistoryFunction::affine(1.0, 0.5);
  CHECK(a(-0.5) == 0.75);
  CHECK(a.log_value(-0.5) == doctest::Approx(std::log(0.75)).epsilon(1e-15));

  auto e = HistoryFunction::exponential(2.0, 1.0);
  CHECK(e(-1.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(e.log_value(-1.0) == std::log(2.0) - 1.0);  // exact in log space

  CHECK_THROWS_AS(HistoryFunction::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(HistoryFunction::constant(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(HistoryFunction::exponential(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("constant f integrates to the logarithm exactly") {
  // y' = 1, y(0) = 1  =>  v(t) = log(1 + t)
  auto tr = solve_ode(Nonlinearity::constant_test(1.0), 1.0, 1.0, 10.0, {0.01});
  for (double t = 0.0; t <= 10.0; t += 0.37) {
    CHECK(tr.v(t) == doctest::Approx(std::log(1.0 + t)).epsilon(1e-8));
    if (t > 0.0)
      CHECK(tr.dv(t) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-5));
  }
  CHECK(tr.x(3.0) == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("linear f gives a linear log-solution, exact for RK4") {
  auto tr = solve_ode(Nonlinearity::linear_test(), 2.0, 1.0, 5.0, {0.05});
  CHECK(tr.v(5.0) == doctest::Approx(10.0).epsilon(1e-13));
  CHECK(tr.v(2.5) == doctest::Approx(5.0).epsilon(1e-13));  // dense output
  CHECK(tr.dv(1.23) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(tr.x(2.5) == doctest::Approx(std::exp(5.0)).epsilon(1e-12));
}

TEST_CASE("ODE solution inverts the rate transform") {
  // log y(t) = F^{-1}(M t) when F(y0) = 0; a two-sided consistency check of
  // integrator and transform built from the same nonlinearity.
  auto f = Nonlinearity::paper_example(1.0);
  auto tr = solve_ode(f, 2.0, 1.0, 100.0, {0.02});
  RateTransform rt(f);
  double worst = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double t = 2.0 * k;
    worst = std::max(worst, std::abs(tr.v(t) - rt.invert(2.0 * t)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("a unit atom at zero reproduces the plain ODE") {
  auto f = Nonlinearity::paper_example(1.0);
  DelayMeasure m(1.0, {{0.0, 1.0}});
  auto fde = solve_fde(f, m, HistoryFunction::constant(1.0), 50.0, {0.05});
  auto ode = solve_ode(f, 1.0, 1.0, 50.0, {0.05});
  for (double t = 0.0; t <= 50.0; t += 0.5)
    CHECK(std::abs(fde.v(t) - ode.v(t)) <=
          1e-8 * std::max(1.0, std::abs(ode.v(t))));
}

TEST_CASE("pure density measure with constant f is a known linear flow") {
  // x' = integral of the density = 2, so v(t) = log(1 + 2t); exercises the
  // quadrature right-hand side and the predictor-corrector closure every step.
  DelayMeasure m(1.0, {}, {{-1.0, 0.0, [](double) { return 2.0; }, "const2"}});
  auto tr = solve_fde(Nonlinearity::constant_test(1.0), m,
                      HistoryFunction::constant(1.0), 10.0, {0.0125});
  for (double t = 0.0; t <= 10.0; t += 0.61)
    CHECK(tr.v(t) == doctest::Approx(std::log(1.0 + 2.0 * t)).epsilon(1e-8));
}

TEST_CASE("measured convergence order on the delay equation") {
  auto f = Nonlinearity::paper_example(1.0);
  auto m = two_atoms();
  auto hist = HistoryFunction::constant(1.0);
  const double v1 = solve_fde(f, m, hist, 5.0, {0.2}).v(5.0);
  const double v2 = solve_fde(f, m, hist, 5.0, {0.1}).v(5.0);
  const double v3 = solve_fde(f, m, hist, 5.0, {0.05}).v(5.0);
  const double order = std::log2(std::abs(v1 - v2) / std::abs(v2 - v3));
  CHECK(order >= 3.5);
  CHECK(order <= 4.8);
}

TEST_CASE("self-convergence at a long horizon") {
  auto f = Nonlinearity::paper_example(1.0);
  auto m = two_atoms();
  auto hist = HistoryFunction::constant(1.0);
  const double a = solve_fde(f, m, hist, 200.0, {0.1}).v(200.0);
  const double b = solve_fde(f, m, hist, 200.0, {0.05}).v(200.0);
  CHECK(std::abs(a - b) <= 1e-5);
}

TEST_CASE("delayed mass slows growth: ODE comparison bounds") {
  auto f = Nonlinearity::paper_example(1.0);
  auto fde = solve_fde(f, two_atoms(), HistoryFunction::constant(1.0), 50.0,
                       {0.05});
  auto upper = solve_ode(f, 2.0, 1.0, 50.0, {0.05});  // both args undelayed
  auto lower = solve_ode(f, 1.0, 1.0, 50.0, {0.05});  // delayed term dropped
  for (double t = 0.0; t <= 50.0; t += 1.0) {
    CHECK(fde.v(t) <= upper.v(t) + 1e-6);
    CHECK(fde.v(t) >= lower.v(t) - 1e-6);
  }
}

TEST_CASE("normalized derivative approaches the total mass") {
  // x'/f(x) = sum of f(x(t+s))/f(x(t)) terms -> M because f varies slowly
  // along the trajectory's log-scale shifts.
  auto f = Nonlinearity::paper_example(1.0);
  auto tr = solve_fde(f, two_atoms(), HistoryFunction::constant(1.0), 200.0,
                      {0.05});
  const double t = 200.0;
  const double v = tr.v(t);
  const double xp_over_f = tr.dv(t) * std::exp(v - f.logf(v));
  CHECK(xp_over_f == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("dense output is knot-consistent, monotone, and smooth") {
  auto f = Nonlinearity::paper_example(1.0);
  auto tr = solve_fde(f, two_atoms(), HistoryFunction::constant(1.0), 10.37,
                      {0.25});
  const auto& ts = tr.mesh();
  const auto& vs = tr.mesh_v();
  CHECK(ts.front() == 0.0);
  CHECK(ts.back() == 10.37);  // exact horizon, not a rounded multiple
  for (std::size_t k = 0; k < ts.size(); ++k)
    CHECK(tr.v(ts[k]) == doctest::Approx(vs[k]).epsilon(1e-13));
  double prev = tr.v(0.0);
  for (double t = 0.05; t <= 10.37; t += 0.05) {
    const double cur = tr.v(std::min(t, 10.37));
    CHECK(cur > prev);  // strict growth
    prev = cur;
  }
  for (double t = 0.1; t < 10.3; t += 0.77)
    CHECK(tr.dv(t) > 0.0);
}

TEST_CASE("history delegation and domain guards") {
  auto f = Nonlinearity::paper_example(1.0);
  auto psi = HistoryFunction::affine(1.0, 0.5);
  auto tr = solve_fde(f, two_atoms(), psi, 10.0, {0.05});
  CHECK(tr.v(-0.5) == doctest::Approx(std::log(0.75)).epsilon(1e-15));
  CHECK(tr.v(-1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(tr.t_min() == -1.0);
  CHECK(tr.t_max() == 10.0);
  CHECK_THROWS_AS(tr.v(-1.5), std::out_of_range);
  CHECK_THROWS_AS(tr.v(10.1), std::out_of_range);
  CHECK_THROWS_AS(tr.dv(-0.5), std::out_of_range);  // derivative: [0, T] only
  CHECK_NOTHROW(tr.dv(10.0));

  auto ode = solve_ode(f, 1.0, 1.0, 5.0, {0.05});
  CHECK_THROWS_AS(ode.v(-0.1), std::out_of_range);  // no history channel
}

TEST_CASE("step snapping divides the delay span") {
  auto f = Nonlinearity::paper_example(1.0);
  auto m = two_atoms();
  auto hist = HistoryFunction::constant(1.0);
  // requested 0.3 -> tau/4 = 0.25; requested 0.5 -> floor at tau/4 as well
  for (double req : {0.3, 0.5}) {
    auto tr = solve_fde(f, m, hist, 2.0, {req});
    CHECK(tr.mesh()[1] == doctest::Approx(0.25).epsilon(1e-15));
  }
  auto tr = solve_fde(f, m, hist, 2.0, {0.15});
  CHECK(tr.mesh()[1] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("input validation") {
  auto f = Nonlinearity::paper_example(1.0);
  auto m = two_atoms();
  auto hist = HistoryFunction::constant(1.0);
  CHECK_THROWS_AS(solve_fde(f, m, hist, -1.0, {0.05}), std::invalid_argument);
  CHECK_THROWS_AS(solve_fde(f, m, hist, 10.0, {-0.05}), std::invalid_argument);
  StepControl adaptive{0.05, true, 1e-8};
  CHECK_THROWS_AS(solve_fde(f, m, hist, 10.0, adaptive), std::invalid_argument);
  CHECK_THROWS_AS(solve_ode(f, -2.0, 1.0, 10.0, {0.05}), std::invalid_argument);
  CHECK_THROWS_AS(solve_ode(f, 2.0, 0.0, 10.0, {0.05}), std::invalid_argument);
  CHECK_THROWS_AS(solve_ode(f, 2.0, 1.0, 0.0, {0.05}), std::invalid_argument);

  // history that dips nonpositive inside [-tau, 0] is rejected up front
  auto bad = HistoryFunction::affine(1.0, 2.0);  // psi(-1) = -1
  CHECK_THROWS_AS(solve_fde(f, m, bad, 10.0, {0.05}), std::invalid_argument);
}

TEST_CASE("adaptive mode matches a fine fixed-step reference") {
  auto f = Nonlinearity::paper_example(1.0);
  StepControl ad{0.1, true, 1e-10};
  auto a = solve_ode(f, 2.0, 1.0, 20.0, ad);
  auto r = solve_ode(f, 2.0, 1.0, 20.0, {0.005});
  for (double t = 1.0; t <= 20.0; t += 1.7)
    CHECK(a.v(t) == doctest::Approx(r.v(t)).epsilon(1e-7));
  // The adaptive loop clamps the final step onto T up to roundoff.
  CHECK(a.mesh().back() == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("finite-time blowup raises integration_error with the last good time") {
  // v' = v^2 from v(0) = 1 blows up at t = 1; the stepper must fail loudly.
  bool threw = false;
  try {
    solve_scalar_log_rhs([](double v) { return v * v; }, 1.0, 2.0, {0.001});
  } catch (const integration_error& e) {
    threw = true;
    CHECK(e.last_good_t > 0.8);
    CHECK(e.last_good_t < 1.05);
  }
  CHECK(threw);
}

TEST_CASE("overflow of x is reported as infinity, not an error") {
  auto tr = solve_ode(Nonlinearity::linear_test(), 2.0, 1.0, 400.0, {0.05});
  CHECK(tr.v(400.0) == doctest::Approx(800.0).epsilon(1e-12));
  CHECK(std::isinf(tr.x(400.0)));
  CHECK(tr.x(300.0) == doctest::Approx(std::exp(600.0)).epsilon(1e-10));
}
