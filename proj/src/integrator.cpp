#include "fdegrow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fdegrow/quadrature.hpp"

namespace fdegrow {

HistoryFunction HistoryFunction::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("history must be strictly positive");
  HistoryFunction h;
  h.descriptor_ = "constant(" + std::to_string(value) + ")";
  const double lv = std::log(value);
  h.value_ = [value](double) { return value; };
  h.log_value_ = [lv](double) { return lv; };
  return h;
}

HistoryFunction HistoryFunction::affine(double a, double b) {
  HistoryFunction h;
  h.descriptor_ = "affine(" + std::to_string(a) + ", " + std::to_string(b) + ")";
  h.value_ = [a, b](double s) { return a + b * s; };
  h.log_value_ = [a, b](double s) { return std::log(a + b * s); };
  return h;
}

HistoryFunction HistoryFunction::exponential(double value, double rate) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("history must be strictly positive");
  HistoryFunction h;
  h.descriptor_ =
      "exp(" + std::to_string(value) + ", rate=" + std::to_string(rate) + ")";
  const double lv = std::log(value);
  h.value_ = [value, rate](double s) { return value * std::exp(rate * s); };
  h.log_value_ = [lv, rate](double s) { return lv + rate * s; };
  return h;
}

Trajectory::Trajectory(std::vector<double> ts, std::vector<double> vs,
                       std::vector<double> dvs, double uniform_h, double tau,
                       std::function<double(double)> log_history)
    : ts_(std::move(ts)),
      vs_(std::move(vs)),
      dvs_(std::move(dvs)),
      h_(uniform_h),
      tau_(tau),
      log_history_(std::move(log_history)) {
  if (ts_.size() < 2 || ts_.size() != vs_.size() || ts_.size() != dvs_.size())
    throw std::invalid_argument("malformed trajectory mesh");
}

std::size_t Trajectory::segment(double t) const {
  if (h_ > 0.0) {
    const auto i = static_cast<std::ptrdiff_t>((t - ts_.front()) / h_);
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(ts_.size()) - 2));
  }
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  const auto i = (it - ts_.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(ts_.size()) - 2));
}

double Trajectory::v(double t) const {
  const double t0 = ts_.front(), t1 = ts_.back();
  if (t < t0 - 1e-12 * std::max(1.0, tau_)) {
    if (!log_history_ || t < -tau_ - 1e-9)
      throw std::out_of_range("trajectory queried at t = " + std::to_string(t) +
                              " before its range");
    return log_history_(std::max(t, -tau_));
  }
  if (t > t1 + 1e-9 * std::max(1.0, std::abs(t1)))
    throw std::out_of_range("trajectory queried at t = " + std::to_string(t) +
                            " beyond its range");
  const std::size_t i = segment(std::min(t, t1));
  const double dt = ts_[i + 1] - ts_[i];
  const double th = std::clamp((t - ts_[i]) / dt, 0.0, 1.0);
  const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
  const double h10 = th * (1.0 - th) * (1.0 - th);
  const double h01 = th * th * (3.0 - 2.0 * th);
  const double h11 = th * th * (th - 1.0);
  return h00 * vs_[i] + h10 * dt * dvs_[i] + h01 * vs_[i + 1] +
         h11 * dt * dvs_[i + 1];
}

double Trajectory::dv(double t) const {
  const double t1 = ts_.back();
  if (t < ts_.front() - 1e-12 || t > t1 + 1e-9 * std::max(1.0, std::abs(t1)))
    throw std::out_of_range("derivative queried at t = " + std::to_string(t) +
                            " outside the computed range");
  const std::size_t i = segment(std::min(t, t1));
  const double dt = ts_[i + 1] - ts_[i];
  const double th = std::clamp((t - ts_[i]) / dt, 0.0, 1.0);
  const double g00 = 6.0 * th * (th - 1.0) / dt;
  const double g10 = (1.0 - th) * (1.0 - 3.0 * th);
  const double g01 = -g00;
  const double g11 = th * (3.0 * th - 2.0);
  return g00 * vs_[i] + g10 * dvs_[i] + g01 * vs_[i + 1] + g11 * dvs_[i + 1];
}

double Trajectory::x(double t) const { return std::exp(v(t)); }

namespace {

// One classic RK4 step of v' = g(v).
double rk4_step(const std::function<double(double)>& g, double v, double h) {
  const double k1 = g(v);
  const double k2 = g(v + 0.5 * h * k1);
  const double k3 = g(v + 0.5 * h * k2);
  const double k4 = g(v + h * k3);
  return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory solve_log_rhs_impl(const std::function<double(double)>& g,
                              double v0, double T, StepControl sc) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(sc.h > 0.0)) throw std::invalid_argument("step must be positive");

  std::vector<double> ts{0.0}, vs{v0}, dvs{g(v0)};
  if (!sc.adaptive) {
    const auto n = static_cast<std::size_t>(std::ceil(T / sc.h - 1e-9));
    const double h = T / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rk4_step(g, vs.back(), h);
      if (!std::isfinite(v))
        throw integration_error("step produced a non-finite state", ts.back());
      ts.push_back(i + 1 == n ? T : (i + 1) * h);
      vs.push_back(v);
      dvs.push_back(g(v));
    }
    return Trajectory(std::move(ts), std::move(vs), std::move(dvs), h, 0.0,
                      nullptr);
  }

  // Step doubling: one h-step vs two h/2-steps, Richardson error estimate,
  // locally extrapolated acceptance.
  double t = 0.0, h = std::min(sc.h, T);
  while (t < T - 1e-12 * T) {
    h = std::min(h, T - t);
    const double v = vs.back();
    const double full = rk4_step(g, v, h);
    const double half = rk4_step(g, rk4_step(g, v, 0.5 * h), 0.5 * h);
    const double err = std::abs(half - full) / 15.0;
    const double budget =
        sc.tol * std::max(1.0, std::abs(half)) * std::max(h / T, 1e-12);
    if (err <= budget || h <= 1e-12 * T) {
      if (!std::isfinite(half))
        throw integration_error("step produced a non-finite state", t);
      t += h;
      ts.push_back(t);
      vs.push_back(half + (half - full) / 15.0);
      dvs.push_back(g(vs.back()));
    }
    const double grow =
        err > 0.0 ? 0.9 * std::pow(budget / err, 0.2)
                  : 5.0;
    h *= std::clamp(grow, 0.2, 5.0);
    if (h < 1e-13 * T)
      throw integration_error("step size underflow in adaptive mode", t);
  }
  return Trajectory(std::move(ts), std::move(vs), std::move(dvs), 0.0, 0.0,
                    nullptr);
}

}  // namespace

Trajectory solve_ode(const Nonlinearity& f, double M, double y0, double T,
                     StepControl sc) {
  if (!(M > 0.0)) throw std::invalid_argument("mass M must be positive");
  if (!(y0 > 0.0)) throw std::invalid_argument("initial state must be positive");
  auto g = [&f, M](double v) { return M * std::exp(f.logf(v) - v); };
  return solve_log_rhs_impl(g, std::log(y0), T, sc);
}

Trajectory solve_scalar_log_rhs(const std::function<double(double)>& g,
                                double v0, double T, StepControl sc) {
  return solve_log_rhs_impl(g, v0, T, sc);
}

namespace {

// Dense state of an in-progress method-of-steps integration plus the
// provisional cubic for the current step (predictor-corrector support).
struct FdeState {
  const std::vector<double>* ts;
  const std::vector<double>* vs;
  const std::vector<double>* dvs;
  const HistoryFunction* psi;
  double h = 0.0;
  // provisional cubic on (t_n, t_n + width]
  bool provisional = false;
  bool linear_predictor = false;
  double pt = 0.0, pv = 0.0, pdv = 0.0;      // left endpoint data
  double pv1 = 0.0, pdv1 = 0.0, width = 0.0;  // right endpoint data

  double value(double t) const {
    if (t <= 0.0) return psi->log_value(t);
    const double t_last = ts->back();
    if (t > t_last) {
      if (linear_predictor) return pv + pdv * (t - pt);
      if (provisional) {
        const double th = std::clamp((t - pt) / width, 0.0, 1.0);
        const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
        const double h10 = th * (1.0 - th) * (1.0 - th);
        const double h01 = th * th * (3.0 - 2.0 * th);
        const double h11 = th * th * (th - 1.0);
        return h00 * pv + h10 * width * pdv + h01 * pv1 + h11 * width * pdv1;
      }
      throw integration_error("interpolant queried beyond computed range",
                              t_last);
    }
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(t / h), 0,
        static_cast<std::ptrdiff_t>(ts->size()) - 2));
    const double th = std::clamp((t - (*ts)[i]) / h, 0.0, 1.0);
    const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
    const double h10 = th * (1.0 - th) * (1.0 - th);
    const double h01 = th * th * (3.0 - 2.0 * th);
    const double h11 = th * th * (th - 1.0);
    return h00 * (*vs)[i] + h10 * h * (*dvs)[i] + h01 * (*vs)[i + 1] +
           h11 * h * (*dvs)[i + 1];
  }
};

}  // namespace

Trajectory solve_fde(const Nonlinearity& f, const DelayMeasure& m,
                     const HistoryFunction& psi, double T, StepControl sc) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (sc.adaptive)
    throw std::invalid_argument(
        "adaptive stepping is not supported by the delay integrator; use a "
        "fixed step");
  if (!(sc.h > 0.0)) throw std::invalid_argument("step must be positive");
  for (int k = 0; k <= 16; ++k) {
    const double s = -m.tau() * k / 16.0;
    if (!(psi(s) > 0.0))
      throw std::invalid_argument("history is not strictly positive at s = " +
                                  std::to_string(s));
  }

  // Snap the step so an integer count spans tau (and h <= tau/4): atom
  // look-backs at multiples of tau then land on mesh knots.
  const double tau = m.tau();
  const auto per_tau = static_cast<std::size_t>(
      std::max<double>(4.0, std::ceil(tau / sc.h - 1e-9)));
  const double h = tau / static_cast<double>(per_tau);

  std::vector<double> ts{0.0}, vs{psi.log_value(0.0)}, dvs;
  FdeState state{&ts, &vs, &dvs, &psi, h};

  const double quad_tol = m.quadrature_tolerance();
  // Right-hand side at stage time t with stage log-value w:
  // v' = exp(logI - w), logI = log integral mu(ds) f(x(t+s)) via max-shift.
  auto rhs = [&](double t, double w) {
    double terms_max = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(m.atoms().size() + m.pieces().size());
    for (const Atom& a : m.atoms()) {
      const double u = a.location == 0.0 ? w : state.value(t + a.location);
      terms.push_back(std::log(a.weight) + f.logf(u));
      terms_max = std::max(terms_max, terms.back());
    }
    for (const DensityPiece& p : m.pieces()) {
      // Shift by the largest endpoint value of logf along the piece; the
      // trajectory is near-monotone so interior values stay comparable.
      const double ka = f.logf(state.value(t + p.a));
      const double kb = f.logf(state.value(t + p.b));
      const double K = std::max(ka, kb);
      const double integral = integrate(
          [&](double s) {
            return p.density(s) * std::exp(f.logf(state.value(t + s)) - K);
          },
          p.a, p.b, quad_tol);
      if (integral > 0.0) {
        terms.push_back(K + std::log(integral));
        terms_max = std::max(terms_max, terms.back());
      }
    }
    double sum = 0.0;
    for (double term : terms) sum += std::exp(term - terms_max);
    return std::exp(terms_max + std::log(sum) - w);
  };

  dvs.push_back(rhs(0.0, vs[0]));  // look-backs all land in the history

  const bool needs_corrector = m.has_mass_inside(h);
  const auto total = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  for (std::size_t n = 0; n < total; ++n) {
    const double tn = static_cast<double>(n) * h;  // exact products, no drift
    const double step = (n + 1 == total) ? T - tn : h;
    const double vn = vs.back(), dn = dvs.back();

    auto rk_pass = [&](double& v_end, double& k_end) {
      const double k1 = rhs(tn, vn);
      const double k2 = rhs(tn + 0.5 * step, vn + 0.5 * step * k1);
      const double k3 = rhs(tn + 0.5 * step, vn + 0.5 * step * k2);
      const double k4 = rhs(tn + step, vn + step * k3);
      v_end = vn + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      k_end = rhs(tn + step, v_end);
    };

    double v1 = 0.0, k_end = 0.0;
    if (needs_corrector) {
      // Predictor: linear continuation past t_n feeds the overlapping mass.
      state.linear_predictor = true;
      state.pt = tn;
      state.pv = vn;
      state.pdv = dn;
      rk_pass(v1, k_end);
      // Corrector: one pass against the provisional cubic of this step.
      state.linear_predictor = false;
      state.provisional = true;
      state.pv1 = v1;
      state.pdv1 = k_end;
      state.width = step;
      rk_pass(v1, k_end);
      state.pv1 = v1;  // refresh the cubic for the end-slope evaluation
      state.pdv1 = k_end;
      k_end = rhs(tn + step, v1);
      state.provisional = false;
    } else {
      rk_pass(v1, k_end);
    }
    if (!std::isfinite(v1))
      throw integration_error("step produced a non-finite state", tn);
    ts.push_back(n + 1 == total ? T : tn + step);
    vs.push_back(v1);
    dvs.push_back(k_end);
  }

  // The trajectory outlives the caller's history object: capture by value.
  std::function<double(double)> hist_fn =
      [psi_copy = psi](double s) { return psi_copy.log_value(s); };
  return Trajectory(std::move(ts), std::move(vs), std::move(dvs), h, tau,
                    std::move(hist_fn));
}

}  // namespace fdegrow
