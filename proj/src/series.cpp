#include "fdegrow/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdegrow {

std::string to_string(LimitModel m) {
  switch (m) {
    case LimitModel::raw: return "raw";
    case LimitModel::aitken: return "aitken";
    case LimitModel::log_fit: return "log-fit";
  }
  return "?";
}

std::optional<LimitModel> parse_limit_model(const std::string& name) {
  if (name == "raw") return LimitModel::raw;
  if (name == "aitken") return LimitModel::aitken;
  if (name == "log-fit" || name == "logfit") return LimitModel::log_fit;
  return std::nullopt;
}

std::vector<double> aitken_pass(const std::vector<double>& v) {
  std::vector<double> out;
  if (v.size() < 3) return out;
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    const double d1 = v[i + 1] - v[i];
    const double d2 = v[i + 2] - 2.0 * v[i + 1] + v[i];
    if (std::abs(d2) <= 1e-14 * std::max(scale, 1.0)) continue;
    out.push_back(v[i] - d1 * d1 / d2);
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double half_spread_tail(const std::vector<double>& v, std::size_t n) {
  n = std::min(n, v.size());
  double lo = v.back(), hi = v.back();
  for (std::size_t i = v.size() - n; i < v.size(); ++i) {
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  return 0.5 * (hi - lo);
}

// Tail diffs alternate in sign without contracting: no limit is detectable.
bool oscillating_no_contraction(const std::vector<double>& v) {
  if (v.size() < 5) return false;
  std::vector<double> d;
  for (std::size_t i = 1; i < v.size(); ++i) d.push_back(v[i] - v[i - 1]);
  bool alternating = true;
  for (std::size_t i = 1; i < d.size(); ++i)
    alternating = alternating && d[i] * d[i - 1] < 0.0;
  if (!alternating) return false;
  return std::abs(d.back()) >= 0.8 * std::abs(d.front());
}

struct LogFitResult {
  double L = 0.0;
  double rms = 0.0;
  bool ok = false;
};

// Least squares of y ~ L + a z + b z log(1/z) via 3x3 normal equations in
// long double (condition numbers stay modest on geometric windows).
LogFitResult log_fit(const std::vector<double>& z, const std::vector<double>& y) {
  LogFitResult r;
  const std::size_t n = z.size();
  if (n < 4) return r;
  long double A[3][3] = {};
  long double rhs[3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const long double c[3] = {1.0L, z[i], z[i] * std::log(1.0 / z[i])};
    for (int a = 0; a < 3; ++a) {
      rhs[a] += c[a] * y[i];
      for (int b = 0; b < 3; ++b) A[a][b] += c[a] * c[b];
    }
  }
  // Gaussian elimination with partial pivoting.
  int piv[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int row = col + 1; row < 3; ++row)
      if (std::abs((double)A[piv[row]][col]) > std::abs((double)A[piv[best]][col]))
        best = row;
    std::swap(piv[col], piv[best]);
    if (A[piv[col]][col] == 0.0L) return r;
    for (int row = col + 1; row < 3; ++row) {
      const long double m = A[piv[row]][col] / A[piv[col]][col];
      for (int k = col; k < 3; ++k) A[piv[row]][k] -= m * A[piv[col]][k];
      rhs[piv[row]] -= m * rhs[piv[col]];
    }
  }
  long double coef[3];
  for (int col = 2; col >= 0; --col) {
    long double acc = rhs[piv[col]];
    for (int k = col + 1; k < 3; ++k) acc -= A[piv[col]][k] * coef[k];
    coef[col] = acc / A[piv[col]][col];
  }
  r.L = static_cast<double>(coef[0]);
  long double ss = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double fit =
        coef[0] + coef[1] * z[i] + coef[2] * (z[i] * std::log(1.0 / z[i]));
    ss += (fit - y[i]) * (fit - y[i]);
  }
  r.rms = std::sqrt(static_cast<double>(ss) / n);
  r.ok = std::isfinite(r.L) && std::isfinite(r.rms);
  return r;
}

}  // namespace

LimitEstimate extrapolate_limit(const DiagnosticSeries& s, LimitModel model,
                                double window_decades) {
  if (s.degenerate)
    throw std::invalid_argument("cannot extrapolate degenerate series '" +
                                s.name + "': " + s.degenerate_reason);
  if (s.size() < 6)
    throw std::invalid_argument("extrapolation needs at least 6 samples, got " +
                                std::to_string(s.size()));
  if (s.size() != s.value.size() ||
      (!s.scale.empty() && s.scale.size() != s.size()))
    throw std::invalid_argument("malformed series '" + s.name + "'");

  LimitEstimate est;
  est.model = model;

  // Tail window: last window_decades of the abscissa, at least 6 samples.
  const double cut = s.t.back() / std::pow(10.0, window_decades);
  std::size_t begin = 0;
  while (begin < s.size() && s.t[begin] < cut * (1.0 - 1e-12)) ++begin;
  if (s.size() - begin < 6) begin = s.size() - 6;
  std::vector<double> tail(s.value.begin() + begin, s.value.end());
  est.samples_used = static_cast<int>(tail.size());

  double vmax = 0.0;
  for (double v : tail) vmax = std::max(vmax, std::abs(v));
  const bool constant =
      half_spread_tail(tail, tail.size()) <= 1e-13 * std::max(vmax, 1.0);
  if (constant) {
    est.estimate = tail.back();
    est.uncertainty = 0.0;
    return est;
  }
  if (oscillating_no_contraction(tail)) {
    est.estimate = tail.back();
    est.uncertainty = kInf;
    est.inconclusive = true;
    return est;
  }

  switch (model) {
    case LimitModel::raw: {
      est.estimate = tail.back();
      est.uncertainty = half_spread_tail(tail, 3);
      break;
    }
    case LimitModel::aitken: {
      std::vector<double> cur = tail;
      double prev_last = tail.back();
      for (int pass = 0; pass < 3 && cur.size() >= 5; ++pass) {
        std::vector<double> next = aitken_pass(cur);
        if (next.size() < 3) break;
        bool finite = true;
        for (double x : next) finite = finite && std::isfinite(x);
        if (!finite) break;
        prev_last = cur.back();
        cur = std::move(next);
      }
      est.estimate = cur.back();
      const double step = cur.size() >= 2
                              ? std::abs(cur.back() - cur[cur.size() - 2])
                              : 0.0;
      est.uncertainty = half_spread_tail(cur, 3) + step +
                        0.1 * std::abs(cur.back() - prev_last);
      if (!std::isfinite(est.estimate)) {
        est.inconclusive = true;
        est.uncertainty = kInf;
      }
      break;
    }
    case LimitModel::log_fit: {
      std::vector<double> z, y;
      for (std::size_t i = begin; i < s.size(); ++i) {
        const double scl = s.scale.empty() ? std::log(s.t[i]) : s.scale[i];
        if (!(scl > 0.0) || !std::isfinite(scl)) continue;
        z.push_back(1.0 / scl);
        y.push_back(s.value[i]);
      }
      const LogFitResult full = log_fit(z, y);
      if (!full.ok) {
        est.estimate = tail.back();
        est.uncertainty = kInf;
        est.inconclusive = true;
        break;
      }
      est.estimate = full.L;
      // Stability probe: refit on the most recent half of the window.
      double drift = 0.0;
      if (z.size() >= 8) {
        const std::size_t half = z.size() / 2;
        const LogFitResult part = log_fit(
            std::vector<double>(z.begin() + half, z.end()),
            std::vector<double>(y.begin() + half, y.end()));
        if (part.ok) drift = std::abs(part.L - full.L);
      }
      est.uncertainty = drift + 2.0 * full.rms + 1e-15;
      break;
    }
  }
  return est;
}

}  // namespace fdegrow
