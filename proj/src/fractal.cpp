#include "mfload/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mfload/errors.hpp"

namespace mfload {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  f.residual_rms = std::sqrt(ssr / n);
  f.slope_stderr = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return f;
}

void check_range(std::size_t n, ScaleRange range) {
  if (range.min < kMinScale || range.max > n / 4 || range.min >= range.max) {
    throw ConfigError("scale range [" + std::to_string(range.min) + ", " +
                      std::to_string(range.max) + "] must lie within [8, " +
                      std::to_string(n / 4) + "] with min < max");
  }
}

std::vector<double> profile_of(std::span<const double> x, double center,
                               double scale) {
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (x[i] - center) / scale;
    y[i] = acc;
  }
  return y;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) /
         static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

/// Residual variance after a least-squares line, one value per segment.
/// Segments run forward from the start and backward from the end.
std::vector<double> segment_variances(std::span<const double> profile,
                                      std::size_t s) {
  const std::size_t n = profile.size();
  const std::size_t count = n / s;
  const double ds = static_cast<double>(s);
  const double t_mid = (ds - 1.0) / 2.0;
  double stt = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    const double t = static_cast<double>(j) - t_mid;
    stt += t * t;
  }

  std::vector<double> out;
  out.reserve(2 * count);
  auto one = [&](std::size_t start) {
    const double* y = profile.data() + start;
    double ybar = 0.0;
    for (std::size_t j = 0; j < s; ++j) ybar += y[j];
    ybar /= ds;
    double sty = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      sty += (static_cast<double>(j) - t_mid) * (y[j] - ybar);
    }
    const double b = sty / stt;
    double ss = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      const double r = y[j] - ybar - b * (static_cast<double>(j) - t_mid);
      ss += r * r;
    }
    out.push_back(ss / ds);
  };
  for (std::size_t v = 0; v < count; ++v) one(v * s);
  for (std::size_t v = 0; v < count; ++v) one(n - (v + 1) * s);
  return out;
}

/// log F_q(s) from the segment variances.
double log_fluctuation(std::span<const double> f2, double q) {
  const double k = static_cast<double>(f2.size());
  if (q == 0.0) {
    double acc = 0.0;
    for (double v : f2) acc += std::log(std::max(v, kVarianceFloor));
    return 0.5 * acc / k;
  }
  // Work in logs relative to the largest term to keep q = -5 finite.
  std::vector<double> logs;
  logs.reserve(f2.size());
  for (double v : f2) {
    const double vv = q < 0.0 ? std::max(v, kVarianceFloor) : v;
    if (vv <= 0.0) continue;
    logs.push_back(0.5 * q * std::log(vv));
  }
  if (logs.empty()) {
    throw DegenerateSeriesError("zero fluctuation at every segment");
  }
  const double peak = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - peak);
  return (peak + std::log(acc / k)) / q;
}

}  // namespace

double MultifractalSpectrum::h_at(double q) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q_grid.size(); ++i) {
    if (std::abs(q_grid[i] - q) < std::abs(q_grid[best] - q)) best = i;
  }
  return h_of_q.at(best);
}

std::vector<double> default_q_grid() { return {-5, -3, -2, -1, 1, 2, 3, 5}; }

std::vector<double> make_q_grid(double q_min, double q_max, int steps) {
  if (!(q_min < q_max) || steps < 2) {
    throw ConfigError("q grid needs q_min < q_max and at least 2 steps");
  }
  std::vector<double> q;
  for (int i = 0; i < steps; ++i) {
    const double v = q_min + (q_max - q_min) * i / (steps - 1);
    if (std::abs(v) < 1e-9) continue;
    q.push_back(v);
  }
  if (std::none_of(q.begin(), q.end(),
                   [](double v) { return std::abs(v - 2.0) < 1e-9; })) {
    q.push_back(2.0);
    std::sort(q.begin(), q.end());
  }
  return q;
}

ScaleRange default_scale_range(std::size_t length) {
  return {kDefaultMinScale, length / 4};
}

std::vector<std::size_t> log_scales(ScaleRange range, std::size_t count) {
  std::vector<std::size_t> out;
  const double lo = std::log(static_cast<double>(range.min));
  const double hi = std::log(static_cast<double>(range.max));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const auto s = static_cast<std::size_t>(std::llround(std::exp(lo + f * (hi - lo))));
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

HurstEstimate estimate_hurst_dfa(std::span<const double> series,
                                 ScaleRange range) {
  const std::size_t n = series.size();
  if (n < kMinDfaLength) {
    throw InsufficientDataError("DFA needs at least 256 values, got " +
                                std::to_string(n));
  }
  check_range(n, range);
  if (is_constant(series)) {
    throw DegenerateSeriesError("constant series has no fluctuations");
  }

  const std::vector<double> y = profile_of(series, mean_of(series), 1.0);
  const std::vector<std::size_t> scales = log_scales(range);
  std::vector<double> ls;
  std::vector<double> lf;
  for (std::size_t s : scales) {
    const std::vector<double> f2 = segment_variances(y, s);
    const double f = std::sqrt(mean_of(f2));
    if (!(f > 0.0)) {
      throw DegenerateSeriesError("zero fluctuation at scale " +
                                  std::to_string(s));
    }
    ls.push_back(std::log(static_cast<double>(s)));
    lf.push_back(std::log(f));
  }
  const LineFit fit = fit_line(ls, lf);
  return {fit.slope, fit.slope_stderr, HurstMethod::DFA, range};
}

HurstEstimate estimate_hurst_dfa(std::span<const double> series) {
  if (series.size() < kMinDfaLength) {
    throw InsufficientDataError("DFA needs at least 256 values, got " +
                                std::to_string(series.size()));
  }
  return estimate_hurst_dfa(series, default_scale_range(series.size()));
}

MultifractalSpectrum mfdfa(std::span<const double> series,
                           std::span<const double> q_grid, ScaleRange range) {
  if (q_grid.empty()) throw ConfigError("q grid must not be empty");
  if (!std::is_sorted(q_grid.begin(), q_grid.end())) {
    throw ConfigError("q grid must be sorted ascending");
  }
  if (std::none_of(q_grid.begin(), q_grid.end(),
                   [](double q) { return q == 2.0; })) {
    throw ConfigError("q grid must contain q = 2");
  }
  const std::size_t n = series.size();
  if (n < kMinMfdfaLength) {
    throw InsufficientDataError("MF-DFA needs at least 1024 values, got " +
                                std::to_string(n));
  }
  check_range(n, range);
  if (is_constant(series)) {
    throw DegenerateSeriesError("constant series has no fluctuations");
  }

  const double mu = mean_of(series);
  double ss = 0.0;
  for (double v : series) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  const std::vector<double> y = profile_of(series, mu, sd);

  const std::vector<std::size_t> scales = log_scales(range);
  std::vector<double> ls;
  std::vector<std::vector<double>> lf(q_grid.size());
  for (std::size_t s : scales) {
    const std::vector<double> f2 = segment_variances(y, s);
    ls.push_back(std::log(static_cast<double>(s)));
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
      lf[i].push_back(log_fluctuation(f2, q_grid[i]));
    }
  }

  MultifractalSpectrum out;
  out.q_grid.assign(q_grid.begin(), q_grid.end());
  for (const auto& row : lf) {
    const LineFit fit = fit_line(ls, row);
    out.h_of_q.push_back(fit.slope);
    out.intercepts.push_back(fit.intercept);
  }
  out.delta_h = out.h_of_q.front() - out.h_of_q.back();
  if (out.delta_h < -0.1) {
    throw NumericalError("generalized Hurst range is negative (" +
                         std::to_string(out.delta_h) +
                         "): h(q) increases with q");
  }
  return out;
}

MultifractalSpectrum mfdfa(std::span<const double> series) {
  if (series.size() < kMinMfdfaLength) {
    throw InsufficientDataError("MF-DFA needs at least 1024 values, got " +
                                std::to_string(series.size()));
  }
  const std::vector<double> q = default_q_grid();
  return mfdfa(series, q, default_scale_range(series.size()));
}

StructureFit structure_function(std::span<const double> series, double q,
                                std::span<const std::size_t> scales,
                                Aggregation mode) {
  if (q == 0.0) throw ConfigError("structure function needs q != 0");
  const std::size_t n = series.size();
  if (scales.size() < 2) throw ConfigError("need at least two scales");
  for (std::size_t s : scales) {
    if (s < 2 || s > n / 4) {
      throw ConfigError("scale " + std::to_string(s) + " outside [2, " +
                        std::to_string(n / 4) + "]");
    }
  }
  if (q < 0.0 && std::any_of(series.begin(), series.end(),
                             [](double v) { return !(v > 0.0); })) {
    throw DomainError("negative q needs a strictly positive series");
  }

  std::vector<double> profile(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) profile[i + 1] = profile[i] + series[i];
  std::vector<double> ls;
  std::vector<double> lm;
  for (std::size_t s : scales) {
    double acc = 0.0;
    std::size_t blocks = 0;
    const std::size_t span = mode == Aggregation::Differenced ? 2 * s : s;
    for (std::size_t i = 0; i + span <= n; i += s, ++blocks) {
      const double sum = mode == Aggregation::Differenced
                             ? profile[i + 2 * s] - 2.0 * profile[i + s] + profile[i]
                             : profile[i + s] - profile[i];
      const double a = std::abs(sum);
      if (a == 0.0) {
        if (q < 0.0) throw DomainError("zero block sum under negative q");
        continue;
      }
      acc += std::pow(a, q);
    }
    const double moment = acc / static_cast<double>(blocks);
    if (!(moment > 0.0) || !std::isfinite(moment)) {
      throw DegenerateSeriesError("structure function moment vanishes at scale " +
                                  std::to_string(s));
    }
    ls.push_back(std::log(static_cast<double>(s)));
    lm.push_back(std::log(moment));
  }
  const LineFit fit = fit_line(ls, lm);
  return {fit.slope, fit.intercept, fit.residual_rms};
}

}  // namespace mfload
