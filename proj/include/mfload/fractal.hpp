#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mfload {

struct ScaleRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

enum class HurstMethod { DFA, RS };

struct HurstEstimate {
  double hurst = 0.0;
  double stderr_ = 0.0;
  HurstMethod method = HurstMethod::DFA;
  ScaleRange scale_range;
};

struct MultifractalSpectrum {
  std::vector<double> q_grid;
  std::vector<double> h_of_q;
  std::vector<double> intercepts;
  double delta_h = 0.0;

  /// h at the grid point closest to q.
  double h_at(double q) const;
};

inline constexpr std::size_t kMinDfaLength = 256;
inline constexpr std::size_t kMinMfdfaLength = 1024;
inline constexpr std::size_t kMinScale = 8;
inline constexpr std::size_t kDefaultMinScale = 16;
inline constexpr std::size_t kDefaultScaleCount = 20;
/// Segment variances below this are raised to it for negative-q moments.
inline constexpr double kVarianceFloor = 1e-12;

/// Moment orders used when none are given: q = 0 is left out.
std::vector<double> default_q_grid();

/// Evenly spaced grid on [q_min, q_max]; q = 0 is dropped and q = 2 added
/// when missing.
std::vector<double> make_q_grid(double q_min, double q_max, int steps);

/// [16, n/4].
ScaleRange default_scale_range(std::size_t length);

/// Up to `count` distinct integer scales, log-spaced over the range.
std::vector<std::size_t> log_scales(ScaleRange range,
                                    std::size_t count = kDefaultScaleCount);

/// DFA-1 Hurst exponent: slope of log F(s) against log s with its OLS
/// standard error.
HurstEstimate estimate_hurst_dfa(std::span<const double> series,
                                 ScaleRange range);
HurstEstimate estimate_hurst_dfa(std::span<const double> series);

/// MF-DFA with order-1 detrending, forward and backward segmentation.
/// The series is standardized first so the variance floor is scale free.
MultifractalSpectrum mfdfa(std::span<const double> series,
                           std::span<const double> q_grid, ScaleRange range);
MultifractalSpectrum mfdfa(std::span<const double> series);

enum class Aggregation {
  /// Difference of adjacent block sums; removes the mean locally.
  Differenced,
  /// Block sums of the raw series.
  Raw,
};

struct StructureFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root mean square of the regression residuals.
  double residual_rms = 0.0;
};

/// Least-squares fit of log mean |block sum|^q against log block size.
/// The slope estimates q h(q), the intercept log c(q).
StructureFit structure_function(std::span<const double> series, double q,
                                std::span<const std::size_t> scales,
                                Aggregation mode = Aggregation::Differenced);

}  // namespace mfload
