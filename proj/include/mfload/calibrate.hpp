#pragma once

#include <cstdint>

#include "mfload/errors.hpp"
#include "mfload/traffic.hpp"

namespace mfload {

inline constexpr double kCalibrationHurstTolerance = 0.1;
inline constexpr double kCalibrationDeltaHTolerance = 0.3;
inline constexpr unsigned kProbeDepth = 14;
inline constexpr std::uint64_t kDefaultProbeSeed = 20160917;

/// Targets at or below this are treated as monofractal and served by FGn.
inline constexpr double kMonofractalDeltaH = 0.2;

struct CalibrationResult {
  GeneratorMeta meta;
  double measured_hurst = 0.0;
  double measured_delta_h = 0.0;
  int evaluations = 0;
};

class CalibrationError : public NumericalError {
 public:
  CalibrationError(const std::string& what, CalibrationResult best);

  const CalibrationResult& best() const { return best_; }
  double hurst_residual() const;
  double delta_h_residual() const;

 private:
  CalibrationResult best_;
};

/// Finds generator parameters whose probe series (length 2^14, probe seed)
/// measures within +-0.1 of `target_hurst` and +-0.3 of `target_delta_h`.
///
/// Delta-h targets up to kMonofractalDeltaH use plain fGn, bisecting its
/// exponent. Otherwise the composite generator is searched: its envelope
/// keeps the target H, a coarse grid over (spread, sigma) picks a start and
/// a step-halving pattern search refines it for at most `budget` rounds.
/// Fully deterministic.
CalibrationResult calibrate(double target_hurst, double target_delta_h,
                            int budget,
                            std::uint64_t probe_seed = kDefaultProbeSeed);

}  // namespace mfload
