#include "mfload/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfload/fractal.hpp"

namespace mfload {

namespace {

/// Fraction of cascade splits that are randomized in the composite.
/// Even splits elsewhere keep the envelope's long memory visible.
constexpr double kCompositeSplitProbability = 0.1;

constexpr std::array kSpreadGrid{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
constexpr std::array kSigmaGrid{0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};

constexpr double kMinSpread = 0.05;
constexpr double kMaxSpread = 16.0;
constexpr double kMaxSigma = 3.0;

/// Stop refining once both residuals are inside half their tolerance.
constexpr double kGoodEnough = 0.5;

struct Probe {
  double hurst = 0.0;
  double delta_h = 0.0;
};

Probe measure(const TrafficSeries& s) {
  const MultifractalSpectrum spec = mfdfa(s.values());
  return {spec.h_at(2.0), spec.delta_h};
}

struct Scorer {
  double target_hurst;
  double target_delta_h;

  /// Larger of the two residuals in units of their tolerance.
  double worst(const Probe& p) const {
    return std::max(std::abs(p.hurst - target_hurst) / kCalibrationHurstTolerance,
                    std::abs(p.delta_h - target_delta_h) /
                        kCalibrationDeltaHTolerance);
  }
  /// Smooth objective used to rank candidates.
  double loss(const Probe& p) const {
    const double a = (p.hurst - target_hurst) / kCalibrationHurstTolerance;
    const double b = (p.delta_h - target_delta_h) / kCalibrationDeltaHTolerance;
    return a * a + b * b;
  }
};

std::string describe(const CalibrationResult& r, double th, double tdh) {
  std::ostringstream os;
  os << "calibration missed target (H=" << th << ", dH=" << tdh
     << "): best measured H=" << r.measured_hurst
     << " dH=" << r.measured_delta_h;
  return os.str();
}

CalibrationResult calibrate_fgn(double target_hurst, double target_delta_h,
                                int budget, std::uint64_t probe_seed) {
  const std::size_t length = std::size_t{1} << kProbeDepth;
  auto eval = [&](double h, CalibrationResult& out) {
    const TrafficSeries s = generate_fgn(h, length, probe_seed);
    const Probe p = measure(s);
    out.meta = s.meta();
    out.measured_hurst = p.hurst;
    out.measured_delta_h = p.delta_h;
    ++out.evaluations;
  };

  CalibrationResult best;
  eval(target_hurst, best);
  // DFA is slightly biased on finite samples; bisect the input exponent.
  double lo = 0.01;
  double hi = 0.99;
  double h = target_hurst;
  for (int i = 0; i < budget && std::abs(best.measured_hurst - target_hurst) >
                                    kGoodEnough * kCalibrationHurstTolerance;
       ++i) {
    if (best.measured_hurst < target_hurst) {
      lo = h;
    } else {
      hi = h;
    }
    h = 0.5 * (lo + hi);
    CalibrationResult trial;
    trial.evaluations = best.evaluations;
    eval(h, trial);
    if (std::abs(trial.measured_hurst - target_hurst) <
        std::abs(best.measured_hurst - target_hurst)) {
      best = trial;
    } else {
      best.evaluations = trial.evaluations;
    }
  }
  best.meta.target_hurst = target_hurst;
  best.meta.target_delta_h = target_delta_h;
  return best;
}

CalibrationResult calibrate_composite(double target_hurst,
                                      double target_delta_h, int budget,
                                      std::uint64_t probe_seed) {
  const Scorer score{target_hurst, target_delta_h};
  int evaluations = 0;

  struct Point {
    double log_spread;
    double envelope_hurst;
    double sigma;
    Probe probe;
    double loss;
  };
  auto eval = [&](double log_spread, double eh, double sigma) {
    const TrafficSeries s =
        generate_composite(kProbeDepth, std::exp(log_spread),
                           kCompositeSplitProbability, eh, sigma, probe_seed);
    ++evaluations;
    const Probe p = measure(s);
    return Point{log_spread, eh, sigma, p, score.loss(p)};
  };

  Point best{0, 0, 0, {}, std::numeric_limits<double>::infinity()};
  for (double sigma : kSigmaGrid) {
    for (double spread : kSpreadGrid) {
      const Point p = eval(std::log(spread), target_hurst, sigma);
      if (p.loss < best.loss) best = p;
    }
  }

  // Pattern search with step halving over spread and sigma; the envelope
  // keeps the target exponent.
  double spread_step = 0.25;
  double sigma_step = 0.125;
  for (int round = 0; round < budget && score.worst(best.probe) > kGoodEnough;
       ++round) {
    Point round_best = best;
    for (double dir : {-1.0, 1.0}) {
      const double ls = std::clamp(best.log_spread + dir * spread_step,
                                   std::log(kMinSpread), std::log(kMaxSpread));
      const double sg = std::clamp(best.sigma + dir * sigma_step, 0.0, kMaxSigma);
      for (const Point& p : {eval(ls, best.envelope_hurst, best.sigma),
                             eval(best.log_spread, best.envelope_hurst, sg)}) {
        if (p.loss < round_best.loss) round_best = p;
      }
    }
    if (round_best.loss < best.loss) {
      best = round_best;
    } else if (spread_step > 0.01 || sigma_step > 0.005) {
      spread_step = std::max(0.01, 0.5 * spread_step);
      sigma_step = std::max(0.005, 0.5 * sigma_step);
    } else {
      break;
    }
  }

  CalibrationResult out;
  out.meta = generate_composite(kProbeDepth, std::exp(best.log_spread),
                                kCompositeSplitProbability, best.envelope_hurst,
                                best.sigma, probe_seed)
                 .meta();
  out.meta.target_hurst = target_hurst;
  out.meta.target_delta_h = target_delta_h;
  out.measured_hurst = best.probe.hurst;
  out.measured_delta_h = best.probe.delta_h;
  out.evaluations = evaluations;
  return out;
}

}  // namespace

CalibrationError::CalibrationError(const std::string& what,
                                   CalibrationResult best)
    : NumericalError(what), best_(std::move(best)) {}

double CalibrationError::hurst_residual() const {
  return best_.measured_hurst - best_.meta.target_hurst.value_or(0.0);
}

double CalibrationError::delta_h_residual() const {
  return best_.measured_delta_h - best_.meta.target_delta_h.value_or(0.0);
}

CalibrationResult calibrate(double target_hurst, double target_delta_h,
                            int budget, std::uint64_t probe_seed) {
  if (!(target_hurst > 0.5 && target_hurst < 1.0)) {
    throw ConfigError("calibration target H must lie in (0.5, 1)");
  }
  if (!(target_delta_h >= 0.0 && target_delta_h <= 4.0)) {
    throw ConfigError("calibration target delta-h must lie in [0, 4]");
  }
  if (budget < 1) throw ConfigError("calibration budget must be positive");

  CalibrationResult r =
      target_delta_h <= kMonofractalDeltaH
          ? calibrate_fgn(target_hurst, target_delta_h, budget, probe_seed)
          : calibrate_composite(target_hurst, target_delta_h, budget,
                                probe_seed);
  const bool hit =
      std::abs(r.measured_hurst - target_hurst) <= kCalibrationHurstTolerance &&
      std::abs(r.measured_delta_h - target_delta_h) <=
          kCalibrationDeltaHTolerance;
  if (!hit) {
    throw CalibrationError(describe(r, target_hurst, target_delta_h), r);
  }
  return r;
}

}  // namespace mfload
