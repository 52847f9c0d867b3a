#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfload {

enum class GeneratorKind { Cascade, FGn, Composite };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

/// Parameters that fully determine a generated series.
///
/// Cascade uses depth, multiplier_spread and split_probability.
/// FGn uses hurst_parameter and length.
/// Composite uses all of the cascade knobs plus the envelope knobs.
struct GeneratorMeta {
  GeneratorKind kind = GeneratorKind::FGn;
  std::uint64_t seed = 0;
  unsigned depth = 0;
  std::optional<double> target_hurst;
  std::optional<double> target_delta_h;
  double multiplier_spread = 0.0;

  /// Probability that a cascade split draws a random weight instead of 0.5.
  double split_probability = 1.0;
  /// Hurst exponent of the fGn driving the envelope (or the FGn series itself).
  double hurst_parameter = 0.5;
  /// Log-amplitude of the lognormal envelope.
  double envelope_sigma = 0.0;
  /// Series length for FGn; 2^depth otherwise.
  std::size_t length = 0;

  /// Throws ConfigError when a field breaks its invariant.
  void validate() const;
};

/// Non-negative load intensity per tick.
class TrafficSeries {
 public:
  TrafficSeries() = default;
  TrafficSeries(std::vector<double> values, GeneratorMeta meta);

  std::span<const double> values() const { return values_; }
  std::size_t tick_count() const { return values_.size(); }
  const GeneratorMeta& meta() const { return meta_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
  GeneratorMeta meta_;
};

/// Total mass of a freshly generated cascade.
inline constexpr double kCascadeMass = 1.0;
inline constexpr unsigned kMaxCascadeDepth = 24;

/// Conservative binary multiplicative cascade.
///
/// Every interval's mass is split into (W, 1 - W) at each of `depth` levels.
/// With probability `split_probability` W ~ Beta(1/spread, 1/spread), drawn
/// by inverse CDF so a fixed seed varies continuously with the spread;
/// otherwise W = 1/2. The result has 2^depth values summing to kCascadeMass.
TrafficSeries generate_cascade(unsigned depth, double multiplier_spread,
                               std::uint64_t seed,
                               double split_probability = 1.0);

/// Raw zero-mean, unit-variance fractional Gaussian noise by circulant
/// embedding. Signed; used as a building block.
std::vector<double> fgn_increments(double hurst, std::size_t length,
                                   std::uint64_t seed);

/// fGn shifted by its minimum and rescaled to unit mean.
TrafficSeries generate_fgn(double hurst, std::size_t length,
                           std::uint64_t seed);

/// Cascade-modulated lognormal fGn envelope, rescaled to unit mean:
///   x_t = c_t * exp(sigma * z_t)
/// where c is a unit-mean cascade and z standardized fGn(hurst_parameter).
TrafficSeries generate_composite(unsigned depth, double multiplier_spread,
                                 double split_probability,
                                 double envelope_hurst, double envelope_sigma,
                                 std::uint64_t seed);

/// Runs whichever generator `meta.kind` names.
TrafficSeries generate(const GeneratorMeta& meta);

}  // namespace mfload
