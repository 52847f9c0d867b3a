#include "mfload/traffic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>

#include <boost/math/special_functions/beta.hpp>

#include "mfload/errors.hpp"
#include "mfload/rng.hpp"

namespace mfload {

namespace {

// fftw_plan_* is not thread safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

ComplexBuffer alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return ComplexBuffer(p);
}

/// In-place forward DFT.
void forward_dft(fftw_complex* data, std::size_t n) {
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

double fgn_autocovariance(double hurst, double k) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) +
                std::pow(std::abs(k - 1.0), e));
}

/// Uniform on the open interval (0, 1) from 53 random bits.
double open_unit(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

void normalize_to_unit_mean(std::vector<double>& x) {
  const double mean =
      std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (!(mean > 0.0)) {
    throw DegenerateSeriesError("cannot rescale a series with zero mean");
  }
  for (double& v : x) v /= mean;
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Cascade: return "cascade";
    case GeneratorKind::FGn: return "fgn";
    case GeneratorKind::Composite: return "composite";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "cascade") return GeneratorKind::Cascade;
  if (s == "fgn") return GeneratorKind::FGn;
  if (s == "composite") return GeneratorKind::Composite;
  throw ConfigError("unknown generator kind '" + s + "'");
}

void GeneratorMeta::validate() const {
  if (target_hurst && !(*target_hurst > 0.0 && *target_hurst < 1.0)) {
    throw ConfigError("target_hurst must lie strictly in (0, 1)");
  }
  if (target_delta_h && !(*target_delta_h >= 0.0)) {
    throw ConfigError("target_delta_h must be non-negative");
  }
  if (kind == GeneratorKind::FGn) {
    if (!(hurst_parameter > 0.0 && hurst_parameter < 1.0)) {
      throw ConfigError("fGn hurst must lie strictly in (0, 1)");
    }
    if (length < 64) throw ConfigError("fGn length must be at least 64");
    return;
  }
  if (depth < 1 || depth > kMaxCascadeDepth) {
    throw ConfigError("cascade depth must be in [1, 24]");
  }
  if (!(multiplier_spread > 0.0) || !std::isfinite(multiplier_spread)) {
    throw ConfigError("multiplier_spread must be positive");
  }
  if (!(split_probability >= 0.0 && split_probability <= 1.0)) {
    throw ConfigError("split_probability must be in [0, 1]");
  }
  if (kind == GeneratorKind::Composite) {
    if (!(hurst_parameter > 0.0 && hurst_parameter < 1.0)) {
      throw ConfigError("envelope hurst must lie strictly in (0, 1)");
    }
    if (!(envelope_sigma >= 0.0) || !std::isfinite(envelope_sigma)) {
      throw ConfigError("envelope_sigma must be non-negative");
    }
  }
}

TrafficSeries::TrafficSeries(std::vector<double> values, GeneratorMeta meta)
    : values_(std::move(values)), meta_(meta) {
  if (values_.empty()) throw ConfigError("traffic series must not be empty");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("traffic values must be finite and non-negative");
    }
  }
}

TrafficSeries generate_cascade(unsigned depth, double multiplier_spread,
                               std::uint64_t seed, double split_probability) {
  GeneratorMeta meta;
  meta.kind = GeneratorKind::Cascade;
  meta.seed = seed;
  meta.depth = depth;
  meta.multiplier_spread = multiplier_spread;
  meta.split_probability = split_probability;
  meta.validate();
  meta.length = std::size_t{1} << depth;

  // Beta(a, a) with a = 1/spread; far enough into the limit it is a point
  // mass at 1/2.
  const double concentration = 1.0 / multiplier_spread;
  const bool degenerate = concentration > 1e8;

  Rng rng = make_rng(seed, "cascade");
  std::vector<double> mass{kCascadeMass};
  mass.reserve(meta.length);
  std::vector<double> next;
  next.reserve(meta.length);
  for (unsigned level = 0; level < depth; ++level) {
    next.clear();
    for (double m : mass) {
      // Both draws are always consumed so the stream layout does not depend
      // on the parameters.
      const double u_split = open_unit(rng);
      const double u_weight = open_unit(rng);
      double w = 0.5;
      if (!degenerate && u_split < split_probability) {
        w = boost::math::ibeta_inv(concentration, concentration, u_weight);
      }
      next.push_back(m * w);
      next.push_back(m * (1.0 - w));
    }
    mass.swap(next);
  }
  return TrafficSeries(std::move(mass), meta);
}

std::vector<double> fgn_increments(double hurst, std::size_t length,
                                   std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw ConfigError("fGn hurst must lie strictly in (0, 1)");
  }
  if (length < 2) throw ConfigError("fGn length must be at least 2");

  // Circulant embedding of the n x n Toeplitz covariance into size m.
  const std::size_t m = 2 * std::bit_ceil(length);
  const std::size_t half = m / 2;

  auto eig = alloc_complex(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = j <= half ? j : m - j;
    eig[j][0] = fgn_autocovariance(hurst, static_cast<double>(k));
    eig[j][1] = 0.0;
  }
  forward_dft(eig.get(), m);

  Rng rng = make_rng(seed, "fgn");
  std::normal_distribution<double> normal(0.0, 1.0);
  auto w = alloc_complex(m);
  const double md = static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    // fGn spectra are non-negative; clip rounding noise.
    const double scale = std::sqrt(std::max(eig[j][0], 0.0) / md);
    w[j][0] = scale * normal(rng);
    w[j][1] = scale * normal(rng);
  }
  forward_dft(w.get(), m);

  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = w[i][0];
  return out;
}

TrafficSeries generate_fgn(double hurst, std::size_t length,
                           std::uint64_t seed) {
  GeneratorMeta meta;
  meta.kind = GeneratorKind::FGn;
  meta.seed = seed;
  meta.hurst_parameter = hurst;
  meta.length = length;
  meta.validate();

  std::vector<double> x = fgn_increments(hurst, length, seed);
  const double lo = *std::min_element(x.begin(), x.end());
  for (double& v : x) v -= lo;
  normalize_to_unit_mean(x);
  return TrafficSeries(std::move(x), meta);
}

TrafficSeries generate_composite(unsigned depth, double multiplier_spread,
                                 double split_probability,
                                 double envelope_hurst, double envelope_sigma,
                                 std::uint64_t seed) {
  GeneratorMeta meta;
  meta.kind = GeneratorKind::Composite;
  meta.seed = seed;
  meta.depth = depth;
  meta.multiplier_spread = multiplier_spread;
  meta.split_probability = split_probability;
  meta.hurst_parameter = envelope_hurst;
  meta.envelope_sigma = envelope_sigma;
  meta.validate();
  meta.length = std::size_t{1} << depth;

  const TrafficSeries cascade =
      generate_cascade(depth, multiplier_spread,
                       substream_seed(seed, "composite.cascade"),
                       split_probability);
  std::vector<double> z = fgn_increments(
      envelope_hurst, meta.length, substream_seed(seed, "composite.envelope"));

  const double n = static_cast<double>(z.size());
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);

  std::vector<double> x(meta.length);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = cascade[i] * std::exp(envelope_sigma * (z[i] - mean) / sd);
  }
  normalize_to_unit_mean(x);
  return TrafficSeries(std::move(x), meta);
}

TrafficSeries generate(const GeneratorMeta& meta) {
  meta.validate();
  TrafficSeries out;
  switch (meta.kind) {
    case GeneratorKind::Cascade:
      out = generate_cascade(meta.depth, meta.multiplier_spread, meta.seed,
                             meta.split_probability);
      break;
    case GeneratorKind::FGn:
      out = generate_fgn(meta.hurst_parameter, meta.length, meta.seed);
      break;
    case GeneratorKind::Composite:
      out = generate_composite(meta.depth, meta.multiplier_spread,
                               meta.split_probability, meta.hurst_parameter,
                               meta.envelope_sigma, meta.seed);
      break;
  }
  // Keep the calibration targets with the realized series.
  GeneratorMeta m = out.meta();
  m.target_hurst = meta.target_hurst;
  m.target_delta_h = meta.target_delta_h;
  std::vector<double> v(out.values().begin(), out.values().end());
  return TrafficSeries(std::move(v), m);
}

}  // namespace mfload
