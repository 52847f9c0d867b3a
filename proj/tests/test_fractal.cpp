#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mfload/calibrate.hpp"
#include "mfload/errors.hpp"
#include "mfload/fractal.hpp"
#include "mfload/traffic.hpp"

using namespace mfload;

namespace {

// Same fixture as tests/oracles/fluctuation_oracle.py.
std::vector<double> oracle_fixture(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t h = (static_cast<std::uint64_t>(i) * 2654435761ULL) % (1ULL << 32);
    x[i] = static_cast<double>(h) / 4294967296.0 +
           0.5 * std::sin(static_cast<double>(i) / 37.0) + 1.0;
  }
  return x;
}

std::vector<double> fgn_values(double h, std::size_t n, std::uint64_t seed) {
  const TrafficSeries s = generate_fgn(h, n, seed);
  return {s.values().begin(), s.values().end()};
}

}  // namespace

TEST_CASE("DFA matches the numpy reference") {
  const auto x = oracle_fixture(2048);
  const HurstEstimate e = estimate_hurst_dfa(x);
  CHECK(e.hurst == doctest::Approx(1.3686807845133637).epsilon(1e-10));
  CHECK(e.scale_range.min == 16);
  CHECK(e.scale_range.max == 512);
}

TEST_CASE("MF-DFA matches the numpy reference") {
  const auto x = oracle_fixture(2048);
  const MultifractalSpectrum s = mfdfa(x);
  const std::vector<double> h{1.4576692481010198, 1.4378506013337846, 1.4241801876928994,
                              1.4084146686845127, 1.3794170492584477, 1.3686807845133637,
                              1.359868987964162,  1.345770972167058};
  const std::vector<double> c{-5.317789706357955, -5.14401255620044,  -5.0256922471090535,
                              -4.891831471200952, -4.652121657493855, -4.56618287988391,
                              -4.4978186827956295, -4.393715713413658};
  REQUIRE(s.h_of_q.size() == h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(std::abs(s.h_of_q[i] - h[i]) < 1e-9);
    CHECK(std::abs(s.intercepts[i] - c[i]) < 1e-9);
  }
  CHECK(s.delta_h == doctest::Approx(h.front() - h.back()).epsilon(1e-12));
}

TEST_CASE("structure function matches the numpy reference") {
  const auto x = oracle_fixture(2048);
  const std::vector<std::size_t> scales{4, 8, 16, 32, 64, 128};
  const StructureFit f = structure_function(x, 2.0, scales);
  CHECK(std::abs(f.slope - 2.7677739627177855) < 1e-9);
  CHECK(std::abs(f.intercept - -5.355947572406724) < 1e-9);
}

TEST_CASE("DFA recovers known fGn exponents") {
  SUBCASE("white noise") {
    const double h = estimate_hurst_dfa(fgn_values(0.5, 1 << 14, 3)).hurst;
    CHECK(h >= 0.43);
    CHECK(h <= 0.57);
  }
  SUBCASE("H = 0.8") {
    const double h = estimate_hurst_dfa(fgn_values(0.8, 1 << 14, 3)).hurst;
    CHECK(h >= 0.73);
    CHECK(h <= 0.87);
  }
}

TEST_CASE("estimators reject constant and short series") {
  const std::vector<double> flat(4096, 2.0);
  CHECK_THROWS_AS(estimate_hurst_dfa(flat), DegenerateSeriesError);
  CHECK_THROWS_AS(mfdfa(flat), DegenerateSeriesError);
  const std::vector<double> short_dfa(255, 1.0);
  CHECK_THROWS_AS(estimate_hurst_dfa(short_dfa), InsufficientDataError);
  const auto short_mf = oracle_fixture(1000);
  CHECK_THROWS_AS(mfdfa(short_mf), InsufficientDataError);
}

TEST_CASE("MF-DFA validates the q grid and scale range") {
  const auto x = oracle_fixture(2048);
  const ScaleRange r = default_scale_range(x.size());
  CHECK_THROWS_AS(mfdfa(x, std::vector<double>{}, r), ConfigError);
  CHECK_THROWS_AS(mfdfa(x, std::vector<double>{3.0, 1.0, 2.0}, r), ConfigError);
  CHECK_THROWS_AS(mfdfa(x, std::vector<double>{1.0, 3.0}, r), ConfigError);
  CHECK_THROWS_AS(mfdfa(x, default_q_grid(), ScaleRange{16, 1024}), ConfigError);
  CHECK_THROWS_AS(mfdfa(x, default_q_grid(), ScaleRange{4, 512}), ConfigError);
  CHECK_THROWS_AS(mfdfa(x, default_q_grid(), ScaleRange{64, 64}), ConfigError);
}

TEST_CASE("q grid construction") {
  const auto q = make_q_grid(-5, 5, 11);
  CHECK(q.size() == 10);
  CHECK(std::find(q.begin(), q.end(), 0.0) == q.end());
  CHECK(std::find(q.begin(), q.end(), 2.0) != q.end());
  const auto odd = make_q_grid(-4, 4, 4);
  CHECK(std::is_sorted(odd.begin(), odd.end()));
  CHECK(std::find(odd.begin(), odd.end(), 2.0) != odd.end());
  CHECK_THROWS_AS(make_q_grid(1, 1, 3), ConfigError);
  CHECK_THROWS_AS(make_q_grid(-1, 1, 1), ConfigError);
}

TEST_CASE("log scales are increasing and span the range") {
  const auto s = log_scales({16, 4096});
  CHECK(s.front() == 16);
  CHECK(s.back() == 4096);
  CHECK(std::adjacent_find(s.begin(), s.end(),
                           [](auto a, auto b) { return a >= b; }) == s.end());
}

TEST_CASE("fGn is monofractal under MF-DFA") {
  const std::vector<double> q = make_q_grid(-5, 5, 11);
  for (double h : {0.3, 0.6, 0.9}) {
    const auto x = fgn_values(h, 1 << 14, 11);
    const MultifractalSpectrum s = mfdfa(x, q, default_scale_range(x.size()));
    CHECK(s.delta_h <= 0.2);
  }
}

TEST_CASE("MF-DFA h(2) agrees with DFA") {
  std::vector<std::vector<double>> inputs;
  inputs.push_back(fgn_values(0.7, 1 << 13, 5));
  const TrafficSeries c = generate_cascade(13, 1.0, 5);
  inputs.emplace_back(c.values().begin(), c.values().end());
  const TrafficSeries m = generate_composite(13, 2.0, 0.1, 0.8, 1.0, 5);
  inputs.emplace_back(m.values().begin(), m.values().end());
  inputs.push_back(oracle_fixture(4096));
  for (const auto& x : inputs) {
    CHECK(std::abs(mfdfa(x).h_at(2.0) - estimate_hurst_dfa(x).hurst) <= 0.05);
  }
}

TEST_CASE("delta h is h at q_min minus h at q_max") {
  const TrafficSeries c = generate_cascade(12, 2.0, 9);
  const MultifractalSpectrum s = mfdfa(c.values());
  CHECK(s.delta_h == s.h_of_q.front() - s.h_of_q.back());
  CHECK(s.delta_h >= -0.1);
}

TEST_CASE("calibrated cascade regime measures near its delta h target") {
  const CalibrationResult r = calibrate(0.6, 1.5, 40);
  CHECK(r.measured_delta_h >= 1.2);
  CHECK(r.measured_delta_h <= 1.8);
}

TEST_CASE("structure function on fGn recovers H") {
  const auto x = fgn_values(0.7, 1 << 14, 21);
  const std::vector<std::size_t> scales{8, 16, 32, 64, 128, 256, 512, 1024};
  const double h = structure_function(x, 2.0, scales).slope / 2.0;
  CHECK(h >= 0.6);
  CHECK(h <= 0.8);
}

TEST_CASE("structure function of a constant positive series is an exact power law") {
  const std::vector<double> flat(1024, 0.25);
  const std::vector<std::size_t> scales{2, 4, 8, 16, 32, 64};
  const StructureFit f = structure_function(flat, 1.0, scales, Aggregation::Raw);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.residual_rms < 1e-12);
  // Adjacent block sums of a constant cancel.
  CHECK_THROWS_AS(structure_function(flat, 1.0, scales), DegenerateSeriesError);
}

TEST_CASE("structure function agrees with MF-DFA on cascades") {
  const std::vector<std::size_t> scales = log_scales({16, 1 << 10}, 12);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TrafficSeries c = generate_cascade(14, 0.5 * static_cast<double>(seed), seed);
    const double sf = structure_function(c.values(), 2.0, scales).slope / 2.0;
    const double h2 = mfdfa(c.values()).h_at(2.0);
    CHECK(std::abs(sf - h2) <= 0.1);
  }
}

TEST_CASE("structure function domain and argument errors") {
  std::vector<double> x(1024, 1.0);
  x[10] = 0.0;
  const std::vector<std::size_t> scales{2, 4, 8};
  CHECK_THROWS_AS(structure_function(x, -2.0, scales), DomainError);
  CHECK_THROWS_AS(structure_function(x, 0.0, scales), ConfigError);
  const std::vector<std::size_t> too_big{2, 512};
  CHECK_THROWS_AS(structure_function(x, 2.0, too_big), ConfigError);
}

TEST_CASE("h(q) does not increase with q on cascades") {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TrafficSeries c = generate_cascade(14, 1.0, seed);
    const MultifractalSpectrum s = mfdfa(c.values());
    bool ok = true;
    for (std::size_t i = 1; i < s.h_of_q.size(); ++i) {
      ok = ok && s.h_of_q[i] <= s.h_of_q[i - 1] + 0.05;
    }
    good += ok;
  }
  CHECK(good >= 3);
}

TEST_CASE("DFA is invariant under positive affine maps") {
  const auto x = fgn_values(0.7, 1 << 12, 2);
  const double h = estimate_hurst_dfa(x).hurst;
  for (auto [alpha, beta] : {std::pair{3.0, 0.0}, {0.001, 5.0}, {250.0, -40.0}}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i] + beta;
    CHECK(std::abs(estimate_hurst_dfa(y).hurst - h) <= 1e-12);
  }
}

TEST_CASE("estimators are pure") {
  const auto x = oracle_fixture(4096);
  const MultifractalSpectrum a = mfdfa(x);
  const MultifractalSpectrum b = mfdfa(x);
  CHECK(a.h_of_q == b.h_of_q);
  CHECK(a.intercepts == b.intercepts);
  CHECK(estimate_hurst_dfa(x).hurst == estimate_hurst_dfa(x).hurst);
}
