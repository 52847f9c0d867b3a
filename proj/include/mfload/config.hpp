#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfload/scenario.hpp"

namespace mfload {

/// One (H, delta-h) cell of a sweep.
struct SweepCell {
  std::string name;
  double hurst = 0.0;
  double delta_h = 0.0;
};

struct SweepConfig {
  std::vector<SweepCell> cells;
  /// Concurrent cells; 0 picks the hardware concurrency.
  int jobs = 0;
};

struct FileConfig {
  ScenarioConfig scenario;
  SweepConfig sweep;
};

/// Cells (0.6, 1.5), (0.6, 2.5) and (0.9, 2.5).
std::vector<SweepCell> default_sweep_cells();
std::string cell_name(double hurst, double delta_h);

/// Parses sectioned `key = value` text. Throws ConfigError naming the key
/// path on unknown keys, malformed values or broken invariants.
FileConfig parse_config_text(std::istream& in, const std::string& origin = "<input>");
FileConfig parse_config(const std::string& path);

/// Stable text form of a validated config; every field, fixed order.
std::string canonical_config(const ScenarioConfig& config);
/// Hex SHA-256 of canonical_config.
std::string config_digest(const ScenarioConfig& config);

}  // namespace mfload
