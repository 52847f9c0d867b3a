#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfload/fractal.hpp"
#include "mfload/metrics.hpp"
#include "mfload/sim.hpp"
#include "mfload/traffic.hpp"

namespace mfload {

enum class TrafficSource { Calibrated, Generator, File };

std::string to_string(TrafficSource source);

struct TrafficSpec {
  TrafficSource source = TrafficSource::Calibrated;
  /// Calibrated: targets and search budget.
  double target_hurst = 0.6;
  double target_delta_h = 1.5;
  int calibration_budget = 40;
  /// Generator: explicit parameters. The seed is replaced by the scenario's
  /// traffic substream and the length by the horizon.
  GeneratorMeta generator;
  /// File: series CSV path.
  std::string path;
};

struct ScenarioConfig {
  std::string name = "scenario";
  TrafficSpec traffic;
  std::vector<ServerSpec> cluster;
  WeightTriple weights;
  Policy policy;
  std::int64_t horizon = 16384;
  int window = 64;
  double arrival_scale = 1.6;
  DemandParams demand;
  std::uint64_t seed = 1;
  std::vector<double> q_grid = default_q_grid();

  void validate() const;
};

/// Homogeneous cluster with ids 1..n.
std::vector<ServerSpec> uniform_cluster(int servers, int cpu_count,
                                        double ram_capacity, double net_capacity);

struct WindowReport {
  /// Ticks completed when the report was taken.
  std::int64_t tick = 0;
  ImbalanceReport report;
};

struct ScenarioResult {
  std::vector<WindowReport> reports;
  GeneratorMeta traffic_meta;
  /// MF-DFA of the traffic actually fed to the simulator; empty when the
  /// series is too short or constant.
  std::optional<double> measured_hurst;
  std::optional<double> measured_delta_h;
  SimCounters counters;
  std::int64_t running_at_end = 0;
  std::int64_t queued_at_end = 0;
  double max_utilization = 0.0;
};

/// Traffic for the config: calibrated, generated or loaded, cut to the
/// horizon. Calibrations are cached per target and budget.
TrafficSeries scenario_traffic(const ScenarioConfig& config);

ScenarioResult run_scenario(const ScenarioConfig& config);
ScenarioResult run_scenario(const ScenarioConfig& config,
                            const TrafficSeries& traffic);

double mean_isl_tot_final_quarter(const std::vector<WindowReport>& reports);
/// Population standard deviation over mean; 0 when the mean is 0.
double cv_isl_tot_final_half(const std::vector<WindowReport>& reports);
double mean_isl_tot(const std::vector<WindowReport>& reports);

}  // namespace mfload
