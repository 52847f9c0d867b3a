#pragma once

#include <span>
#include <vector>

namespace mfload {

struct ServerSpec {
  int id = 0;
  int cpu_count = 1;
  double ram_capacity = 1.0;
  double net_capacity = 1.0;

  void validate() const;
};

/// Checks every spec and that ids are unique.
void validate_cluster(std::span<const ServerSpec> specs);

/// One instantaneous (cpu, ram, net) reading, each in [0, 1].
struct UtilizationSample {
  double cpu = 0.0;
  double ram = 0.0;
  double net = 0.0;
};

/// Utilization of one server averaged over an observation window of
/// `window` ticks.
struct ResourceUtilization {
  double cpu = 0.0;
  double ram = 0.0;
  double net = 0.0;
  int window = 1;

  void validate() const;
};

struct SystemAverages {
  double cpu_all = 0.0;
  double ram_all = 0.0;
  double net_all = 0.0;
};

struct WeightTriple {
  double a = 1.0 / 3.0;
  double b = 1.0 / 3.0;
  double c = 1.0 / 3.0;

  /// Throws ConfigError naming "a + b + c = 1" when the sum is off.
  void validate() const;
};

struct ImbalanceReport {
  double isl_cpu = 0.0;
  double isl_ram = 0.0;
  double isl_net = 0.0;
  double ibl_tot = 0.0;
  std::vector<double> sil;
  double isl_tot = 0.0;
  double efficiency = 0.0;
};

ResourceUtilization average_utilization(
    std::span<const UtilizationSample> samples, int window);

/// Capacity-weighted system averages: cpu by cpu_count, ram and net by
/// their capacities.
SystemAverages system_averages(std::span<const ResourceUtilization> utils,
                               std::span<const ServerSpec> specs);

/// Unnormalized sum of squared deviations from `system_avg`.
double resource_imbalance(std::span<const double> values, double system_avg);

/// isl_cpu + isl_ram + isl_net.
double total_imbalance(double isl_cpu, double isl_ram, double isl_net);

/// a (cpu - cpu_all)^2 + b (ram - ram_all)^2 + c (net - net_all)^2
double server_sil(const ResourceUtilization& util, const SystemAverages& avgs,
                  const WeightTriple& w);

/// Mean of the per-server SIL values.
double system_sil(std::span<const double> sils);

/// Mean over servers of a cpu + b ram + c net.
double efficiency(std::span<const ResourceUtilization> utils,
                  const WeightTriple& w);

ImbalanceReport full_report(std::span<const ResourceUtilization> utils,
                            std::span<const ServerSpec> specs,
                            const WeightTriple& w);

}  // namespace mfload
