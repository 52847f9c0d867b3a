#include "mfload/metrics.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "mfload/errors.hpp"

namespace mfload {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

double sq(double v) { return v * v; }

}  // namespace

void ServerSpec::validate() const {
  if (cpu_count < 1) {
    throw ConfigError("server " + std::to_string(id) + ": cpu_count must be >= 1");
  }
  if (!(ram_capacity > 0.0) || !std::isfinite(ram_capacity)) {
    throw ConfigError("server " + std::to_string(id) + ": ram_capacity must be > 0");
  }
  if (!(net_capacity > 0.0) || !std::isfinite(net_capacity)) {
    throw ConfigError("server " + std::to_string(id) + ": net_capacity must be > 0");
  }
}

void validate_cluster(std::span<const ServerSpec> specs) {
  if (specs.empty()) throw ConfigError("cluster needs at least one server");
  std::set<int> ids;
  for (const ServerSpec& s : specs) {
    s.validate();
    if (!ids.insert(s.id).second) {
      throw ConfigError("duplicate server id " + std::to_string(s.id));
    }
  }
}

void ResourceUtilization::validate() const {
  if (!in_unit(cpu) || !in_unit(ram) || !in_unit(net)) {
    throw ConfigError("utilization components must lie in [0, 1]");
  }
  if (window < 1) throw ConfigError("utilization window must be positive");
}

void WeightTriple::validate() const {
  if (!(a >= 0.0 && b >= 0.0 && c >= 0.0)) {
    throw ConfigError("weights must be non-negative");
  }
  if (std::abs(a + b + c - 1.0) > 1e-9) {
    throw ConfigError("weights violate a + b + c = 1 (sum is " +
                      std::to_string(a + b + c) + ")");
  }
}

ResourceUtilization average_utilization(
    std::span<const UtilizationSample> samples, int window) {
  if (samples.empty()) {
    throw InsufficientDataError("no utilization samples to average");
  }
  if (window != static_cast<int>(samples.size())) {
    throw ConfigError("window must equal the number of samples");
  }
  ResourceUtilization u;
  u.window = window;
  for (const UtilizationSample& s : samples) {
    if (!in_unit(s.cpu) || !in_unit(s.ram) || !in_unit(s.net)) {
      throw ConfigError("utilization sample outside [0, 1]");
    }
    u.cpu += s.cpu;
    u.ram += s.ram;
    u.net += s.net;
  }
  const auto n = static_cast<double>(samples.size());
  u.cpu /= n;
  u.ram /= n;
  u.net /= n;
  return u;
}

SystemAverages system_averages(std::span<const ResourceUtilization> utils,
                               std::span<const ServerSpec> specs) {
  if (utils.empty() || utils.size() != specs.size()) {
    throw ConfigError("utilizations and server specs must align (" +
                      std::to_string(utils.size()) + " vs " +
                      std::to_string(specs.size()) + ")");
  }
  // Accumulated as offsets from the first server so a uniform cluster
  // averages to exactly its common value.
  const ResourceUtilization& ref = utils.front();
  double cpu = 0.0;
  double ram = 0.0;
  double net = 0.0;
  double n_cpu = 0.0;
  double n_ram = 0.0;
  double n_net = 0.0;
  for (std::size_t i = 0; i < utils.size(); ++i) {
    utils[i].validate();
    const ServerSpec& s = specs[i];
    cpu += (utils[i].cpu - ref.cpu) * s.cpu_count;
    ram += (utils[i].ram - ref.ram) * s.ram_capacity;
    net += (utils[i].net - ref.net) * s.net_capacity;
    n_cpu += s.cpu_count;
    n_ram += s.ram_capacity;
    n_net += s.net_capacity;
  }
  return {ref.cpu + cpu / n_cpu, ref.ram + ram / n_ram, ref.net + net / n_net};
}

double resource_imbalance(std::span<const double> values, double system_avg) {
  if (values.empty()) throw ConfigError("resource_imbalance needs values");
  double acc = 0.0;
  for (double v : values) acc += sq(v - system_avg);
  return acc;
}

double total_imbalance(double isl_cpu, double isl_ram, double isl_net) {
  if (isl_cpu < 0.0 || isl_ram < 0.0 || isl_net < 0.0) {
    throw ConfigError("imbalance components must be non-negative");
  }
  return isl_cpu + isl_ram + isl_net;
}

double server_sil(const ResourceUtilization& util, const SystemAverages& avgs,
                  const WeightTriple& w) {
  w.validate();
  return w.a * sq(util.cpu - avgs.cpu_all) + w.b * sq(util.ram - avgs.ram_all) +
         w.c * sq(util.net - avgs.net_all);
}

double system_sil(std::span<const double> sils) {
  if (sils.empty()) throw ConfigError("system_sil needs at least one server");
  return std::accumulate(sils.begin(), sils.end(), 0.0) /
         static_cast<double>(sils.size());
}

double efficiency(std::span<const ResourceUtilization> utils,
                  const WeightTriple& w) {
  if (utils.empty()) throw ConfigError("efficiency needs at least one server");
  w.validate();
  double acc = 0.0;
  for (const ResourceUtilization& u : utils) {
    u.validate();
    acc += w.a * u.cpu + w.b * u.ram + w.c * u.net;
  }
  return acc / static_cast<double>(utils.size());
}

ImbalanceReport full_report(std::span<const ResourceUtilization> utils,
                            std::span<const ServerSpec> specs,
                            const WeightTriple& w) {
  w.validate();
  const SystemAverages avg = system_averages(utils, specs);

  std::vector<double> cpu;
  std::vector<double> ram;
  std::vector<double> net;
  for (const ResourceUtilization& u : utils) {
    cpu.push_back(u.cpu);
    ram.push_back(u.ram);
    net.push_back(u.net);
  }

  ImbalanceReport r;
  r.isl_cpu = resource_imbalance(cpu, avg.cpu_all);
  r.isl_ram = resource_imbalance(ram, avg.ram_all);
  r.isl_net = resource_imbalance(net, avg.net_all);
  r.ibl_tot = total_imbalance(r.isl_cpu, r.isl_ram, r.isl_net);
  for (const ResourceUtilization& u : utils) {
    r.sil.push_back(server_sil(u, avg, w));
  }
  r.isl_tot = system_sil(r.sil);
  r.efficiency = efficiency(utils, w);
  return r;
}

}  // namespace mfload
