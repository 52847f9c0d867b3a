#include "mfload/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "mfload/calibrate.hpp"
#include "mfload/csv_io.hpp"
#include "mfload/errors.hpp"
#include "mfload/rng.hpp"

namespace mfload {

namespace {

std::mutex calibration_mutex;
std::map<std::tuple<double, double, int>, CalibrationResult> calibration_cache;

CalibrationResult cached_calibration(const TrafficSpec& t) {
  const auto key = std::make_tuple(t.target_hurst, t.target_delta_h,
                                   t.calibration_budget);
  {
    std::lock_guard lock(calibration_mutex);
    const auto it = calibration_cache.find(key);
    if (it != calibration_cache.end()) return it->second;
  }
  CalibrationResult r =
      calibrate(t.target_hurst, t.target_delta_h, t.calibration_budget);
  std::lock_guard lock(calibration_mutex);
  calibration_cache.emplace(key, r);
  return r;
}

unsigned depth_for(std::int64_t horizon) {
  return static_cast<unsigned>(
      std::bit_width(static_cast<std::uint64_t>(horizon - 1)));
}

TrafficSeries generate_for(GeneratorMeta meta, const ScenarioConfig& config) {
  meta.seed = substream_seed(config.seed, "traffic");
  if (meta.kind == GeneratorKind::FGn) {
    meta.length = static_cast<std::size_t>(config.horizon);
  } else {
    meta.depth = depth_for(config.horizon);
  }
  const TrafficSeries full = generate(meta);
  const auto n = static_cast<std::size_t>(config.horizon);
  if (full.tick_count() == n) return full;
  const auto v = full.values();
  GeneratorMeta cut = full.meta();
  cut.length = n;
  return TrafficSeries(std::vector<double>(v.begin(), v.begin() + n), cut);
}

std::vector<double> isl_tail(const std::vector<WindowReport>& reports,
                             std::size_t parts) {
  if (reports.empty()) throw InsufficientDataError("no reports to summarize");
  const std::size_t take = std::max<std::size_t>(1, reports.size() / parts);
  std::vector<double> out;
  for (std::size_t i = reports.size() - take; i < reports.size(); ++i) {
    out.push_back(reports[i].report.isl_tot);
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(TrafficSource source) {
  switch (source) {
    case TrafficSource::Calibrated: return "calibrated";
    case TrafficSource::Generator: return "generator";
    case TrafficSource::File: return "file";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  if (name.empty()) throw ConfigError("scenario name must not be empty");
  validate_cluster(cluster);
  weights.validate();
  policy.validate();
  demand.validate();
  if (horizon < 256) throw ConfigError("horizon must be at least 256 ticks");
  if (horizon > (std::int64_t{1} << kMaxCascadeDepth)) {
    throw ConfigError("horizon must not exceed 2^24 ticks");
  }
  if (window < 1 || window > horizon) {
    throw ConfigError("window must satisfy 1 <= window <= horizon");
  }
  if (!(arrival_scale > 0.0) || !std::isfinite(arrival_scale)) {
    throw ConfigError("arrival_scale must be positive");
  }
  if (q_grid.empty() || !std::is_sorted(q_grid.begin(), q_grid.end()) ||
      std::find(q_grid.begin(), q_grid.end(), 2.0) == q_grid.end() ||
      std::find(q_grid.begin(), q_grid.end(), 0.0) != q_grid.end()) {
    throw ConfigError("q grid must be sorted, contain 2 and exclude 0");
  }
  switch (traffic.source) {
    case TrafficSource::Calibrated:
      if (!(traffic.target_hurst > 0.5 && traffic.target_hurst < 1.0)) {
        throw ConfigError("traffic.hurst must lie in (0.5, 1)");
      }
      if (!(traffic.target_delta_h >= 0.0 && traffic.target_delta_h <= 4.0)) {
        throw ConfigError("traffic.delta_h must lie in [0, 4]");
      }
      if (traffic.calibration_budget < 1) {
        throw ConfigError("traffic.budget must be positive");
      }
      break;
    case TrafficSource::Generator: {
      GeneratorMeta m = traffic.generator;
      if (m.kind == GeneratorKind::FGn) {
        m.length = static_cast<std::size_t>(horizon);
      } else {
        m.depth = depth_for(horizon);
      }
      m.validate();
      break;
    }
    case TrafficSource::File:
      if (traffic.path.empty()) throw ConfigError("traffic.path must be set");
      break;
  }
}

std::vector<ServerSpec> uniform_cluster(int servers, int cpu_count,
                                        double ram_capacity, double net_capacity) {
  if (servers < 1) throw ConfigError("cluster.servers must be positive");
  std::vector<ServerSpec> out;
  for (int i = 0; i < servers; ++i) {
    out.push_back({i + 1, cpu_count, ram_capacity, net_capacity});
  }
  validate_cluster(out);
  return out;
}

TrafficSeries scenario_traffic(const ScenarioConfig& config) {
  switch (config.traffic.source) {
    case TrafficSource::Calibrated:
      return generate_for(cached_calibration(config.traffic).meta, config);
    case TrafficSource::Generator:
      return generate_for(config.traffic.generator, config);
    case TrafficSource::File:
      return load_series_csv(config.traffic.path);
  }
  throw ConfigError("unknown traffic source");
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  return run_scenario(config, scenario_traffic(config));
}

ScenarioResult run_scenario(const ScenarioConfig& config,
                            const TrafficSeries& traffic) {
  config.validate();
  ScenarioResult result;
  result.traffic_meta = traffic.meta();
  try {
    const MultifractalSpectrum spec =
        mfdfa(traffic.values(), config.q_grid,
              default_scale_range(traffic.tick_count()));
    result.measured_hurst = spec.h_at(2.0);
    result.measured_delta_h = spec.delta_h;
  } catch (const NumericalError&) {
    // Constant or short traffic still drives the simulator.
  }

  const DemandParams demand = with_cluster_caps(config.demand, config.cluster);
  ClusterState state(config.cluster, config.window);
  SimStreams streams(config.seed);
  std::vector<ResourceUtilization> utils(state.size());

  for (std::int64_t t = 0; t < config.horizon; ++t) {
    std::vector<Task> arrivals =
        arrivals_from_traffic(traffic, t, config.arrival_scale, demand, streams);
    step(state, std::move(arrivals), config.policy);

    for (std::size_t i = 0; i < state.size(); ++i) {
      const UtilizationSample u = state.instantaneous(i);
      result.max_utilization =
          std::max({result.max_utilization, u.cpu, u.ram, u.net});
    }
    if (state.tick() % config.window == 0) {
      for (std::size_t i = 0; i < state.size(); ++i) {
        const auto& h = state.history(i);
        const std::vector<UtilizationSample> samples(h.begin(), h.end());
        utils[i] = average_utilization(samples, config.window);
      }
      result.reports.push_back(
          {state.tick(), full_report(utils, config.cluster, config.weights)});
    }
  }

  result.counters = state.counters();
  for (std::size_t i = 0; i < state.size(); ++i) {
    result.running_at_end += static_cast<std::int64_t>(state.running(i).size());
  }
  result.queued_at_end = static_cast<std::int64_t>(state.queue().size());
  if (result.counters.arrived !=
      result.counters.completed + result.running_at_end + result.queued_at_end) {
    throw InternalConsistencyError("task conservation violated");
  }
  return result;
}

double mean_isl_tot(const std::vector<WindowReport>& reports) {
  return mean_of(isl_tail(reports, 1));
}

double mean_isl_tot_final_quarter(const std::vector<WindowReport>& reports) {
  return mean_of(isl_tail(reports, 4));
}

double cv_isl_tot_final_half(const std::vector<WindowReport>& reports) {
  const std::vector<double> v = isl_tail(reports, 2);
  const double m = mean_of(v);
  if (m == 0.0) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size())) / m;
}

}  // namespace mfload
