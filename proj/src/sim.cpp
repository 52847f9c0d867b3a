#include "mfload/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mfload/errors.hpp"

namespace mfload {

namespace {

constexpr int kMaxMigrationsPerTick = 64;
constexpr int kMaxTruncationRetries = 32;
/// Slack for summation order when re-deriving loads after a removal.
constexpr double kUtilizationSlack = 1e-12;

double draw_lognormal(Rng& rng, double mean, double sigma, double cap) {
  const double mu = std::log(mean) - 0.5 * sigma * sigma;
  std::lognormal_distribution<double> dist(mu, sigma);
  for (int i = 0; i < kMaxTruncationRetries; ++i) {
    const double x = dist(rng);
    if (x <= cap && x > 0.0) return x;
  }
  return std::min(mean, cap);
}

/// Snaps rounding residue at the [0, 1] edges; larger excursions are left
/// for the metric validation to reject.
double snap(double u) {
  if (u < 0.0 && u > -kUtilizationSlack) return 0.0;
  if (u > 1.0 && u < 1.0 + kUtilizationSlack) return 1.0;
  return u;
}

UtilizationSample to_utilization(const ServerLoad& load, const ServerSpec& s) {
  return {snap(load.cpu / s.cpu_count), snap(load.ram / s.ram_capacity),
          snap(load.net / s.net_capacity)};
}

double composite(const UtilizationSample& u, const WeightTriple& w) {
  return w.a * u.cpu + w.b * u.ram + w.c * u.net;
}

/// Composite size of a task measured against one server's capacities.
double composite_demand(const Task& t, const ServerSpec& s,
                        const WeightTriple& w) {
  return w.a * t.cpu_demand / s.cpu_count + w.b * t.ram_demand / s.ram_capacity +
         w.c * t.net_demand / s.net_capacity;
}

std::vector<double> sils_of(std::span<const UtilizationSample> samples,
                            std::span<const ServerSpec> specs,
                            const WeightTriple& w) {
  std::vector<ResourceUtilization> utils;
  utils.reserve(samples.size());
  for (const UtilizationSample& s : samples) {
    utils.push_back({s.cpu, s.ram, s.net, 1});
  }
  const SystemAverages avg = system_averages(utils, specs);
  std::vector<double> out;
  out.reserve(utils.size());
  for (const ResourceUtilization& u : utils) out.push_back(server_sil(u, avg, w));
  return out;
}

/// Task sums and migration charges of one server, kept apart so admission
/// checks add terms in the same order a later recomputation does.
struct LoadParts {
  ServerLoad tasks;
  double charge = 0.0;

  ServerLoad total() const { return {tasks.cpu, tasks.ram, tasks.net + charge}; }

  bool fits(const Task& t, const ServerSpec& s, double extra_net) const {
    return (tasks.cpu + t.cpu_demand) / s.cpu_count <= 1.0 &&
           (tasks.ram + t.ram_demand) / s.ram_capacity <= 1.0 &&
           ((tasks.net + t.net_demand) + (charge + extra_net)) / s.net_capacity <=
               1.0;
  }
};

}  // namespace

void DemandParams::validate() const {
  if (classes.empty()) throw ConfigError("demand needs at least one service class");
  for (const DemandClass& c : classes) {
    if (!(c.weight > 0.0)) throw ConfigError("class weight must be positive");
    if (!(c.cpu_mean > 0.0 && c.ram_mean > 0.0 && c.net_mean > 0.0)) {
      throw ConfigError("demand means must be positive");
    }
    if (c.cpu_sigma < 0.0 || c.ram_sigma < 0.0 || c.net_sigma < 0.0) {
      throw ConfigError("demand sigmas must be non-negative");
    }
    if (!(c.duration_mean >= 1.0)) {
      throw ConfigError("duration_mean must be at least 1 tick");
    }
  }
  if (!(cpu_max > 0.0 && ram_max > 0.0 && net_max > 0.0)) {
    throw ConfigError("demand caps must be positive");
  }
}

DemandParams with_cluster_caps(DemandParams params,
                               std::span<const ServerSpec> cluster) {
  validate_cluster(cluster);
  params.cpu_max = std::numeric_limits<double>::infinity();
  params.ram_max = std::numeric_limits<double>::infinity();
  params.net_max = std::numeric_limits<double>::infinity();
  for (const ServerSpec& s : cluster) {
    params.cpu_max = std::min(params.cpu_max, static_cast<double>(s.cpu_count));
    params.ram_max = std::min(params.ram_max, s.ram_capacity);
    // A migrating task holds net_demand twice on its target for one tick.
    params.net_max = std::min(params.net_max, 0.5 * s.net_capacity);
  }
  return params;
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RoundRobin: return "round_robin";
    case PolicyKind::LeastComposite: return "least_composite";
    case PolicyKind::LeastSIL: return "least_sil";
    case PolicyKind::ThresholdMigration: return "threshold_migration";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "round_robin") return PolicyKind::RoundRobin;
  if (s == "least_composite") return PolicyKind::LeastComposite;
  if (s == "least_sil") return PolicyKind::LeastSIL;
  if (s == "threshold_migration") return PolicyKind::ThresholdMigration;
  throw ConfigError("unknown policy kind '" + s + "'");
}

void Policy::validate() const {
  if (!(migration_threshold >= 0.0)) {
    throw ConfigError("migration_threshold must be non-negative");
  }
  weights.validate();
}

SimStreams::SimStreams(std::uint64_t seed)
    : arrivals(make_rng(seed, "arrivals")), demands(make_rng(seed, "demands")) {}

ClusterState::ClusterState(std::vector<ServerSpec> specs, int window)
    : specs_(std::move(specs)), window_(window) {
  validate_cluster(specs_);
  if (window_ < 1) throw ConfigError("window must be positive");
  const std::size_t n = specs_.size();
  running_.resize(n);
  loads_.resize(n);
  task_sums_.resize(n);
  migration_charge_.assign(n, 0.0);
  history_.resize(n);
}

UtilizationSample ClusterState::instantaneous(std::size_t server) const {
  return to_utilization(loads_[server], specs_[server]);
}

std::vector<UtilizationSample> ClusterState::instantaneous_all() const {
  std::vector<UtilizationSample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(instantaneous(i));
  return out;
}

bool ClusterState::can_admit(std::size_t server, const Task& task,
                             double extra_net) const {
  LoadParts parts;
  parts.tasks = task_sums_[server];
  parts.charge = migration_charge_[server];
  return parts.fits(task, specs_[server], extra_net);
}

void ClusterState::recompute_load(std::size_t server) {
  ServerLoad l;
  for (const RunningTask& rt : running_[server]) {
    l.cpu += rt.task.cpu_demand;
    l.ram += rt.task.ram_demand;
    l.net += rt.task.net_demand;
  }
  task_sums_[server] = l;
  l.net = l.net + migration_charge_[server];
  loads_[server] = l;
}

void ClusterState::assign(std::size_t server, const Task& task) {
  running_[server].push_back({task, task.duration});
  recompute_load(server);
  ++counters_.dispatched;
}

void ClusterState::apply(const Migration& m) {
  auto& src = running_[m.from];
  const auto it = std::find_if(src.begin(), src.end(), [&](const RunningTask& rt) {
    return rt.task.id == m.task_id;
  });
  if (it == src.end()) {
    throw InternalConsistencyError("migrated task " + std::to_string(m.task_id) +
                                   " is not on server " + std::to_string(m.from));
  }
  const RunningTask moved = *it;
  src.erase(it);
  running_[m.to].push_back(moved);
  migration_charge_[m.from] += moved.task.net_demand;
  migration_charge_[m.to] += moved.task.net_demand;
  recompute_load(m.from);
  recompute_load(m.to);
  ++counters_.migrations;
}

std::vector<Task> arrivals_from_traffic(const TrafficSeries& series,
                                        std::int64_t tick, double arrival_scale,
                                        const DemandParams& demand,
                                        SimStreams& streams) {
  if (tick < 0 || static_cast<std::size_t>(tick) >= series.tick_count()) {
    throw SimulationBoundsError("tick " + std::to_string(tick) +
                                " outside traffic series of length " +
                                std::to_string(series.tick_count()));
  }
  const double mean = arrival_scale * series[static_cast<std::size_t>(tick)];
  if (!(mean > 0.0)) return {};
  std::poisson_distribution<std::int64_t> count_dist(mean);
  const std::int64_t count = count_dist(streams.arrivals);

  std::vector<double> weights;
  for (const DemandClass& c : demand.classes) weights.push_back(c.weight);
  std::discrete_distribution<int> class_dist(weights.begin(), weights.end());

  std::vector<Task> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    Rng& rng = streams.demands;
    Task t;
    t.id = streams.next_task_id++;
    t.arrival_tick = tick;
    t.service_class = class_dist(rng);
    const DemandClass& c = demand.classes[static_cast<std::size_t>(t.service_class)];
    t.cpu_demand = draw_lognormal(rng, c.cpu_mean, c.cpu_sigma, demand.cpu_max);
    t.ram_demand = draw_lognormal(rng, c.ram_mean, c.ram_sigma, demand.ram_max);
    t.net_demand = draw_lognormal(rng, c.net_mean, c.net_sigma, demand.net_max);
    std::geometric_distribution<int> dur(1.0 / c.duration_mean);
    t.duration = 1 + dur(rng);
    out.push_back(t);
  }
  return out;
}

double instantaneous_isl_tot(std::span<const UtilizationSample> samples,
                             std::span<const ServerSpec> specs,
                             const WeightTriple& w) {
  const std::vector<double> s = sils_of(samples, specs, w);
  return system_sil(s);
}

std::optional<std::size_t> dispatch(const Task& task, const ClusterState& state,
                                    const Policy& policy) {
  const std::size_t n = state.size();
  const WeightTriple& w = policy.weights;

  if (policy.kind == PolicyKind::RoundRobin) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (state.round_robin_cursor() + k) % n;
      if (state.can_admit(i, task)) return i;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> best;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<UtilizationSample> samples;
  if (policy.kind != PolicyKind::LeastComposite) {
    samples = state.instantaneous_all();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.can_admit(i, task)) continue;
    double score = 0.0;
    if (policy.kind == PolicyKind::LeastComposite) {
      score = composite(state.instantaneous(i), w);
    } else {
      // Imbalance of the whole cluster after placing the task on i.
      const ServerLoad& l = state.load(i);
      const ServerLoad after{l.cpu + task.cpu_demand, l.ram + task.ram_demand,
                             l.net + task.net_demand};
      const UtilizationSample keep = samples[i];
      samples[i] = to_utilization(after, state.specs()[i]);
      score = instantaneous_isl_tot(samples, state.specs(), w);
      samples[i] = keep;
    }
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

std::vector<Migration> rebalance(const ClusterState& state,
                                 const Policy& policy) {
  std::vector<Migration> moves;
  const std::size_t n = state.size();
  if (policy.kind != PolicyKind::ThresholdMigration || n < 2) return moves;
  const WeightTriple& w = policy.weights;
  const auto& specs = state.specs();

  std::vector<std::vector<Task>> tasks(n);
  std::vector<LoadParts> parts(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const RunningTask& rt : state.running(i)) {
      tasks[i].push_back(rt.task);
      parts[i].tasks.cpu += rt.task.cpu_demand;
      parts[i].tasks.ram += rt.task.ram_demand;
      parts[i].tasks.net += rt.task.net_demand;
    }
    parts[i].charge = state.load(i).net - parts[i].tasks.net;
  }
  std::vector<std::int64_t> moved;

  auto samples_of = [&](const std::vector<LoadParts>& p) {
    std::vector<UtilizationSample> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = to_utilization(p[i].total(), specs[i]);
    return s;
  };
  auto max_sil = [&](const std::vector<LoadParts>& p) {
    const auto s = samples_of(p);
    const auto sil = sils_of(s, specs, w);
    return *std::max_element(sil.begin(), sil.end());
  };

  for (int iter = 0; iter < kMaxMigrationsPerTick; ++iter) {
    const std::vector<UtilizationSample> now = samples_of(parts);
    const std::vector<double> sil = sils_of(now, specs, w);
    const double current_max = *std::max_element(sil.begin(), sil.end());
    if (!(current_max > policy.migration_threshold)) break;

    double mean_composite = 0.0;
    for (const auto& u : now) mean_composite += composite(u, w);
    mean_composite /= static_cast<double>(n);

    // Overloaded servers, highest SIL first.
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < n; ++i) {
      if (composite(now[i], w) > mean_composite && !tasks[i].empty()) {
        sources.push_back(i);
      }
    }
    std::stable_sort(sources.begin(), sources.end(),
                     [&](std::size_t x, std::size_t y) { return sil[x] > sil[y]; });

    bool progressed = false;
    for (std::size_t src : sources) {
      const Task* pick = nullptr;
      double pick_size = std::numeric_limits<double>::infinity();
      for (const Task& t : tasks[src]) {
        if (std::find(moved.begin(), moved.end(), t.id) != moved.end()) continue;
        const double size = composite_demand(t, specs[src], w);
        if (size < pick_size) {
          pick_size = size;
          pick = &t;
        }
      }
      if (pick == nullptr) continue;
      const Task task = *pick;

      std::optional<std::size_t> target;
      double target_max = current_max;
      std::vector<LoadParts> best_parts;
      for (std::size_t dst = 0; dst < n; ++dst) {
        if (dst == src || !parts[dst].fits(task, specs[dst], task.net_demand)) {
          continue;
        }
        std::vector<LoadParts> trial = parts;
        trial[src].tasks.cpu -= task.cpu_demand;
        trial[src].tasks.ram -= task.ram_demand;
        trial[src].tasks.net -= task.net_demand;
        trial[src].charge += task.net_demand;
        trial[dst].tasks.cpu += task.cpu_demand;
        trial[dst].tasks.ram += task.ram_demand;
        trial[dst].tasks.net += task.net_demand;
        trial[dst].charge += task.net_demand;
        const double m = max_sil(trial);
        if (m < target_max) {
          target_max = m;
          target = dst;
          best_parts = std::move(trial);
        }
      }
      if (!target) continue;

      moves.push_back({task.id, src, *target});
      moved.push_back(task.id);
      parts = std::move(best_parts);
      auto& from = tasks[src];
      from.erase(std::find_if(from.begin(), from.end(),
                              [&](const Task& t) { return t.id == task.id; }));
      tasks[*target].push_back(task);
      progressed = true;
      break;
    }
    if (!progressed) break;
  }
  return moves;
}

void step(ClusterState& state, std::vector<Task> arrivals, const Policy& policy) {
  const std::size_t n = state.size();

  std::fill(state.migration_charge_.begin(), state.migration_charge_.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& run = state.running_[i];
    for (RunningTask& rt : run) --rt.remaining_ticks;
    const auto done = std::remove_if(run.begin(), run.end(), [](const RunningTask& rt) {
      return rt.remaining_ticks <= 0;
    });
    state.counters_.completed += std::distance(done, run.end());
    run.erase(done, run.end());
    state.recompute_load(i);
  }

  for (Task& t : arrivals) {
    ++state.counters_.arrived;
    state.queue_.push_back(t);
  }
  while (!state.queue_.empty()) {
    const std::optional<std::size_t> where = dispatch(state.queue_.front(), state, policy);
    if (!where) break;
    state.assign(*where, state.queue_.front());
    state.queue_.pop_front();
    if (policy.kind == PolicyKind::RoundRobin) state.rr_cursor_ = (*where + 1) % n;
  }

  for (const Migration& m : rebalance(state, policy)) state.apply(m);

  for (std::size_t i = 0; i < n; ++i) {
    const UtilizationSample u = state.instantaneous(i);
    if (u.cpu > 1.0 + kUtilizationSlack || u.ram > 1.0 + kUtilizationSlack ||
        u.net > 1.0 + kUtilizationSlack) {
      throw InternalConsistencyError("server " + std::to_string(state.specs_[i].id) +
                                     " exceeds capacity at tick " +
                                     std::to_string(state.tick_));
    }
    auto& h = state.history_[i];
    h.push_back(u);
    while (h.size() > static_cast<std::size_t>(state.window_)) h.pop_front();
  }
  ++state.tick_;
}

}  // namespace mfload
