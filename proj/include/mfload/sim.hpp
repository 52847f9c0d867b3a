#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfload/metrics.hpp"
#include "mfload/rng.hpp"
#include "mfload/traffic.hpp"

namespace mfload {

struct Task {
  std::int64_t id = 0;
  std::int64_t arrival_tick = 0;
  /// Fraction of one CPU.
  double cpu_demand = 0.0;
  /// Capacity units.
  double ram_demand = 0.0;
  /// Bandwidth units.
  double net_demand = 0.0;
  int duration = 1;
  int service_class = 0;
};

struct RunningTask {
  Task task;
  int remaining_ticks = 0;
};

/// Demand distribution for one service class. Demands are log-normal with
/// the given mean and log-sigma; durations are geometric with the given mean.
struct DemandClass {
  double weight = 1.0;
  double cpu_mean = 0.5;
  double cpu_sigma = 0.5;
  double ram_mean = 2.0;
  double ram_sigma = 0.5;
  double net_mean = 1.0;
  double net_sigma = 0.5;
  double duration_mean = 20.0;
};

struct DemandParams {
  std::vector<DemandClass> classes{DemandClass{}};
  /// Upper truncation per resource, in absolute units.
  double cpu_max = 1.0;
  double ram_max = 1.0;
  double net_max = 1.0;

  void validate() const;
};

/// Truncation caps so any single task fits on the smallest server.
DemandParams with_cluster_caps(DemandParams params,
                               std::span<const ServerSpec> cluster);

enum class PolicyKind { RoundRobin, LeastComposite, LeastSIL, ThresholdMigration };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

/// ThresholdMigration dispatches like LeastSIL and rebalances every tick.
struct Policy {
  PolicyKind kind = PolicyKind::LeastSIL;
  double migration_threshold = 0.0;
  WeightTriple weights;

  void validate() const;
};

struct Migration {
  std::int64_t task_id = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

/// Seeded random streams that carry across ticks.
struct SimStreams {
  Rng arrivals;
  Rng demands;
  std::int64_t next_task_id = 0;

  explicit SimStreams(std::uint64_t seed);
};

struct SimCounters {
  std::int64_t arrived = 0;
  std::int64_t dispatched = 0;
  std::int64_t completed = 0;
  std::int64_t migrations = 0;
};

/// Absolute resource usage of one server.
struct ServerLoad {
  double cpu = 0.0;
  double ram = 0.0;
  double net = 0.0;
};

class ClusterState {
 public:
  ClusterState(std::vector<ServerSpec> specs, int window);

  const std::vector<ServerSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  std::int64_t tick() const { return tick_; }
  int window() const { return window_; }

  const std::vector<RunningTask>& running(std::size_t server) const {
    return running_[server];
  }
  const std::deque<Task>& queue() const { return queue_; }
  const SimCounters& counters() const { return counters_; }

  /// Usage including this tick's migration charges.
  const ServerLoad& load(std::size_t server) const { return loads_[server]; }
  UtilizationSample instantaneous(std::size_t server) const;
  std::vector<UtilizationSample> instantaneous_all() const;

  /// True when the task fits on the server with `extra_net` also charged.
  bool can_admit(std::size_t server, const Task& task,
                 double extra_net = 0.0) const;

  /// Recent instantaneous samples, oldest first, at most `window` long.
  const std::deque<UtilizationSample>& history(std::size_t server) const {
    return history_[server];
  }
  std::size_t round_robin_cursor() const { return rr_cursor_; }

  /// Places a task; the caller has checked admission.
  void assign(std::size_t server, const Task& task);
  void apply(const Migration& m);

 private:
  friend void step(ClusterState& state, std::vector<Task> arrivals,
                   const Policy& policy);

  void recompute_load(std::size_t server);

  std::vector<ServerSpec> specs_;
  int window_;
  std::int64_t tick_ = 0;
  std::vector<std::vector<RunningTask>> running_;
  std::vector<ServerLoad> loads_;
  std::vector<ServerLoad> task_sums_;
  std::vector<double> migration_charge_;
  std::vector<std::deque<UtilizationSample>> history_;
  std::deque<Task> queue_;
  std::size_t rr_cursor_ = 0;
  SimCounters counters_;
};

/// Tasks arriving at `tick`: a Poisson count with mean
/// arrival_scale * series[tick], demands drawn from `demand`.
std::vector<Task> arrivals_from_traffic(const TrafficSeries& series,
                                        std::int64_t tick, double arrival_scale,
                                        const DemandParams& demand,
                                        SimStreams& streams);

/// Server index chosen for the task, or nullopt when nothing can admit it.
std::optional<std::size_t> dispatch(const Task& task, const ClusterState& state,
                                    const Policy& policy);

/// Migrations that lower the largest per-server SIL, in the order they are
/// applied. Empty unless the policy is ThresholdMigration.
std::vector<Migration> rebalance(const ClusterState& state,
                                 const Policy& policy);

/// Advances the cluster by one tick: completes expired tasks, queues the
/// arrivals behind any waiting tasks, dispatches from the queue head until
/// the head does not fit, rebalances, and records utilization.
void step(ClusterState& state, std::vector<Task> arrivals, const Policy& policy);

/// Mean SIL over servers for the given instantaneous samples.
double instantaneous_isl_tot(std::span<const UtilizationSample> samples,
                             std::span<const ServerSpec> specs,
                             const WeightTriple& w);

}  // namespace mfload
