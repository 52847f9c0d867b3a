#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mfload/errors.hpp"
#include "mfload/scenario.hpp"
#include "mfload/sim.hpp"

using namespace mfload;

namespace {

std::vector<ServerSpec> unit_servers(std::size_t n) {
  std::vector<ServerSpec> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({static_cast<int>(i + 1), 1, 1.0, 1.0});
  return s;
}

Task task(std::int64_t id, double cpu, double ram, double net, int duration = 10) {
  Task t;
  t.id = id;
  t.cpu_demand = cpu;
  t.ram_demand = ram;
  t.net_demand = net;
  t.duration = duration;
  return t;
}

Policy policy(PolicyKind kind, double threshold = 0.0) {
  Policy p;
  p.kind = kind;
  p.migration_threshold = threshold;
  return p;
}

std::vector<ResourceUtilization> as_utils(const std::vector<UtilizationSample>& s) {
  std::vector<ResourceUtilization> out;
  for (const auto& x : s) out.push_back({x.cpu, x.ram, x.net, 1});
  return out;
}

double max_sil(const ClusterState& state, const WeightTriple& w) {
  const ImbalanceReport r = full_report(as_utils(state.instantaneous_all()), state.specs(), w);
  return *std::max_element(r.sil.begin(), r.sil.end());
}

TrafficSeries constant_series(std::size_t n, double v) {
  GeneratorMeta m;
  m.length = n;
  return TrafficSeries(std::vector<double>(n, v), m);
}

}  // namespace

TEST_CASE("arrivals follow the traffic intensity") {
  DemandParams demand = with_cluster_caps(DemandParams{}, unit_servers(2));
  SimStreams streams(1);
  const TrafficSeries zero = constant_series(10, 0.0);
  CHECK(arrivals_from_traffic(zero, 3, 5.0, demand, streams).empty());

  const std::size_t n = 20000;
  const TrafficSeries flat = constant_series(n, 1.0);
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    total += static_cast<double>(
        arrivals_from_traffic(flat, static_cast<std::int64_t>(t), 3.0, demand, streams).size());
  }
  CHECK(std::abs(total / n - 3.0) <= 0.05 * 3.0);

  CHECK_THROWS_AS(arrivals_from_traffic(flat, static_cast<std::int64_t>(n), 1.0, demand, streams),
                  SimulationBoundsError);
  CHECK_THROWS_AS(arrivals_from_traffic(flat, -1, 1.0, demand, streams), SimulationBoundsError);
}

TEST_CASE("arrivals are deterministic and well formed") {
  DemandParams demand;
  DemandClass heavy;
  heavy.weight = 3.0;
  heavy.cpu_mean = 2.0;
  heavy.cpu_sigma = 1.5;
  demand.classes.push_back(heavy);
  const std::vector<ServerSpec> cluster{{1, 2, 4.0, 2.0}, {2, 4, 8.0, 4.0}};
  demand = with_cluster_caps(demand, cluster);
  CHECK(demand.cpu_max == 2.0);
  CHECK(demand.ram_max == 4.0);
  CHECK(demand.net_max == 1.0);

  const TrafficSeries flat = constant_series(200, 2.0);
  SimStreams a(77);
  SimStreams b(77);
  std::vector<int> classes_seen(2, 0);
  for (std::int64_t t = 0; t < 200; ++t) {
    const auto x = arrivals_from_traffic(flat, t, 2.0, demand, a);
    const auto y = arrivals_from_traffic(flat, t, 2.0, demand, b);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].id == y[i].id);
      CHECK(x[i].cpu_demand == y[i].cpu_demand);
      CHECK(x[i].duration == y[i].duration);
      CHECK(x[i].arrival_tick == t);
      CHECK(x[i].cpu_demand > 0.0);
      CHECK(x[i].cpu_demand <= demand.cpu_max);
      CHECK(x[i].ram_demand > 0.0);
      CHECK(x[i].ram_demand <= demand.ram_max);
      CHECK(x[i].net_demand > 0.0);
      CHECK(x[i].net_demand <= demand.net_max);
      CHECK(x[i].duration >= 1);
      ++classes_seen.at(static_cast<std::size_t>(x[i].service_class));
    }
  }
  CHECK(classes_seen[1] > classes_seen[0]);
}

TEST_CASE("least composite picks the strict minimum") {
  ClusterState state(unit_servers(2), 4);
  state.assign(0, task(1, 0.9, 0.9, 0.9));
  state.assign(1, task(2, 0.1, 0.1, 0.1));
  const auto where = dispatch(task(3, 0.05, 0.05, 0.05), state, policy(PolicyKind::LeastComposite));
  REQUIRE(where);
  CHECK(state.specs()[*where].id == 2);
}

TEST_CASE("ties go to the lowest server id") {
  ClusterState state(unit_servers(3), 4);
  for (PolicyKind k : {PolicyKind::LeastComposite, PolicyKind::LeastSIL, PolicyKind::RoundRobin}) {
    const auto where = dispatch(task(1, 0.2, 0.2, 0.2), state, policy(k));
    REQUIRE(where);
    CHECK(*where == 0);
  }
}

TEST_CASE("nothing admits an oversized task") {
  ClusterState state(unit_servers(2), 4);
  state.assign(0, task(1, 0.8, 0.1, 0.1));
  state.assign(1, task(2, 0.1, 0.8, 0.1));
  const Task big = task(3, 0.5, 0.5, 0.1);
  for (PolicyKind k : {PolicyKind::LeastComposite, PolicyKind::LeastSIL, PolicyKind::RoundRobin}) {
    CHECK_FALSE(dispatch(big, state, policy(k)));
  }
}

TEST_CASE("round robin cycles among admissible servers") {
  ClusterState state(unit_servers(3), 4);
  const Policy rr = policy(PolicyKind::RoundRobin);
  step(state, {task(1, 0.1, 0.1, 0.1), task(2, 0.1, 0.1, 0.1), task(3, 0.1, 0.1, 0.1)}, rr);
  for (std::size_t i = 0; i < 3; ++i) CHECK(state.running(i).size() == 1);
  CHECK(state.round_robin_cursor() == 0);
  // Server 2 is now full on cpu; the cursor skips it.
  state.assign(1, task(9, 0.9, 0.0001, 0.0001));
  step(state, {task(4, 0.1, 0.1, 0.1)}, rr);
  CHECK(state.running(0).size() == 2);
  step(state, {task(5, 0.1, 0.1, 0.1)}, rr);
  CHECK(state.running(2).size() == 2);
}

TEST_CASE("least SIL minimizes post-assignment imbalance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + rng() % 4;
    std::vector<ServerSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      specs.push_back({static_cast<int>(i), 1 + static_cast<int>(rng() % 4), 1 + 7 * unit(rng),
                       1 + 7 * unit(rng)});
    }
    ClusterState state(specs, 4);
    for (std::size_t i = 0; i < n; ++i) {
      const ServerSpec& s = specs[i];
      state.assign(i, task(static_cast<std::int64_t>(i), 0.6 * unit(rng) * s.cpu_count,
                           0.6 * unit(rng) * s.ram_capacity, 0.6 * unit(rng) * s.net_capacity));
    }
    const Task t = task(100, 0.3 * unit(rng), 0.3 * unit(rng), 0.3 * unit(rng));
    const auto chosen = dispatch(t, state, policy(PolicyKind::LeastSIL));

    // Brute force over every admissible placement.
    double best = 1e300;
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < n; ++i) {
      if (!state.can_admit(i, t)) continue;
      auto samples = state.instantaneous_all();
      const ServerSpec& s = specs[i];
      samples[i].cpu += t.cpu_demand / s.cpu_count;
      samples[i].ram += t.ram_demand / s.ram_capacity;
      samples[i].net += t.net_demand / s.net_capacity;
      const double isl = full_report(as_utils(samples), specs, {}).isl_tot;
      if (isl < best - 1e-15) {
        best = isl;
        best_i = i;
      }
    }
    REQUIRE(chosen.has_value() == best_i.has_value());
    if (chosen) CHECK(*chosen == *best_i);
  }
}

TEST_CASE("least SIL equals least composite on uniform clusters") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + rng() % 4;
    std::vector<ServerSpec> specs;
    for (std::size_t i = 0; i < n; ++i) specs.push_back({static_cast<int>(i), 4, 16.0, 8.0});
    ClusterState state(specs, 4);
    for (std::size_t i = 0; i < n; ++i) {
      state.assign(i, task(static_cast<std::int64_t>(i), 3.0 * unit(rng), 12.0 * unit(rng),
                           6.0 * unit(rng)));
    }
    // Equal utilization increment on every resource.
    const double f = 0.2 * unit(rng);
    const Task t = task(100, 4.0 * f, 16.0 * f, 8.0 * f);
    CHECK(dispatch(t, state, policy(PolicyKind::LeastSIL)) ==
          dispatch(t, state, policy(PolicyKind::LeastComposite)));
  }
}

TEST_CASE("rebalance is a no-op when it should be") {
  ClusterState one(unit_servers(1), 4);
  one.assign(0, task(1, 0.5, 0.5, 0.2));
  CHECK(rebalance(one, policy(PolicyKind::ThresholdMigration)).empty());

  ClusterState two(unit_servers(2), 4);
  two.assign(0, task(1, 0.3, 0.3, 0.1));
  two.assign(0, task(2, 0.3, 0.3, 0.1));
  CHECK(rebalance(two, policy(PolicyKind::ThresholdMigration, 1.0)).empty());
  CHECK(rebalance(two, policy(PolicyKind::LeastSIL)).empty());
}

TEST_CASE("rebalance moves work off an overloaded server") {
  ClusterState state(unit_servers(2), 4);
  for (int i = 0; i < 4; ++i) state.assign(0, task(i, 0.2, 0.2, 0.05));
  const Policy p = policy(PolicyKind::ThresholdMigration, 0.0);
  const double before = max_sil(state, p.weights);
  const auto moves = rebalance(state, p);
  REQUIRE_FALSE(moves.empty());
  double last = before;
  for (const Migration& m : moves) {
    state.apply(m);
    const double now = max_sil(state, p.weights);
    CHECK(now < last);
    last = now;
  }
  CHECK(state.counters().migrations == static_cast<std::int64_t>(moves.size()));
}

TEST_CASE("every chosen migration lowers the largest SIL") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<ServerSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      specs.push_back({static_cast<int>(i), 1 + static_cast<int>(rng() % 4), 4.0, 4.0});
    }
    ClusterState state(specs, 4);
    std::int64_t id = 0;
    for (int j = 0; j < 30; ++j) {
      const Task t = task(id++, unit(rng), 2 * unit(rng), unit(rng));
      const std::size_t i = rng() % (n / 2 + 1);
      if (state.can_admit(i, t)) state.assign(i, t);
    }
    const Policy p = policy(PolicyKind::ThresholdMigration, 0.001);
    double last = max_sil(state, p.weights);
    for (const Migration& m : rebalance(state, p)) {
      state.apply(m);
      const double now = max_sil(state, p.weights);
      CHECK(now < last);
      last = now;
      for (const auto& u : state.instantaneous_all()) {
        CHECK(u.cpu <= 1.0);
        CHECK(u.ram <= 1.0);
        CHECK(u.net <= 1.0);
      }
    }
  }
}

TEST_CASE("an empty step only advances the clock") {
  ClusterState state(unit_servers(3), 4);
  step(state, {}, policy(PolicyKind::LeastSIL));
  CHECK(state.tick() == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto u = state.instantaneous(i);
    CHECK(u.cpu == 0.0);
    CHECK(u.ram == 0.0);
    CHECK(u.net == 0.0);
    CHECK(state.history(i).size() == 1);
  }
}

TEST_CASE("a task runs for exactly its duration") {
  ClusterState state(unit_servers(1), 8);
  const Policy p = policy(PolicyKind::LeastSIL);
  step(state, {task(1, 0.5, 0.5, 0.5, 3)}, p);
  for (int t = 0; t < 5; ++t) {
    CHECK(state.history(0).back().cpu == (t < 3 ? 0.5 : 0.0));
    for (const RunningTask& rt : state.running(0)) CHECK(rt.remaining_ticks >= 1);
    step(state, {}, p);
  }
  CHECK(state.counters().completed == 1);
}

TEST_CASE("the queue is strict FIFO") {
  ClusterState state(unit_servers(1), 4);
  const Policy p = policy(PolicyKind::LeastSIL);
  step(state, {task(1, 0.9, 0.1, 0.1, 2)}, p);
  step(state, {task(2, 0.5, 0.1, 0.1, 1), task(3, 0.05, 0.05, 0.05, 1)}, p);
  CHECK(state.queue().size() == 2);
  CHECK(state.running(0).size() == 1);
  step(state, {}, p);
  CHECK(state.queue().empty());
  CHECK(state.running(0).size() == 2);
}

TEST_CASE("conservation and capacity hold through a saturated run") {
  for (PolicyKind k : {PolicyKind::RoundRobin, PolicyKind::LeastComposite, PolicyKind::LeastSIL,
                       PolicyKind::ThresholdMigration}) {
    const std::vector<ServerSpec> specs{{1, 2, 4.0, 2.0}, {2, 4, 8.0, 4.0}, {3, 1, 2.0, 1.0}};
    ClusterState state(specs, 16);
    const DemandParams demand = with_cluster_caps(DemandParams{}, specs);
    const TrafficSeries traffic = generate_composite(11, 2.0, 0.3, 0.8, 1.0, 3);
    SimStreams streams(3);
    const Policy p = policy(k, 0.001);
    for (std::int64_t t = 0; t < 2048; ++t) {
      step(state, arrivals_from_traffic(traffic, t, 1.5, demand, streams), p);
      std::int64_t running = 0;
      for (std::size_t i = 0; i < specs.size(); ++i) {
        running += static_cast<std::int64_t>(state.running(i).size());
        const auto u = state.instantaneous(i);
        CHECK(u.cpu <= 1.0);
        CHECK(u.ram <= 1.0);
        CHECK(u.net <= 1.0);
      }
      const SimCounters& c = state.counters();
      CHECK(c.arrived == c.dispatched + static_cast<std::int64_t>(state.queue().size()));
      CHECK(c.dispatched == c.completed + running);
    }
  }
}

TEST_CASE("least SIL beats round robin on random fixtures") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int wins = 0;
  for (int k = 0; k < 100; ++k) {
    ScenarioConfig c;
    const int n = 2 + static_cast<int>(rng() % 7);
    int total_cpu = 0;
    for (int i = 0; i < n; ++i) {
      const int cpus = 1 + static_cast<int>(rng() % 8);
      total_cpu += cpus;
      c.cluster.push_back({i + 1, cpus, 4.0 * cpus * (0.5 + unit(rng)),
                           2.0 * cpus * (0.5 + unit(rng))});
    }
    c.horizon = 4096;
    c.seed = static_cast<std::uint64_t>(k);
    c.traffic.source = TrafficSource::Generator;
    c.traffic.generator.kind = GeneratorKind::FGn;
    c.traffic.generator.hurst_parameter = 0.5 + 0.45 * unit(rng);
    const double load = 0.2 + 0.6 * unit(rng);
    c.arrival_scale = load * total_cpu / (0.5 * 20.0);

    c.policy.kind = PolicyKind::LeastSIL;
    const double sil = mean_isl_tot(run_scenario(c).reports);
    c.policy.kind = PolicyKind::RoundRobin;
    const double rr = mean_isl_tot(run_scenario(c).reports);
    if (sil <= rr) ++wins;
  }
  CHECK(wins >= 90);
}
