#include "mfload/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "mfload/errors.hpp"

namespace mfload {

namespace {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;

  std::string path() const { return section + "." + key; }
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const Entry& e, const std::string& what) {
  throw ConfigError(e.path() + " (line " + std::to_string(e.line) + "): " + what);
}

double to_double(const Entry& e, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    fail(e, "expected a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_int(const Entry& e, const std::string& text) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    fail(e, "expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> to_doubles(const Entry& e) {
  std::vector<double> out;
  for (const std::string& t : split(e.value, ',')) out.push_back(to_double(e, t));
  return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"traffic",
       {"source", "hurst", "delta_h", "budget", "kind", "multiplier_spread",
        "split_probability", "hurst_parameter", "envelope_sigma", "path"}},
      {"cluster", {"servers", "cpu_counts", "ram_capacity", "net_capacity", "server"}},
      {"weights", {"a", "b", "c"}},
      {"policy", {"kind", "migration_threshold"}},
      {"sim",
       {"name", "horizon", "window", "arrival_scale", "seed", "q_grid", "q_min",
        "q_max", "q_steps", "class_weight", "cpu_mean", "cpu_sigma", "ram_mean",
        "ram_sigma", "net_mean", "net_sigma", "duration_mean"}},
      {"sweep", {"cells", "jobs"}},
  };
  return keys;
}

/// Splits `k1 = v1, k2 = v2` into pairs; commas inside a value that has no
/// following `=` stay with that value.
std::vector<std::pair<std::string, std::string>> split_pairs(const std::string& line) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& token : split(line, ',')) {
    const std::size_t eq = token.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(trim(std::string_view(token).substr(0, eq)),
                       trim(std::string_view(token).substr(eq + 1)));
    } else if (!out.empty()) {
      out.back().second += "," + token;
    } else {
      out.emplace_back(token, std::string());
    }
  }
  return out;
}

std::vector<Entry> tokenize(std::istream& in, const std::string& origin) {
  std::vector<Entry> entries;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_keys().contains(section)) {
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": unknown section [" + section + "]");
      }
      continue;
    }
    if (section.empty()) {
      throw ConfigError(origin + " line " + std::to_string(lineno) +
                        ": key outside of any section");
    }
    if (line.find('=') == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    for (auto& [key, value] : split_pairs(line)) {
      Entry e{section, key, value, lineno};
      if (!known_keys().at(section).contains(key)) fail(e, "unknown key");
      if (value.empty()) fail(e, "missing value");
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

DemandParams build_demand(const std::map<std::string, Entry>& sim) {
  static const std::vector<std::string> fields{
      "class_weight", "cpu_mean",  "cpu_sigma",     "ram_mean",
      "ram_sigma",    "net_mean",  "net_sigma",     "duration_mean"};
  std::map<std::string, std::vector<double>> lists;
  std::size_t classes = 1;
  for (const std::string& f : fields) {
    const auto it = sim.find(f);
    if (it == sim.end()) continue;
    lists[f] = to_doubles(it->second);
    classes = std::max(classes, lists[f].size());
  }
  for (const auto& [f, v] : lists) {
    if (v.size() != 1 && v.size() != classes) {
      fail(sim.at(f), "expected 1 or " + std::to_string(classes) + " values");
    }
  }
  DemandParams p;
  p.classes.assign(classes, DemandClass{});
  auto fill = [&](const std::string& f, double DemandClass::*member) {
    const auto it = lists.find(f);
    if (it == lists.end()) return;
    for (std::size_t k = 0; k < classes; ++k) {
      p.classes[k].*member = it->second.size() == 1 ? it->second[0] : it->second[k];
    }
  };
  fill("class_weight", &DemandClass::weight);
  fill("cpu_mean", &DemandClass::cpu_mean);
  fill("cpu_sigma", &DemandClass::cpu_sigma);
  fill("ram_mean", &DemandClass::ram_mean);
  fill("ram_sigma", &DemandClass::ram_sigma);
  fill("net_mean", &DemandClass::net_mean);
  fill("net_sigma", &DemandClass::net_sigma);
  fill("duration_mean", &DemandClass::duration_mean);
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<SweepCell> default_sweep_cells() {
  std::vector<SweepCell> cells;
  for (const auto& [h, dh] : {std::pair{0.6, 1.5}, {0.6, 2.5}, {0.9, 2.5}}) {
    cells.push_back({cell_name(h, dh), h, dh});
  }
  return cells;
}

std::string cell_name(double hurst, double delta_h) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "h%g_dh%g", hurst, delta_h);
  return buf;
}

FileConfig parse_config_text(std::istream& in, const std::string& origin) {
  const std::vector<Entry> entries = tokenize(in, origin);

  std::map<std::string, std::map<std::string, Entry>> by_section;
  std::vector<Entry> server_lines;
  for (const Entry& e : entries) {
    if (e.section == "cluster" && e.key == "server") {
      server_lines.push_back(e);
      continue;
    }
    if (!by_section[e.section].emplace(e.key, e).second) fail(e, "duplicate key");
  }
  auto get = [&](const std::string& s, const std::string& k) -> const Entry* {
    const auto sit = by_section.find(s);
    if (sit == by_section.end()) return nullptr;
    const auto kit = sit->second.find(k);
    return kit == sit->second.end() ? nullptr : &kit->second;
  };
  auto number = [&](const std::string& s, const std::string& k, double& out) {
    if (const Entry* e = get(s, k)) out = to_double(*e, e->value);
  };

  FileConfig fc;
  ScenarioConfig& c = fc.scenario;

  // traffic
  TrafficSpec& t = c.traffic;
  if (const Entry* e = get("traffic", "source")) {
    if (e->value == "calibrated") {
      t.source = TrafficSource::Calibrated;
    } else if (e->value == "generator") {
      t.source = TrafficSource::Generator;
    } else if (e->value == "file") {
      t.source = TrafficSource::File;
    } else {
      fail(*e, "expected calibrated, generator or file");
    }
  } else if (get("traffic", "path")) {
    t.source = TrafficSource::File;
  } else if (get("traffic", "kind")) {
    t.source = TrafficSource::Generator;
  }
  number("traffic", "hurst", t.target_hurst);
  number("traffic", "delta_h", t.target_delta_h);
  if (const Entry* e = get("traffic", "budget")) t.calibration_budget = to_int<int>(*e, e->value);
  if (const Entry* e = get("traffic", "kind")) {
    try {
      t.generator.kind = generator_kind_from_string(e->value);
    } catch (const ConfigError& err) {
      fail(*e, err.what());
    }
  }
  number("traffic", "multiplier_spread", t.generator.multiplier_spread);
  number("traffic", "split_probability", t.generator.split_probability);
  number("traffic", "hurst_parameter", t.generator.hurst_parameter);
  number("traffic", "envelope_sigma", t.generator.envelope_sigma);
  if (const Entry* e = get("traffic", "path")) t.path = e->value;

  // cluster
  const Entry* servers = get("cluster", "servers");
  if (servers && !server_lines.empty()) {
    fail(*servers, "use either the servers shorthand or server lines, not both");
  }
  if (servers) {
    const Entry* cpus = get("cluster", "cpu_counts");
    if (!cpus) fail(*servers, "shorthand needs cpu_counts");
    const int k = to_int<int>(*cpus, cpus->value);
    double ram = 4.0 * k;
    double net = 2.0 * k;
    number("cluster", "ram_capacity", ram);
    number("cluster", "net_capacity", net);
    c.cluster = uniform_cluster(to_int<int>(*servers, servers->value), k, ram, net);
  } else if (!server_lines.empty()) {
    for (const char* k : {"cpu_counts", "ram_capacity", "net_capacity"}) {
      if (const Entry* e = get("cluster", k)) fail(*e, "only valid with the servers shorthand");
    }
    for (const Entry& e : server_lines) {
      const std::vector<std::string> f = split(e.value, ',');
      if (f.size() != 4) fail(e, "expected id, cpu_count, ram_capacity, net_capacity");
      c.cluster.push_back({to_int<int>(e, f[0]), to_int<int>(e, f[1]),
                           to_double(e, f[2]), to_double(e, f[3])});
    }
  } else {
    throw ConfigError("cluster: define `servers = N, cpu_counts = k` or server lines");
  }

  // weights and policy
  number("weights", "a", c.weights.a);
  number("weights", "b", c.weights.b);
  number("weights", "c", c.weights.c);
  c.policy.weights = c.weights;
  if (const Entry* e = get("policy", "kind")) {
    try {
      c.policy.kind = policy_kind_from_string(e->value);
    } catch (const ConfigError& err) {
      fail(*e, err.what());
    }
  }
  number("policy", "migration_threshold", c.policy.migration_threshold);

  // sim
  if (const Entry* e = get("sim", "name")) c.name = e->value;
  if (const Entry* e = get("sim", "horizon")) c.horizon = to_int<std::int64_t>(*e, e->value);
  if (const Entry* e = get("sim", "window")) c.window = to_int<int>(*e, e->value);
  number("sim", "arrival_scale", c.arrival_scale);
  if (const Entry* e = get("sim", "seed")) c.seed = to_int<std::uint64_t>(*e, e->value);
  const Entry* qg = get("sim", "q_grid");
  const Entry* qmin = get("sim", "q_min");
  const Entry* qmax = get("sim", "q_max");
  const Entry* qsteps = get("sim", "q_steps");
  if (qg && (qmin || qmax || qsteps)) fail(*qg, "give q_grid or q_min/q_max/q_steps, not both");
  if (qg) c.q_grid = to_doubles(*qg);
  if (qmin || qmax || qsteps) {
    if (!(qmin && qmax && qsteps)) {
      throw ConfigError("sim.q_min, sim.q_max and sim.q_steps must be given together");
    }
    c.q_grid = make_q_grid(to_double(*qmin, qmin->value), to_double(*qmax, qmax->value),
                           to_int<int>(*qsteps, qsteps->value));
  }
  if (by_section.contains("sim")) c.demand = build_demand(by_section.at("sim"));

  // sweep
  if (const Entry* e = get("sweep", "cells")) {
    std::set<std::string> names;
    for (const std::string& cell : split(e->value, ',')) {
      const std::vector<std::string> hd = split(cell, '/');
      if (hd.size() != 2) fail(*e, "cells are written H/delta_h, got '" + cell + "'");
      SweepCell sc{"", to_double(*e, hd[0]), to_double(*e, hd[1])};
      sc.name = cell_name(sc.hurst, sc.delta_h);
      if (!names.insert(sc.name).second) fail(*e, "duplicate cell " + sc.name);
      fc.sweep.cells.push_back(sc);
    }
  } else {
    fc.sweep.cells = default_sweep_cells();
  }
  if (const Entry* e = get("sweep", "jobs")) {
    fc.sweep.jobs = to_int<int>(*e, e->value);
    if (fc.sweep.jobs < 0) fail(*e, "must be non-negative");
  }

  c.validate();
  return fc;
}

FileConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config_text(in, path);
}

std::string canonical_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "name=" << c.name << '\n';
  const TrafficSpec& t = c.traffic;
  os << "traffic.source=" << to_string(t.source) << '\n';
  switch (t.source) {
    case TrafficSource::Calibrated:
      os << "traffic.hurst=" << fmt(t.target_hurst) << '\n'
         << "traffic.delta_h=" << fmt(t.target_delta_h) << '\n'
         << "traffic.budget=" << t.calibration_budget << '\n';
      break;
    case TrafficSource::Generator:
      os << "traffic.kind=" << to_string(t.generator.kind) << '\n'
         << "traffic.multiplier_spread=" << fmt(t.generator.multiplier_spread) << '\n'
         << "traffic.split_probability=" << fmt(t.generator.split_probability) << '\n'
         << "traffic.hurst_parameter=" << fmt(t.generator.hurst_parameter) << '\n'
         << "traffic.envelope_sigma=" << fmt(t.generator.envelope_sigma) << '\n';
      break;
    case TrafficSource::File:
      os << "traffic.path=" << t.path << '\n';
      break;
  }
  for (const ServerSpec& s : c.cluster) {
    os << "cluster.server=" << s.id << ',' << s.cpu_count << ','
       << fmt(s.ram_capacity) << ',' << fmt(s.net_capacity) << '\n';
  }
  os << "weights=" << fmt(c.weights.a) << ',' << fmt(c.weights.b) << ','
     << fmt(c.weights.c) << '\n';
  os << "policy.kind=" << to_string(c.policy.kind) << '\n'
     << "policy.migration_threshold=" << fmt(c.policy.migration_threshold) << '\n'
     << "policy.weights=" << fmt(c.policy.weights.a) << ','
     << fmt(c.policy.weights.b) << ',' << fmt(c.policy.weights.c) << '\n';
  os << "sim.horizon=" << c.horizon << '\n'
     << "sim.window=" << c.window << '\n'
     << "sim.arrival_scale=" << fmt(c.arrival_scale) << '\n'
     << "sim.seed=" << c.seed << '\n';
  os << "sim.q_grid=";
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    os << (i ? "," : "") << fmt(c.q_grid[i]);
  }
  os << '\n';
  for (const DemandClass& d : c.demand.classes) {
    os << "sim.class=" << fmt(d.weight) << ',' << fmt(d.cpu_mean) << ','
       << fmt(d.cpu_sigma) << ',' << fmt(d.ram_mean) << ',' << fmt(d.ram_sigma)
       << ',' << fmt(d.net_mean) << ',' << fmt(d.net_sigma) << ','
       << fmt(d.duration_mean) << '\n';
  }
  return os.str();
}

std::string config_digest(const ScenarioConfig& config) {
  const std::string text = canonical_config(config);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw InternalConsistencyError("SHA-256 digest failed");
  }
  std::string hex;
  static const char* digits = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex += digits[md[i] >> 4];
    hex += digits[md[i] & 0xF];
  }
  return hex;
}

}  // namespace mfload
