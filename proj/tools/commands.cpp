#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "mfload/calibrate.hpp"
#include "mfload/config.hpp"
#include "mfload/csv_io.hpp"
#include "mfload/errors.hpp"
#include "mfload/fractal.hpp"
#include "mfload/scenario.hpp"
#include "mfload/traffic.hpp"

namespace mfload::cli {

namespace fs = std::filesystem;

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << " (H residual " << e.hurst_residual()
        << ", dH residual " << e.delta_h_residual() << ")\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

fs::path prepare_dir(const std::string& dir) {
  const fs::path p(dir);
  fs::create_directories(p);
  return p;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& write) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  write(os);
  os.flush();
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

/// UTC ISO-8601; pinned by SOURCE_DATE_EPOCH when set.
std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

struct RunOutputs {
  std::vector<std::string> paths;
  ScenarioResult result;
};

RunOutputs simulate_into(const ScenarioConfig& config, const fs::path& dir) {
  const std::string started = timestamp();
  RunOutputs out;
  out.result = run_scenario(config);
  const fs::path report = dir / "report.csv";
  const fs::path sil = dir / "sil.csv";
  write_file(report, [&](std::ostream& os) {
    write_report_csv(os, config.name, out.result);
  });
  write_file(sil, [&](std::ostream& os) {
    write_sil_csv(os, out.result, config.cluster);
  });
  out.paths = {report.string(), sil.string()};

  nlohmann::ordered_json m;
  m["scenario"] = config.name;
  m["config_digest"] = config_digest(config);
  m["seed"] = config.seed;
  m["outputs"] = out.paths;
  m["measured"] = {{"hurst", optional_json(out.result.measured_hurst)},
                   {"delta_h", optional_json(out.result.measured_delta_h)}};
  m["traffic"] = {{"kind", to_string(out.result.traffic_meta.kind)},
                  {"multiplier_spread", out.result.traffic_meta.multiplier_spread},
                  {"split_probability", out.result.traffic_meta.split_probability},
                  {"hurst_parameter", out.result.traffic_meta.hurst_parameter},
                  {"envelope_sigma", out.result.traffic_meta.envelope_sigma}};
  const SimCounters& c = out.result.counters;
  m["tasks"] = {{"arrived", c.arrived},
                {"dispatched", c.dispatched},
                {"completed", c.completed},
                {"running", out.result.running_at_end},
                {"queued", out.result.queued_at_end},
                {"migrations", c.migrations}};
  m["max_utilization"] = out.result.max_utilization;
  m["started"] = started;
  m["finished"] = timestamp();
  write_file(dir / "manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
  return out;
}

ScenarioConfig load_run_config(const RunArgs& args, SweepConfig* sweep) {
  FileConfig fc = parse_config(args.config);
  if (args.seed) fc.scenario.seed = *args.seed;
  if (sweep) *sweep = fc.sweep;
  return fc.scenario;
}

}  // namespace

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.length < 1024) throw ConfigError("--length must be at least 1024");
    if (args.length > (std::size_t{1} << kMaxCascadeDepth)) {
      throw ConfigError("--length must not exceed 2^24");
    }
    TrafficSeries series;
    if (!args.delta_h) {
      if (!(args.hurst > 0.0 && args.hurst < 1.0)) {
        throw ConfigError("--hurst must lie in (0, 1)");
      }
      series = generate_fgn(args.hurst, args.length, args.seed);
    } else {
      const CalibrationResult cal = calibrate(args.hurst, *args.delta_h, args.budget);
      GeneratorMeta meta = cal.meta;
      meta.seed = args.seed;
      if (meta.kind == GeneratorKind::FGn) {
        meta.length = args.length;
      } else {
        meta.depth = static_cast<unsigned>(std::bit_width(args.length - 1));
      }
      const TrafficSeries full = generate(meta);
      const auto v = full.values();
      GeneratorMeta cut = full.meta();
      cut.length = args.length;
      series = TrafficSeries(std::vector<double>(v.begin(), v.begin() + args.length), cut);
      out << "# calibrated probe H=" << format_number(cal.measured_hurst)
          << " dH=" << format_number(cal.measured_delta_h) << '\n';
    }
    const fs::path path = prepare_dir(args.out) / "series.csv";
    write_file(path, [&](std::ostream& os) { write_series_csv(os, series); });
    out << path.string() << '\n';
  });
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool any = args.q_min || args.q_max || args.q_steps;
    if (any && !(args.q_min && args.q_max && args.q_steps)) {
      throw ConfigError("--q-min, --q-max and --q-steps must be given together");
    }
    const std::vector<double> q =
        any ? make_q_grid(*args.q_min, *args.q_max, *args.q_steps) : default_q_grid();
    const TrafficSeries series = load_series_csv(args.in);
    if (series.tick_count() < kMinMfdfaLength) {
      throw InsufficientDataError("MF-DFA needs at least 1024 values, got " +
                                  std::to_string(series.tick_count()));
    }
    const MultifractalSpectrum spec =
        mfdfa(series.values(), q, default_scale_range(series.tick_count()));
    const fs::path path = prepare_dir(args.out) / "spectrum.csv";
    write_file(path, [&](std::ostream& os) { write_spectrum_csv(os, spec); });
    out << "# H=" << format_number(spec.h_at(2.0))
        << " dH=" << format_number(spec.delta_h) << '\n';
  });
}

int cmd_simulate(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_run_config(args, nullptr);
    const RunOutputs r = simulate_into(config, prepare_dir(args.out));
    out << run_summary_line(config.name, r.result) << '\n';
  });
}

int cmd_sweep(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SweepConfig sweep;
    const ScenarioConfig base = load_run_config(args, &sweep);
    const fs::path root = prepare_dir(args.out);

    std::vector<ScenarioConfig> configs;
    for (const SweepCell& cell : sweep.cells) {
      ScenarioConfig c = base;
      c.name = cell.name;
      c.traffic.source = TrafficSource::Calibrated;
      c.traffic.target_hurst = cell.hurst;
      c.traffic.target_delta_h = cell.delta_h;
      c.validate();
      configs.push_back(std::move(c));
    }

    std::vector<SweepRow> rows(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        try {
          const ScenarioConfig& c = configs[i];
          const RunOutputs r = simulate_into(c, prepare_dir((root / c.name).string()));
          rows[i] = {c.name,
                     c.traffic.target_hurst,
                     c.traffic.target_delta_h,
                     r.result.measured_hurst,
                     r.result.measured_delta_h,
                     mean_isl_tot_final_quarter(r.result.reports),
                     cv_isl_tot_final_half(r.result.reports)};
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::size_t jobs = sweep.jobs > 0 ? static_cast<std::size_t>(sweep.jobs)
                                      : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, configs.size());
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    const fs::path summary = root / "summary.csv";
    write_file(summary, [&](std::ostream& os) { write_sweep_summary(os, rows); });
    out << summary.string() << '\n';
  });
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Multifractal traffic generation, analysis and load-balancing simulation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  double delta_h = 0.0;
  auto* g = app.add_subcommand("generate", "write a traffic series CSV");
  g->add_option("--hurst", gen.hurst, "target Hurst exponent")->required();
  auto* dh_opt = g->add_option("--delta-h", delta_h,
                               "target generalized Hurst range; calibrates when set");
  g->add_option("--length", gen.length, "number of ticks");
  g->add_option("--seed", gen.seed, "random seed");
  g->add_option("--budget", gen.budget, "calibration refinement rounds");
  g->add_option("--out", gen.out, "output directory");

  AnalyzeArgs an;
  double q_min = 0.0;
  double q_max = 0.0;
  int q_steps = 0;
  auto* a = app.add_subcommand("analyze", "estimate the generalized Hurst spectrum");
  a->add_option("--in", an.in, "series CSV")->required();
  a->add_option("--out", an.out, "output directory");
  auto* qmin_opt = a->add_option("--q-min", q_min, "smallest moment order");
  auto* qmax_opt = a->add_option("--q-max", q_max, "largest moment order");
  auto* qsteps_opt = a->add_option("--q-steps", q_steps, "number of moment orders");

  RunArgs sim;
  std::uint64_t sim_seed = 0;
  auto* s = app.add_subcommand("simulate", "run one scenario");
  s->add_option("--config", sim.config, "scenario config")->required();
  s->add_option("--out", sim.out, "output directory");
  auto* sim_seed_opt = s->add_option("--seed", sim_seed, "overrides the config seed");

  RunArgs sw;
  std::uint64_t sw_seed = 0;
  auto* w = app.add_subcommand("sweep", "run every (H, delta-h) cell of the config");
  w->add_option("--config", sw.config, "scenario config")->required();
  w->add_option("--out", sw.out, "output directory");
  auto* sw_seed_opt = w->add_option("--seed", sw_seed, "overrides the config seed");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (g->parsed()) {
    if (dh_opt->count() > 0) gen.delta_h = delta_h;
    return cmd_generate(gen, out, err);
  }
  if (a->parsed()) {
    if (qmin_opt->count() > 0) an.q_min = q_min;
    if (qmax_opt->count() > 0) an.q_max = q_max;
    if (qsteps_opt->count() > 0) an.q_steps = q_steps;
    return cmd_analyze(an, out, err);
  }
  if (s->parsed()) {
    if (sim_seed_opt->count() > 0) sim.seed = sim_seed;
    return cmd_simulate(sim, out, err);
  }
  if (sw_seed_opt->count() > 0) sw.seed = sw_seed;
  return cmd_sweep(sw, out, err);
}

}  // namespace mfload::cli
