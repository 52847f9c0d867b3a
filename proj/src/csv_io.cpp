#include "mfload/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "mfload/errors.hpp"

namespace mfload {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("series CSV line " + std::to_string(line) +
                      ": cannot parse '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "nan";
}

void write_series_csv(std::ostream& os, const TrafficSeries& series) {
  os << "tick,value\n";
  for (std::size_t i = 0; i < series.tick_count(); ++i) {
    os << i << ',' << format_number(series[i]) << '\n';
  }
}

std::vector<double> read_series_csv(std::istream& is) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    if (!header) {
      if (l != "tick,value") {
        throw ConfigError("series CSV must start with header 'tick,value'");
      }
      header = true;
      continue;
    }
    const std::size_t comma = l.find(',');
    if (comma == std::string_view::npos) {
      throw ConfigError("series CSV line " + std::to_string(lineno) +
                        ": expected two columns");
    }
    const double tick = parse_double(l.substr(0, comma), lineno);
    if (tick != static_cast<double>(out.size())) {
      throw ConfigError("series CSV line " + std::to_string(lineno) +
                        ": ticks must run 0, 1, 2, ...");
    }
    out.push_back(parse_double(l.substr(comma + 1), lineno));
  }
  if (!header) throw ConfigError("series CSV has no header");
  return out;
}

TrafficSeries load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open series file '" + path + "'");
  std::vector<double> values = read_series_csv(in);
  if (values.empty()) throw ConfigError("series file '" + path + "' has no rows");
  GeneratorMeta meta;
  meta.length = values.size();
  return TrafficSeries(std::move(values), meta);
}

void write_spectrum_csv(std::ostream& os, const MultifractalSpectrum& spectrum) {
  os << "q,h_q,intercept\n";
  for (std::size_t i = 0; i < spectrum.q_grid.size(); ++i) {
    os << format_number(spectrum.q_grid[i]) << ','
       << format_number(spectrum.h_of_q[i]) << ','
       << format_number(spectrum.intercepts[i]) << '\n';
  }
  os << "# H=" << format_number(spectrum.h_at(2.0))
     << " dH=" << format_number(spectrum.delta_h) << '\n';
}

std::string run_summary_line(const std::string& scenario,
                             const ScenarioResult& result) {
  const double mean = result.reports.empty() ? 0.0 : mean_isl_tot(result.reports);
  return "# scenario=" + scenario + " H=" + format_number(result.measured_hurst) +
         " dH=" + format_number(result.measured_delta_h) +
         " mean_isl_tot=" + format_number(mean);
}

void write_report_csv(std::ostream& os, const std::string& scenario,
                      const ScenarioResult& result) {
  os << "tick,isl_cpu,isl_ram,isl_net,ibl_tot,isl_tot,efficiency\n";
  for (const WindowReport& w : result.reports) {
    const ImbalanceReport& r = w.report;
    os << w.tick << ',' << format_number(r.isl_cpu) << ','
       << format_number(r.isl_ram) << ',' << format_number(r.isl_net) << ','
       << format_number(r.ibl_tot) << ',' << format_number(r.isl_tot) << ','
       << format_number(r.efficiency) << '\n';
  }
  os << run_summary_line(scenario, result) << '\n';
}

void write_sil_csv(std::ostream& os, const ScenarioResult& result,
                   const std::vector<ServerSpec>& cluster) {
  os << "tick,server_id,sil\n";
  for (const WindowReport& w : result.reports) {
    for (std::size_t i = 0; i < w.report.sil.size(); ++i) {
      os << w.tick << ',' << cluster.at(i).id << ','
         << format_number(w.report.sil[i]) << '\n';
    }
  }
}

void write_sweep_summary(std::ostream& os, std::vector<SweepRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return x.scenario < y.scenario;
  });
  os << "scenario,H_target,dH_target,H_measured,dH_measured,"
        "mean_isl_tot_final_quarter,cv_isl_tot_final_half\n";
  for (const SweepRow& r : rows) {
    os << r.scenario << ',' << format_number(r.target_hurst) << ','
       << format_number(r.target_delta_h) << ','
       << format_number(r.measured_hurst) << ','
       << format_number(r.measured_delta_h) << ','
       << format_number(r.mean_isl_tot_final_quarter) << ','
       << format_number(r.cv_isl_tot_final_half) << '\n';
  }
}

}  // namespace mfload
