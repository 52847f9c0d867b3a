#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfload/fractal.hpp"
#include "mfload/scenario.hpp"
#include "mfload/traffic.hpp"

namespace mfload {

/// %.12g, with "nan" for a missing value.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

/// `tick,value` rows.
void write_series_csv(std::ostream& os, const TrafficSeries& series);
/// Reads the value column of a series CSV. Throws ConfigError on bad input.
std::vector<double> read_series_csv(std::istream& is);
TrafficSeries load_series_csv(const std::string& path);

/// `q,h_q,intercept` rows followed by `# H=<h(2)> dH=<delta_h>`.
void write_spectrum_csv(std::ostream& os, const MultifractalSpectrum& spectrum);

/// `tick,isl_cpu,isl_ram,isl_net,ibl_tot,isl_tot,efficiency` rows followed by
/// the run-summary line.
void write_report_csv(std::ostream& os, const std::string& scenario,
                      const ScenarioResult& result);
/// `tick,server_id,sil` rows.
void write_sil_csv(std::ostream& os, const ScenarioResult& result,
                   const std::vector<ServerSpec>& cluster);
std::string run_summary_line(const std::string& scenario,
                             const ScenarioResult& result);

struct SweepRow {
  std::string scenario;
  double target_hurst = 0.0;
  double target_delta_h = 0.0;
  std::optional<double> measured_hurst;
  std::optional<double> measured_delta_h;
  double mean_isl_tot_final_quarter = 0.0;
  double cv_isl_tot_final_half = 0.0;
};

/// Rows are written sorted by scenario name.
void write_sweep_summary(std::ostream& os, std::vector<SweepRow> rows);

}  // namespace mfload
