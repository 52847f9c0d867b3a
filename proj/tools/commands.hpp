#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfload::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

struct GenerateArgs {
  double hurst = 0.7;
  /// When set, the generator is calibrated to (hurst, delta_h).
  std::optional<double> delta_h;
  std::size_t length = 16384;
  std::uint64_t seed = 1;
  int budget = 40;
  std::string out = ".";
};

struct AnalyzeArgs {
  std::string in;
  std::string out = ".";
  std::optional<double> q_min;
  std::optional<double> q_max;
  std::optional<int> q_steps;
};

struct RunArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

/// Each returns an exit code and reports failures on `err`.
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

}  // namespace mfload::cli
