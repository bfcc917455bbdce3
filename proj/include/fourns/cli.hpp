#pragma once

// Command-line experiments: config handling, run directories and manifests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

namespace fourns {

struct RunConfig {
  std::string command;
  double s = 0.35;
  double eps = 0.01;
  int N = 2;
  int M = -1;  ///< -1 picks the command's default
  int J = 2;
  double dt = 1e-3;
  double t_final = 1.0;
  std::uint64_t seed = 1;
  std::size_t samples = 10;
  double c_impl = 1.0;
  std::string out;  ///< output root; empty means $FOURNS_OUT or ./runs
  int workers = 1;

  /// Throws ValidationError for anything outside the supported ranges.
  void validate() const;
  /// Parameters that determine the data files (excludes out and workers).
  nlohmann::json to_json() const;
  /// First 16 hex digits of the SHA-1 of to_json().
  std::string hash() const;
  int effective_M() const;
};

inline constexpr const char* kCommands[] = {"simulate",   "energy-drift", "bitree-audit", "telescope",
                                            "qi-check",   "convergence",  "weight-sweep"};

/// Flat "key = value" lines; '#' starts a comment. Keys use the flag names.
std::map<std::string, std::string> parse_config_text(const std::string& text);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Runs the experiment, writing artifacts under the run directory. Returns
/// the run directory. Exceptions propagate.
std::filesystem::path run(const RunConfig& cfg, std::ostream& log);

/// Exit status for an exception escaping run(): 1 validation, 2 numerical, 3 I/O.
int exit_code_for(const std::exception& e);

/// Full command-line entry point.
int cli_main(int argc, char** argv);

}  // namespace fourns
