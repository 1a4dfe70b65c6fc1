#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbitlab/equidist.hpp"
#include "orbitlab/exact.hpp"
#include "orbitlab/volume.hpp"

namespace orbitlab::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kCapacityError = 3, kDivergence = 4 };

/// Every problem found while parsing, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Raised when a computation finished but did not converge (exit code 4).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  /// Flat settings after defaults, keyed without the leading dashes.
  std::map<std::string, std::string> settings;
  std::vector<std::string> warnings;

  // Common settings, decoded.
  int threads = 1;
  RealPrecision precision = RealPrecision::Extended;
  std::uint64_t seed = 1;
  std::size_t capacity = 100'000'000;

  bool has(const std::string& key) const { return settings.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.subcommand == b.subcommand && a.settings == b.settings;
  }
};

/// args[0] is the subcommand, then "--key value" or "--key=value" pairs.
/// Settings come from the flags and from `file_text` (or the file named by
/// --config), "key = value" per line; flags override the file with a warning.
/// ORBITLAB_THREADS overrides the thread count.
RunConfig parse_config(std::span<const std::string> args, const std::optional<std::string>& file_text = std::nullopt);

/// "key = value" lines, sorted; parse_config({subcommand}, echo) gives the
/// config back.
std::string echo_config(const RunConfig& config);

/// "%.12g"; "nan" and "inf" spelled out.
std::string format_real(Real x);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const Table& table);
/// Parses the subset of CSV written by to_csv (no quoting).
Table parse_csv(const std::string& text);

enum class ReportFormat { Csv, Json };

/// Byte-stable rendering of an orbit report: CSV plot data or a JSON document
/// with sorted keys. The JSON form embeds the config echo when given.
std::string emit_report(const DistributionReport& report, ReportFormat format,
                        const RunConfig* config = nullptr);

/// Test function syntax of the orbit config:
///   sector R1 R2 [THETA1 THETA2]      angles like 0, pi/2, 3*pi/2, 1.25
///   shell P S [M all | M x:y x:y ...]
///   wedge N K R1 R2
///   <sector ...> x <shell ...>        product set
TestFunction parse_test_function(const std::string& text);

ExperimentConfig experiment_from(const RunConfig& config);

/// Runs a subcommand; returns the process exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace orbitlab::cli
