#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kreinkit/ideals.hpp"
#include "kreinkit/kreinformula.hpp"

namespace kreinkit::runner {

using numlin::Complex;

/// Raised on malformed configuration input; carries a line diagnostic.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ConfigError(const std::string& what)
      : std::runtime_error(what), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExtensionConfig {
  std::string name;
  extensions::ExtensionSpec spec;
};

/// Flat key-value configuration with section headers. Seeded runs are
/// byte-deterministic on one platform.
struct RunConfig {
  std::string model_kind = "interval";  // interval | halfline | dsum
  Eigen::Index n = 2048;
  double halfline_length = 30.0;
  std::vector<std::string> dsum_parts{"interval", "interval"};

  std::uint64_t seed = 20240809;
  std::string out_dir = "runs/out";
  int jmax = 10;
  int trial_count = 10000;
  double tol_scale = 1.0;
  std::vector<double> p_list{1.0, 2.0, 4.0,
                             std::numeric_limits<double>::infinity()};
  std::vector<Complex> z_list{Complex(-1.0), Complex(-10.0), Complex(1.0, 2.0)};
  std::vector<ExtensionConfig> extension_specs;  // empty -> defaults

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  models::ModelPtr build_model() const;
  std::vector<ExtensionConfig> resolved_extensions(int deficiency_index) const;
};

struct CheckRecord {
  std::string id;
  std::string claim;  ///< mathematical claim anchor, or "plumbing"
  bool pass = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct RunReport {
  std::vector<CheckRecord> records;
  std::map<std::string, std::string> environment;
  bool all_pass() const;
  int failures() const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CommandResult {
  RunReport report;       // verify
  CsvTable table;         // csv-producing commands
  int exit_code = 0;
};

/// Runs the full verification battery; exit 0 iff every record passes.
CommandResult cmd_verify(const RunConfig& config);
/// Counting-function table mu_F / mu_K with ratios.
CommandResult cmd_spectra(const RunConfig& config);
/// M-operator samples along a contour, matrix entries as re/im columns.
CommandResult cmd_mfun(const RunConfig& config);
/// Trace-ideal quantities across n, n/2, n/4 with Richardson estimates.
CommandResult cmd_schatten(const RunConfig& config);

std::string to_json(const RunReport& report);
std::string to_csv(const CsvTable& table);
std::string format_double(double v);

/// Writes content to path via a temporary file and an atomic rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace kreinkit::runner
