#pragma once

// Monte Carlo experiments, their reports, and the on-disk report format.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "bandlab/config.hpp"
#include "bandlab/lattice.hpp"

namespace bandlab {

/// le: value <= threshold + 3 se. ge: value >= threshold + 3 se.
/// lt_raw, ge_raw: plain comparisons for counts and fractions.
enum class Comparison { none, le, ge, lt_raw, ge_raw };

/// One aggregate statistic with its standard error and, when it is checked,
/// the threshold it is held to.
struct Aggregate {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  double threshold = 0.0;
  Comparison cmp = Comparison::none;
  bool pass = true;
  std::string note;
};

using Cell = std::variant<std::int64_t, double, std::string>;

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

struct SampleFailure {
  std::size_t index = 0;
  std::string message;
};

struct Report {
  ExperimentConfig config;
  bool sampled = true;  ///< false for theta and kloop
  std::size_t n_used = 0;
  std::vector<SampleFailure> failures;
  std::vector<Aggregate> aggregates;
  std::vector<CsvTable> tables;

  bool empty() const { return sampled && n_used == 0; }
  bool pass() const;
  /// Throws std::out_of_range for unknown names.
  const Aggregate& aggregate(const std::string& name) const;
  const CsvTable& table(const std::string& file) const;
};

std::string version_string();

/// Runs the configured experiment. Per-sample exceptions are recorded in
/// Report::failures and the sample is excluded. Throws ConfigError for
/// inadmissible configs.
Report run_experiment(const ExperimentConfig& config);

/// M_t^-2 exp(-(ell/ell_t)^(1/2)) + W^-D, with M_t and ell_t taken at energy E.
double decay_envelope(double t, double D, const BlockGeometry& geom, double ell, double E = 0.0);

/// Writes report.json and one CSV per table into dir (created if missing).
/// Throws std::runtime_error naming the path on I/O failure.
void emit_report(const Report& report, const std::filesystem::path& dir);

/// Serialised report.json contents.
std::string report_json(const Report& report);
std::string csv_text(const CsvTable& table);

/// 0 pass, 1 fail, 3 empty sample set.
int exit_code(const Report& report);

}  // namespace bandlab
