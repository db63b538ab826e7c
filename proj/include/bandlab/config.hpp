#pragma once

// Experiment configuration: a flat `key = value` text file.
//
// Values are numbers, quoted strings, or bracketed lists (nested one level
// for block lists, e.g. blocks = [[0, 1], [2, 3]]). `#` starts a comment.
// Every key must be known to the selected experiment.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/slab_resolvent.hpp"

namespace bandlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The experiment names accepted by the CLI, in CLI order.
const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  int W = 8;
  int L = 4;
  double E = 0.0;
  std::optional<double> eta;
  std::optional<double> t;
  double kappa = 0.5;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  // theta
  double xi_re = 0.5;
  double xi_im = 0.0;
  int K_max = 200;
  // kloop
  std::string sigma = "+-";
  // que
  std::size_t window = 8;
  std::vector<BlockIndex> blocks;
  double ratio = 2.0;
  // universality
  std::vector<double> ou_times{0.0, 0.1, 1.0, 10.0};
  double separation = 0.15;
  // decay
  double D = 6.0;
  // clt
  Precision precision = Precision::f64;
  double corr_far = 0.1;
  double corr_near = 0.5;

  /// Calibrated constant multiplying the rate in pass/fail thresholds.
  /// Experiment-dependent default, see default_constant().
  std::optional<double> constant;
  /// Fraction of samples allowed above threshold (local-law, deloc).
  double max_fraction = 0.05;

  std::filesystem::path out = "out";
  bool reduce = false;
  unsigned workers = 1;

  double threshold_constant() const;
};

/// Keys accepted for an experiment, sorted. `experiment` and `out` are accepted everywhere.
std::vector<std::string> config_keys(const std::string& experiment);

/// Parses the file and checks keys against the experiment. Throws ConfigError
/// with the path and line on syntax errors, unknown or duplicate keys, and
/// values of the wrong type.
ExperimentConfig load_config(const std::string& experiment, const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& experiment, const std::string& text,
                              const std::string& origin = "<string>");

/// Model-level admissibility (L >= 3, |E| < 2, 0 < t < 1 or eta > 0, ...).
/// Throws ConfigError.
void check_admissible(const ExperimentConfig& config);

}  // namespace bandlab
