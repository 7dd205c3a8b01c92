#pragma once

// Command-line front end: experiment configuration parsing plus the four
// subcommands (generate | train | evaluate | render). Kept as a library so
// tests can drive the pieces without spawning processes.

#include <optional>
#include <string>
#include <vector>

#include "radarim/ccnn.hpp"
#include "radarim/metrics.hpp"
#include "radarim/sim.hpp"
#include "radarim/train.hpp"

namespace radarim {

// Method rows in report order (the NN variants by size, then the classical
// baselines, then the unmitigated reference).
extern const std::vector<std::string> kMethodOrder;

bool is_nn_method(const std::string& method);

struct DatasetSection {
  std::size_t n_train = 300;
  std::size_t n_val = 50;
  std::size_t n_test = 50;
  std::uint64_t seed = 1;
  std::optional<double> fixed_aoa_deg;
};

struct ModelSection {
  std::string name = "ccnn3d-s";       // ignored when spec is set
  std::optional<ModelSpec> explicit_spec;

  ModelSpec resolve() const;
};

struct ExperimentConfig {
  RadarConfig radar;
  DatasetSection dataset;
  ModelSection model;
  TrainConfig train;
  CfarConfig cfar{2, 8, 1e-4};  // shared by truth generation and evaluation
  std::vector<std::string> methods{"zeroing", "ramp", "imat", "none"};
};

// Parses an experiment JSON file. Missing sections keep their defaults;
// unknown keys anywhere raise UsageError.
ExperimentConfig load_experiment_config(const std::string& path);

// Full dispatcher; returns the process exit code (0 success, 1 usage,
// 2 data, 3 numerical).
int run_cli(int argc, const char* const* argv);

}  // namespace radarim
