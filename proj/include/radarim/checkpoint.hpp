#pragma once

// CKP1 checkpoint container: magic, a JSON header (model spec, epoch
// counters, metric history, normalizer), then named CRT1 tensor blocks for
// the best and last parameter vectors, the Adam moments, and the per-layer
// batch-norm running statistics.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "radarim/ccnn.hpp"

namespace radarim {

struct HistoryRow {
  std::size_t epoch = 0;  // zero-based
  double lr = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct Checkpoint {
  ModelSpec spec;
  std::string model_name;  // named spec this was built from, if any
  std::size_t epochs_done = 0;
  std::size_t best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  double normalizer = 1.0;  // input/target scale divisor
  std::uint64_t seed = 0;
  std::vector<HistoryRow> history;
  ModelParams best;  // parameters + BN running stats at the best epoch
  ModelParams last;  // state after the final epoch (resume point)
  std::vector<float> adam_m;  // per flat real parameter
  std::vector<float> adam_v;
  std::uint64_t adam_t = 0;  // Adam step counter
};

// Both throw DataError on malformed files or I/O failure.
void save_checkpoint(const Checkpoint& ckp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace radarim
