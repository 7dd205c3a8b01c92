#pragma once

// Supervised training of the complex networks on interfered -> clean pairs:
// Adam on the flat real parameter vector, exponentially decaying learning
// rate, early stopping on validation MSE.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radarim/ccnn.hpp"
#include "radarim/checkpoint.hpp"
#include "radarim/dataset.hpp"

namespace radarim {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t max_epochs = 100;
  double lr0 = 1e-3;
  double lr_decay = 0.95;  // per-epoch factor
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 1;
  bool deterministic = false;

  void validate() const;  // batch_size >= 1, 0 < lr_decay <= 1, ...
};

struct AdamState {
  std::vector<float> m;  // first moments, one per flat real parameter
  std::vector<float> v;  // second moments
  std::uint64_t t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Mean over complex elements of |pred - target|^2. When grad is non-null it
// receives dLoss/dPred with the pair convention (d/dRe + j d/dIm).
double mse_loss(const ComplexTensor& pred, const ComplexTensor& target,
                ComplexTensor* grad = nullptr);

// One bias-corrected Adam update in place; moments grow lazily on first use.
void adam_step(std::vector<float>& params, const std::vector<float>& grads,
               AdamState& state, double lr);

// Converts a stored RDA sample to the tensor layout the model consumes:
// rank-3 models take [1, N_R, N_D, N_A] (one channel, angle spatial);
// rank-2 models take [N_A, N_R, N_D, 1] (antennas as channels, RD domain).
// The leading batch axis is added by the batch assembler.
ComplexTensor to_model_domain(const ComplexTensor& rda, bool rank3);
// Back to the evaluation layouts: rank-3 output -> RDA [N_R,N_D,N_A],
// rank-2 output -> RD stack [N_R,N_D,N_A].
ComplexTensor from_model_domain(const ComplexTensor& item, bool rank3);

// Runs the training loop and returns the checkpoint (best + last params,
// optimizer state, per-epoch history). on_epoch, when set, fires after each
// epoch. resume, when non-null, continues from that checkpoint's last state
// and epoch counter. Throws DataError on empty splits and NumericalError
// when a loss turns non-finite.
Checkpoint train_model(const ModelSpec& spec, const std::string& model_name,
                       const Manifest& manifest, const TrainConfig& cfg,
                       const std::function<void(const HistoryRow&)>& on_epoch =
                           nullptr,
                       const Checkpoint* resume = nullptr);

}  // namespace radarim
