#pragma once

// Complex-valued convolutional network engine. Activations are rank-5
// tensors [batch, channels, range, doppler, third]; the rank-2 model family
// runs with third = 1 and a kernel depth of 1, so one code path serves both.
// Per layer the forward order is: convolution (cross-correlation, stride 1,
// same-size output), then complex ReLU on every layer but the last, then
// complex batch normalization on every layer except the first and last.

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "radarim/rng.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

enum class Padding { zero, circular };

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.1;

struct ModelSpec {
  bool rank3 = true;            // rank-3 kernels (RDA) vs rank-2 (RD)
  std::size_t in_channels = 1;  // 1 for rank-3, antenna count for rank-2
  std::vector<std::size_t> channels;       // output channels per layer
  std::array<std::size_t, 3> kernel{3, 3, 3};  // [K_R, K_D, K_T]
  std::array<Padding, 3> padding{Padding::zero, Padding::zero,
                                 Padding::zero};

  // Known configurations: "ccnn3d-l", "ccnn3d-m", "ccnn3d-s", "ccnn3d-xs"
  // (single-channel rank-3) and "ccnn2d" (16 antenna channels, rank-2).
  // Throws std::invalid_argument for unknown names.
  static ModelSpec named(const std::string& name);

  void validate() const;
  std::size_t n_layers() const { return channels.size(); }
  // Batch norm sits on all but the first and last layer, and only on the
  // rank-3 family (the rank-2 parameter count matches conv + bias alone).
  bool layer_has_bn(std::size_t layer) const {
    return rank3 && n_layers() >= 3 && layer > 0 && layer + 1 < n_layers();
  }
  std::size_t layer_in_channels(std::size_t layer) const {
    return layer == 0 ? in_channels : channels[layer - 1];
  }
};

struct ConvLayerParams {
  ComplexTensor weight;  // [C_out, C_in, K_R, K_D, K_T]
  ComplexTensor bias;    // [C_out]
};

// Batch-norm trainables per channel: a symmetric 2x2 real scale Gamma
// (entries g_rr, g_ii, g_ri) applied to the whitened (Re, Im) vector, plus
// a complex shift beta. Five real parameters per channel.
struct BnParams {
  std::vector<float> g_rr, g_ii, g_ri;
  std::vector<std::complex<float>> beta;
};

struct BnRunning {
  std::vector<std::complex<float>> mean;
  std::vector<float> c_rr, c_ii, c_ri;  // running 2x2 covariance entries
};

struct ModelParams {
  std::vector<ConvLayerParams> conv;  // one per layer
  std::vector<BnParams> bn;           // sized n_layers; empty where absent
  std::vector<BnRunning> bn_running;  // likewise
};

struct ModelGrads {
  std::vector<ConvLayerParams> conv;
  std::vector<BnParams> bn;
};

// Number of real-valued trainable parameters (2 per complex weight/bias,
// 5 per batch-normed channel; running statistics not counted).
std::size_t param_count(const ModelSpec& spec);

// Complex Glorot initialization: weight magnitudes Rayleigh-distributed
// with sigma = sqrt(1/(fan_in + fan_out)), phases uniform; biases zero;
// Gamma = diag(1/sqrt(2)), beta = 0; running stats at (mean 0, cov I/2).
ModelParams init_params(const ModelSpec& spec, Rng& rng);

// Trainable parameters as one flat real vector (layer by layer: weight
// re/im pairs in storage order, bias pairs, then per channel g_rr, g_ii,
// g_ri, then beta pairs). Length equals param_count(spec).
std::vector<float> flatten_params(const ModelSpec& spec,
                                  const ModelParams& params);
void unflatten_params(const ModelSpec& spec, const std::vector<float>& flat,
                      ModelParams& params);  // running stats untouched
std::vector<float> flatten_grads(const ModelSpec& spec,
                                 const ModelGrads& grads);

// --- layer-level operations (exposed for tests and reuse) ---

// Complex cross-correlation with stride 1 and same-size output; the third
// axis of x and the kernel may be 1 (rank-2 case). Padding is applied per
// axis. Throws std::invalid_argument on rank/shape mismatch or even kernel.
ComplexTensor cconv_forward(const ComplexTensor& x,
                            const ComplexTensor& weight,
                            const ComplexTensor& bias,
                            const std::array<Padding, 3>& padding);

struct ConvGrads {
  ComplexTensor weight;
  ComplexTensor bias;
  ComplexTensor input;  // empty unless requested
};

ConvGrads cconv_backward(const ComplexTensor& x, const ComplexTensor& weight,
                         const ComplexTensor& gy,
                         const std::array<Padding, 3>& padding,
                         bool want_input_grad = true);

// Split ReLU: max(Re, 0) + j max(Im, 0).
ComplexTensor crelu_forward(const ComplexTensor& x);
// Upstream gradient masked by the sign of the forward input, per component.
ComplexTensor crelu_backward(const ComplexTensor& x, const ComplexTensor& gy);

// Per-channel statistics captured during a train-mode batch-norm pass;
// needed to run the backward pass.
struct BnStats {
  std::vector<double> mean_re, mean_im;
  std::vector<double> cov_rr, cov_ri, cov_ii;  // biased batch covariance
  std::vector<double> a11, a12, a22;  // entries of (cov + eps I)^(-1/2)
};

// Train mode: whiten each channel by the inverse square root of its batch
// covariance (+ eps I), apply Gamma and beta, and update running stats with
// momentum 0.1. x is [B, C, R, D, T]; stats are taken over all non-channel
// axes.
ComplexTensor cbn_forward_train(const ComplexTensor& x, const BnParams& bn,
                                BnRunning& running, BnStats* stats_out);
// Eval mode: same affine map using the running statistics.
ComplexTensor cbn_forward_eval(const ComplexTensor& x, const BnParams& bn,
                               const BnRunning& running);

struct BnGrads {
  BnParams params;      // gradients for Gamma entries and beta
  ComplexTensor input;  // gradient w.r.t. the layer input
};

BnGrads cbn_backward(const ComplexTensor& x, const BnParams& bn,
                     const BnStats& stats, const ComplexTensor& gy);

// --- whole-model passes ---

struct ForwardCache {
  bool valid = false;
  ComplexTensor a0;                // model input
  std::vector<ComplexTensor> z;    // conv output per layer
  std::vector<ComplexTensor> act;  // post-layer activation per layer
  std::vector<BnStats> bn;         // per layer; unused entries empty
};

// Runs the network. training selects batch statistics (and updates running
// stats); eval mode uses running statistics and is deterministic. When
// cache is non-null the intermediates needed by model_backward are stored.
ComplexTensor model_forward(const ModelSpec& spec, ModelParams& params,
                            const ComplexTensor& x, bool training,
                            ForwardCache* cache = nullptr);

// Exact reverse-mode gradients for all trainable parameters given the
// upstream gradient of a real loss w.r.t. the model output (complex
// components treated as independent real pairs). Requires a cache produced
// by a training-mode forward pass; throws std::invalid_argument otherwise.
ModelGrads model_backward(const ModelSpec& spec, const ModelParams& params,
                          const ForwardCache& cache,
                          const ComplexTensor& upstream,
                          ComplexTensor* input_grad = nullptr);

}  // namespace radarim
