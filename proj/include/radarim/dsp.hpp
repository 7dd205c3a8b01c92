#pragma once

// Radar processing chain: time-domain cube -> range/Doppler map stack ->
// range/Doppler/angle map, plus the exact inverses used to move NN outputs
// back into other domains, and the non-coherent power sum feeding CFAR.
//
// Axis convention for all rank-3 tensors here: [fast time | range,
// slow time | Doppler, antenna | angle], row-major, antenna axis fastest.

#include "radarim/maps.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

enum class Window {
  none,     // rectangular; the NN training tensors use this
  hann_2d,  // periodic Hann on fast and slow time; detection paths use this
};

// Forward DFT over fast time (axis 0) and slow time (axis 1), Doppler axis
// fftshifted so the zero-velocity bin sits at N_D/2. Window weights are
// applied in the time domain before the transforms.
ComplexTensor time_to_rd(const ComplexTensor& cube, Window window);

// Third forward DFT over the antenna axis, fftshifted so bin N_A/2 is 0 deg.
ComplexTensor rd_to_rda(const ComplexTensor& rd);

// Exact inverse of rd_to_rda.
ComplexTensor rda_to_rd(const ComplexTensor& rda);

// Exact inverse of time_to_rd(cube, Window::none). Only defined for the
// unwindowed chain (the Hann weights are not invertible at their zeros).
ComplexTensor rd_to_time(const ComplexTensor& rd);

// Power map: sum of |.|^2 over the last axis.
RealMap noncoherent_sum(const ComplexTensor& maps);

}  // namespace radarim
