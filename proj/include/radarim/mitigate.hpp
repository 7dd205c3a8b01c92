#pragma once

// Classical time-domain interference mitigation baselines: a robust burst
// detector plus the three standard repair strategies (sample zeroing,
// ramp filtering, and IMAT sparse reconstruction).

#include <cstddef>
#include <vector>

#include "radarim/maps.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

// Flags corrupted samples per sweep: sample n of sweep m is marked when its
// antenna-summed magnitude exceeds median + c_mad * MAD of that sweep's
// magnitudes. The mask is shared across antennas since bursts hit the whole
// array at once. Throws std::invalid_argument for c_mad <= 0 or a cube that
// is not rank-3.
BoolMap detect_interference(const ComplexTensor& cube, double c_mad = 6.0);

// Sets flagged samples to zero on every antenna; unflagged samples are
// copied bit-identically. Throws std::invalid_argument on shape mismatch.
ComplexTensor zeroing(const ComplexTensor& cube, const BoolMap& mask);

// Per fast-time index and antenna, clips slow-time samples whose magnitude
// exceeds alpha_r times the lane's median magnitude down to that threshold,
// preserving phase. Throws std::invalid_argument for alpha_r <= 1.
ComplexTensor ramp_filter(const ComplexTensor& cube, double alpha_r = 2.0);

struct ImatResult {
  ComplexTensor cube;
  // Sweeps whose mask covered every sample; these come back zeroed since
  // there is nothing left to reconstruct from.
  std::vector<std::size_t> zeroed_sweeps;
};

// Iterative thresholding reconstruction of flagged samples, run per sweep
// and antenna over the fast-time axis (range spectrum sparsity). Each
// iteration keeps spectrum bins above beta0 * decay^k * max|spectrum|,
// transforms back, and overwrites only the flagged samples; unflagged
// samples always equal the input. Throws std::invalid_argument for
// iters < 1, decay outside (0, 1), or shape mismatch.
ImatResult imat(const ComplexTensor& cube, const BoolMap& mask,
                std::size_t iters = 20, double beta0 = 0.5,
                double decay = 0.8);

}  // namespace radarim
