#pragma once

// Range-angle map rendering: non-coherent integration over Doppler, dB
// scaling with the map maximum pinned to 0 dB, output as a binary PGM plus
// an ASCII preview. Display-only; nothing here feeds the NN path.

#include <cstddef>
#include <string>

#include "radarim/maps.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

inline constexpr double kRenderFloorDb = -60.0;

// Collapses an RDA-map [N_R, N_D, N_A] into a range-angle power map
// [N_R, N_theta] by summing |.|^2 over Doppler. upsample > 1 re-runs the
// angle DFT zero-padded to N_A * upsample bins for a smoother display.
RealMap range_angle_power(const ComplexTensor& rda, std::size_t upsample);

// Power -> dB with the maximum at 0 dB, clamped at floor_db. Throws
// DataError("degenerate dynamic range") when the map has no positive power.
RealMap power_to_db(const RealMap& power, double floor_db = kRenderFloorDb);

// 8-bit binary PGM (P5), one pixel per cell, floor_db -> 0 and 0 dB -> 255.
void write_pgm(const RealMap& db_map, double floor_db,
               const std::string& path);

// Printable preview with one character per cell from a 10-step ramp.
std::string ascii_preview(const RealMap& db_map, double floor_db);

}  // namespace radarim
