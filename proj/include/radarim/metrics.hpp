#pragma once

// Object detection and evaluation: CA-CFAR on non-coherent power maps,
// cluster peak extraction, and the F1 / EVM / PPMSE triple that compares a
// mitigated map against the clean ground truth at object peak locations.

#include <cstddef>
#include <vector>

#include "radarim/maps.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

struct CfarConfig {
  std::size_t guard_cells = 2;  // per axis, per side
  std::size_t train_cells = 8;  // per axis, per side
  double pfa = 1e-3;            // target false-alarm probability
};

struct Peak {
  std::size_t r = 0;  // range bin
  std::size_t d = 0;  // Doppler bin

  bool operator==(const Peak& o) const { return r == o.r && d == o.d; }
  bool operator<(const Peak& o) const {
    return r != o.r ? r < o.r : d < o.d;
  }
};

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double f1 = 0.0;
};

struct DetectionReport {
  BoolMap detections{0, 0};  // binary object map [n_range, n_doppler]
  std::vector<Peak> peaks;   // extracted prediction peaks
  std::size_t n_tp = 0;
  std::size_t n_fp = 0;
  std::size_t n_fn = 0;
  double f1 = 0.0;
  double evm = 0.0;
  double ppmse = 0.0;
};

// Scaling factor alpha = N * (pfa^(-1/N) - 1) for an N-training-cell
// cell-averaging detector.
double cfar_alpha(std::size_t n_train_cells, double pfa);

// Cell-averaging CFAR with a square window: per cell the noise level is the
// mean of the training cells (full window minus guard window, wrapping
// circularly at the map edges); a cell is detected when its value exceeds
// alpha times that level. Throws std::invalid_argument when the window does
// not fit the map or the config is out of range.
BoolMap cacfar(const RealMap& power, const CfarConfig& cfg);

// Reduces each 8-connected component of the detection map to its highest-
// power cell (ties to the lexicographically smallest index). The returned
// list is sorted by (r, d).
std::vector<Peak> extract_peaks(const BoolMap& detections,
                                const RealMap& power);

// One-to-one matching of predicted against truth peaks within Chebyshev
// distance tol, maximizing the number of matches; F1 = 2TP/(2TP+FP+FN),
// defined as 1 when both sets are empty.
MatchCounts f1_score(const std::vector<Peak>& pred,
                     const std::vector<Peak>& truth, std::size_t tol = 1);

// Error vector magnitude at the given peak cells, averaged over peaks and
// antennas: mean of |clean - pred| / |clean|. Throws std::invalid_argument
// on empty peaks, shape mismatch, or zero-magnitude clean cells.
double evm(const ComplexTensor& pred_rd, const ComplexTensor& clean_rd,
           const std::vector<Peak>& peaks);

// Mean squared wrapped phase difference at the peak cells, averaged over
// peaks and antennas; each term is min(d, 2pi-d)^2 for d = |arg difference|.
// Errors as evm, plus zero-magnitude prediction cells.
double ppmse(const ComplexTensor& pred_rd, const ComplexTensor& clean_rd,
             const std::vector<Peak>& peaks);

struct DetectionMaps {
  RealMap power{0, 0};       // Hann-windowed non-coherent sum
  BoolMap detections{0, 0};  // CFAR output
  std::vector<Peak> peaks;
};

// Shared detection branch: re-windows the (unwindowed) multi-antenna RD-map
// with a 2-D Hann window, integrates non-coherently over antennas, and runs
// CFAR plus peak extraction. Both ground-truth peak generation and method
// evaluation go through this path so they see identical sidelobe behavior.
DetectionMaps run_detection(const ComplexTensor& rd_unwindowed,
                            const CfarConfig& cfg);

// Full per-sample evaluation. `mitigated` is an RDA-map (angle axis DFTed
// and shifted) when mitigated_is_rda is true, otherwise a multi-antenna
// RD-map; both in the unwindowed domain. Detection runs through
// run_detection; EVM/PPMSE compare unwindowed RD-maps at the truth peaks.
DetectionReport evaluate_sample(const ComplexTensor& mitigated,
                                bool mitigated_is_rda,
                                const ComplexTensor& clean_rda,
                                const std::vector<Peak>& truth_peaks,
                                const CfarConfig& cfar_cfg,
                                std::size_t tol = 1);

}  // namespace radarim
