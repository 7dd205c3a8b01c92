#include "radarim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "radarim/dsp.hpp"

namespace radarim {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Wraps an index offset by less than n into [0, n).
inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const std::ptrdiff_t sn = std::ptrdiff_t(n);
  if (i < 0) return std::size_t(i + sn);
  if (i >= sn) return std::size_t(i - sn);
  return std::size_t(i);
}

}  // namespace

double cfar_alpha(std::size_t n_train_cells, double pfa) {
  if (n_train_cells == 0) {
    throw std::invalid_argument("cfar_alpha: no training cells");
  }
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw std::invalid_argument("cfar_alpha: pfa must be in (0, 1)");
  }
  const double n = double(n_train_cells);
  return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

BoolMap cacfar(const RealMap& power, const CfarConfig& cfg) {
  if (cfg.train_cells < 1) {
    throw std::invalid_argument("cacfar: train_cells must be >= 1");
  }
  const std::size_t half = cfg.guard_cells + cfg.train_cells;
  const std::size_t win = 2 * half + 1;
  if (win > power.rows || win > power.cols) {
    throw std::invalid_argument("cacfar: window larger than map");
  }
  const std::size_t guard_win = 2 * cfg.guard_cells + 1;
  const std::size_t n_train = win * win - guard_win * guard_win;
  const double alpha = cfar_alpha(n_train, cfg.pfa);

  BoolMap out(power.rows, power.cols);
  const std::ptrdiff_t h = std::ptrdiff_t(half);
  const std::ptrdiff_t g = std::ptrdiff_t(cfg.guard_cells);
  for (std::size_t r = 0; r < power.rows; ++r) {
    for (std::size_t c = 0; c < power.cols; ++c) {
      double full = 0.0;
      for (std::ptrdiff_t dr = -h; dr <= h; ++dr) {
        const std::size_t rr = wrap(std::ptrdiff_t(r) + dr, power.rows);
        const float* row = &power.v[rr * power.cols];
        for (std::ptrdiff_t dc = -h; dc <= h; ++dc) {
          full += row[wrap(std::ptrdiff_t(c) + dc, power.cols)];
        }
      }
      double guard = 0.0;
      for (std::ptrdiff_t dr = -g; dr <= g; ++dr) {
        const std::size_t rr = wrap(std::ptrdiff_t(r) + dr, power.rows);
        const float* row = &power.v[rr * power.cols];
        for (std::ptrdiff_t dc = -g; dc <= g; ++dc) {
          guard += row[wrap(std::ptrdiff_t(c) + dc, power.cols)];
        }
      }
      const double estimate = (full - guard) / double(n_train);
      out.at(r, c) = double(power.at(r, c)) > alpha * estimate ? 1 : 0;
    }
  }
  return out;
}

std::vector<Peak> extract_peaks(const BoolMap& detections,
                                const RealMap& power) {
  if (detections.rows != power.rows || detections.cols != power.cols) {
    throw std::invalid_argument("extract_peaks: shape mismatch");
  }
  const std::size_t rows = detections.rows;
  const std::size_t cols = detections.cols;
  std::vector<std::uint8_t> seen(rows * cols, 0);
  std::vector<Peak> peaks;
  std::vector<std::pair<std::size_t, std::size_t>> stack;

  for (std::size_t r0 = 0; r0 < rows; ++r0) {
    for (std::size_t c0 = 0; c0 < cols; ++c0) {
      if (!detections.at(r0, c0) || seen[r0 * cols + c0]) continue;
      // Flood-fill this 8-connected component, tracking its strongest cell.
      Peak best{r0, c0};
      double best_p = power.at(r0, c0);
      seen[r0 * cols + c0] = 1;
      stack.clear();
      stack.emplace_back(r0, c0);
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        const double p = power.at(r, c);
        const Peak cand{r, c};
        if (p > best_p || (p == best_p && cand < best)) {
          best = cand;
          best_p = p;
        }
        for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
          for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const std::ptrdiff_t nr = std::ptrdiff_t(r) + dr;
            const std::ptrdiff_t nc = std::ptrdiff_t(c) + dc;
            if (nr < 0 || nc < 0 || nr >= std::ptrdiff_t(rows) ||
                nc >= std::ptrdiff_t(cols)) {
              continue;
            }
            const std::size_t idx = std::size_t(nr) * cols + std::size_t(nc);
            if (!detections.v[idx] || seen[idx]) continue;
            seen[idx] = 1;
            stack.emplace_back(std::size_t(nr), std::size_t(nc));
          }
        }
      }
      peaks.push_back(best);
    }
  }
  std::sort(peaks.begin(), peaks.end());
  return peaks;
}

namespace {

bool within_tol(const Peak& a, const Peak& b, std::size_t tol) {
  const std::size_t dr = a.r > b.r ? a.r - b.r : b.r - a.r;
  const std::size_t dd = a.d > b.d ? a.d - b.d : b.d - a.d;
  return std::max(dr, dd) <= tol;
}

// Augmenting-path step of the maximum bipartite matching between predicted
// and truth peaks; maximizing the match count is what keeps F1 symmetric
// under swapping the two peak sets.
bool augment(std::size_t i,
             const std::vector<std::vector<std::size_t>>& adj,
             std::vector<int>& truth_match,
             std::vector<std::uint8_t>& used) {
  for (const std::size_t j : adj[i]) {
    if (used[j]) continue;
    used[j] = 1;
    if (truth_match[j] < 0 ||
        augment(std::size_t(truth_match[j]), adj, truth_match, used)) {
      truth_match[j] = int(i);
      return true;
    }
  }
  return false;
}

}  // namespace

MatchCounts f1_score(const std::vector<Peak>& pred,
                     const std::vector<Peak>& truth, std::size_t tol) {
  std::vector<std::vector<std::size_t>> adj(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (within_tol(pred[i], truth[j], tol)) adj[i].push_back(j);
    }
  }
  std::vector<int> truth_match(truth.size(), -1);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<std::uint8_t> used(truth.size(), 0);
    if (augment(i, adj, truth_match, used)) ++tp;
  }
  MatchCounts mc;
  mc.tp = tp;
  mc.fp = pred.size() - tp;
  mc.fn = truth.size() - tp;
  const double denom = 2.0 * double(mc.tp) + double(mc.fp) + double(mc.fn);
  mc.f1 = denom == 0.0 ? 1.0 : 2.0 * double(mc.tp) / denom;
  return mc;
}

namespace {

void check_peak_args(const ComplexTensor& pred_rd,
                     const ComplexTensor& clean_rd,
                     const std::vector<Peak>& peaks) {
  if (peaks.empty()) {
    throw std::invalid_argument("peak metrics: empty peak set");
  }
  if (pred_rd.shape() != clean_rd.shape() || pred_rd.rank() != 3) {
    throw std::invalid_argument(
        "peak metrics: maps must be rank-3 with equal shapes");
  }
  for (const Peak& p : peaks) {
    if (p.r >= clean_rd.shape()[0] || p.d >= clean_rd.shape()[1]) {
      throw std::invalid_argument("peak metrics: peak outside map");
    }
  }
}

}  // namespace

double evm(const ComplexTensor& pred_rd, const ComplexTensor& clean_rd,
           const std::vector<Peak>& peaks) {
  check_peak_args(pred_rd, clean_rd, peaks);
  const std::size_t na = clean_rd.shape()[2];
  double sum = 0.0;
  for (const Peak& p : peaks) {
    for (std::size_t a = 0; a < na; ++a) {
      const std::complex<double> s = clean_rd.at({p.r, p.d, a});
      const std::complex<double> sh = pred_rd.at({p.r, p.d, a});
      const double mag = std::abs(s);
      if (mag == 0.0) {
        throw std::invalid_argument("evm: zero-magnitude clean cell");
      }
      sum += std::abs(s - sh) / mag;
    }
  }
  return sum / (double(peaks.size()) * double(na));
}

double ppmse(const ComplexTensor& pred_rd, const ComplexTensor& clean_rd,
             const std::vector<Peak>& peaks) {
  check_peak_args(pred_rd, clean_rd, peaks);
  const std::size_t na = clean_rd.shape()[2];
  double sum = 0.0;
  for (const Peak& p : peaks) {
    for (std::size_t a = 0; a < na; ++a) {
      const std::complex<double> s = clean_rd.at({p.r, p.d, a});
      const std::complex<double> sh = pred_rd.at({p.r, p.d, a});
      if (std::abs(s) == 0.0 || std::abs(sh) == 0.0) {
        throw std::invalid_argument("ppmse: zero-magnitude cell");
      }
      double d = std::abs(std::arg(sh) - std::arg(s));
      d = std::min(d, 2.0 * kPi - d);
      sum += d * d;
    }
  }
  return sum / (double(peaks.size()) * double(na));
}

DetectionMaps run_detection(const ComplexTensor& rd_unwindowed,
                            const CfarConfig& cfg) {
  const ComplexTensor cube = rd_to_time(rd_unwindowed);
  const ComplexTensor rd_win = time_to_rd(cube, Window::hann_2d);
  DetectionMaps maps{noncoherent_sum(rd_win), BoolMap(0, 0), {}};
  maps.detections = cacfar(maps.power, cfg);
  maps.peaks = extract_peaks(maps.detections, maps.power);
  return maps;
}

DetectionReport evaluate_sample(const ComplexTensor& mitigated,
                                bool mitigated_is_rda,
                                const ComplexTensor& clean_rda,
                                const std::vector<Peak>& truth_peaks,
                                const CfarConfig& cfar_cfg,
                                std::size_t tol) {
  const ComplexTensor rd_pred =
      mitigated_is_rda ? rda_to_rd(mitigated) : mitigated;
  const ComplexTensor rd_clean = rda_to_rd(clean_rda);
  if (rd_pred.shape() != rd_clean.shape()) {
    throw std::invalid_argument("evaluate_sample: shape mismatch");
  }

  DetectionMaps det = run_detection(rd_pred, cfar_cfg);
  const MatchCounts mc = f1_score(det.peaks, truth_peaks, tol);

  DetectionReport rep;
  rep.detections = std::move(det.detections);
  rep.peaks = std::move(det.peaks);
  rep.n_tp = mc.tp;
  rep.n_fp = mc.fp;
  rep.n_fn = mc.fn;
  rep.f1 = mc.f1;
  rep.evm = evm(rd_pred, rd_clean, truth_peaks);
  rep.ppmse = ppmse(rd_pred, rd_clean, truth_peaks);
  return rep;
}

}  // namespace radarim
