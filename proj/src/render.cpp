#include "radarim/render.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <vector>

#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"
#include "radarim/fft.hpp"

namespace radarim {

RealMap range_angle_power(const ComplexTensor& rda, std::size_t upsample) {
  if (rda.rank() != 3) {
    throw std::invalid_argument("range_angle_power: expected rank-3 RDA");
  }
  if (upsample == 0) {
    throw std::invalid_argument("range_angle_power: upsample must be >= 1");
  }
  const std::size_t nr = rda.shape()[0];
  const std::size_t nd = rda.shape()[1];
  const std::size_t na = rda.shape()[2];

  if (upsample == 1) {
    RealMap out(nr, na);
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t d = 0; d < nd; ++d) {
        const cfloat* lane = rda.data() + (r * nd + d) * na;
        for (std::size_t a = 0; a < na; ++a) {
          out.at(r, a) += lane[a].real() * lane[a].real() +
                          lane[a].imag() * lane[a].imag();
        }
      }
    }
    return out;
  }

  // Re-run the angle transform zero-padded: back to the antenna domain,
  // then DFT each lane at the display resolution.
  const ComplexTensor rd = rda_to_rd(rda);
  const std::size_t nt = na * upsample;
  RealMap out(nr, nt);
  std::vector<std::complex<double>> lane(nt);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t d = 0; d < nd; ++d) {
      const cfloat* src = rd.data() + (r * nd + d) * na;
      for (std::size_t a = 0; a < na; ++a) {
        lane[a] = std::complex<double>(src[a].real(), src[a].imag());
      }
      std::fill(lane.begin() + std::ptrdiff_t(na), lane.end(),
                std::complex<double>(0.0, 0.0));
      fft::dft(lane.data(), nt, false);
      // Same shift convention as rd_to_rda: bin nt/2 is broadside.
      for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t shifted = (t + nt / 2) % nt;
        out.at(r, shifted) += float(std::norm(lane[t]));
      }
    }
  }
  return out;
}

RealMap power_to_db(const RealMap& power, double floor_db) {
  float peak = 0.0f;
  for (const float v : power.v) peak = std::max(peak, v);
  if (!(peak > 0.0f)) {
    throw DataError("render: degenerate dynamic range (no positive power)");
  }
  RealMap out(power.rows, power.cols);
  for (std::size_t i = 0; i < power.v.size(); ++i) {
    const double ratio = double(power.v[i]) / double(peak);
    const double db =
        ratio > 0.0 ? 10.0 * std::log10(ratio) : floor_db;
    out.v[i] = float(std::max(db, floor_db));
  }
  return out;
}

void write_pgm(const RealMap& db_map, double floor_db,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("render: cannot open " + path + " for write");
  out << "P5\n"
      << db_map.cols << ' ' << db_map.rows << "\n255\n";
  for (const float v : db_map.v) {
    const double unit = (double(v) - floor_db) / (0.0 - floor_db);
    const int gray =
        std::clamp(int(std::lround(unit * 255.0)), 0, 255);
    out.put(char(gray));
  }
  if (!out) throw DataError("render: write failed for " + path);
}

std::string ascii_preview(const RealMap& db_map, double floor_db) {
  static const char ramp[] = " .:-=+*#%@";
  constexpr int steps = int(sizeof(ramp)) - 2;  // last printable index
  std::string text;
  text.reserve((db_map.cols + 1) * db_map.rows);
  for (std::size_t r = 0; r < db_map.rows; ++r) {
    for (std::size_t c = 0; c < db_map.cols; ++c) {
      const double unit =
          (double(db_map.at(r, c)) - floor_db) / (0.0 - floor_db);
      const int idx =
          std::clamp(int(std::lround(unit * steps)), 0, steps);
      text.push_back(ramp[idx]);
    }
    text.push_back('\n');
  }
  return text;
}

}  // namespace radarim
