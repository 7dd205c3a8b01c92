#include "radarim/mitigate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "radarim/fft.hpp"

namespace radarim {

namespace {

void check_cube(const ComplexTensor& cube) {
  if (cube.rank() != 3) {
    throw std::invalid_argument("mitigate: cube must be rank-3 [R,D,A]");
  }
}

void check_mask(const ComplexTensor& cube, const BoolMap& mask) {
  check_cube(cube);
  if (mask.rows != cube.shape()[0] || mask.cols != cube.shape()[1]) {
    throw std::invalid_argument("mitigate: mask shape mismatch");
  }
}

// Median of the values in v; v is reordered in place.
double median_inplace(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    // Even count: average with the largest value of the lower half.
    const double lower =
        *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

}  // namespace

BoolMap detect_interference(const ComplexTensor& cube, double c_mad) {
  check_cube(cube);
  if (c_mad <= 0.0) {
    throw std::invalid_argument("detect_interference: c_mad must be > 0");
  }
  const std::size_t nr = cube.shape()[0];
  const std::size_t nd = cube.shape()[1];
  const std::size_t na = cube.shape()[2];

  BoolMap mask(nr, nd);
  std::vector<double> mags(nr), dev(nr);
  for (std::size_t m = 0; m < nd; ++m) {
    for (std::size_t n = 0; n < nr; ++n) {
      double s = 0.0;
      const cfloat* p = cube.data() + (n * nd + m) * na;
      for (std::size_t a = 0; a < na; ++a) s += std::abs(p[a]);
      mags[n] = s;
    }
    dev = mags;
    const double med = median_inplace(dev);
    for (std::size_t n = 0; n < nr; ++n) dev[n] = std::abs(mags[n] - med);
    const double mad = median_inplace(dev);
    const double thr = med + c_mad * mad;
    for (std::size_t n = 0; n < nr; ++n) {
      if (mags[n] > thr) mask.at(n, m) = 1;
    }
  }
  return mask;
}

ComplexTensor zeroing(const ComplexTensor& cube, const BoolMap& mask) {
  check_mask(cube, mask);
  const std::size_t nd = cube.shape()[1];
  const std::size_t na = cube.shape()[2];
  ComplexTensor out = cube;
  for (std::size_t n = 0; n < cube.shape()[0]; ++n) {
    for (std::size_t m = 0; m < nd; ++m) {
      if (!mask.at(n, m)) continue;
      cfloat* p = out.data() + (n * nd + m) * na;
      for (std::size_t a = 0; a < na; ++a) p[a] = {0.0f, 0.0f};
    }
  }
  return out;
}

ComplexTensor ramp_filter(const ComplexTensor& cube, double alpha_r) {
  check_cube(cube);
  if (alpha_r <= 1.0) {
    throw std::invalid_argument("ramp_filter: alpha_r must be > 1");
  }
  const std::size_t nr = cube.shape()[0];
  const std::size_t nd = cube.shape()[1];
  const std::size_t na = cube.shape()[2];

  ComplexTensor out = cube;
  std::vector<double> mags(nd), tmp(nd);
  for (std::size_t n = 0; n < nr; ++n) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t m = 0; m < nd; ++m) {
        mags[m] = std::abs(cube[(n * nd + m) * na + a]);
      }
      tmp = mags;
      const double thr = alpha_r * median_inplace(tmp);
      for (std::size_t m = 0; m < nd; ++m) {
        if (mags[m] <= thr) continue;
        cfloat& v = out[(n * nd + m) * na + a];
        const double scale = thr / mags[m];
        v = {float(v.real() * scale), float(v.imag() * scale)};
      }
    }
  }
  return out;
}

ImatResult imat(const ComplexTensor& cube, const BoolMap& mask,
                std::size_t iters, double beta0, double decay) {
  check_mask(cube, mask);
  if (iters < 1) {
    throw std::invalid_argument("imat: iters must be >= 1");
  }
  if (!(decay > 0.0 && decay < 1.0)) {
    throw std::invalid_argument("imat: decay must be in (0, 1)");
  }
  const std::size_t nr = cube.shape()[0];
  const std::size_t nd = cube.shape()[1];
  const std::size_t na = cube.shape()[2];

  ImatResult res{cube, {}};
  std::vector<std::size_t> flagged;
  std::vector<std::complex<double>> sig(nr), spec(nr);
  for (std::size_t m = 0; m < nd; ++m) {
    flagged.clear();
    for (std::size_t n = 0; n < nr; ++n) {
      if (mask.at(n, m)) flagged.push_back(n);
    }
    if (flagged.empty()) continue;
    if (flagged.size() == nr) {
      // Nothing survives in this sweep; zero it and report.
      for (std::size_t n = 0; n < nr; ++n) {
        cfloat* p = res.cube.data() + (n * nd + m) * na;
        for (std::size_t a = 0; a < na; ++a) p[a] = {0.0f, 0.0f};
      }
      res.zeroed_sweeps.push_back(m);
      continue;
    }
    for (std::size_t a = 0; a < na; ++a) {
      // Start from the input with the flagged samples blanked.
      for (std::size_t n = 0; n < nr; ++n) {
        sig[n] = std::complex<double>(cube[(n * nd + m) * na + a]);
      }
      for (const std::size_t n : flagged) sig[n] = {0.0, 0.0};

      for (std::size_t k = 0; k < iters; ++k) {
        spec = sig;
        fft::dft(spec.data(), nr, false);
        double peak = 0.0;
        for (const std::complex<double>& b : spec) {
          peak = std::max(peak, std::abs(b));
        }
        const double thr = beta0 * std::pow(decay, double(k)) * peak;
        for (std::complex<double>& b : spec) {
          if (std::abs(b) <= thr) b = {0.0, 0.0};
        }
        fft::dft(spec.data(), nr, true);
        // Only the flagged samples take the reconstructed values.
        for (const std::size_t n : flagged) sig[n] = spec[n];
      }
      for (const std::size_t n : flagged) {
        res.cube[(n * nd + m) * na + a] =
            cfloat(float(sig[n].real()), float(sig[n].imag()));
      }
    }
  }
  return res;
}

}  // namespace radarim
