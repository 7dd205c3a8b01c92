#include "radarim/dsp.hpp"

#include <cmath>
#include <stdexcept>

#include "radarim/kernels/kernels.hpp"

namespace radarim {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void check_rank3(const ComplexTensor& t, const char* op) {
  if (t.rank() != 3)
    throw std::invalid_argument(std::string(op) + ": expected a rank-3 tensor");
}

// Periodic Hann, the DFT-friendly variant: w[n] = 0.5*(1 - cos(2*pi*n/N)).
std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * double(i) / double(n)));
  return w;
}

}  // namespace

ComplexTensor time_to_rd(const ComplexTensor& cube, Window window) {
  check_rank3(cube, "time_to_rd");
  ComplexTensor t = cube;
  if (window == Window::hann_2d) {
    const auto& sh = t.shape();
    const auto wr = hann(sh[0]);
    const auto wd = hann(sh[1]);
    cfloat* p = t.data();
    for (std::size_t n = 0; n < sh[0]; ++n)
      for (std::size_t m = 0; m < sh[1]; ++m) {
        const float w = float(wr[n] * wd[m]);
        for (std::size_t a = 0; a < sh[2]; ++a, ++p) *p *= w;
      }
  }
  t = dft_axis(t, 0, DftDirection::forward);
  t = dft_axis(t, 1, DftDirection::forward);
  return fftshift_axis(t, 1);
}

ComplexTensor rd_to_rda(const ComplexTensor& rd) {
  check_rank3(rd, "rd_to_rda");
  return fftshift_axis(dft_axis(rd, 2, DftDirection::forward), 2);
}

ComplexTensor rda_to_rd(const ComplexTensor& rda) {
  check_rank3(rda, "rda_to_rd");
  return dft_axis(ifftshift_axis(rda, 2), 2, DftDirection::inverse);
}

ComplexTensor rd_to_time(const ComplexTensor& rd) {
  check_rank3(rd, "rd_to_time");
  ComplexTensor t = ifftshift_axis(rd, 1);
  t = dft_axis(t, 1, DftDirection::inverse);
  return dft_axis(t, 0, DftDirection::inverse);
}

RealMap noncoherent_sum(const ComplexTensor& maps) {
  check_rank3(maps, "noncoherent_sum");
  const auto& sh = maps.shape();
  RealMap out(sh[0], sh[1]);
  const auto& k = kernels::active_kernels();
  const cfloat* p = maps.data();
  for (std::size_t i = 0; i < sh[0] * sh[1]; ++i)
    out.v[i] = float(k.magsq_sum(p + i * sh[2], sh[2]));
  return out;
}

}  // namespace radarim
