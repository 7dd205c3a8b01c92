// Scalar reference kernels. These are the ground truth the SIMD variants are
// equivalence-tested against, so they stay deliberately plain: explicit real
// arithmetic, no reordering tricks.

#include "radarim/kernels/kernels.hpp"

namespace radarim::kernels {
namespace {

void caxpy_taps_scalar(cfloat* out, std::size_t out_stride, const cfloat* in,
                       std::size_t in_stride, std::size_t rows,
                       std::size_t cols, int k_taps, const cfloat* w) {
  for (std::size_t r = 0; r < rows; ++r) {
    cfloat* o = out + r * out_stride;
    const cfloat* x = in + r * in_stride;
    for (std::size_t c = 0; c < cols; ++c) {
      float acc_re = o[c].real();
      float acc_im = o[c].imag();
      for (int k = 0; k < k_taps; ++k) {
        const float wr = w[k].real(), wi = w[k].imag();
        const float xr = x[c + k].real(), xi = x[c + k].imag();
        acc_re += wr * xr - wi * xi;
        acc_im += wr * xi + wi * xr;
      }
      o[c] = cfloat(acc_re, acc_im);
    }
  }
}

void cdotc_taps_scalar(const cfloat* a, std::size_t a_stride, const cfloat* b,
                       std::size_t b_stride, std::size_t rows,
                       std::size_t cols, int k_taps,
                       std::complex<double>* acc) {
  for (int k = 0; k < k_taps; ++k) {
    double s_re = 0.0, s_im = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const cfloat* pa = a + r * a_stride;
      const cfloat* pb = b + r * b_stride + k;
      for (std::size_t c = 0; c < cols; ++c) {
        const float ar = pa[c].real(), ai = pa[c].imag();
        const float br = pb[c].real(), bi = pb[c].imag();
        s_re += double(ar) * br + double(ai) * bi;
        s_im += double(ai) * br - double(ar) * bi;
      }
    }
    acc[k] += std::complex<double>(s_re, s_im);
  }
}

void crelu_scalar(const cfloat* in, cfloat* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float re = in[i].real(), im = in[i].imag();
    out[i] = cfloat(re > 0.0f ? re : 0.0f, im > 0.0f ? im : 0.0f);
  }
}

double magsq_sum_scalar(const cfloat* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float re = x[i].real(), im = x[i].imag();
    s += double(re) * re + double(im) * im;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table = {"scalar", caxpy_taps_scalar,
                                    cdotc_taps_scalar, crelu_scalar,
                                    magsq_sum_scalar};
  return table;
}

}  // namespace radarim::kernels
