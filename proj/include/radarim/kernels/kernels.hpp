#pragma once

// Low-level array kernels used by the hot loops (complex convolution, CReLU,
// power reductions). Each operation has a scalar reference implementation and
// an AVX2 variant; the active table is picked once at startup from cpuid and
// can be forced with RADARIM_KERNELS=scalar|avx2 for testing.
//
// Complex data is interleaved (re, im) float pairs, row-major.

#include <complex>
#include <cstddef>

namespace radarim::kernels {

using cfloat = std::complex<float>;

struct KernelTable {
  const char* name;

  // out[r*out_stride + c] += sum_{k<k_taps} w[k] * in[r*in_stride + c + k]
  // for r in [0, rows), c in [0, cols). The input rows must stay readable up
  // to index cols + k_taps - 2 (caller pads). This is the convolution inner
  // loop: one call sweeps one tap group along the contiguous last axis.
  void (*caxpy_taps)(cfloat* out, std::size_t out_stride, const cfloat* in,
                     std::size_t in_stride, std::size_t rows, std::size_t cols,
                     int k_taps, const cfloat* w);

  // acc[k] += sum_{r,c} a[r*a_stride + c] * conj(b[r*b_stride + c + k])
  // for k in [0, k_taps). Weight-gradient inner loop; partial sums within a
  // call may be float, the spill into acc is double.
  void (*cdotc_taps)(const cfloat* a, std::size_t a_stride, const cfloat* b,
                     std::size_t b_stride, std::size_t rows, std::size_t cols,
                     int k_taps, std::complex<double>* acc);

  // out[i] = max(Re x[i], 0) + j max(Im x[i], 0)
  void (*crelu)(const cfloat* in, cfloat* out, std::size_t n);

  // sum_i |x[i]|^2
  double (*magsq_sum)(const cfloat* x, std::size_t n);
};

// Scalar reference table (always available).
const KernelTable& scalar_kernels();

// AVX2 table, or nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Table selected at startup: AVX2 when available unless overridden by the
// RADARIM_KERNELS environment variable.
const KernelTable& active_kernels();

}  // namespace radarim::kernels
