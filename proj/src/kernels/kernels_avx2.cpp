// AVX2+FMA kernel variants. Complex values stay interleaved in the vectors:
// one 256-bit register holds four (re, im) pairs. A complex multiply-add per
// tap costs one in-lane pair swap plus two FMAs using a sign-prepared
// imaginary splat (-wi, +wi, ...), so y += w*x never leaves the registers.
//
// This TU is compiled with -mavx2 -mfma; callers reach it only through the
// dispatch table after a cpuid check.

#include <immintrin.h>

#include "radarim/kernels/kernels.hpp"

namespace radarim::kernels {

const KernelTable* avx2_kernels_impl();

namespace {

constexpr int kMaxTaps = 8;

// Swap (re, im) -> (im, re) inside each complex pair.
inline __m256 pair_swap(__m256 v) { return _mm256_permute_ps(v, 0xB1); }

// Horizontal sum of all 8 float lanes, widened to double.
inline double hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
  return double(_mm_cvtss_f32(s));
}

void caxpy_taps_avx2(cfloat* out, std::size_t out_stride, const cfloat* in,
                     std::size_t in_stride, std::size_t rows, std::size_t cols,
                     int k_taps, const cfloat* w) {
  if (k_taps > kMaxTaps) {  // not a shape the hot paths produce
    scalar_kernels().caxpy_taps(out, out_stride, in, in_stride, rows, cols,
                                k_taps, w);
    return;
  }
  const __m256 even_neg =
      _mm256_castsi256_ps(_mm256_setr_epi32(INT32_MIN, 0, INT32_MIN, 0,
                                            INT32_MIN, 0, INT32_MIN, 0));
  __m256 wr[kMaxTaps], wn[kMaxTaps];
  for (int k = 0; k < k_taps; ++k) {
    wr[k] = _mm256_set1_ps(w[k].real());
    // (-wi, +wi, ...) so that acc + wn*swap(x) lands the +-(wi*xi, wi*xr) term
    wn[k] = _mm256_xor_ps(_mm256_set1_ps(w[k].imag()), even_neg);
  }
  const std::size_t vec_cols = cols & ~std::size_t(3);
  for (std::size_t r = 0; r < rows; ++r) {
    float* o = reinterpret_cast<float*>(out + r * out_stride);
    const float* x = reinterpret_cast<const float*>(in + r * in_stride);
    std::size_t c = 0;
    for (; c < vec_cols; c += 4) {
      __m256 acc = _mm256_loadu_ps(o + 2 * c);
      for (int k = 0; k < k_taps; ++k) {
        const __m256 xv = _mm256_loadu_ps(x + 2 * (c + k));
        acc = _mm256_fmadd_ps(wr[k], xv, acc);
        acc = _mm256_fmadd_ps(wn[k], pair_swap(xv), acc);
      }
      _mm256_storeu_ps(o + 2 * c, acc);
    }
    for (; c < cols; ++c) {  // remainder pairs
      float acc_re = o[2 * c], acc_im = o[2 * c + 1];
      for (int k = 0; k < k_taps; ++k) {
        const float xr = x[2 * (c + k)], xi = x[2 * (c + k) + 1];
        acc_re += w[k].real() * xr - w[k].imag() * xi;
        acc_im += w[k].real() * xi + w[k].imag() * xr;
      }
      o[2 * c] = acc_re;
      o[2 * c + 1] = acc_im;
    }
  }
}

void cdotc_taps_avx2(const cfloat* a, std::size_t a_stride, const cfloat* b,
                     std::size_t b_stride, std::size_t rows, std::size_t cols,
                     int k_taps, std::complex<double>* acc) {
  // Taps run in groups of three so the per-tap accumulator pairs stay in
  // registers (2 accumulators per tap + the shared a / swap(a) loads).
  const __m256 alt_sign = _mm256_setr_ps(1.0f, -1.0f, 1.0f, -1.0f, 1.0f, -1.0f,
                                         1.0f, -1.0f);
  const std::size_t vec_cols = cols & ~std::size_t(3);
  for (int k0 = 0; k0 < k_taps; k0 += 3) {
    const int kn = (k_taps - k0) < 3 ? (k_taps - k0) : 3;
    __m256 acc_p[3], acc_q[3];
    for (int k = 0; k < kn; ++k) {
      acc_p[k] = _mm256_setzero_ps();
      acc_q[k] = _mm256_setzero_ps();
    }
    double tail_re[3] = {0, 0, 0}, tail_im[3] = {0, 0, 0};
    for (std::size_t r = 0; r < rows; ++r) {
      const float* pa = reinterpret_cast<const float*>(a + r * a_stride);
      const float* pb = reinterpret_cast<const float*>(b + r * b_stride);
      std::size_t c = 0;
      for (; c < vec_cols; c += 4) {
        const __m256 av = _mm256_loadu_ps(pa + 2 * c);
        const __m256 as = pair_swap(av);
        for (int k = 0; k < kn; ++k) {
          const __m256 bv = _mm256_loadu_ps(pb + 2 * (c + k0 + k));
          acc_p[k] = _mm256_fmadd_ps(av, bv, acc_p[k]);
          acc_q[k] = _mm256_fmadd_ps(as, bv, acc_q[k]);
        }
      }
      for (; c < cols; ++c) {
        const float ar = pa[2 * c], ai = pa[2 * c + 1];
        for (int k = 0; k < kn; ++k) {
          const float br = pb[2 * (c + k0 + k)], bi = pb[2 * (c + k0 + k) + 1];
          tail_re[k] += double(ar) * br + double(ai) * bi;
          tail_im[k] += double(ai) * br - double(ar) * bi;
        }
      }
    }
    for (int k = 0; k < kn; ++k) {
      // lanes of p: (ar*br, ai*bi) pairs -> plain sum is the real part;
      // lanes of q: (ai*br, ar*bi) pairs -> alternating sum is the imag part.
      const double s_re = hsum(acc_p[k]) + tail_re[k];
      const double s_im = hsum(_mm256_mul_ps(acc_q[k], alt_sign)) + tail_im[k];
      acc[k0 + k] += std::complex<double>(s_re, s_im);
    }
  }
}

void crelu_avx2(const cfloat* in, cfloat* out, std::size_t n) {
  const float* x = reinterpret_cast<const float*>(in);
  float* y = reinterpret_cast<float*>(out);
  const std::size_t n_floats = 2 * n;
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n_floats; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n_floats; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

double magsq_sum_avx2(const cfloat* x, std::size_t n) {
  const float* p = reinterpret_cast<const float*>(x);
  const std::size_t n_floats = 2 * n;
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n_floats; i += 8) {
    const __m256 v = _mm256_loadu_ps(p + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n_floats; ++i) s += double(p[i]) * p[i];
  return s;
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table = {"avx2", caxpy_taps_avx2, cdotc_taps_avx2,
                                    crelu_avx2, magsq_sum_avx2};
  return &table;
}

}  // namespace radarim::kernels
