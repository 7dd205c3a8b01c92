#pragma once

// In-place complex DFT on double-precision lanes. Mixed-radix Cooley-Tukey
// over the factors of n, direct evaluation for small prime factors, and a
// Bluestein (chirp-z) fallback for large primes, so every length is
// supported without an external FFT dependency.
//
// Forward is unnormalized; inverse applies 1/n. Plans (twiddle tables and
// Bluestein precomputations) are cached per length behind a mutex.

#include <complex>
#include <cstddef>

namespace radarim::fft {

void dft(std::complex<double>* x, std::size_t n, bool inverse);

}  // namespace radarim::fft
