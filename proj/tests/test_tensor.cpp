#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "naive_ref.hpp"
#include "radarim/rng.hpp"
#include "radarim/tensor.hpp"

namespace {

using radarim::cfloat;
using radarim::ComplexTensor;
using radarim::DftDirection;
using radarim::Rng;
using testref::cdouble;

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("tensor indexing is row-major with the last axis fastest") {
  ComplexTensor t({2, 3, 4});
  CHECK(t.rank() == 3);
  CHECK(t.size() == 24);
  CHECK(t.offset({0, 0, 0}) == 0);
  CHECK(t.offset({0, 0, 3}) == 3);
  CHECK(t.offset({0, 1, 0}) == 4);
  CHECK(t.offset({1, 0, 0}) == 12);
  CHECK(t.offset({1, 2, 3}) == 23);
  CHECK_THROWS_AS((void)t.offset({2, 0, 0}), std::out_of_range);
  CHECK_THROWS_AS((void)t.offset({0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ComplexTensor({3, 0, 2}), std::invalid_argument);
}

TEST_CASE("dft_axis matches the direct DFT for every length class") {
  // 8 = power of two, 12 = mixed radix, 17 = small prime (direct path),
  // 60 = composite with several factors, 97 = prime large enough for the
  // chirp-z fallback.
  for (std::size_t n : {std::size_t(8), std::size_t(12), std::size_t(17),
                        std::size_t(60), std::size_t(97)}) {
    ComplexTensor t({3, n});
    Rng rng(100 + n);
    testref::fill_random(t, rng);
    for (auto dir : {DftDirection::forward, DftDirection::inverse}) {
      const auto got = radarim::dft_axis(t, 1, dir);
      const auto want =
          testref::naive_dft_axis(t, 1, dir == DftDirection::inverse);
      CHECK(testref::max_abs_diff(got, want) < 1e-4 * double(n));
    }
  }
}

TEST_CASE("dft_axis resolves a pure tone to a single bin") {
  const std::size_t n = 32;
  ComplexTensor t({n});
  const std::size_t bin = 5;
  for (std::size_t j = 0; j < n; ++j) {
    const double ang = testref::kTau * double(bin) * double(j) / double(n);
    t[j] = cfloat(float(std::cos(ang)), float(std::sin(ang)));
  }
  const auto spec = radarim::dft_axis(t, 0, DftDirection::forward);
  CHECK(testref::argmax_abs(spec) == bin);
  CHECK(std::abs(spec[bin].real() - float(n)) < 1e-3);
  CHECK(std::abs(spec[bin].imag()) < 1e-3);
  for (std::size_t k = 0; k < n; ++k)
    if (k != bin) CHECK(std::abs(cdouble(spec[k])) < 1e-3);

  // Unit impulse -> flat spectrum.
  ComplexTensor delta({n});
  delta[0] = cfloat(1.0f, 0.0f);
  const auto flat = radarim::dft_axis(delta, 0, DftDirection::forward);
  for (std::size_t k = 0; k < n; ++k)
    CHECK(std::abs(cdouble(flat[k]) - cdouble(1.0, 0.0)) < 1e-6);
}

TEST_CASE("dft_axis obeys Parseval, linearity, and the shift theorem") {
  const std::size_t n = 24;
  Rng rng(7);
  ComplexTensor a({2, n, 3}), b({2, n, 3});
  testref::fill_random(a, rng);
  testref::fill_random(b, rng);

  const auto fa = radarim::dft_axis(a, 1, DftDirection::forward);
  const auto fb = radarim::dft_axis(b, 1, DftDirection::forward);

  // Parseval: sum |x|^2 = (1/n) sum |X|^2 for the unnormalized forward.
  CHECK(radarim::power_sum(fa) / double(n) ==
        doctest::Approx(radarim::power_sum(a)).epsilon(1e-5));

  // Linearity.
  const auto fsum = radarim::dft_axis(radarim::add(a, b), 1,
                                      DftDirection::forward);
  CHECK(testref::max_abs_diff(fsum, radarim::add(fa, fb)) < 1e-4);

  // Delaying by s multiplies bin k by exp(-j 2 pi k s / n).
  const std::ptrdiff_t s = 5;
  const auto fshift = radarim::dft_axis(radarim::circular_shift(a, 1, s), 1,
                                        DftDirection::forward);
  ComplexTensor want = fa;
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < 3; ++i) {
        const double ang = -testref::kTau * double(k) * double(s) / double(n);
        const cdouble v = cdouble(want.at({o, k, i})) *
                          cdouble(std::cos(ang), std::sin(ang));
        want.at({o, k, i}) = cfloat(float(v.real()), float(v.imag()));
      }
  CHECK(testref::max_abs_diff(fshift, want) < 1e-4);
}

TEST_CASE("forward then inverse DFT returns the input") {
  for (std::size_t n : {std::size_t(16), std::size_t(21), std::size_t(96),
                        std::size_t(101)}) {
    ComplexTensor t({n, 2});
    Rng rng(40 + n);
    testref::fill_random(t, rng);
    const auto back = radarim::dft_axis(
        radarim::dft_axis(t, 0, DftDirection::forward), 0,
        DftDirection::inverse);
    CHECK(testref::rel_l2(back, t) < 1e-6);
  }
}

TEST_CASE("circular_shift moves element j to j + s and wraps") {
  ComplexTensor t({4});
  for (std::size_t j = 0; j < 4; ++j) t[j] = cfloat(float(j), 0.0f);

  const auto fwd = radarim::circular_shift(t, 0, 1);
  CHECK(fwd[0].real() == 3.0f);
  CHECK(fwd[1].real() == 0.0f);
  CHECK(fwd[3].real() == 2.0f);

  const auto back = radarim::circular_shift(fwd, 0, -1);
  for (std::size_t j = 0; j < 4; ++j) CHECK(back[j] == t[j]);

  // fftshift on [0,1,2,3] gives [2,3,0,1].
  const auto sh = radarim::fftshift_axis(t, 0);
  CHECK(sh[0].real() == 2.0f);
  CHECK(sh[1].real() == 3.0f);
  CHECK(sh[2].real() == 0.0f);
  CHECK(sh[3].real() == 1.0f);
}

TEST_CASE("ifftshift inverts fftshift for even and odd lengths") {
  for (std::size_t n : {std::size_t(4), std::size_t(5), std::size_t(96)}) {
    ComplexTensor t({n});
    Rng rng(60 + n);
    testref::fill_random(t, rng);
    const auto round =
        radarim::ifftshift_axis(radarim::fftshift_axis(t, 0), 0);
    for (std::size_t j = 0; j < n; ++j) CHECK(round[j] == t[j]);
    // For odd lengths the two shifts differ, so order matters; the reversed
    // composition must also be the identity.
    const auto round2 =
        radarim::fftshift_axis(radarim::ifftshift_axis(t, 0), 0);
    for (std::size_t j = 0; j < n; ++j) CHECK(round2[j] == t[j]);
  }
}

TEST_CASE("elementwise arithmetic and reductions") {
  ComplexTensor a({2, 2}), b({2, 2});
  a[0] = {1.0f, 2.0f};
  a[1] = {-3.0f, 0.5f};
  a[2] = {0.0f, 0.0f};
  a[3] = {4.0f, -1.0f};
  b[0] = {0.5f, -2.0f};
  b[1] = {1.0f, 1.0f};
  b[2] = {2.0f, 3.0f};
  b[3] = {-4.0f, 1.0f};

  const auto s = radarim::add(a, b);
  CHECK(s[0] == cfloat(1.5f, 0.0f));
  CHECK(s[3] == cfloat(0.0f, 0.0f));
  const auto d = radarim::sub(s, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(d[i] == a[i]);

  // (1+2j) * j = -2+j
  const auto rot = radarim::scaled(a, cfloat(0.0f, 1.0f));
  CHECK(rot[0] == cfloat(-2.0f, 1.0f));

  auto acc = a;
  radarim::add_scaled_inplace(acc, b, cfloat(2.0f, 0.0f));
  CHECK(acc[0] == cfloat(2.0f, -2.0f));

  CHECK(radarim::power_sum(a) ==
        doctest::Approx(5.0 + 9.25 + 0.0 + 17.0).epsilon(1e-6));
  CHECK(radarim::max_abs(a) == doctest::Approx(std::sqrt(17.0)));

  ComplexTensor c({3});
  CHECK_THROWS_AS(radarim::add(a, c), std::invalid_argument);
}

TEST_CASE("CRT1 files round-trip bit-exactly") {
  ComplexTensor t({3, 5, 2});
  Rng rng(99);
  testref::fill_random(t, rng, 1e6);
  t[0] = cfloat(-0.0f, 1e-38f);  // awkward but representable values

  const auto path = temp_file("radarim_test_roundtrip.crt1");
  radarim::save_crt1(t, path);
  const auto back = radarim::load_crt1(path);
  REQUIRE(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::memcmp(&back[i], &t[i], sizeof(cfloat)) == 0);
  }
  std::filesystem::remove(path);

  // The stream overloads concatenate records back to back.
  std::stringstream buf;
  radarim::save_crt1(t, buf);
  ComplexTensor u({2});
  u[0] = cfloat(1.0f, -1.0f);
  u[1] = cfloat(2.5f, 0.0f);
  radarim::save_crt1(u, buf);
  const auto t2 = radarim::load_crt1(static_cast<std::istream&>(buf));
  const auto u2 = radarim::load_crt1(static_cast<std::istream&>(buf));
  CHECK(t2.shape() == t.shape());
  CHECK(u2.shape() == u.shape());
  CHECK(u2[1] == u[1]);
}

TEST_CASE("CRT1 loader rejects malformed files") {
  const auto path = temp_file("radarim_test_bad.crt1");

  CHECK_THROWS_AS(radarim::load_crt1(temp_file("radarim_test_missing.crt1")),
                  std::runtime_error);

  {
    std::ofstream f(path, std::ios::binary);
    f.write("NOPE", 4);
  }
  CHECK_THROWS_AS(radarim::load_crt1(path), std::runtime_error);

  {
    // Valid header for a [2, 2] tensor but only one value of payload.
    std::ofstream f(path, std::ios::binary);
    f.write("CRT1", 4);
    const std::uint8_t rank = 2;
    f.write(reinterpret_cast<const char*>(&rank), 1);
    const std::uint32_t dim = 2;
    f.write(reinterpret_cast<const char*>(&dim), 4);
    f.write(reinterpret_cast<const char*>(&dim), 4);
    const float vals[2] = {1.0f, 2.0f};
    f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  }
  CHECK_THROWS_AS(radarim::load_crt1(path), std::runtime_error);
  std::filesystem::remove(path);
}
