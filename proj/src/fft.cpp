#include "radarim/fft.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace radarim::fft {
namespace {

using cd = std::complex<double>;

constexpr double kPi = 3.141592653589793238462643383279502884;

// Primes up to this size are evaluated directly (O(p^2) on tiny p); larger
// primes go through Bluestein.
constexpr std::size_t kDirectPrimeLimit = 31;

std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t p = 3; p * p <= n; p += 2)
    if (n % p == 0) return p;
  return n;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct Plan {
  std::size_t n = 0;
  std::vector<cd> roots;  // exp(-2*pi*i*k/n), k < n

  // Bluestein payload, present only for primes above kDirectPrimeLimit.
  bool bluestein = false;
  std::size_t m = 0;         // power-of-two convolution length >= 2n-1
  std::vector<cd> chirp;     // exp(-i*pi*k^2/n), k < n
  std::vector<cd> b_fft;     // FFT_m of the wrapped conjugate chirp
  std::shared_ptr<const Plan> pow2_plan;
};

std::shared_ptr<const Plan> get_plan(std::size_t n);

// Iterative radix-2 DIT for power-of-two lengths (also the Bluestein engine).
void fft_pow2(cd* x, std::size_t n, const cd* roots) {
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd w = roots[k * step];
        const cd u = x[i + k];
        const cd v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
      }
    }
  }
}

void bluestein(cd* x, const Plan& plan) {
  const std::size_t n = plan.n, m = plan.m;
  const cd* roots_m = plan.pow2_plan->roots.data();
  std::vector<cd> a(m, cd(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * plan.chirp[j];
  fft_pow2(a.data(), m, roots_m);
  for (std::size_t i = 0; i < m; ++i) a[i] *= plan.b_fft[i];
  // inverse FFT_m via conjugation
  for (auto& v : a) v = std::conj(v);
  fft_pow2(a.data(), m, roots_m);
  const double inv_m = 1.0 / double(m);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = plan.chirp[k] * std::conj(a[k]) * inv_m;
}

// Recursive mixed-radix step. `roots` belongs to the top-level length
// n * rstride; sub-lengths index it with a widened stride. `scratch` must
// hold n elements; sub-calls reuse the caller's freed region of x.
void transform(cd* x, std::size_t n, const cd* roots, std::size_t rstride,
               cd* scratch) {
  if (n == 1) return;
  const std::size_t p = smallest_factor(n);
  if (p == n) {
    if (n <= kDirectPrimeLimit) {
      for (std::size_t k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j)
          acc += roots[((j * k) % n) * rstride] * x[j];
        scratch[k] = acc;
      }
      for (std::size_t k = 0; k < n; ++k) x[k] = scratch[k];
    } else {
      bluestein(x, *get_plan(n));
    }
    return;
  }
  const std::size_t m = n / p;
  for (std::size_t q = 0; q < p; ++q)
    for (std::size_t t = 0; t < m; ++t) scratch[q * m + t] = x[t * p + q];
  for (std::size_t q = 0; q < p; ++q)
    transform(scratch + q * m, m, roots, rstride * p, x + q * m);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc(0.0, 0.0);
    const std::size_t km = k % m;
    for (std::size_t q = 0; q < p; ++q)
      acc += roots[((k * q) % n) * rstride] * scratch[q * m + km];
    x[k] = acc;
  }
}

std::shared_ptr<const Plan> build_plan(std::size_t n) {
  auto plan = std::make_shared<Plan>();
  plan->n = n;
  plan->roots.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ang = -2.0 * kPi * double(k) / double(n);
    plan->roots[k] = cd(std::cos(ang), std::sin(ang));
  }
  if (smallest_factor(n) == n && n > kDirectPrimeLimit) {
    plan->bluestein = true;
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    plan->m = m;
    plan->pow2_plan = get_plan(m);
    plan->chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      // pi*k^2/n reduced mod 2*pi before sin/cos for accuracy
      const std::uint64_t e = (std::uint64_t(k) * k) % (2 * n);
      const double ang = -kPi * double(e) / double(n);
      plan->chirp[k] = cd(std::cos(ang), std::sin(ang));
    }
    std::vector<cd> b(m, cd(0.0, 0.0));
    b[0] = std::conj(plan->chirp[0]);
    for (std::size_t j = 1; j < n; ++j)
      b[j] = b[m - j] = std::conj(plan->chirp[j]);
    fft_pow2(b.data(), m, plan->pow2_plan->roots.data());
    plan->b_fft = std::move(b);
  }
  return plan;
}

std::mutex g_plan_mutex;
std::unordered_map<std::size_t, std::shared_ptr<const Plan>> g_plans;

std::shared_ptr<const Plan> get_plan(std::size_t n) {
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = g_plans.find(n);
    if (it != g_plans.end()) return it->second;
  }
  auto plan = build_plan(n);  // may recurse into get_plan (Bluestein pow2)
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto [it, inserted] = g_plans.emplace(n, std::move(plan));
  return it->second;
}

}  // namespace

void dft(std::complex<double>* x, std::size_t n, bool inverse) {
  if (n == 0) throw std::invalid_argument("dft: zero-length transform");
  if (n == 1) return;
  auto plan = get_plan(n);
  if (inverse)
    for (std::size_t i = 0; i < n; ++i) x[i] = std::conj(x[i]);
  if (is_pow2(n)) {
    fft_pow2(x, n, plan->roots.data());
  } else if (plan->bluestein) {
    bluestein(x, *plan);
  } else {
    std::vector<cd> scratch(n);
    transform(x, n, plan->roots.data(), 1, scratch.data());
  }
  if (inverse) {
    const double inv_n = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::conj(x[i]) * inv_n;
  }
}

}  // namespace radarim::fft
