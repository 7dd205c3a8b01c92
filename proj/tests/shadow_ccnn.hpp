#pragma once

// Double-precision shadow network used as a gradient oracle. Same
// mathematical function as the library layers, written directly from the
// definitions with no shared code, and evaluated end to end in double so
// central finite differences stay clean. Shared by the unit tests and the
// acceptance gate.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "naive_ref.hpp"
#include "radarim/ccnn.hpp"
#include "radarim/rng.hpp"

namespace testref {

struct DTensor {
  std::vector<std::size_t> shape;  // [B, C, R, D, T]
  std::vector<cdouble> v;
};

inline DTensor to_shadow(const radarim::ComplexTensor& t) {
  DTensor d;
  d.shape = t.shape();
  d.v.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    d.v[i] = cdouble(t[i].real(), t[i].imag());
  return d;
}

inline std::size_t off5(const std::vector<std::size_t>& s, std::size_t b,
                        std::size_t c, std::size_t r, std::size_t d,
                        std::size_t t) {
  return (((b * s[1] + c) * s[2] + r) * s[3] + d) * s[4] + t;
}

// Same-size cross-correlation; per axis either zero extension or wrap.
inline DTensor shadow_conv(const DTensor& x, const std::vector<cdouble>& w,
                           const std::vector<std::size_t>& wshape,
                           const std::vector<cdouble>& bias,
                           const std::array<radarim::Padding, 3>& pad) {
  const std::size_t B = x.shape[0], CI = x.shape[1], R = x.shape[2],
                    D = x.shape[3], T = x.shape[4];
  const std::size_t CO = wshape[0], KR = wshape[2], KD = wshape[3],
                    KT = wshape[4];
  DTensor y;
  y.shape = {B, CO, R, D, T};
  y.v.assign(B * CO * R * D * T, cdouble(0.0, 0.0));
  const auto fetch = [&](std::size_t b, std::size_t ci, std::ptrdiff_t r,
                         std::ptrdiff_t d, std::ptrdiff_t t) -> cdouble {
    const std::ptrdiff_t dims[3] = {std::ptrdiff_t(R), std::ptrdiff_t(D),
                                    std::ptrdiff_t(T)};
    std::ptrdiff_t idx[3] = {r, d, t};
    for (int a = 0; a < 3; ++a) {
      if (idx[a] >= 0 && idx[a] < dims[a]) continue;
      if (pad[std::size_t(a)] == radarim::Padding::zero) return {0.0, 0.0};
      idx[a] = ((idx[a] % dims[a]) + dims[a]) % dims[a];
    }
    return x.v[off5(x.shape, b, ci, std::size_t(idx[0]), std::size_t(idx[1]),
                    std::size_t(idx[2]))];
  };
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < CO; ++co)
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t d = 0; d < D; ++d)
          for (std::size_t t = 0; t < T; ++t) {
            cdouble acc = bias[co];
            for (std::size_t ci = 0; ci < CI; ++ci)
              for (std::size_t kr = 0; kr < KR; ++kr)
                for (std::size_t kd = 0; kd < KD; ++kd)
                  for (std::size_t kt = 0; kt < KT; ++kt) {
                    const cdouble wv =
                        w[(((co * CI + ci) * KR + kr) * KD + kd) * KT + kt];
                    const cdouble xv = fetch(
                        b, ci,
                        std::ptrdiff_t(r + kr) - std::ptrdiff_t(KR / 2),
                        std::ptrdiff_t(d + kd) - std::ptrdiff_t(KD / 2),
                        std::ptrdiff_t(t + kt) - std::ptrdiff_t(KT / 2));
                    acc += wv * xv;
                  }
            y.v[off5(y.shape, b, co, r, d, t)] = acc;
          }
  return y;
}

inline DTensor shadow_crelu(const DTensor& x) {
  DTensor y = x;
  for (auto& z : y.v)
    z = cdouble(z.real() > 0.0 ? z.real() : 0.0,
                z.imag() > 0.0 ? z.imag() : 0.0);
  return y;
}

// Whitening matrix from the eigendecomposition of the 2x2 covariance: a
// different derivation than any closed form, so agreement is meaningful.
inline void eig_inv_sqrt(double a, double b, double c, double out[3]) {
  const double mean = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  const double l1 = mean + disc, l2 = mean - disc;
  double v1[2];
  if (std::abs(b) > 1e-300) {
    v1[0] = b;
    v1[1] = l1 - a;
  } else {
    v1[0] = a >= c ? 1.0 : 0.0;
    v1[1] = a >= c ? 0.0 : 1.0;
  }
  const double n = std::hypot(v1[0], v1[1]);
  v1[0] /= n;
  v1[1] /= n;
  const double v2[2] = {-v1[1], v1[0]};
  const double w1 = 1.0 / std::sqrt(l1), w2 = 1.0 / std::sqrt(l2);
  out[0] = w1 * v1[0] * v1[0] + w2 * v2[0] * v2[0];
  out[1] = w1 * v1[0] * v1[1] + w2 * v2[0] * v2[1];
  out[2] = w1 * v1[1] * v1[1] + w2 * v2[1] * v2[1];
}

inline DTensor shadow_bn(const DTensor& x, const std::vector<double>& grr,
                         const std::vector<double>& gii,
                         const std::vector<double>& gri,
                         const std::vector<cdouble>& beta) {
  const std::size_t B = x.shape[0], C = x.shape[1];
  const std::size_t slab = x.shape[2] * x.shape[3] * x.shape[4];
  const double inv_m = 1.0 / double(B * slab);
  DTensor y = x;
  for (std::size_t c = 0; c < C; ++c) {
    cdouble mean(0.0, 0.0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < slab; ++i)
        mean += x.v[(b * C + c) * slab + i];
    mean *= inv_m;
    double vrr = 0.0, vri = 0.0, vii = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < slab; ++i) {
        const cdouble u = x.v[(b * C + c) * slab + i] - mean;
        vrr += u.real() * u.real();
        vri += u.real() * u.imag();
        vii += u.imag() * u.imag();
      }
    double A[3];
    eig_inv_sqrt(vrr * inv_m + radarim::kBnEpsilon, vri * inv_m,
                 vii * inv_m + radarim::kBnEpsilon, A);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < slab; ++i) {
        const cdouble u = x.v[(b * C + c) * slab + i] - mean;
        const double wr = A[0] * u.real() + A[1] * u.imag();
        const double wi = A[1] * u.real() + A[2] * u.imag();
        y.v[(b * C + c) * slab + i] =
            cdouble(grr[c] * wr + gri[c] * wi + beta[c].real(),
                    gri[c] * wr + gii[c] * wi + beta[c].imag());
      }
  }
  return y;
}

// Whole network from a double copy of the flat parameter vector, consuming
// parameters in exactly the flatten_params order.
inline DTensor shadow_model(const radarim::ModelSpec& spec,
                            const std::vector<double>& flat,
                            const DTensor& x0) {
  DTensor act = x0;
  std::size_t i = 0;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::size_t cin = spec.layer_in_channels(l);
    const std::size_t cout = spec.channels[l];
    const std::vector<std::size_t> wshape = {cout, cin, spec.kernel[0],
                                             spec.kernel[1], spec.kernel[2]};
    std::vector<cdouble> w(cout * cin * spec.kernel[0] * spec.kernel[1] *
                           spec.kernel[2]);
    for (auto& z : w) {
      z = cdouble(flat[i], flat[i + 1]);
      i += 2;
    }
    std::vector<cdouble> bias(cout);
    for (auto& z : bias) {
      z = cdouble(flat[i], flat[i + 1]);
      i += 2;
    }
    act = shadow_conv(act, w, wshape, bias, spec.padding);
    if (l + 1 < spec.n_layers()) act = shadow_crelu(act);
    if (spec.layer_has_bn(l)) {
      std::vector<double> grr(cout), gii(cout), gri(cout);
      std::vector<cdouble> beta(cout);
      for (std::size_t c = 0; c < cout; ++c) {
        grr[c] = flat[i];
        gii[c] = flat[i + 1];
        gri[c] = flat[i + 2];
        i += 3;
      }
      for (auto& z : beta) {
        z = cdouble(flat[i], flat[i + 1]);
        i += 2;
      }
      act = shadow_bn(act, grr, gii, gri, beta);
    }
  }
  return act;
}

// Scalar objective: a fixed random linear functional of the output, with the
// (Re, Im) pair convention matching the library's upstream gradients.
inline double shadow_loss(const DTensor& y, const std::vector<double>& u) {
  double L = 0.0;
  for (std::size_t i = 0; i < y.v.size(); ++i)
    L += u[2 * i] * y.v[i].real() + u[2 * i + 1] * y.v[i].imag();
  return L;
}

inline std::vector<double> random_functional(std::size_t n_complex,
                                             radarim::Rng& rng) {
  std::vector<double> u(2 * n_complex);
  for (auto& w : u) w = rng.uniform(-1.0, 1.0);
  return u;
}

inline radarim::ComplexTensor upstream_from(
    const std::vector<double>& u, const std::vector<std::size_t>& shape) {
  radarim::ComplexTensor g(shape);
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = radarim::cfloat(float(u[2 * i]), float(u[2 * i + 1]));
  return g;
}

}  // namespace testref
