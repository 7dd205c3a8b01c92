#include "radarim/ccnn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "radarim/kernels/kernels.hpp"

namespace radarim {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

}  // namespace

ModelSpec ModelSpec::named(const std::string& name) {
  ModelSpec spec;
  if (name == "ccnn3d-l") {
    spec.channels = {32, 16, 8, 4, 1};
  } else if (name == "ccnn3d-m") {
    spec.channels = {16, 8, 4, 2, 1};
  } else if (name == "ccnn3d-s") {
    spec.channels = {8, 4, 2, 1};
  } else if (name == "ccnn3d-xs") {
    spec.channels = {4, 2, 1};
  } else if (name == "ccnn2d") {
    spec.rank3 = false;
    spec.in_channels = 16;
    spec.channels = {32, 16, 16};
    spec.kernel = {3, 3, 1};
  } else {
    throw std::invalid_argument("ModelSpec: unknown model name '" + name +
                                "'");
  }
  spec.validate();
  return spec;
}

void ModelSpec::validate() const {
  if (channels.empty()) {
    throw std::invalid_argument("ModelSpec: no layers");
  }
  if (in_channels == 0) {
    throw std::invalid_argument("ModelSpec: in_channels must be > 0");
  }
  for (const std::size_t c : channels) {
    if (c == 0) throw std::invalid_argument("ModelSpec: zero-channel layer");
  }
  for (const std::size_t k : kernel) {
    if (k == 0 || k % 2 == 0) {
      throw std::invalid_argument("ModelSpec: kernel dims must be odd");
    }
  }
  if (rank3) {
    if (channels.back() != 1) {
      throw std::invalid_argument(
          "ModelSpec: rank-3 model must end in 1 channel");
    }
  } else {
    if (channels.back() != in_channels) {
      throw std::invalid_argument(
          "ModelSpec: rank-2 model must end in in_channels channels");
    }
    if (kernel[2] != 1) {
      throw std::invalid_argument(
          "ModelSpec: rank-2 model needs kernel depth 1");
    }
  }
}

std::size_t param_count(const ModelSpec& spec) {
  spec.validate();
  const std::size_t taps = spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
  std::size_t total = 0;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::size_t cin = spec.layer_in_channels(l);
    const std::size_t cout = spec.channels[l];
    total += 2 * (cout * cin * taps + cout);
    if (spec.layer_has_bn(l)) total += 5 * cout;
  }
  return total;
}

ModelParams init_params(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  const float inv_sqrt2 = float(1.0 / std::sqrt(2.0));
  ModelParams params;
  params.conv.resize(spec.n_layers());
  params.bn.resize(spec.n_layers());
  params.bn_running.resize(spec.n_layers());
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::size_t cin = spec.layer_in_channels(l);
    const std::size_t cout = spec.channels[l];
    ConvLayerParams& cp = params.conv[l];
    cp.weight = ComplexTensor(
        {cout, cin, spec.kernel[0], spec.kernel[1], spec.kernel[2]});
    cp.bias = ComplexTensor({cout});
    const std::size_t taps = spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
    const double sigma = std::sqrt(1.0 / double(cin * taps + cout * taps));
    for (std::size_t i = 0; i < cp.weight.size(); ++i) {
      const double mag =
          sigma * std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
      const double phase = 2.0 * kPi * rng.uniform() - kPi;
      const std::complex<double> v = std::polar(mag, phase);
      cp.weight[i] = cfloat(float(v.real()), float(v.imag()));
    }
    if (spec.layer_has_bn(l)) {
      params.bn[l].g_rr.assign(cout, inv_sqrt2);
      params.bn[l].g_ii.assign(cout, inv_sqrt2);
      params.bn[l].g_ri.assign(cout, 0.0f);
      params.bn[l].beta.assign(cout, {0.0f, 0.0f});
      params.bn_running[l].mean.assign(cout, {0.0f, 0.0f});
      params.bn_running[l].c_rr.assign(cout, 0.5f);
      params.bn_running[l].c_ii.assign(cout, 0.5f);
      params.bn_running[l].c_ri.assign(cout, 0.0f);
    }
  }
  return params;
}

std::vector<float> flatten_params(const ModelSpec& spec,
                                  const ModelParams& params) {
  if (params.conv.size() != spec.n_layers()) {
    throw std::invalid_argument("flatten_params: layer count mismatch");
  }
  std::vector<float> flat;
  flat.reserve(param_count(spec));
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const ComplexTensor& w = params.conv[l].weight;
    for (std::size_t i = 0; i < w.size(); ++i) {
      flat.push_back(w[i].real());
      flat.push_back(w[i].imag());
    }
    const ComplexTensor& b = params.conv[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      flat.push_back(b[i].real());
      flat.push_back(b[i].imag());
    }
    if (spec.layer_has_bn(l)) {
      const BnParams& bn = params.bn[l];
      for (std::size_t c = 0; c < bn.g_rr.size(); ++c) {
        flat.push_back(bn.g_rr[c]);
        flat.push_back(bn.g_ii[c]);
        flat.push_back(bn.g_ri[c]);
      }
      for (const cfloat& be : bn.beta) {
        flat.push_back(be.real());
        flat.push_back(be.imag());
      }
    }
  }
  if (flat.size() != param_count(spec)) {
    throw std::logic_error("flatten_params: size does not match param_count");
  }
  return flat;
}

void unflatten_params(const ModelSpec& spec, const std::vector<float>& flat,
                      ModelParams& params) {
  if (flat.size() != param_count(spec)) {
    throw std::invalid_argument("unflatten_params: wrong vector length");
  }
  if (params.conv.size() != spec.n_layers()) {
    throw std::invalid_argument("unflatten_params: layer count mismatch");
  }
  std::size_t i = 0;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    ComplexTensor& w = params.conv[l].weight;
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = {flat[i], flat[i + 1]};
      i += 2;
    }
    ComplexTensor& b = params.conv[l].bias;
    for (std::size_t k = 0; k < b.size(); ++k) {
      b[k] = {flat[i], flat[i + 1]};
      i += 2;
    }
    if (spec.layer_has_bn(l)) {
      BnParams& bn = params.bn[l];
      for (std::size_t c = 0; c < bn.g_rr.size(); ++c) {
        bn.g_rr[c] = flat[i];
        bn.g_ii[c] = flat[i + 1];
        bn.g_ri[c] = flat[i + 2];
        i += 3;
      }
      for (cfloat& be : bn.beta) {
        be = {flat[i], flat[i + 1]};
        i += 2;
      }
    }
  }
}

std::vector<float> flatten_grads(const ModelSpec& spec,
                                 const ModelGrads& grads) {
  ModelParams shim;
  shim.conv = grads.conv;
  shim.bn = grads.bn;
  return flatten_params(spec, shim);
}

// --- convolution ---

namespace {

struct ConvDims {
  std::size_t batch, cin, cout;
  std::size_t r, d, t;     // spatial extents
  std::size_t kr, kd, kt;  // kernel extents
  std::size_t rp, dp, tp;  // padded extents
  bool flat2d;             // t == 1 and kt == 1: fold the d axis into taps
};

ConvDims conv_dims(const ComplexTensor& x, const ComplexTensor& weight,
                   std::size_t bias_len) {
  if (x.rank() != 5) {
    throw std::invalid_argument("cconv: activation must be rank-5");
  }
  if (weight.rank() != 5) {
    throw std::invalid_argument("cconv: weight must be rank-5");
  }
  ConvDims dm;
  dm.batch = x.shape()[0];
  dm.cin = x.shape()[1];
  dm.r = x.shape()[2];
  dm.d = x.shape()[3];
  dm.t = x.shape()[4];
  dm.cout = weight.shape()[0];
  dm.kr = weight.shape()[2];
  dm.kd = weight.shape()[3];
  dm.kt = weight.shape()[4];
  if (weight.shape()[1] != dm.cin) {
    throw std::invalid_argument("cconv: channel mismatch");
  }
  if (bias_len != dm.cout) {
    throw std::invalid_argument("cconv: bias size mismatch");
  }
  if (dm.kr % 2 == 0 || dm.kd % 2 == 0 || dm.kt % 2 == 0) {
    throw std::invalid_argument("cconv: kernel dims must be odd");
  }
  dm.rp = dm.r + dm.kr - 1;
  dm.dp = dm.d + dm.kd - 1;
  dm.tp = dm.t + dm.kt - 1;
  dm.flat2d = dm.t == 1 && dm.kt == 1;
  return dm;
}

inline std::size_t wrap_mod(std::ptrdiff_t i, std::size_t n) {
  std::ptrdiff_t m = i % std::ptrdiff_t(n);
  if (m < 0) m += std::ptrdiff_t(n);
  return std::size_t(m);
}

// Copies one [r, d, t] channel slab into the padded scratch buffer,
// extending with zeros or circular wrap per axis.
void fill_padded(const cfloat* src, cfloat* dst, const ConvDims& dm,
                 const std::array<Padding, 3>& pad) {
  const std::size_t pr = (dm.kr - 1) / 2;
  const std::size_t pd = (dm.kd - 1) / 2;
  const std::size_t pt = (dm.kt - 1) / 2;
  std::memset(dst, 0, dm.rp * dm.dp * dm.tp * sizeof(cfloat));
  for (std::size_t rp = 0; rp < dm.rp; ++rp) {
    const std::ptrdiff_t sr_raw = std::ptrdiff_t(rp) - std::ptrdiff_t(pr);
    std::size_t sr;
    if (sr_raw >= 0 && sr_raw < std::ptrdiff_t(dm.r)) {
      sr = std::size_t(sr_raw);
    } else if (pad[0] == Padding::circular) {
      sr = wrap_mod(sr_raw, dm.r);
    } else {
      continue;
    }
    for (std::size_t dp = 0; dp < dm.dp; ++dp) {
      const std::ptrdiff_t sd_raw = std::ptrdiff_t(dp) - std::ptrdiff_t(pd);
      std::size_t sd;
      if (sd_raw >= 0 && sd_raw < std::ptrdiff_t(dm.d)) {
        sd = std::size_t(sd_raw);
      } else if (pad[1] == Padding::circular) {
        sd = wrap_mod(sd_raw, dm.d);
      } else {
        continue;
      }
      const cfloat* srow = src + (sr * dm.d + sd) * dm.t;
      cfloat* drow = dst + (rp * dm.dp + dp) * dm.tp;
      if (pad[2] == Padding::zero) {
        std::memcpy(drow + pt, srow, dm.t * sizeof(cfloat));
      } else {
        for (std::size_t tp = 0; tp < dm.tp; ++tp) {
          drow[tp] =
              srow[wrap_mod(std::ptrdiff_t(tp) - std::ptrdiff_t(pt), dm.t)];
        }
      }
    }
  }
}

}  // namespace

ComplexTensor cconv_forward(const ComplexTensor& x,
                            const ComplexTensor& weight,
                            const ComplexTensor& bias,
                            const std::array<Padding, 3>& padding) {
  if (bias.rank() != 1) {
    throw std::invalid_argument("cconv: bias must be rank-1");
  }
  const ConvDims dm = conv_dims(x, weight, bias.shape()[0]);
  const kernels::KernelTable& kt = kernels::active_kernels();
  const std::size_t slab = dm.r * dm.d * dm.t;

  ComplexTensor out({dm.batch, dm.cout, dm.r, dm.d, dm.t});
  for (std::size_t b = 0; b < dm.batch; ++b) {
    for (std::size_t co = 0; co < dm.cout; ++co) {
      cfloat* dst = out.data() + (b * dm.cout + co) * slab;
      const cfloat bv = bias[co];
      for (std::size_t i = 0; i < slab; ++i) dst[i] = bv;
    }
  }

  std::vector<cfloat> pad(dm.rp * dm.dp * dm.tp);
  const std::size_t wtaps = dm.kr * dm.kd * dm.kt;
  for (std::size_t b = 0; b < dm.batch; ++b) {
    for (std::size_t ci = 0; ci < dm.cin; ++ci) {
      fill_padded(x.data() + (b * dm.cin + ci) * slab, pad.data(), dm,
                  padding);
      for (std::size_t co = 0; co < dm.cout; ++co) {
        cfloat* dst = out.data() + (b * dm.cout + co) * slab;
        const cfloat* w = weight.data() + (co * dm.cin + ci) * wtaps;
        if (dm.flat2d) {
          for (std::size_t kr = 0; kr < dm.kr; ++kr) {
            kt.caxpy_taps(dst, dm.d, &pad[kr * dm.dp], dm.dp, dm.r, dm.d,
                          int(dm.kd), &w[kr * dm.kd]);
          }
        } else {
          for (std::size_t kr = 0; kr < dm.kr; ++kr) {
            for (std::size_t kd = 0; kd < dm.kd; ++kd) {
              const cfloat* wt = &w[(kr * dm.kd + kd) * dm.kt];
              for (std::size_t r = 0; r < dm.r; ++r) {
                kt.caxpy_taps(dst + r * dm.d * dm.t, dm.t,
                              &pad[((r + kr) * dm.dp + kd) * dm.tp], dm.tp,
                              dm.d, dm.t, int(dm.kt), wt);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads cconv_backward(const ComplexTensor& x, const ComplexTensor& weight,
                         const ComplexTensor& gy,
                         const std::array<Padding, 3>& padding,
                         bool want_input_grad) {
  const ConvDims dm = conv_dims(x, weight, weight.shape()[0]);
  if (gy.shape() !=
      std::vector<std::size_t>{dm.batch, dm.cout, dm.r, dm.d, dm.t}) {
    throw std::invalid_argument("cconv_backward: upstream shape mismatch");
  }
  const kernels::KernelTable& kt = kernels::active_kernels();
  const std::size_t slab = dm.r * dm.d * dm.t;
  const std::size_t wtaps = dm.kr * dm.kd * dm.kt;

  ConvGrads grads;
  grads.weight = ComplexTensor(weight.shape());
  grads.bias = ComplexTensor({dm.cout});

  // Bias gradient: plain sum of the upstream values per output channel.
  for (std::size_t co = 0; co < dm.cout; ++co) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* g = gy.data() + (b * dm.cout + co) * slab;
      for (std::size_t i = 0; i < slab; ++i) {
        acc += std::complex<double>(g[i]);
      }
    }
    grads.bias[co] = cfloat(float(acc.real()), float(acc.imag()));
  }

  // Weight gradient: gw[co,ci,taps] = sum gy[co] * conj(x_padded[ci]).
  std::vector<std::complex<double>> acc_w(weight.size(), {0.0, 0.0});
  std::vector<cfloat> pad(dm.rp * dm.dp * dm.tp);
  for (std::size_t b = 0; b < dm.batch; ++b) {
    for (std::size_t ci = 0; ci < dm.cin; ++ci) {
      fill_padded(x.data() + (b * dm.cin + ci) * slab, pad.data(), dm,
                  padding);
      for (std::size_t co = 0; co < dm.cout; ++co) {
        const cfloat* g = gy.data() + (b * dm.cout + co) * slab;
        std::complex<double>* aw = &acc_w[(co * dm.cin + ci) * wtaps];
        if (dm.flat2d) {
          for (std::size_t kr = 0; kr < dm.kr; ++kr) {
            kt.cdotc_taps(g, dm.d, &pad[kr * dm.dp], dm.dp, dm.r, dm.d,
                          int(dm.kd), &aw[kr * dm.kd]);
          }
        } else {
          for (std::size_t kr = 0; kr < dm.kr; ++kr) {
            for (std::size_t kd = 0; kd < dm.kd; ++kd) {
              std::complex<double>* at = &aw[(kr * dm.kd + kd) * dm.kt];
              for (std::size_t r = 0; r < dm.r; ++r) {
                kt.cdotc_taps(g + r * dm.d * dm.t, dm.t,
                              &pad[((r + kr) * dm.dp + kd) * dm.tp], dm.tp,
                              dm.d, dm.t, int(dm.kt), at);
              }
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < acc_w.size(); ++i) {
    grads.weight[i] =
        cfloat(float(acc_w[i].real()), float(acc_w[i].imag()));
  }

  if (want_input_grad) {
    // gx = correlation of the padded upstream with the conjugated,
    // tap-reversed weights, with in/out channel roles swapped.
    ComplexTensor wcf({dm.cin, dm.cout, dm.kr, dm.kd, dm.kt});
    for (std::size_t co = 0; co < dm.cout; ++co) {
      for (std::size_t ci = 0; ci < dm.cin; ++ci) {
        for (std::size_t kr = 0; kr < dm.kr; ++kr) {
          for (std::size_t kd = 0; kd < dm.kd; ++kd) {
            for (std::size_t k3 = 0; k3 < dm.kt; ++k3) {
              const cfloat w =
                  weight[(((co * dm.cin + ci) * dm.kr + (dm.kr - 1 - kr)) *
                              dm.kd +
                          (dm.kd - 1 - kd)) *
                             dm.kt +
                         (dm.kt - 1 - k3)];
              wcf[(((ci * dm.cout + co) * dm.kr + kr) * dm.kd + kd) * dm.kt +
                  k3] = std::conj(w);
            }
          }
        }
      }
    }
    grads.input = ComplexTensor(x.shape());
    for (std::size_t b = 0; b < dm.batch; ++b) {
      for (std::size_t co = 0; co < dm.cout; ++co) {
        fill_padded(gy.data() + (b * dm.cout + co) * slab, pad.data(), dm,
                    padding);
        for (std::size_t ci = 0; ci < dm.cin; ++ci) {
          cfloat* dst = grads.input.data() + (b * dm.cin + ci) * slab;
          const cfloat* w = wcf.data() + (ci * dm.cout + co) * wtaps;
          if (dm.flat2d) {
            for (std::size_t kr = 0; kr < dm.kr; ++kr) {
              kt.caxpy_taps(dst, dm.d, &pad[kr * dm.dp], dm.dp, dm.r, dm.d,
                            int(dm.kd), &w[kr * dm.kd]);
            }
          } else {
            for (std::size_t kr = 0; kr < dm.kr; ++kr) {
              for (std::size_t kd = 0; kd < dm.kd; ++kd) {
                const cfloat* wt = &w[(kr * dm.kd + kd) * dm.kt];
                for (std::size_t r = 0; r < dm.r; ++r) {
                  kt.caxpy_taps(dst + r * dm.d * dm.t, dm.t,
                                &pad[((r + kr) * dm.dp + kd) * dm.tp],
                                dm.tp, dm.d, dm.t, int(dm.kt), wt);
                }
              }
            }
          }
        }
      }
    }
  }
  return grads;
}

// --- complex ReLU ---

ComplexTensor crelu_forward(const ComplexTensor& x) {
  ComplexTensor out(x.shape());
  kernels::active_kernels().crelu(x.data(), out.data(), x.size());
  return out;
}

ComplexTensor crelu_backward(const ComplexTensor& x,
                             const ComplexTensor& gy) {
  if (x.shape() != gy.shape()) {
    throw std::invalid_argument("crelu_backward: shape mismatch");
  }
  ComplexTensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = {x[i].real() > 0.0f ? gy[i].real() : 0.0f,
              x[i].imag() > 0.0f ? gy[i].imag() : 0.0f};
  }
  return out;
}

// --- complex batch normalization ---

namespace {

struct BnDims {
  std::size_t channels;
  std::size_t slab;  // elements per (batch, channel)
  std::size_t batch;
};

BnDims bn_dims(const ComplexTensor& x, std::size_t param_channels) {
  if (x.rank() != 5) {
    throw std::invalid_argument("cbn: activation must be rank-5");
  }
  if (x.shape()[1] != param_channels) {
    throw std::invalid_argument("cbn: channel count mismatch");
  }
  return BnDims{x.shape()[1], x.shape()[2] * x.shape()[3] * x.shape()[4],
                x.shape()[0]};
}

// Entries of (V + eps I)^(-1/2) for the symmetric 2x2 matrix V given by
// (vrr, vri, vii), via the closed form (M + s I)/(s t) with s = sqrt(det M)
// and t = sqrt(tr M + 2 s).
void inv_sqrt_2x2(double vrr, double vri, double vii, double& a11,
                  double& a12, double& a22) {
  const double av = vrr + kBnEpsilon;
  const double bv = vri;
  const double cv = vii + kBnEpsilon;
  const double s = std::sqrt(av * cv - bv * bv);
  const double t = std::sqrt(av + cv + 2.0 * s);
  const double denom = s * t;
  a11 = (cv + s) / denom;
  a12 = -bv / denom;
  a22 = (av + s) / denom;
}

}  // namespace

ComplexTensor cbn_forward_train(const ComplexTensor& x, const BnParams& bn,
                                BnRunning& running, BnStats* stats_out) {
  const BnDims dm = bn_dims(x, bn.g_rr.size());
  const double inv_m = 1.0 / double(dm.batch * dm.slab);
  ComplexTensor out(x.shape());
  if (stats_out) {
    stats_out->mean_re.assign(dm.channels, 0.0);
    stats_out->mean_im.assign(dm.channels, 0.0);
    stats_out->cov_rr.assign(dm.channels, 0.0);
    stats_out->cov_ri.assign(dm.channels, 0.0);
    stats_out->cov_ii.assign(dm.channels, 0.0);
    stats_out->a11.assign(dm.channels, 0.0);
    stats_out->a12.assign(dm.channels, 0.0);
    stats_out->a22.assign(dm.channels, 0.0);
  }

  for (std::size_t c = 0; c < dm.channels; ++c) {
    double m_re = 0.0, m_im = 0.0;
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* p = x.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        m_re += p[i].real();
        m_im += p[i].imag();
      }
    }
    m_re *= inv_m;
    m_im *= inv_m;

    double vrr = 0.0, vri = 0.0, vii = 0.0;
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* p = x.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        const double ur = p[i].real() - m_re;
        const double ui = p[i].imag() - m_im;
        vrr += ur * ur;
        vri += ur * ui;
        vii += ui * ui;
      }
    }
    vrr *= inv_m;
    vri *= inv_m;
    vii *= inv_m;

    double a11, a12, a22;
    inv_sqrt_2x2(vrr, vri, vii, a11, a12, a22);

    const double grr = bn.g_rr[c];
    const double gii = bn.g_ii[c];
    const double gri = bn.g_ri[c];
    const double br = bn.beta[c].real();
    const double bi = bn.beta[c].imag();
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* p = x.data() + (b * dm.channels + c) * dm.slab;
      cfloat* q = out.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        const double ur = p[i].real() - m_re;
        const double ui = p[i].imag() - m_im;
        const double xr = a11 * ur + a12 * ui;
        const double xi = a12 * ur + a22 * ui;
        q[i] = {float(grr * xr + gri * xi + br),
                float(gri * xr + gii * xi + bi)};
      }
    }

    const double keep = 1.0 - kBnMomentum;
    running.mean[c] = {
        float(keep * running.mean[c].real() + kBnMomentum * m_re),
        float(keep * running.mean[c].imag() + kBnMomentum * m_im)};
    running.c_rr[c] = float(keep * running.c_rr[c] + kBnMomentum * vrr);
    running.c_ri[c] = float(keep * running.c_ri[c] + kBnMomentum * vri);
    running.c_ii[c] = float(keep * running.c_ii[c] + kBnMomentum * vii);

    if (stats_out) {
      stats_out->mean_re[c] = m_re;
      stats_out->mean_im[c] = m_im;
      stats_out->cov_rr[c] = vrr;
      stats_out->cov_ri[c] = vri;
      stats_out->cov_ii[c] = vii;
      stats_out->a11[c] = a11;
      stats_out->a12[c] = a12;
      stats_out->a22[c] = a22;
    }
  }
  return out;
}

ComplexTensor cbn_forward_eval(const ComplexTensor& x, const BnParams& bn,
                               const BnRunning& running) {
  const BnDims dm = bn_dims(x, bn.g_rr.size());
  ComplexTensor out(x.shape());
  for (std::size_t c = 0; c < dm.channels; ++c) {
    double a11, a12, a22;
    inv_sqrt_2x2(running.c_rr[c], running.c_ri[c], running.c_ii[c], a11, a12,
                 a22);
    const double m_re = running.mean[c].real();
    const double m_im = running.mean[c].imag();
    const double grr = bn.g_rr[c];
    const double gii = bn.g_ii[c];
    const double gri = bn.g_ri[c];
    const double br = bn.beta[c].real();
    const double bi = bn.beta[c].imag();
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* p = x.data() + (b * dm.channels + c) * dm.slab;
      cfloat* q = out.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        const double ur = p[i].real() - m_re;
        const double ui = p[i].imag() - m_im;
        const double xr = a11 * ur + a12 * ui;
        const double xi = a12 * ur + a22 * ui;
        q[i] = {float(grr * xr + gri * xi + br),
                float(gri * xr + gii * xi + bi)};
      }
    }
  }
  return out;
}

BnGrads cbn_backward(const ComplexTensor& x, const BnParams& bn,
                     const BnStats& stats, const ComplexTensor& gy) {
  const BnDims dm = bn_dims(x, bn.g_rr.size());
  if (gy.shape() != x.shape()) {
    throw std::invalid_argument("cbn_backward: shape mismatch");
  }
  if (stats.a11.size() != dm.channels) {
    throw std::invalid_argument("cbn_backward: missing saved statistics");
  }
  const double m_count = double(dm.batch * dm.slab);

  BnGrads grads;
  grads.params.g_rr.assign(dm.channels, 0.0f);
  grads.params.g_ii.assign(dm.channels, 0.0f);
  grads.params.g_ri.assign(dm.channels, 0.0f);
  grads.params.beta.assign(dm.channels, {0.0f, 0.0f});
  grads.input = ComplexTensor(x.shape());

  for (std::size_t c = 0; c < dm.channels; ++c) {
    const double m_re = stats.mean_re[c];
    const double m_im = stats.mean_im[c];
    const double a11 = stats.a11[c];
    const double a12 = stats.a12[c];
    const double a22 = stats.a22[c];
    const double grr = bn.g_rr[c];
    const double gii = bn.g_ii[c];
    const double gri = bn.g_ri[c];

    // First pass: parameter gradients plus the sums feeding the input
    // gradient: S_h = sum of h = Gamma g, and the whitening-matrix entry
    // gradients accumulated against the centered inputs u.
    double g_grr = 0.0, g_gii = 0.0, g_gri = 0.0, g_br = 0.0, g_bi = 0.0;
    double sh_r = 0.0, sh_i = 0.0;
    double ga11 = 0.0, ga12 = 0.0, ga22 = 0.0;
    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* px = x.data() + (b * dm.channels + c) * dm.slab;
      const cfloat* pg = gy.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        const double ur = px[i].real() - m_re;
        const double ui = px[i].imag() - m_im;
        const double xr = a11 * ur + a12 * ui;
        const double xi = a12 * ur + a22 * ui;
        const double gr = pg[i].real();
        const double gi = pg[i].imag();
        g_grr += gr * xr;
        g_gii += gi * xi;
        g_gri += gr * xi + gi * xr;
        g_br += gr;
        g_bi += gi;
        const double hr = grr * gr + gri * gi;
        const double hi = gri * gr + gii * gi;
        sh_r += hr;
        sh_i += hi;
        ga11 += hr * ur;
        ga12 += hr * ui + hi * ur;
        ga22 += hi * ui;
      }
    }
    grads.params.g_rr[c] = float(g_grr);
    grads.params.g_ii[c] = float(g_gii);
    grads.params.g_ri[c] = float(g_gri);
    grads.params.beta[c] = {float(g_br), float(g_bi)};

    // Chain the whitening-matrix gradients back to the covariance entries
    // through the closed form A = (M + s I)/(s t), M = cov + eps I.
    const double av = stats.cov_rr[c] + kBnEpsilon;
    const double bv = stats.cov_ri[c];
    const double cv = stats.cov_ii[c] + kBnEpsilon;
    const double s = std::sqrt(av * cv - bv * bv);
    const double t = std::sqrt(av + cv + 2.0 * s);
    const double den = s * t;
    double l_cov[3];  // dL/d(av), dL/d(bv), dL/d(cv)
    for (int which = 0; which < 3; ++which) {
      const double da = which == 0 ? 1.0 : 0.0;
      const double db = which == 1 ? 1.0 : 0.0;
      const double dc = which == 2 ? 1.0 : 0.0;
      const double ds = (cv * da + av * dc - 2.0 * bv * db) / (2.0 * s);
      const double dt = (da + dc + 2.0 * ds) / (2.0 * t);
      const double dden = t * ds + s * dt;
      const double da11 = (dc + ds) / den - (cv + s) * dden / (den * den);
      const double da12 = -db / den + bv * dden / (den * den);
      const double da22 = (da + ds) / den - (av + s) * dden / (den * den);
      l_cov[which] = ga11 * da11 + ga12 * da12 + ga22 * da22;
    }
    const double gc11 = l_cov[0];
    const double gc12 = 0.5 * l_cov[1];
    const double gc22 = l_cov[2];

    // Mean-removal term: (1/M) A S_h (the covariance path sums to zero
    // over the centered u).
    const double mt_r = (a11 * sh_r + a12 * sh_i) / m_count;
    const double mt_i = (a12 * sh_r + a22 * sh_i) / m_count;
    const double two_over_m = 2.0 / m_count;

    for (std::size_t b = 0; b < dm.batch; ++b) {
      const cfloat* px = x.data() + (b * dm.channels + c) * dm.slab;
      const cfloat* pg = gy.data() + (b * dm.channels + c) * dm.slab;
      cfloat* po = grads.input.data() + (b * dm.channels + c) * dm.slab;
      for (std::size_t i = 0; i < dm.slab; ++i) {
        const double ur = px[i].real() - m_re;
        const double ui = px[i].imag() - m_im;
        const double gr = pg[i].real();
        const double gi = pg[i].imag();
        const double hr = grr * gr + gri * gi;
        const double hi = gri * gr + gii * gi;
        const double dir_r = a11 * hr + a12 * hi;
        const double dir_i = a12 * hr + a22 * hi;
        const double cov_r = two_over_m * (gc11 * ur + gc12 * ui);
        const double cov_i = two_over_m * (gc12 * ur + gc22 * ui);
        po[i] = {float(dir_r + cov_r - mt_r), float(dir_i + cov_i - mt_i)};
      }
    }
  }
  return grads;
}

// --- whole-model passes ---

ComplexTensor model_forward(const ModelSpec& spec, ModelParams& params,
                            const ComplexTensor& x, bool training,
                            ForwardCache* cache) {
  spec.validate();
  if (params.conv.size() != spec.n_layers()) {
    throw std::invalid_argument("model_forward: params/spec mismatch");
  }
  if (x.rank() != 5 || x.shape()[1] != spec.in_channels) {
    throw std::invalid_argument(
        "model_forward: input must be [B, C_in, R, D, T]");
  }
  if (!spec.rank3 && x.shape()[4] != 1) {
    throw std::invalid_argument(
        "model_forward: rank-2 model expects a depth-1 input");
  }
  const std::size_t n_layers = spec.n_layers();
  if (cache) {
    cache->valid = false;
    cache->a0 = x;
    cache->z.assign(n_layers, ComplexTensor());
    cache->act.assign(n_layers, ComplexTensor());
    cache->bn.assign(n_layers, BnStats{});
  }

  ComplexTensor a = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    ComplexTensor z = cconv_forward(a, params.conv[l].weight,
                                    params.conv[l].bias, spec.padding);
    if (l + 1 == n_layers) {
      a = z;
    } else {
      ComplexTensor y = crelu_forward(z);
      if (spec.layer_has_bn(l)) {
        a = training
                ? cbn_forward_train(y, params.bn[l], params.bn_running[l],
                                    cache ? &cache->bn[l] : nullptr)
                : cbn_forward_eval(y, params.bn[l], params.bn_running[l]);
      } else {
        a = std::move(y);
      }
    }
    if (cache) {
      cache->z[l] = std::move(z);
      cache->act[l] = a;
    }
  }
  if (cache) cache->valid = true;
  return a;
}

ModelGrads model_backward(const ModelSpec& spec, const ModelParams& params,
                          const ForwardCache& cache,
                          const ComplexTensor& upstream,
                          ComplexTensor* input_grad) {
  spec.validate();
  const std::size_t n_layers = spec.n_layers();
  if (!cache.valid || cache.z.size() != n_layers) {
    throw std::invalid_argument("model_backward: forward cache missing");
  }
  if (upstream.shape() != cache.act.back().shape()) {
    throw std::invalid_argument("model_backward: upstream shape mismatch");
  }

  ModelGrads grads;
  grads.conv.resize(n_layers);
  grads.bn.resize(n_layers);

  ComplexTensor g = upstream;
  for (std::size_t li = n_layers; li-- > 0;) {
    if (spec.layer_has_bn(li)) {
      if (cache.bn[li].a11.empty()) {
        throw std::invalid_argument(
            "model_backward: cache lacks train-mode batch-norm statistics");
      }
      // The batch-norm input is the rectified conv output; recompute it
      // from the cached pre-activation rather than storing a third tensor.
      const ComplexTensor y = crelu_forward(cache.z[li]);
      BnGrads bg = cbn_backward(y, params.bn[li], cache.bn[li], g);
      grads.bn[li] = std::move(bg.params);
      g = std::move(bg.input);
    }
    if (li + 1 != n_layers) {
      g = crelu_backward(cache.z[li], g);
    }
    const ComplexTensor& xin = li == 0 ? cache.a0 : cache.act[li - 1];
    const bool want_input = li > 0 || input_grad != nullptr;
    ConvGrads cg = cconv_backward(xin, params.conv[li].weight, g,
                                  spec.padding, want_input);
    grads.conv[li].weight = std::move(cg.weight);
    grads.conv[li].bias = std::move(cg.bias);
    if (li > 0) {
      g = std::move(cg.input);
    } else if (input_grad) {
      *input_grad = std::move(cg.input);
    }
  }
  return grads;
}

}  // namespace radarim
