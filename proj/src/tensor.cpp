#include "radarim/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "radarim/fft.hpp"
#include "radarim/kernels/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "CRT1 I/O assumes a little-endian host");

namespace radarim {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
  if (shape.empty())
    throw std::invalid_argument("ComplexTensor: rank must be >= 1");
  if (shape.size() > 255)
    throw std::invalid_argument("ComplexTensor: rank exceeds 255");
  std::size_t vol = 1;
  for (std::size_t d : shape) {
    if (d == 0)
      throw std::invalid_argument("ComplexTensor: zero-length axis");
    if (d > std::numeric_limits<std::uint32_t>::max() ||
        vol > std::numeric_limits<std::size_t>::max() / d)
      throw std::invalid_argument("ComplexTensor: shape too large");
    vol *= d;
  }
  return vol;
}

void check_same_shape(const ComplexTensor& a, const ComplexTensor& b,
                      const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void check_axis(const ComplexTensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank())
    throw std::invalid_argument(std::string(op) + ": axis out of range");
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_volume(shape_)) {}

std::size_t ComplexTensor::offset(
    std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size())
    throw std::invalid_argument("ComplexTensor::offset: rank mismatch");
  std::size_t off = 0, d = 0;
  for (std::size_t i : idx) {
    if (i >= shape_[d])
      throw std::out_of_range("ComplexTensor::offset: index out of range");
    off = off * shape_[d] + i;
    ++d;
  }
  return off;
}

ComplexTensor dft_axis(const ComplexTensor& t, std::size_t axis,
                       DftDirection dir) {
  check_axis(t, axis, "dft_axis");
  ComplexTensor out = t;
  const std::size_t n = t.shape()[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= t.shape()[a];
  for (std::size_t a = axis + 1; a < t.rank(); ++a) inner *= t.shape()[a];

  const bool inverse = dir == DftDirection::inverse;
  std::vector<std::complex<double>> lane(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      cfloat* base = out.data() + o * n * inner + i;
      for (std::size_t j = 0; j < n; ++j) {
        const cfloat v = base[j * inner];
        lane[j] = std::complex<double>(v.real(), v.imag());
      }
      fft::dft(lane.data(), n, inverse);
      for (std::size_t j = 0; j < n; ++j)
        base[j * inner] =
            cfloat(float(lane[j].real()), float(lane[j].imag()));
    }
  }
  return out;
}

ComplexTensor circular_shift(const ComplexTensor& t, std::size_t axis,
                             std::ptrdiff_t shift) {
  check_axis(t, axis, "circular_shift");
  const std::ptrdiff_t n = std::ptrdiff_t(t.shape()[axis]);
  std::ptrdiff_t s = shift % n;
  if (s < 0) s += n;
  if (s == 0) return t;

  ComplexTensor out(t.shape());
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= t.shape()[a];
  for (std::size_t a = axis + 1; a < t.rank(); ++a) inner *= t.shape()[a];
  // element at index j moves to (j + s) mod n along the axis
  for (std::size_t o = 0; o < outer; ++o) {
    const cfloat* src = t.data() + o * std::size_t(n) * inner;
    cfloat* dst = out.data() + o * std::size_t(n) * inner;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const std::ptrdiff_t jd = (j + s) % n;
      std::memcpy(dst + std::size_t(jd) * inner, src + std::size_t(j) * inner,
                  inner * sizeof(cfloat));
    }
  }
  return out;
}

ComplexTensor fftshift_axis(const ComplexTensor& t, std::size_t axis) {
  check_axis(t, axis, "fftshift_axis");
  return circular_shift(t, axis, std::ptrdiff_t(t.shape()[axis] / 2));
}

ComplexTensor ifftshift_axis(const ComplexTensor& t, std::size_t axis) {
  check_axis(t, axis, "ifftshift_axis");
  const std::size_t n = t.shape()[axis];
  return circular_shift(t, axis, std::ptrdiff_t(n - n / 2));
}

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b) {
  check_same_shape(a, b, "add");
  ComplexTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b) {
  check_same_shape(a, b, "sub");
  ComplexTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

ComplexTensor scaled(const ComplexTensor& t, cfloat factor) {
  ComplexTensor out = t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cfloat v = out[i];
    out[i] = cfloat(factor.real() * v.real() - factor.imag() * v.imag(),
                    factor.real() * v.imag() + factor.imag() * v.real());
  }
  return out;
}

void add_scaled_inplace(ComplexTensor& dst, const ComplexTensor& src,
                        cfloat factor) {
  check_same_shape(dst, src, "add_scaled_inplace");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const cfloat v = src[i];
    dst[i] += cfloat(factor.real() * v.real() - factor.imag() * v.imag(),
                     factor.real() * v.imag() + factor.imag() * v.real());
  }
}

double power_sum(const ComplexTensor& t) {
  return kernels::active_kernels().magsq_sum(t.data(), t.size());
}

double max_abs(const ComplexTensor& t) {
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double m = std::hypot(double(t[i].real()), double(t[i].imag()));
    if (m > best) best = m;
  }
  return best;
}

void save_crt1(const ComplexTensor& t, std::ostream& out) {
  out.write("CRT1", 4);
  const std::uint8_t rank = std::uint8_t(t.rank());
  out.write(reinterpret_cast<const char*>(&rank), 1);
  for (std::size_t d : t.shape()) {
    const std::uint32_t dim = std::uint32_t(d);
    out.write(reinterpret_cast<const char*>(&dim), 4);
  }
  out.write(reinterpret_cast<const char*>(t.data()),
            std::streamsize(t.size() * sizeof(cfloat)));
  if (!out) throw std::runtime_error("save_crt1: write failed");
}

void save_crt1(const ComplexTensor& t, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_crt1: cannot open " + path.string());
  try {
    save_crt1(t, f);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("save_crt1: write failed " + path.string());
  }
}

ComplexTensor load_crt1(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CRT1", 4) != 0)
    throw std::runtime_error("load_crt1: bad magic");
  std::uint8_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), 1);
  if (!in || rank == 0) throw std::runtime_error("load_crt1: bad rank");
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) {
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    if (!in || dim == 0) throw std::runtime_error("load_crt1: bad dims");
    d = dim;
  }
  ComplexTensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()),
          std::streamsize(t.size() * sizeof(cfloat)));
  if (!in || std::size_t(in.gcount()) != t.size() * sizeof(cfloat))
    throw std::runtime_error("load_crt1: truncated payload");
  return t;
}

ComplexTensor load_crt1(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_crt1: cannot open " + path.string());
  try {
    return load_crt1(f);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " in " + path.string());
  }
}

}  // namespace radarim
