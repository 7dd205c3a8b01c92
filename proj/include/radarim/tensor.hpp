#pragma once

// Dense row-major complex tensor (float32 storage) plus the axis operations
// the processing chain is built from: DFT along an axis, circular shifts,
// fftshift, elementwise arithmetic, and the CRT1 file format.
//
// DFT convention: forward is unnormalized, inverse carries the 1/N factor.
// Arithmetic inside the transform runs in double precision; only the stored
// values are float32.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <vector>

namespace radarim {

using cfloat = std::complex<float>;

enum class DftDirection { forward, inverse };

class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(std::vector<std::size_t> shape);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }  // complex elements

  cfloat* data() { return data_.data(); }
  const cfloat* data() const { return data_.data(); }
  cfloat& operator[](std::size_t i) { return data_[i]; }
  const cfloat& operator[](std::size_t i) const { return data_[i]; }

  // Multi-index access for glue code and tests (not used in hot loops).
  std::size_t offset(std::initializer_list<std::size_t> idx) const;
  cfloat& at(std::initializer_list<std::size_t> idx) {
    return data_[offset(idx)];
  }
  const cfloat& at(std::initializer_list<std::size_t> idx) const {
    return data_[offset(idx)];
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<cfloat> data_;
};

ComplexTensor dft_axis(const ComplexTensor& t, std::size_t axis,
                       DftDirection dir);
ComplexTensor circular_shift(const ComplexTensor& t, std::size_t axis,
                             std::ptrdiff_t shift);
ComplexTensor fftshift_axis(const ComplexTensor& t, std::size_t axis);
ComplexTensor ifftshift_axis(const ComplexTensor& t, std::size_t axis);

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor scaled(const ComplexTensor& t, cfloat factor);
void add_scaled_inplace(ComplexTensor& dst, const ComplexTensor& src,
                        cfloat factor);

double power_sum(const ComplexTensor& t);  // sum of |v|^2
double max_abs(const ComplexTensor& t);    // max of |v|

// CRT1 container: magic "CRT1", u8 rank, rank x u32 little-endian dims,
// row-major interleaved (re, im) float32 payload. Round-trips bit-exactly.
// The stream overloads read/write one record in place; checkpoint files
// embed CRT1 records this way.
void save_crt1(const ComplexTensor& t, const std::filesystem::path& path);
void save_crt1(const ComplexTensor& t, std::ostream& out);
ComplexTensor load_crt1(const std::filesystem::path& path);
ComplexTensor load_crt1(std::istream& in);

}  // namespace radarim
