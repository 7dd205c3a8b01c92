#pragma once

// Small rank-2 value containers shared by the detection and mitigation code:
// a real-valued power map (CFAR input) and a boolean mask.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace radarim {

struct RealMap {
  std::size_t rows = 0, cols = 0;
  std::vector<float> v;

  RealMap() = default;
  RealMap(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0f) {}
  float& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

struct BoolMap {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> v;

  BoolMap() = default;
  BoolMap(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0) {}
  std::uint8_t& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const {
    return v[r * cols + c];
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto x : v) n += (x != 0);
    return n;
  }
};

}  // namespace radarim
