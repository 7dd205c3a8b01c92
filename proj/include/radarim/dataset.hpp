#pragma once

// Dataset generation and the JSON manifest that ties samples together.
// Every sample is a pair of CRT1 tensors (interfered and clean RDA-map,
// both unwindowed so the chain stays invertible) plus ground-truth peaks
// computed from the clean signal.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radarim/metrics.hpp"
#include "radarim/sim.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

struct SampleRecord {
  std::string id;
  std::string interfered_path;  // relative to the manifest directory
  std::string clean_path;
  std::vector<Peak> peaks;  // ground truth from the clean signal
  std::vector<InterfererConfig> interferers;
  Scene scene;
  std::uint64_t seed = 0;  // RNG stream base of the successful attempt
};

struct Manifest {
  RadarConfig radar;
  CfarConfig truth_cfar;  // detector used for the ground-truth peaks
  std::uint64_t seed = 0;
  std::optional<double> fixed_aoa_deg;  // set when AoAs were pinned
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> val;
  std::vector<SampleRecord> test;
  std::string dir;  // directory the manifest was loaded from / written to

  const std::vector<SampleRecord>& split(const std::string& name) const;
  // Joins the manifest directory with a record's relative path.
  std::string resolve(const std::string& relative_path) const;
};

struct DatasetOptions {
  std::size_t n_train = 300;
  std::size_t n_val = 50;
  std::size_t n_test = 50;
  std::uint64_t seed = 1;
  std::optional<double> fixed_aoa_deg;
  bool overwrite = false;
  CfarConfig truth_cfar{2, 8, 1e-4};  // stricter than evaluation default
};

// Converts a time-domain cube to the stored RDA representation and back.
ComplexTensor rda_from_cube(const ComplexTensor& cube);
ComplexTensor cube_from_rda(const ComplexTensor& rda);

// Generates n_train/n_val/n_test samples into out_dir and writes
// out_dir/manifest.json. Fully deterministic given options.seed; samples
// whose interference swamps the frame or whose clean signal yields no
// detectable object are redrawn from a fresh substream. Throws DataError
// on I/O problems or when out_dir already holds a manifest and overwrite
// is not set.
Manifest generate_dataset(const DatasetOptions& options,
                          const RadarConfig& cfg, const std::string& out_dir);

void save_manifest(const Manifest& manifest, const std::string& path);
Manifest load_manifest(const std::string& path);

}  // namespace radarim
