#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "naive_ref.hpp"
#include "radarim/dataset.hpp"
#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"

namespace {

namespace fs = std::filesystem;
using radarim::ComplexTensor;
using radarim::DatasetOptions;
using radarim::Manifest;
using radarim::RadarConfig;
using radarim::Rng;

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DatasetOptions small_options(std::uint64_t seed = 9001) {
  DatasetOptions opt;
  opt.n_train = 3;
  opt.n_val = 1;
  opt.n_test = 1;
  opt.seed = seed;
  return opt;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cube/RDA conversion is the unwindowed transform chain") {
  ComplexTensor cube({16, 12, 8});
  Rng rng(3);
  testref::fill_random(cube, rng);

  const ComplexTensor rda = radarim::rda_from_cube(cube);
  const ComplexTensor expect =
      radarim::rd_to_rda(radarim::time_to_rd(cube, radarim::Window::none));
  REQUIRE(rda.shape() == expect.shape());
  for (std::size_t i = 0; i < rda.size(); ++i) CHECK(rda[i] == expect[i]);

  const ComplexTensor back = radarim::cube_from_rda(rda);
  REQUIRE(back.shape() == cube.shape());
  CHECK(testref::rel_l2(back, cube) < 1e-6);
}

TEST_CASE("generated datasets have complete, in-range records") {
  TempDir dir("radarim_test_dataset_gen");
  const RadarConfig radar;
  const Manifest m =
      radarim::generate_dataset(small_options(), radar, dir.path.string());

  CHECK(m.train.size() == 3);
  CHECK(m.val.size() == 1);
  CHECK(m.test.size() == 1);
  CHECK(m.seed == 9001);
  CHECK(!m.fixed_aoa_deg.has_value());
  CHECK(fs::exists(dir.path / "manifest.json"));

  std::set<std::string> ids;
  for (const auto* split : {&m.train, &m.val, &m.test}) {
    for (const auto& rec : *split) {
      CHECK(ids.insert(rec.id).second);
      REQUIRE(fs::exists(m.resolve(rec.interfered_path)));
      REQUIRE(fs::exists(m.resolve(rec.clean_path)));

      CHECK(!rec.peaks.empty());
      REQUIRE(!rec.scene.objects.empty());
      CHECK(rec.scene.objects.size() <= 10);
      for (const auto& obj : rec.scene.objects) {
        CHECK(obj.range_m >= 2.0);
        CHECK(obj.range_m <= 0.9 * radar.max_range() + 1e-9);
        CHECK(std::abs(obj.velocity_mps) <= radar.max_velocity() + 1e-9);
        CHECK(std::abs(obj.azimuth_deg) <= 90.0);
        CHECK(obj.amplitude > 0.0);
        CHECK(obj.amplitude <= 1.0);
      }

      REQUIRE(!rec.interferers.empty());
      CHECK(rec.interferers.size() <= 3);
      for (const auto& itf : rec.interferers) {
        CHECK(itf.sweep_duration >= 12e-6);
        CHECK(itf.sweep_duration <= 24e-6);
        CHECK(itf.bandwidth >= 0.15e9);
        CHECK(itf.bandwidth <= 0.25e9);
        CHECK(itf.start_freq >= 78.9e9);
        CHECK(itf.start_freq <= 79.1e9);
        CHECK(std::abs(itf.aoa_deg) <= 90.0);
        CHECK(itf.n_sweeps >= 100);
        CHECK(itf.n_sweeps <= 156);
        CHECK(itf.snir_db >= 30.0);
        CHECK(itf.snir_db <= 50.0);
        CHECK(std::abs(itf.chirp_slope_sign) == 1);
      }

      const ComplexTensor clean =
          radarim::load_crt1(m.resolve(rec.clean_path));
      const ComplexTensor interfered =
          radarim::load_crt1(m.resolve(rec.interfered_path));
      REQUIRE(clean.shape() ==
              std::vector<std::size_t>({radar.n_range, radar.n_doppler,
                                        radar.n_antennas}));
      REQUIRE(interfered.shape() == clean.shape());
      CHECK(radarim::power_sum(clean) > 0.0);
      // Interference adds energy well above the clean frame.
      CHECK(radarim::power_sum(interfered) > radarim::power_sum(clean));

      // The stored peaks are exactly what the truth detector finds on the
      // stored clean tensor, so evaluation is reproducible from disk.
      const auto det =
          radarim::run_detection(radarim::rda_to_rd(clean), m.truth_cfar);
      CHECK(det.peaks == rec.peaks);
    }
  }
}

TEST_CASE("dataset generation is reproducible byte for byte") {
  TempDir a("radarim_test_dataset_rep_a");
  TempDir b("radarim_test_dataset_rep_b");
  const RadarConfig radar;
  const Manifest ma =
      radarim::generate_dataset(small_options(), radar, a.path.string());
  const Manifest mb =
      radarim::generate_dataset(small_options(), radar, b.path.string());

  REQUIRE(ma.train.size() == mb.train.size());
  using SplitPair = std::pair<const std::vector<radarim::SampleRecord>*,
                              const std::vector<radarim::SampleRecord>*>;
  for (const SplitPair splits : {SplitPair{&ma.train, &mb.train},
                                 SplitPair{&ma.val, &mb.val},
                                 SplitPair{&ma.test, &mb.test}}) {
    for (std::size_t i = 0; i < splits.first->size(); ++i) {
      const auto& ra = (*splits.first)[i];
      const auto& rb = (*splits.second)[i];
      CHECK(ra.id == rb.id);
      CHECK(ra.seed == rb.seed);
      CHECK(ra.peaks == rb.peaks);
      CHECK(slurp(ma.resolve(ra.interfered_path)) ==
            slurp(mb.resolve(rb.interfered_path)));
      CHECK(slurp(ma.resolve(ra.clean_path)) ==
            slurp(mb.resolve(rb.clean_path)));
    }
  }

  // Different seed, different data.
  TempDir c("radarim_test_dataset_rep_c");
  const Manifest mc = radarim::generate_dataset(small_options(1234), radar,
                                                c.path.string());
  CHECK(slurp(mc.resolve(mc.train[0].interfered_path)) !=
        slurp(ma.resolve(ma.train[0].interfered_path)));
}

TEST_CASE("generation refuses to clobber an existing dataset") {
  TempDir dir("radarim_test_dataset_clobber");
  const RadarConfig radar;
  radarim::generate_dataset(small_options(), radar, dir.path.string());
  CHECK_THROWS_AS(
      radarim::generate_dataset(small_options(), radar, dir.path.string()),
      radarim::DataError);

  DatasetOptions force = small_options(77);
  force.overwrite = true;
  const Manifest m =
      radarim::generate_dataset(force, radar, dir.path.string());
  CHECK(m.seed == 77);

  DatasetOptions empty = small_options();
  empty.n_val = 0;
  TempDir other("radarim_test_dataset_empty");
  CHECK_THROWS_AS(
      radarim::generate_dataset(empty, radar, other.path.string()),
      std::invalid_argument);
}

TEST_CASE("fixed angle-of-arrival pins every interferer") {
  TempDir dir("radarim_test_dataset_aoa");
  DatasetOptions opt = small_options(4242);
  opt.fixed_aoa_deg = 45.0;
  const Manifest m =
      radarim::generate_dataset(opt, RadarConfig(), dir.path.string());
  REQUIRE(m.fixed_aoa_deg.has_value());
  CHECK(*m.fixed_aoa_deg == 45.0);
  for (const auto* split : {&m.train, &m.val, &m.test})
    for (const auto& rec : *split)
      for (const auto& itf : rec.interferers) CHECK(itf.aoa_deg == 45.0);
}

TEST_CASE("manifests survive the JSON round trip") {
  TempDir dir("radarim_test_manifest_rt");
  const Manifest m = radarim::generate_dataset(small_options(31),
                                               RadarConfig(),
                                               dir.path.string());
  const Manifest back =
      radarim::load_manifest((dir.path / "manifest.json").string());

  CHECK(back.seed == m.seed);
  CHECK(back.radar.n_range == m.radar.n_range);
  CHECK(back.radar.carrier_freq == m.radar.carrier_freq);
  CHECK(back.truth_cfar.guard_cells == m.truth_cfar.guard_cells);
  CHECK(back.truth_cfar.train_cells == m.truth_cfar.train_cells);
  CHECK(back.truth_cfar.pfa == m.truth_cfar.pfa);
  CHECK(back.fixed_aoa_deg == m.fixed_aoa_deg);
  CHECK(back.dir == dir.path.string());

  REQUIRE(back.train.size() == m.train.size());
  for (std::size_t i = 0; i < m.train.size(); ++i) {
    const auto& orig = m.train[i];
    const auto& rt = back.train[i];
    CHECK(rt.id == orig.id);
    CHECK(rt.interfered_path == orig.interfered_path);
    CHECK(rt.clean_path == orig.clean_path);
    CHECK(rt.seed == orig.seed);
    CHECK(rt.peaks == orig.peaks);
    REQUIRE(rt.scene.objects.size() == orig.scene.objects.size());
    // Doubles are emitted with round-trip precision, so equality is exact.
    for (std::size_t k = 0; k < orig.scene.objects.size(); ++k) {
      CHECK(rt.scene.objects[k].range_m == orig.scene.objects[k].range_m);
      CHECK(rt.scene.objects[k].velocity_mps ==
            orig.scene.objects[k].velocity_mps);
      CHECK(rt.scene.objects[k].amplitude ==
            orig.scene.objects[k].amplitude);
    }
    REQUIRE(rt.interferers.size() == orig.interferers.size());
    for (std::size_t k = 0; k < orig.interferers.size(); ++k) {
      CHECK(rt.interferers[k].sweep_duration ==
            orig.interferers[k].sweep_duration);
      CHECK(rt.interferers[k].time_offset ==
            orig.interferers[k].time_offset);
      CHECK(rt.interferers[k].chirp_slope_sign ==
            orig.interferers[k].chirp_slope_sign);
    }
  }

  CHECK(&back.split("train") == &back.train);
  CHECK(&back.split("val") == &back.val);
  CHECK(&back.split("test") == &back.test);
  CHECK_THROWS_AS(back.split("dev"), radarim::DataError);

  CHECK_THROWS_AS(radarim::load_manifest(
                      (dir.path / "missing.json").string()),
                  radarim::DataError);
  const fs::path junk = dir.path / "junk.json";
  {
    std::ofstream f(junk);
    f << "{\"format\": \"something-else\"}";
  }
  CHECK_THROWS_AS(radarim::load_manifest(junk.string()), radarim::DataError);
}
