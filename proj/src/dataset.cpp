#include "radarim/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"
#include "radarim/rng.hpp"

namespace radarim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "radarim-manifest";
constexpr const char* kGeneratorVersion = "1";

// Stream-id layout per sample: a block of 256 ids, subdivided into blocks
// of 8 per retry attempt (scene, noise, interferers, spare).
constexpr std::uint64_t kStreamsPerSample = 256;
constexpr std::uint64_t kStreamsPerAttempt = 8;
constexpr int kMaxAttempts = 32;

json radar_to_json(const RadarConfig& cfg) {
  return json{{"n_range", cfg.n_range},
              {"n_doppler", cfg.n_doppler},
              {"n_antennas", cfg.n_antennas},
              {"carrier_freq", cfg.carrier_freq},
              {"bandwidth", cfg.bandwidth},
              {"sweep_duration", cfg.sweep_duration},
              {"sample_rate", cfg.sample_rate},
              {"antenna_spacing", cfg.antenna_spacing},
              {"noise_floor_db", cfg.noise_floor_db}};
}

RadarConfig radar_from_json(const json& j) {
  RadarConfig cfg;
  cfg.n_range = j.at("n_range").get<std::size_t>();
  cfg.n_doppler = j.at("n_doppler").get<std::size_t>();
  cfg.n_antennas = j.at("n_antennas").get<std::size_t>();
  cfg.carrier_freq = j.at("carrier_freq").get<double>();
  cfg.bandwidth = j.at("bandwidth").get<double>();
  cfg.sweep_duration = j.at("sweep_duration").get<double>();
  cfg.sample_rate = j.at("sample_rate").get<double>();
  cfg.antenna_spacing = j.at("antenna_spacing").get<double>();
  cfg.noise_floor_db = j.at("noise_floor_db").get<double>();
  return cfg;
}

json cfar_to_json(const CfarConfig& cfg) {
  return json{{"guard_cells", cfg.guard_cells},
              {"train_cells", cfg.train_cells},
              {"pfa", cfg.pfa}};
}

CfarConfig cfar_from_json(const json& j) {
  CfarConfig cfg;
  cfg.guard_cells = j.at("guard_cells").get<std::size_t>();
  cfg.train_cells = j.at("train_cells").get<std::size_t>();
  cfg.pfa = j.at("pfa").get<double>();
  return cfg;
}

json record_to_json(const SampleRecord& rec) {
  json peaks = json::array();
  for (const Peak& p : rec.peaks) peaks.push_back(json::array({p.r, p.d}));
  json interferers = json::array();
  for (const InterfererConfig& ic : rec.interferers) {
    interferers.push_back(json{{"sweep_duration", ic.sweep_duration},
                               {"bandwidth", ic.bandwidth},
                               {"start_freq", ic.start_freq},
                               {"aoa_deg", ic.aoa_deg},
                               {"n_sweeps", ic.n_sweeps},
                               {"snir_db", ic.snir_db},
                               {"time_offset", ic.time_offset},
                               {"chirp_slope_sign", ic.chirp_slope_sign}});
  }
  json objects = json::array();
  for (const ObjectParams& o : rec.scene.objects) {
    objects.push_back(json{{"range_m", o.range_m},
                           {"velocity_mps", o.velocity_mps},
                           {"azimuth_deg", o.azimuth_deg},
                           {"amplitude", o.amplitude}});
  }
  return json{{"id", rec.id},
              {"interfered_path", rec.interfered_path},
              {"clean_path", rec.clean_path},
              {"peaks", std::move(peaks)},
              {"interferers", std::move(interferers)},
              {"scene", json{{"objects", std::move(objects)}}},
              {"seed", rec.seed}};
}

SampleRecord record_from_json(const json& j) {
  SampleRecord rec;
  rec.id = j.at("id").get<std::string>();
  rec.interfered_path = j.at("interfered_path").get<std::string>();
  rec.clean_path = j.at("clean_path").get<std::string>();
  for (const json& p : j.at("peaks")) {
    rec.peaks.push_back({p.at(0).get<std::size_t>(),
                         p.at(1).get<std::size_t>()});
  }
  for (const json& ji : j.at("interferers")) {
    InterfererConfig ic;
    ic.sweep_duration = ji.at("sweep_duration").get<double>();
    ic.bandwidth = ji.at("bandwidth").get<double>();
    ic.start_freq = ji.at("start_freq").get<double>();
    ic.aoa_deg = ji.at("aoa_deg").get<double>();
    ic.n_sweeps = ji.at("n_sweeps").get<int>();
    ic.snir_db = ji.at("snir_db").get<double>();
    ic.time_offset = ji.at("time_offset").get<double>();
    ic.chirp_slope_sign = ji.at("chirp_slope_sign").get<int>();
    rec.interferers.push_back(ic);
  }
  for (const json& jo : j.at("scene").at("objects")) {
    ObjectParams o;
    o.range_m = jo.at("range_m").get<double>();
    o.velocity_mps = jo.at("velocity_mps").get<double>();
    o.azimuth_deg = jo.at("azimuth_deg").get<double>();
    o.amplitude = jo.at("amplitude").get<double>();
    rec.scene.objects.push_back(o);
  }
  rec.seed = j.at("seed").get<std::uint64_t>();
  return rec;
}

struct BuiltSample {
  SampleRecord record;
  ComplexTensor interfered_rda;
  ComplexTensor clean_rda;
};

BuiltSample build_sample(const DatasetOptions& options,
                         const RadarConfig& cfg, const std::string& split,
                         std::size_t index_in_split,
                         std::size_t global_index) {
  const double cells = double(cfg.n_range * cfg.n_doppler);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t base =
        std::uint64_t(global_index) * kStreamsPerSample +
        std::uint64_t(attempt) * kStreamsPerAttempt;

    Rng scene_rng = Rng::stream(options.seed, base + 0);
    const Scene scene = sample_scene(scene_rng, cfg);
    Rng noise_rng = Rng::stream(options.seed, base + 1);
    const ComplexTensor clean = synthesize_clean(scene, cfg, noise_rng);

    Rng itf_rng = Rng::stream(options.seed, base + 2);
    std::vector<InterfererConfig> ics = sample_interferers(itf_rng, cfg);
    if (options.fixed_aoa_deg) {
      // Pin the AoA after drawing, so the remaining parameters match the
      // unpinned dataset generated from the same seed.
      for (InterfererConfig& ic : ics) ic.aoa_deg = *options.fixed_aoa_deg;
    }
    const double ref_power = power_sum(clean) / double(clean.size());
    const InterferenceResult itf =
        synthesize_interference(ics, cfg, ref_power);

    // Redraw when bursts swamp the frame: such samples carry almost no
    // clean signal to recover and CFAR truth becomes meaningless.
    if (double(itf.mask.count()) >= 0.5 * cells) continue;

    const ComplexTensor clean_rd = time_to_rd(clean, Window::none);
    const DetectionMaps truth = run_detection(clean_rd, options.truth_cfar);
    if (truth.peaks.empty()) continue;  // all objects below the detector

    BuiltSample out;
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%04zu", split.c_str(),
                  index_in_split);
    out.record.id = id;
    out.record.interfered_path = out.record.id + ".interfered.crt1";
    out.record.clean_path = out.record.id + ".clean.crt1";
    out.record.peaks = truth.peaks;
    out.record.interferers = std::move(ics);
    out.record.scene = scene;
    out.record.seed = base;
    out.clean_rda = rd_to_rda(clean_rd);
    out.interfered_rda = rda_from_cube(add(clean, itf.cube));
    return out;
  }
  throw DataError("dataset: no usable sample after " +
                  std::to_string(kMaxAttempts) + " attempts (sample " +
                  split + "/" + std::to_string(index_in_split) + ")");
}

}  // namespace

const std::vector<SampleRecord>& Manifest::split(
    const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw DataError("manifest: unknown split '" + name + "'");
}

std::string Manifest::resolve(const std::string& relative_path) const {
  if (dir.empty()) return relative_path;
  return (fs::path(dir) / relative_path).string();
}

ComplexTensor rda_from_cube(const ComplexTensor& cube) {
  return rd_to_rda(time_to_rd(cube, Window::none));
}

ComplexTensor cube_from_rda(const ComplexTensor& rda) {
  return rd_to_time(rda_to_rd(rda));
}

Manifest generate_dataset(const DatasetOptions& options,
                          const RadarConfig& cfg,
                          const std::string& out_dir) {
  cfg.validate();
  if (options.n_train == 0 || options.n_val == 0 || options.n_test == 0) {
    throw std::invalid_argument("generate_dataset: all split sizes must be "
                                "positive");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw DataError("dataset: cannot create directory " + out_dir + ": " +
                    ec.message());
  }
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  if (fs::exists(manifest_path) && !options.overwrite) {
    throw DataError("dataset: " + manifest_path.string() +
                    " already exists (pass overwrite to replace)");
  }

  Manifest manifest;
  manifest.radar = cfg;
  manifest.truth_cfar = options.truth_cfar;
  manifest.seed = options.seed;
  manifest.fixed_aoa_deg = options.fixed_aoa_deg;
  manifest.dir = out_dir;

  const struct {
    const char* name;
    std::size_t count;
    std::vector<SampleRecord>* dst;
  } splits[] = {{"train", options.n_train, &manifest.train},
                {"val", options.n_val, &manifest.val},
                {"test", options.n_test, &manifest.test}};

  std::size_t global_index = 0;
  for (const auto& sp : splits) {
    sp.dst->reserve(sp.count);
    for (std::size_t i = 0; i < sp.count; ++i, ++global_index) {
      BuiltSample built =
          build_sample(options, cfg, sp.name, i, global_index);
      save_crt1(built.interfered_rda,
                fs::path(out_dir) / built.record.interfered_path);
      save_crt1(built.clean_rda,
                fs::path(out_dir) / built.record.clean_path);
      sp.dst->push_back(std::move(built.record));
    }
  }

  save_manifest(manifest, manifest_path.string());
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  json splits;
  for (const auto& [name, records] :
       {std::pair<const char*, const std::vector<SampleRecord>*>{
            "train", &manifest.train},
        {"val", &manifest.val},
        {"test", &manifest.test}}) {
    json arr = json::array();
    for (const SampleRecord& rec : *records) arr.push_back(record_to_json(rec));
    splits[name] = std::move(arr);
  }
  json doc{{"format", kManifestFormat},
           {"generator_version", kGeneratorVersion},
           {"seed", manifest.seed},
           {"fixed_aoa_deg", manifest.fixed_aoa_deg
                                 ? json(*manifest.fixed_aoa_deg)
                                 : json(nullptr)},
           {"radar_config", radar_to_json(manifest.radar)},
           {"truth_cfar", cfar_to_json(manifest.truth_cfar)},
           {"splits", std::move(splits)}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("manifest: cannot open " + path + " for write");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("manifest: write failed for " + path);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("manifest: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest: " + path + ": " + e.what());
  }

  try {
    if (doc.at("format").get<std::string>() != kManifestFormat) {
      throw DataError("manifest: " + path + ": unrecognized format field");
    }
    if (doc.at("generator_version").get<std::string>() !=
        kGeneratorVersion) {
      throw DataError("manifest: " + path +
                      ": unsupported generator_version");
    }
    Manifest manifest;
    manifest.radar = radar_from_json(doc.at("radar_config"));
    manifest.truth_cfar = cfar_from_json(doc.at("truth_cfar"));
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    const json& aoa = doc.at("fixed_aoa_deg");
    if (!aoa.is_null()) manifest.fixed_aoa_deg = aoa.get<double>();
    const json& splits = doc.at("splits");
    for (const json& rec : splits.at("train")) {
      manifest.train.push_back(record_from_json(rec));
    }
    for (const json& rec : splits.at("val")) {
      manifest.val.push_back(record_from_json(rec));
    }
    for (const json& rec : splits.at("test")) {
      manifest.test.push_back(record_from_json(rec));
    }
    manifest.dir = fs::path(path).parent_path().string();
    return manifest;
  } catch (const json::exception& e) {
    throw DataError("manifest: " + path + ": " + e.what());
  }
}

}  // namespace radarim
