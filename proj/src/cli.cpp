#include "radarim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "radarim/checkpoint.hpp"
#include "radarim/dataset.hpp"
#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"
#include "radarim/mitigate.hpp"
#include "radarim/parallel.hpp"
#include "radarim/render.hpp"

namespace radarim {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kMethodOrder = {
    "ccnn3d-l", "ccnn3d-m", "ccnn3d-s", "ccnn3d-xs", "ccnn2d",
    "zeroing",  "ramp",     "imat",     "none"};

bool is_nn_method(const std::string& method) {
  return method.rfind("ccnn", 0) == 0;
}

ModelSpec ModelSection::resolve() const {
  if (explicit_spec) {
    explicit_spec->validate();
    return *explicit_spec;
  }
  return ModelSpec::named(name);
}

namespace {

void reject_unknown_keys(const json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& section) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw UsageError("config: unknown key '" + item.key() + "' in " +
                       section);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& dst) {
  if (const auto it = j.find(key); it != j.end()) dst = it->get<T>();
}

Padding padding_from_string(const std::string& s) {
  if (s == "zero") return Padding::zero;
  if (s == "circular") return Padding::circular;
  throw UsageError("config: padding must be 'zero' or 'circular', got '" +
                   s + "'");
}

void parse_radar(const json& j, RadarConfig& cfg) {
  reject_unknown_keys(j,
                      {"n_range", "n_doppler", "n_antennas", "carrier_freq",
                       "bandwidth", "sweep_duration", "sample_rate",
                       "antenna_spacing", "noise_floor_db"},
                      "radar");
  read_if(j, "n_range", cfg.n_range);
  read_if(j, "n_doppler", cfg.n_doppler);
  read_if(j, "n_antennas", cfg.n_antennas);
  read_if(j, "carrier_freq", cfg.carrier_freq);
  read_if(j, "bandwidth", cfg.bandwidth);
  read_if(j, "sweep_duration", cfg.sweep_duration);
  read_if(j, "sample_rate", cfg.sample_rate);
  read_if(j, "antenna_spacing", cfg.antenna_spacing);
  read_if(j, "noise_floor_db", cfg.noise_floor_db);
}

void parse_dataset(const json& j, DatasetSection& ds) {
  reject_unknown_keys(
      j, {"n_train", "n_val", "n_test", "seed", "fixed_aoa"}, "dataset");
  read_if(j, "n_train", ds.n_train);
  read_if(j, "n_val", ds.n_val);
  read_if(j, "n_test", ds.n_test);
  read_if(j, "seed", ds.seed);
  if (const auto it = j.find("fixed_aoa"); it != j.end() && !it->is_null()) {
    ds.fixed_aoa_deg = it->get<double>();
  }
}

void parse_model(const json& j, ModelSection& ms) {
  reject_unknown_keys(
      j, {"name", "rank3", "in_channels", "channels", "kernel", "padding"},
      "model");
  const bool has_name = j.contains("name");
  const bool has_explicit = j.contains("channels") || j.contains("rank3") ||
                            j.contains("in_channels") ||
                            j.contains("kernel") || j.contains("padding");
  if (has_name && has_explicit) {
    throw UsageError(
        "config: model must give either a name or explicit fields, not "
        "both");
  }
  if (has_name) {
    ms.name = j.at("name").get<std::string>();
    ms.explicit_spec.reset();
    return;
  }
  if (!has_explicit) return;
  if (!j.contains("channels")) {
    throw UsageError("config: explicit model needs a channels list");
  }
  ModelSpec spec;
  read_if(j, "rank3", spec.rank3);
  read_if(j, "in_channels", spec.in_channels);
  spec.channels = j.at("channels").get<std::vector<std::size_t>>();
  if (const auto it = j.find("kernel"); it != j.end()) {
    const auto k = it->get<std::vector<std::size_t>>();
    if (k.size() != 3) {
      throw UsageError("config: model kernel needs 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) spec.kernel[i] = k[i];
  }
  if (const auto it = j.find("padding"); it != j.end()) {
    const auto p = it->get<std::vector<std::string>>();
    if (p.size() != 3) {
      throw UsageError("config: model padding needs 3 entries");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      spec.padding[i] = padding_from_string(p[i]);
    }
  }
  spec.validate();
  ms.explicit_spec = spec;
  ms.name.clear();
}

void parse_train(const json& j, TrainConfig& tc) {
  reject_unknown_keys(j,
                      {"batch_size", "max_epochs", "lr0", "lr_decay",
                       "early_stop_patience", "seed", "deterministic"},
                      "train");
  read_if(j, "batch_size", tc.batch_size);
  read_if(j, "max_epochs", tc.max_epochs);
  read_if(j, "lr0", tc.lr0);
  read_if(j, "lr_decay", tc.lr_decay);
  read_if(j, "early_stop_patience", tc.early_stop_patience);
  read_if(j, "seed", tc.seed);
  read_if(j, "deterministic", tc.deterministic);
}

void parse_cfar(const json& j, CfarConfig& cc) {
  reject_unknown_keys(j, {"guard_cells", "train_cells", "pfa"}, "cfar");
  read_if(j, "guard_cells", cc.guard_cells);
  read_if(j, "train_cells", cc.train_cells);
  read_if(j, "pfa", cc.pfa);
}

void validate_methods(const std::vector<std::string>& methods) {
  for (const std::string& m : methods) {
    if (std::find(kMethodOrder.begin(), kMethodOrder.end(), m) ==
        kMethodOrder.end()) {
      throw UsageError("config: unknown method '" + m + "'");
    }
  }
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config: " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw UsageError("config: " + path + ": top level must be an object");
  }

  ExperimentConfig cfg;
  try {
    reject_unknown_keys(
        doc, {"radar", "dataset", "model", "train", "cfar", "methods"},
        "top level");
    if (doc.contains("radar")) parse_radar(doc.at("radar"), cfg.radar);
    if (doc.contains("dataset")) parse_dataset(doc.at("dataset"), cfg.dataset);
    if (doc.contains("model")) parse_model(doc.at("model"), cfg.model);
    if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
    if (doc.contains("cfar")) parse_cfar(doc.at("cfar"), cfg.cfar);
    if (doc.contains("methods")) {
      cfg.methods = doc.at("methods").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw UsageError("config: " + path + ": " + e.what());
  }
  validate_methods(cfg.methods);
  cfg.radar.validate();
  cfg.train.validate();
  return cfg;
}

namespace {

struct PerSampleRow {
  std::string method;
  std::string id;
  double f1 = 0.0;
  double evm = 0.0;
  double ppmse = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct AggregateRow {
  std::string method;
  double f1 = 0.0;
  double evm = 0.0;
  double ppmse = 0.0;
};

PerSampleRow evaluate_one(const std::string& method, const Checkpoint* ckp,
                          ModelParams* nn_params, const Manifest& manifest,
                          const SampleRecord& rec, const CfarConfig& cfar) {
  const ComplexTensor interfered =
      load_crt1(manifest.resolve(rec.interfered_path));
  const ComplexTensor clean = load_crt1(manifest.resolve(rec.clean_path));

  ComplexTensor mitigated;
  bool is_rda = true;
  if (method == "none") {
    mitigated = interfered;
  } else if (!is_nn_method(method)) {
    const ComplexTensor cube = cube_from_rda(interfered);
    const BoolMap mask = detect_interference(cube);
    ComplexTensor out_cube;
    if (method == "zeroing") {
      out_cube = zeroing(cube, mask);
    } else if (method == "ramp") {
      out_cube = ramp_filter(cube);
    } else if (method == "imat") {
      out_cube = imat(cube, mask).cube;
    } else {
      throw UsageError("evaluate: unknown method '" + method + "'");
    }
    mitigated = time_to_rd(out_cube, Window::none);
    is_rda = false;
  } else {
    const ModelSpec& spec = ckp->spec;
    ComplexTensor item = to_model_domain(interfered, spec.rank3);
    item = scaled(item, {float(1.0 / ckp->normalizer), 0.0f});
    ComplexTensor x({1, item.shape()[0], item.shape()[1], item.shape()[2],
                     item.shape()[3]});
    std::memcpy(x.data(), item.data(), item.size() * sizeof(cfloat));
    const ComplexTensor y = model_forward(spec, *nn_params, x, false);
    ComplexTensor out_item({y.shape()[1], y.shape()[2], y.shape()[3],
                            y.shape()[4]});
    std::memcpy(out_item.data(), y.data(), y.size() * sizeof(cfloat));
    out_item = scaled(out_item, {float(ckp->normalizer), 0.0f});
    mitigated = from_model_domain(out_item, spec.rank3);
    is_rda = spec.rank3;
  }

  const DetectionReport rep =
      evaluate_sample(mitigated, is_rda, clean, rec.peaks, cfar);
  return {method,    rec.id,    rep.f1, rep.evm,
          rep.ppmse, rep.n_tp, rep.n_fp, rep.n_fn};
}

void evaluate_split(const std::vector<std::string>& methods,
                    const std::map<std::string, Checkpoint>& ckps,
                    const Manifest& manifest, const CfarConfig& cfar,
                    std::vector<PerSampleRow>& per_sample,
                    std::vector<AggregateRow>& aggregate) {
  const std::vector<SampleRecord>& records = manifest.test;
  if (records.empty()) throw DataError("evaluate: empty test split");

  for (const std::string& method : methods) {
    const Checkpoint* ckp = nullptr;
    ModelParams nn_params;
    if (is_nn_method(method)) {
      ckp = &ckps.at(method);
      nn_params = ckp->best;
    }
    std::vector<PerSampleRow> rows(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
      rows[i] = evaluate_one(method, ckp, &nn_params, manifest, records[i],
                             cfar);
    });
    AggregateRow agg{method, 0.0, 0.0, 0.0};
    for (const PerSampleRow& row : rows) {
      agg.f1 += row.f1;
      agg.evm += row.evm;
      agg.ppmse += row.ppmse;
    }
    agg.f1 /= double(rows.size());
    agg.evm /= double(rows.size());
    agg.ppmse /= double(rows.size());
    aggregate.push_back(agg);
    per_sample.insert(per_sample.end(), rows.begin(), rows.end());
  }
}

std::string results_csv(const std::vector<AggregateRow>& rows) {
  std::string text = "method,f1,evm,ppmse\n";
  char line[160];
  for (const AggregateRow& row : rows) {
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f\n",
                  row.method.c_str(), row.f1, row.evm, row.ppmse);
    text += line;
  }
  return text;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for write");
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

void write_per_sample_json(const std::string& path,
                           const std::vector<PerSampleRow>& rows) {
  json arr = json::array();
  for (const PerSampleRow& row : rows) {
    arr.push_back(json{{"method", row.method},
                       {"id", row.id},
                       {"f1", row.f1},
                       {"evm", row.evm},
                       {"ppmse", row.ppmse},
                       {"tp", row.tp},
                       {"fp", row.fp},
                       {"fn", row.fn}});
  }
  write_text(path, arr.dump(2) + "\n");
}

// --- subcommand argument bundles ---

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> fixed_aoa;
  bool deterministic = false;
  std::string out;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = load_experiment_config(args.config_path);
  }
  if (args.seed) {
    cfg.dataset.seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  if (args.fixed_aoa) cfg.dataset.fixed_aoa_deg = args.fixed_aoa;
  if (args.deterministic) cfg.train.deterministic = true;
  return cfg;
}

int cmd_generate(const CommonArgs& args, bool overwrite) {
  const ExperimentConfig cfg = resolve_config(args);
  DatasetOptions opts;
  opts.n_train = cfg.dataset.n_train;
  opts.n_val = cfg.dataset.n_val;
  opts.n_test = cfg.dataset.n_test;
  opts.seed = cfg.dataset.seed;
  opts.fixed_aoa_deg = cfg.dataset.fixed_aoa_deg;
  opts.overwrite = overwrite;
  opts.truth_cfar = cfg.cfar;
  const Manifest manifest = generate_dataset(opts, cfg.radar, args.out);
  std::cout << "manifest: " << (fs::path(args.out) / "manifest.json").string()
            << "\nsplits: train=" << manifest.train.size()
            << " val=" << manifest.val.size()
            << " test=" << manifest.test.size() << '\n';
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& manifest_path,
              const std::string& model_override, bool resume) {
  ExperimentConfig cfg = resolve_config(args);
  if (!model_override.empty()) {
    cfg.model.name = model_override;
    cfg.model.explicit_spec.reset();
  }
  const ModelSpec spec = cfg.model.resolve();
  const std::string model_name =
      cfg.model.explicit_spec ? std::string() : cfg.model.name;
  const Manifest manifest = load_manifest(manifest_path);

  Checkpoint prev;
  const Checkpoint* resume_from = nullptr;
  if (resume) {
    prev = load_checkpoint(args.out);
    resume_from = &prev;
  }

  std::cout << "epoch,lr,train_mse,val_mse\n";
  const auto on_epoch = [](const HistoryRow& row) {
    char line[160];
    std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g\n", row.epoch,
                  row.lr, row.train_mse, row.val_mse);
    std::cout << line << std::flush;
  };
  const Checkpoint ckp = train_model(spec, model_name, manifest, cfg.train,
                                     on_epoch, resume_from);
  save_checkpoint(ckp, args.out);
  char tail[160];
  std::snprintf(tail, sizeof(tail),
                "checkpoint: %s (best epoch %zu, val_mse %.10g)\n",
                args.out.c_str(), ckp.best_epoch, ckp.best_val_mse);
  std::cout << tail;
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& manifest_path,
                 const std::vector<std::string>& checkpoint_paths,
                 const std::string& cross_manifest_path) {
  const ExperimentConfig cfg = resolve_config(args);

  std::map<std::string, Checkpoint> ckps;
  for (const std::string& path : checkpoint_paths) {
    Checkpoint ckp = load_checkpoint(path);
    if (ckp.model_name.empty()) {
      throw DataError("evaluate: checkpoint " + path +
                      " carries no model name");
    }
    const std::string name = ckp.model_name;
    if (!ckps.emplace(name, std::move(ckp)).second) {
      throw UsageError("evaluate: duplicate checkpoint for model '" + name +
                       "'");
    }
  }

  // Canonical report order, restricted to the requested methods.
  std::vector<std::string> methods;
  for (const std::string& m : kMethodOrder) {
    if (std::find(cfg.methods.begin(), cfg.methods.end(), m) !=
        cfg.methods.end()) {
      methods.push_back(m);
    }
  }
  for (const std::string& m : methods) {
    if (is_nn_method(m) && ckps.find(m) == ckps.end()) {
      throw DataError("evaluate: no checkpoint supplied for method '" + m +
                      "'");
    }
  }

  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) {
    throw DataError("evaluate: cannot create " + args.out + ": " +
                    ec.message());
  }

  const Manifest manifest = load_manifest(manifest_path);
  std::vector<PerSampleRow> per_sample;
  std::vector<AggregateRow> aggregate;
  evaluate_split(methods, ckps, manifest, cfg.cfar, per_sample, aggregate);
  const std::string csv = results_csv(aggregate);
  write_text((fs::path(args.out) / "results.csv").string(), csv);
  write_per_sample_json((fs::path(args.out) / "per_sample.json").string(),
                        per_sample);
  std::cout << csv;

  if (!cross_manifest_path.empty()) {
    const Manifest cross = load_manifest(cross_manifest_path);
    std::vector<PerSampleRow> cross_rows;
    std::vector<AggregateRow> cross_agg;
    evaluate_split(methods, ckps, cross, cfg.cfar, cross_rows, cross_agg);
    const std::string cross_csv = results_csv(cross_agg);
    write_text((fs::path(args.out) / "results_cross.csv").string(),
               cross_csv);
    write_per_sample_json(
        (fs::path(args.out) / "per_sample_cross.json").string(), cross_rows);
    std::cout << "cross-test:\n" << cross_csv;
  }
  return 0;
}

int cmd_render(const CommonArgs& args, const std::string& manifest_path,
               const std::string& sample_id, const std::string& which,
               std::size_t upsample) {
  if (which != "interfered" && which != "clean") {
    throw UsageError("render: --which must be 'interfered' or 'clean'");
  }
  const Manifest manifest = load_manifest(manifest_path);
  const SampleRecord* rec = nullptr;
  for (const auto* split : {&manifest.train, &manifest.val, &manifest.test}) {
    for (const SampleRecord& r : *split) {
      if (r.id == sample_id) {
        rec = &r;
        break;
      }
    }
    if (rec) break;
  }
  if (!rec) {
    throw DataError("render: no sample '" + sample_id + "' in manifest");
  }

  std::error_code ec;
  fs::create_directories(args.out, ec);
  if (ec) {
    throw DataError("render: cannot create " + args.out + ": " +
                    ec.message());
  }
  const ComplexTensor rda = load_crt1(manifest.resolve(
      which == "clean" ? rec->clean_path : rec->interfered_path));
  const RealMap db = power_to_db(range_angle_power(rda, upsample));
  const std::string base =
      (fs::path(args.out) / (sample_id + "." + which)).string();
  write_pgm(db, kRenderFloorDb, base + ".pgm");
  write_text(base + ".txt", ascii_preview(db, kRenderFloorDb));
  std::cout << base << ".pgm\n" << base << ".txt\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    CLI::App app{"FMCW radar interference mitigation toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, render_args;
    bool gen_overwrite = false;
    std::string train_manifest, train_model_name;
    bool train_resume = false;
    std::string eval_manifest, eval_cross_manifest;
    std::vector<std::string> eval_checkpoints;
    std::string render_manifest, render_sample;
    std::string render_which = "clean";
    std::size_t render_upsample = 8;

    auto add_common = [](CLI::App* cmd, CommonArgs& args, bool with_out) {
      cmd->add_option("--config", args.config_path,
                      "experiment config JSON");
      cmd->add_option("--seed", args.seed, "override dataset/train seed");
      cmd->add_flag("--deterministic", args.deterministic,
                    "bit-reproducible mode");
      if (with_out) {
        cmd->add_option("--out", args.out, "output path")->required();
      }
    };

    CLI::App* gen = app.add_subcommand("generate",
                                       "synthesize a dataset + manifest");
    add_common(gen, gen_args, true);
    gen->add_option("--fixed-aoa", gen_args.fixed_aoa,
                    "pin every interferer AoA to this angle (deg)");
    gen->add_flag("--overwrite", gen_overwrite,
                  "replace an existing dataset directory");

    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common(train, train_args, true);
    train->add_option("--manifest", train_manifest, "dataset manifest")
        ->required();
    train->add_option("--model", train_model_name,
                      "model name override (e.g. ccnn3d-s)");
    train->add_flag("--resume", train_resume,
                    "continue from the checkpoint at --out");

    CLI::App* eval = app.add_subcommand("evaluate",
                                        "run methods over the test split");
    add_common(eval, eval_args, true);
    eval->add_option("--manifest", eval_manifest, "dataset manifest")
        ->required();
    eval->add_option("--checkpoint", eval_checkpoints,
                     "trained checkpoint (repeatable)");
    eval->add_option("--cross-manifest", eval_cross_manifest,
                     "second manifest for a cross-test report");

    CLI::App* render = app.add_subcommand("render",
                                          "write range-angle map images");
    add_common(render, render_args, true);
    render->add_option("--manifest", render_manifest, "dataset manifest")
        ->required();
    render->add_option("--sample", render_sample, "sample id")->required();
    render->add_option("--which", render_which,
                       "'clean' or 'interfered' tensor");
    render->add_option("--upsample", render_upsample,
                       "angle display up-sampling factor");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 1;
    }

    if (gen->parsed()) return cmd_generate(gen_args, gen_overwrite);
    if (train->parsed()) {
      return cmd_train(train_args, train_manifest, train_model_name,
                       train_resume);
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_args, eval_manifest, eval_checkpoints,
                          eval_cross_manifest);
    }
    if (render->parsed()) {
      return cmd_render(render_args, render_manifest, render_sample,
                        render_which, render_upsample);
    }
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace radarim
