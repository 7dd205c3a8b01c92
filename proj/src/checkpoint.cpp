#include "radarim/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "radarim/errors.hpp"

namespace radarim {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "radarim-checkpoint";

std::string padding_name(Padding p) {
  return p == Padding::zero ? "zero" : "circular";
}

Padding padding_from_name(const std::string& s) {
  if (s == "zero") return Padding::zero;
  if (s == "circular") return Padding::circular;
  throw DataError("checkpoint: unknown padding '" + s + "'");
}

json spec_to_json(const ModelSpec& spec) {
  return json{{"rank3", spec.rank3},
              {"in_channels", spec.in_channels},
              {"channels", spec.channels},
              {"kernel", spec.kernel},
              {"padding",
               {padding_name(spec.padding[0]), padding_name(spec.padding[1]),
                padding_name(spec.padding[2])}}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.rank3 = j.at("rank3").get<bool>();
  spec.in_channels = j.at("in_channels").get<std::size_t>();
  spec.channels = j.at("channels").get<std::vector<std::size_t>>();
  const auto kernel = j.at("kernel").get<std::vector<std::size_t>>();
  const auto padding = j.at("padding").get<std::vector<std::string>>();
  if (kernel.size() != 3 || padding.size() != 3) {
    throw DataError("checkpoint: kernel/padding must have 3 entries");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    spec.kernel[i] = kernel[i];
    spec.padding[i] = padding_from_name(padding[i]);
  }
  spec.validate();
  return spec;
}

void write_block(std::ostream& out, const std::string& name,
                 const ComplexTensor& t) {
  const std::uint32_t len = std::uint32_t(name.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(name.data(), std::streamsize(name.size()));
  save_crt1(t, out);
}

// Packs a real vector into a rank-1 complex tensor (values in the real
// parts) so it can ride in a CRT1 block.
ComplexTensor pack_reals(const std::vector<float>& v) {
  ComplexTensor t({v.size()});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = {v[i], 0.0f};
  return t;
}

std::vector<float> unpack_reals(const ComplexTensor& t) {
  std::vector<float> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i].real();
  return v;
}

// BN parameters: [C, 2] with (c,0) = (g_rr, g_ii), (c,1) = (g_ri, 0).
// Running statistics: [C, 3] with (c,0) = mean, (c,1) = (c_rr, c_ii),
// (c,2) = (c_ri, 0).
ComplexTensor pack_bn_params(const BnParams& bn) {
  ComplexTensor t({bn.g_rr.size(), 2});
  for (std::size_t c = 0; c < bn.g_rr.size(); ++c) {
    t.at({c, 0}) = {bn.g_rr[c], bn.g_ii[c]};
    t.at({c, 1}) = {bn.g_ri[c], 0.0f};
  }
  return t;
}

void unpack_bn_params(const ComplexTensor& t, std::size_t channels,
                      BnParams& bn, const std::string& name) {
  if (t.shape() != std::vector<std::size_t>{channels, 2}) {
    throw DataError("checkpoint: block " + name + " has wrong shape");
  }
  bn.g_rr.resize(channels);
  bn.g_ii.resize(channels);
  bn.g_ri.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    bn.g_rr[c] = t.at({c, 0}).real();
    bn.g_ii[c] = t.at({c, 0}).imag();
    bn.g_ri[c] = t.at({c, 1}).real();
  }
}

ComplexTensor pack_bn_running(const BnRunning& run) {
  ComplexTensor t({run.mean.size(), 3});
  for (std::size_t c = 0; c < run.mean.size(); ++c) {
    t.at({c, 0}) = run.mean[c];
    t.at({c, 1}) = {run.c_rr[c], run.c_ii[c]};
    t.at({c, 2}) = {run.c_ri[c], 0.0f};
  }
  return t;
}

void unpack_bn_running(const ComplexTensor& t, std::size_t channels,
                       BnRunning& run, const std::string& name) {
  if (t.shape() != std::vector<std::size_t>{channels, 3}) {
    throw DataError("checkpoint: block " + name + " has wrong shape");
  }
  run.mean.resize(channels);
  run.c_rr.resize(channels);
  run.c_ii.resize(channels);
  run.c_ri.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    run.mean[c] = t.at({c, 0});
    run.c_rr[c] = t.at({c, 1}).real();
    run.c_ii[c] = t.at({c, 1}).imag();
    run.c_ri[c] = t.at({c, 2}).real();
  }
}

void collect_param_blocks(const ModelSpec& spec, const ModelParams& params,
                          const std::string& prefix,
                          std::vector<std::pair<std::string, ComplexTensor>>&
                              blocks) {
  if (params.conv.size() != spec.n_layers()) {
    throw DataError("checkpoint: parameter set does not match spec");
  }
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    blocks.emplace_back(base + ".weight", params.conv[l].weight);
    blocks.emplace_back(base + ".bias", params.conv[l].bias);
    if (spec.layer_has_bn(l)) {
      blocks.emplace_back(base + ".bn.gamma", pack_bn_params(params.bn[l]));
      ComplexTensor beta({params.bn[l].beta.size()});
      for (std::size_t c = 0; c < params.bn[l].beta.size(); ++c) {
        beta[c] = params.bn[l].beta[c];
      }
      blocks.emplace_back(base + ".bn.beta", std::move(beta));
      blocks.emplace_back(base + ".bn.running",
                          pack_bn_running(params.bn_running[l]));
    }
  }
}

ModelParams assemble_params(const ModelSpec& spec,
                            const std::map<std::string, ComplexTensor>& bl,
                            const std::string& prefix) {
  auto fetch = [&](const std::string& name) -> const ComplexTensor& {
    const auto it = bl.find(name);
    if (it == bl.end()) {
      throw DataError("checkpoint: missing block " + name);
    }
    return it->second;
  };
  ModelParams params;
  params.conv.resize(spec.n_layers());
  params.bn.resize(spec.n_layers());
  params.bn_running.resize(spec.n_layers());
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    const std::size_t cin = spec.layer_in_channels(l);
    const std::size_t cout = spec.channels[l];
    const ComplexTensor& w = fetch(base + ".weight");
    if (w.shape() != std::vector<std::size_t>{cout, cin, spec.kernel[0],
                                              spec.kernel[1],
                                              spec.kernel[2]}) {
      throw DataError("checkpoint: block " + base + ".weight shape mismatch");
    }
    params.conv[l].weight = w;
    const ComplexTensor& b = fetch(base + ".bias");
    if (b.shape() != std::vector<std::size_t>{cout}) {
      throw DataError("checkpoint: block " + base + ".bias shape mismatch");
    }
    params.conv[l].bias = b;
    if (spec.layer_has_bn(l)) {
      unpack_bn_params(fetch(base + ".bn.gamma"), cout, params.bn[l],
                       base + ".bn.gamma");
      const ComplexTensor& beta = fetch(base + ".bn.beta");
      if (beta.shape() != std::vector<std::size_t>{cout}) {
        throw DataError("checkpoint: block " + base +
                        ".bn.beta shape mismatch");
      }
      params.bn[l].beta.assign(beta.data(), beta.data() + beta.size());
      unpack_bn_running(fetch(base + ".bn.running"), cout,
                        params.bn_running[l], base + ".bn.running");
    }
  }
  return params;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckp, const std::string& path) {
  ckp.spec.validate();

  json history = json::array();
  for (const HistoryRow& row : ckp.history) {
    history.push_back(json{{"epoch", row.epoch},
                           {"lr", row.lr},
                           {"train_mse", row.train_mse},
                           {"val_mse", row.val_mse}});
  }
  json header{{"format", kFormat},
              {"model", ckp.model_name},
              {"spec", spec_to_json(ckp.spec)},
              {"param_count", param_count(ckp.spec)},
              {"epochs_done", ckp.epochs_done},
              {"best_epoch", ckp.best_epoch},
              {"best_val_mse", std::isfinite(ckp.best_val_mse)
                                   ? json(ckp.best_val_mse)
                                   : json(nullptr)},
              {"normalizer", ckp.normalizer},
              {"seed", ckp.seed},
              {"adam_t", ckp.adam_t},
              {"history", std::move(history)}};

  std::vector<std::pair<std::string, ComplexTensor>> blocks;
  collect_param_blocks(ckp.spec, ckp.best, "best", blocks);
  collect_param_blocks(ckp.spec, ckp.last, "last", blocks);
  if (!ckp.adam_m.empty()) blocks.emplace_back("adam.m", pack_reals(ckp.adam_m));
  if (!ckp.adam_v.empty()) blocks.emplace_back("adam.v", pack_reals(ckp.adam_v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open " + path + " for write");
  out.write("CKP1", 4);
  const std::string header_bytes = header.dump();
  const std::uint32_t header_len = std::uint32_t(header_bytes.size());
  out.write(reinterpret_cast<const char*>(&header_len), 4);
  out.write(header_bytes.data(), std::streamsize(header_bytes.size()));
  const std::uint32_t n_blocks = std::uint32_t(blocks.size());
  out.write(reinterpret_cast<const char*>(&n_blocks), 4);
  for (const auto& [name, tensor] : blocks) {
    try {
      write_block(out, name, tensor);
    } catch (const std::runtime_error& e) {
      throw DataError("checkpoint: " + path + ": " + e.what());
    }
  }
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CKP1", 4) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  std::uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 4);
  if (!in) throw DataError("checkpoint: truncated header in " + path);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), std::streamsize(header_len));
  if (!in) throw DataError("checkpoint: truncated header in " + path);

  Checkpoint ckp;
  try {
    const json header = json::parse(header_bytes);
    if (header.at("format").get<std::string>() != kFormat) {
      throw DataError("checkpoint: unrecognized format field in " + path);
    }
    ckp.model_name = header.at("model").get<std::string>();
    ckp.spec = spec_from_json(header.at("spec"));
    ckp.epochs_done = header.at("epochs_done").get<std::size_t>();
    ckp.best_epoch = header.at("best_epoch").get<std::size_t>();
    const json& bv = header.at("best_val_mse");
    ckp.best_val_mse = bv.is_null()
                           ? std::numeric_limits<double>::infinity()
                           : bv.get<double>();
    ckp.normalizer = header.at("normalizer").get<double>();
    ckp.seed = header.at("seed").get<std::uint64_t>();
    ckp.adam_t = header.at("adam_t").get<std::uint64_t>();
    for (const json& row : header.at("history")) {
      ckp.history.push_back({row.at("epoch").get<std::size_t>(),
                             row.at("lr").get<double>(),
                             row.at("train_mse").get<double>(),
                             row.at("val_mse").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError("checkpoint: " + path + ": " + e.what());
  }

  std::uint32_t n_blocks = 0;
  in.read(reinterpret_cast<char*>(&n_blocks), 4);
  if (!in) throw DataError("checkpoint: truncated block table in " + path);
  std::map<std::string, ComplexTensor> blocks;
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), 4);
    if (!in || name_len > 4096) {
      throw DataError("checkpoint: bad block name in " + path);
    }
    std::string name(name_len, '\0');
    in.read(name.data(), std::streamsize(name_len));
    if (!in) throw DataError("checkpoint: truncated block name in " + path);
    try {
      blocks.emplace(std::move(name), load_crt1(in));
    } catch (const std::runtime_error& e) {
      throw DataError("checkpoint: " + path + ": " + e.what());
    }
  }

  ckp.best = assemble_params(ckp.spec, blocks, "best");
  ckp.last = assemble_params(ckp.spec, blocks, "last");
  if (const auto it = blocks.find("adam.m"); it != blocks.end()) {
    ckp.adam_m = unpack_reals(it->second);
  }
  if (const auto it = blocks.find("adam.v"); it != blocks.end()) {
    ckp.adam_v = unpack_reals(it->second);
  }
  const std::size_t expect = param_count(ckp.spec);
  if (!ckp.adam_m.empty() &&
      (ckp.adam_m.size() != expect || ckp.adam_v.size() != expect)) {
    throw DataError("checkpoint: optimizer state size mismatch in " + path);
  }
  return ckp;
}

}  // namespace radarim
