#include <cmath>
#include <limits>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "naive_ref.hpp"
#include "radarim/dataset.hpp"
#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"
#include "radarim/train.hpp"

namespace {

namespace fs = std::filesystem;
using radarim::cfloat;
using radarim::Checkpoint;
using radarim::ComplexTensor;
using radarim::Manifest;
using radarim::ModelParams;
using radarim::ModelSpec;
using radarim::Rng;
using radarim::SampleRecord;
using radarim::TrainConfig;
using testref::cdouble;

// Builds a self-contained toy dataset on disk: the task is the identity map
// (input tensor equals target tensor), which a two-layer complex net can
// approximate, so the loss must fall under plain supervised training.
struct ToyData {
  fs::path dir;
  Manifest manifest;

  explicit ToyData(const char* name, std::size_t n_train = 4,
                   std::size_t n_val = 2) {
    dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    manifest.dir = dir.string();
    std::uint64_t seed = 1;
    for (std::size_t i = 0; i < n_train + n_val; ++i) {
      ComplexTensor rda({12, 8, 4});
      Rng rng(seed++);
      testref::fill_random(rda, rng);
      SampleRecord rec;
      rec.id = "toy-" + std::to_string(i);
      rec.interfered_path = rec.id + ".in.crt1";
      rec.clean_path = rec.id + ".out.crt1";
      radarim::save_crt1(rda, dir / rec.interfered_path);
      radarim::save_crt1(rda, dir / rec.clean_path);
      (i < n_train ? manifest.train : manifest.val).push_back(rec);
    }
    manifest.test = manifest.val;
  }

  ~ToyData() { fs::remove_all(dir); }
};

ModelSpec tiny_spec() {
  ModelSpec spec;
  spec.channels = {2, 1};
  return spec;
}

}  // namespace

TEST_CASE("mse_loss value and gradient match hand computation") {
  ComplexTensor pred({2}), target({2});
  pred[0] = {3.0f, 4.0f};
  pred[1] = {0.0f, -1.0f};
  target[0] = {1.0f, 1.0f};
  target[1] = {2.0f, 0.0f};

  ComplexTensor grad;
  const double loss = radarim::mse_loss(pred, target, &grad);
  // Diffs (2,3) and (-2,-1): mean of 13 and 5.
  CHECK(loss == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(grad[0].real() == doctest::Approx(2.0));
  CHECK(grad[0].imag() == doctest::Approx(3.0));
  CHECK(grad[1].real() == doctest::Approx(-2.0));
  CHECK(grad[1].imag() == doctest::Approx(-1.0));

  // All-equal tensors: zero loss, zero gradient.
  CHECK(radarim::mse_loss(target, target, &grad) == 0.0);
  CHECK(grad[0] == cfloat(0.0f, 0.0f));

  // A uniform (1 + 1j) error has squared magnitude 2 regardless of count.
  ComplexTensor a({3, 5}), b({3, 5});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = {1.0f, 1.0f};
  CHECK(radarim::mse_loss(a, b) == doctest::Approx(2.0));

  ComplexTensor other({3});
  CHECK_THROWS_AS(radarim::mse_loss(pred, other), std::invalid_argument);
}

TEST_CASE("mse_loss gradient agrees with finite differences") {
  ComplexTensor pred({6}), target({6});
  Rng rng(42);
  testref::fill_random(pred, rng);
  testref::fill_random(target, rng);
  ComplexTensor grad;
  radarim::mse_loss(pred, target, &grad);

  const double h = 1e-3;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto peek = [&](float dre, float dim) {
      ComplexTensor p = pred;
      p[i] += cfloat(dre, dim);
      return radarim::mse_loss(p, target);
    };
    const double fd_re = (peek(float(h), 0) - peek(float(-h), 0)) / (2 * h);
    const double fd_im = (peek(0, float(h)) - peek(0, float(-h))) / (2 * h);
    CHECK(grad[i].real() == doctest::Approx(fd_re).epsilon(1e-3));
    CHECK(grad[i].imag() == doctest::Approx(fd_im).epsilon(1e-3));
  }
}

TEST_CASE("adam_step takes a near-sign step first and honors zero grads") {
  std::vector<float> params{1.0f, -2.0f};
  radarim::AdamState state;

  const std::vector<float> zeros{0.0f, 0.0f};
  radarim::adam_step(params, zeros, state, 0.01);
  CHECK(state.t == 1);
  CHECK(params[0] == 1.0f);
  CHECK(params[1] == -2.0f);
  REQUIRE(state.m.size() == 2);
  CHECK(state.m[0] == 0.0f);
  CHECK(state.v[1] == 0.0f);

  // With bias correction the first step size is lr * g/(|g| + eps) ~ lr.
  std::vector<float> p2{1.0f, -2.0f};
  radarim::AdamState s2;
  const std::vector<float> grads{0.5f, -0.25f};
  radarim::adam_step(p2, grads, s2, 0.01);
  CHECK(p2[0] == doctest::Approx(0.99).epsilon(1e-5));
  CHECK(p2[1] == doctest::Approx(-1.99).epsilon(1e-5));

  // Same gradient again: still a full-size step in the same direction.
  radarim::adam_step(p2, grads, s2, 0.01);
  CHECK(s2.t == 2);
  CHECK(p2[0] == doctest::Approx(0.98).epsilon(1e-4));

  std::vector<float> mismatched{0.1f};
  CHECK_THROWS_AS(radarim::adam_step(p2, mismatched, s2, 0.01),
                  std::invalid_argument);
}

TEST_CASE("model domain conversion round-trips both families") {
  ComplexTensor rda({12, 8, 4});
  Rng rng(7);
  testref::fill_random(rda, rng);

  // Rank-3: a pure relayout, so the round trip is exact.
  const auto item3 = radarim::to_model_domain(rda, true);
  REQUIRE(item3.shape() == std::vector<std::size_t>({1, 12, 8, 4}));
  for (std::size_t i = 0; i < rda.size(); ++i) CHECK(item3[i] == rda[i]);
  const auto back3 = radarim::from_model_domain(item3, true);
  REQUIRE(back3.shape() == rda.shape());
  for (std::size_t i = 0; i < rda.size(); ++i) CHECK(back3[i] == rda[i]);

  // Rank-2: antennas become channels and the angle DFT is undone, so the
  // values must match the RD stack elementwise.
  const auto item2 = radarim::to_model_domain(rda, false);
  REQUIRE(item2.shape() == std::vector<std::size_t>({4, 12, 8, 1}));
  const auto rd = radarim::rda_to_rd(rda);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t r = 0; r < 12; ++r)
      for (std::size_t d = 0; d < 8; ++d)
        CHECK(item2.at({a, r, d, 0}) == rd.at({r, d, a}));
  const auto back2 = radarim::from_model_domain(item2, false);
  REQUIRE(back2.shape() == rd.shape());
  CHECK(testref::rel_l2(back2, rd) < 1e-6);
}

TEST_CASE("training reduces the loss on a learnable toy problem") {
  ToyData data("radarim_test_train_toy");
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_epochs = 25;
  cfg.lr0 = 3e-3;
  cfg.early_stop_patience = 25;
  cfg.seed = 5;

  std::size_t epochs_seen = 0;
  const Checkpoint ckp = radarim::train_model(
      tiny_spec(), "toy", data.manifest, cfg,
      [&](const radarim::HistoryRow& row) {
        CHECK(row.epoch == epochs_seen);
        ++epochs_seen;
      });

  REQUIRE(!ckp.history.empty());
  CHECK(epochs_seen == ckp.history.size());
  CHECK(ckp.epochs_done == ckp.history.size());
  CHECK(ckp.model_name == "toy");
  CHECK(ckp.normalizer > 0.0);
  CHECK(std::isfinite(ckp.best_val_mse));
  CHECK(ckp.best_val_mse <= ckp.history.front().val_mse);

  // The learning-rate schedule decays by the configured factor per epoch.
  CHECK(ckp.history[0].lr == doctest::Approx(3e-3));
  CHECK(ckp.history[1].lr == doctest::Approx(3e-3 * 0.95));

  // Substantial progress on the identity task.
  CHECK(ckp.history.back().train_mse <
        0.5 * ckp.history.front().train_mse);

  // Early-stop bookkeeping invariant: either the epoch budget ran out, or
  // the run ended exactly patience epochs past the best one.
  const std::size_t stop_after = std::max<std::size_t>(
      cfg.early_stop_patience, 1);
  CHECK((ckp.epochs_done == cfg.max_epochs ||
         ckp.epochs_done - 1 - ckp.best_epoch >= stop_after));
}

TEST_CASE("training is deterministic for a fixed seed") {
  ToyData data("radarim_test_train_det");
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_epochs = 4;
  cfg.early_stop_patience = 10;
  cfg.seed = 11;
  cfg.deterministic = true;

  const ModelSpec spec = tiny_spec();
  const Checkpoint a = radarim::train_model(spec, "toy", data.manifest, cfg);
  const Checkpoint b = radarim::train_model(spec, "toy", data.manifest, cfg);

  CHECK(radarim::flatten_params(spec, a.best) ==
        radarim::flatten_params(spec, b.best));
  CHECK(radarim::flatten_params(spec, a.last) ==
        radarim::flatten_params(spec, b.last));
  CHECK(a.adam_m == b.adam_m);
  CHECK(a.adam_v == b.adam_v);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_mse == b.history[i].train_mse);
    CHECK(a.history[i].val_mse == b.history[i].val_mse);
  }
}

TEST_CASE("resume continues the epoch counter and history") {
  ToyData data("radarim_test_train_resume");
  const ModelSpec spec = tiny_spec();
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_epochs = 3;
  cfg.early_stop_patience = 10;
  cfg.seed = 21;

  const Checkpoint first = radarim::train_model(spec, "toy", data.manifest,
                                                cfg);
  REQUIRE(first.epochs_done == 3);

  TrainConfig longer = cfg;
  longer.max_epochs = 5;
  const Checkpoint second = radarim::train_model(spec, "toy", data.manifest,
                                                 longer, nullptr, &first);
  CHECK(second.epochs_done == 5);
  REQUIRE(second.history.size() == 5);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(second.history[i].train_mse == first.history[i].train_mse);
    CHECK(second.history[i].val_mse == first.history[i].val_mse);
  }
  CHECK(second.history[3].epoch == 3);
  CHECK(second.normalizer == first.normalizer);
  CHECK(second.adam_t > first.adam_t);

  // A resume checkpoint for a different architecture is rejected.
  ModelSpec bigger;
  bigger.channels = {4, 2, 1};
  CHECK_THROWS_AS(radarim::train_model(bigger, "toy", data.manifest, longer,
                                       nullptr, &first),
                  radarim::DataError);
}

TEST_CASE("training rejects empty splits and explodes loudly on overflow") {
  ToyData data("radarim_test_train_err");
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_epochs = 3;
  cfg.seed = 31;

  Manifest no_train = data.manifest;
  no_train.train.clear();
  CHECK_THROWS_AS(radarim::train_model(tiny_spec(), "toy", no_train, cfg),
                  radarim::DataError);

  // A NaN smuggled into a target tensor must surface as a numerical error
  // on the first batch, not get silently averaged into the loss.
  Manifest poisoned = data.manifest;
  {
    ComplexTensor bad =
        radarim::load_crt1(poisoned.resolve(poisoned.train[0].clean_path));
    bad[0] = cfloat(std::numeric_limits<float>::quiet_NaN(), 0.0f);
    const fs::path path = data.dir / "poisoned.crt1";
    radarim::save_crt1(bad, path);
    for (auto& rec : poisoned.train) rec.clean_path = "poisoned.crt1";
  }
  CHECK_THROWS_AS(radarim::train_model(tiny_spec(), "toy", poisoned, cfg),
                  radarim::NumericalError);

  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.lr_decay = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip through the container format") {
  ToyData data("radarim_test_ckpt");
  const ModelSpec spec = tiny_spec();
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_epochs = 2;
  cfg.early_stop_patience = 5;
  cfg.seed = 77;
  const Checkpoint ckp = radarim::train_model(spec, "toy", data.manifest,
                                              cfg);

  const fs::path path = data.dir / "model.ckp1";
  radarim::save_checkpoint(ckp, path.string());
  const Checkpoint back = radarim::load_checkpoint(path.string());

  CHECK(back.model_name == ckp.model_name);
  CHECK(back.epochs_done == ckp.epochs_done);
  CHECK(back.best_epoch == ckp.best_epoch);
  CHECK(back.best_val_mse == ckp.best_val_mse);
  CHECK(back.normalizer == ckp.normalizer);
  CHECK(back.seed == ckp.seed);
  CHECK(back.spec.rank3 == ckp.spec.rank3);
  CHECK(back.spec.channels == ckp.spec.channels);
  CHECK(back.spec.kernel == ckp.spec.kernel);
  REQUIRE(back.history.size() == ckp.history.size());
  CHECK(back.history.back().val_mse == ckp.history.back().val_mse);

  CHECK(radarim::flatten_params(spec, back.best) ==
        radarim::flatten_params(spec, ckp.best));
  CHECK(radarim::flatten_params(spec, back.last) ==
        radarim::flatten_params(spec, ckp.last));
  CHECK(back.adam_m == ckp.adam_m);
  CHECK(back.adam_v == ckp.adam_v);
  CHECK(back.adam_t == ckp.adam_t);

  // An untrained checkpoint has no finite validation score; the container
  // must carry that through.
  Checkpoint blank;
  blank.spec = spec;
  Rng rng(1);
  blank.best = radarim::init_params(spec, rng);
  blank.last = blank.best;
  const fs::path blank_path = data.dir / "blank.ckp1";
  radarim::save_checkpoint(blank, blank_path.string());
  CHECK(std::isinf(radarim::load_checkpoint(blank_path.string())
                       .best_val_mse));
}

TEST_CASE("checkpoint loader rejects damaged files") {
  ToyData data("radarim_test_ckpt_bad");
  CHECK_THROWS_AS(
      radarim::load_checkpoint((data.dir / "missing.ckp1").string()),
      radarim::DataError);

  const fs::path garbage = data.dir / "garbage.ckp1";
  {
    std::ofstream f(garbage, std::ios::binary);
    f << "this is not a checkpoint";
  }
  CHECK_THROWS_AS(radarim::load_checkpoint(garbage.string()),
                  radarim::DataError);

  // Truncating a valid file must be detected too.
  const ModelSpec spec = tiny_spec();
  Checkpoint ckp;
  ckp.spec = spec;
  Rng rng(2);
  ckp.best = radarim::init_params(spec, rng);
  ckp.last = ckp.best;
  const fs::path good = data.dir / "good.ckp1";
  radarim::save_checkpoint(ckp, good.string());
  const auto size = fs::file_size(good);
  fs::resize_file(good, size / 2);
  CHECK_THROWS_AS(radarim::load_checkpoint(good.string()),
                  radarim::DataError);
}
