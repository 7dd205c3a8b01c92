#include "radarim/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <utility>

#include "radarim/dsp.hpp"
#include "radarim/errors.hpp"
#include "radarim/rng.hpp"

namespace radarim {

void TrainConfig::validate() const {
  if (batch_size == 0) {
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  }
  if (max_epochs == 0) {
    throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  }
  if (!(lr0 > 0.0)) {
    throw std::invalid_argument("TrainConfig: lr0 must be positive");
  }
  if (!(lr_decay > 0.0) || lr_decay > 1.0) {
    throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
  }
}

double mse_loss(const ComplexTensor& pred, const ComplexTensor& target,
                ComplexTensor* grad) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  const std::size_t n = pred.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = double(pred[i].real()) - double(target[i].real());
    const double di = double(pred[i].imag()) - double(target[i].imag());
    acc += dr * dr + di * di;
  }
  const double loss = acc / double(n);
  if (grad) {
    *grad = ComplexTensor(pred.shape());
    const double scale = 2.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) {
      (*grad)[i] = {
          float(scale * (double(pred[i].real()) - double(target[i].real()))),
          float(scale *
                (double(pred[i].imag()) - double(target[i].imag())))};
    }
  }
  return loss;
}

void adam_step(std::vector<float>& params, const std::vector<float>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  if (state.m.empty()) state.m.assign(params.size(), 0.0f);
  if (state.v.empty()) state.v.assign(params.size(), 0.0f);
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: stale optimizer state");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, double(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, double(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    const double v = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    state.m[i] = float(m);
    state.v[i] = float(v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    params[i] = float(params[i] - lr * mhat / (std::sqrt(vhat) +
                                               kAdamEpsilon));
  }
}

ComplexTensor to_model_domain(const ComplexTensor& rda, bool rank3) {
  if (rda.rank() != 3) {
    throw std::invalid_argument("to_model_domain: expected a rank-3 RDA");
  }
  const std::size_t nr = rda.shape()[0];
  const std::size_t nd = rda.shape()[1];
  const std::size_t na = rda.shape()[2];
  if (rank3) {
    ComplexTensor out({1, nr, nd, na});
    std::memcpy(out.data(), rda.data(), rda.size() * sizeof(cfloat));
    return out;
  }
  const ComplexTensor rd = rda_to_rd(rda);
  ComplexTensor out({na, nr, nd, 1});
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t d = 0; d < nd; ++d) {
      const cfloat* src = rd.data() + (r * nd + d) * na;
      for (std::size_t a = 0; a < na; ++a) {
        out[(a * nr + r) * nd + d] = src[a];
      }
    }
  }
  return out;
}

ComplexTensor from_model_domain(const ComplexTensor& item, bool rank3) {
  if (item.rank() != 4) {
    throw std::invalid_argument(
        "from_model_domain: expected a [C, R, D, T] item");
  }
  if (rank3) {
    if (item.shape()[0] != 1) {
      throw std::invalid_argument(
          "from_model_domain: rank-3 item must have one channel");
    }
    ComplexTensor out(
        {item.shape()[1], item.shape()[2], item.shape()[3]});
    std::memcpy(out.data(), item.data(), item.size() * sizeof(cfloat));
    return out;
  }
  if (item.shape()[3] != 1) {
    throw std::invalid_argument(
        "from_model_domain: rank-2 item must have depth 1");
  }
  const std::size_t na = item.shape()[0];
  const std::size_t nr = item.shape()[1];
  const std::size_t nd = item.shape()[2];
  ComplexTensor rd({nr, nd, na});
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t d = 0; d < nd; ++d) {
        rd[(r * nd + d) * na + a] = item[(a * nr + r) * nd + d];
      }
    }
  }
  return rd;
}

namespace {

// Stacks per-sample model-domain tensors into one batch tensor.
ComplexTensor stack_batch(const std::vector<ComplexTensor>& items) {
  const std::vector<std::size_t>& s = items.front().shape();
  ComplexTensor out({items.size(), s[0], s[1], s[2], s[3]});
  const std::size_t slab = items.front().size();
  for (std::size_t b = 0; b < items.size(); ++b) {
    if (items[b].shape() != s) {
      throw std::invalid_argument("stack_batch: inhomogeneous shapes");
    }
    std::memcpy(out.data() + b * slab, items[b].data(),
                slab * sizeof(cfloat));
  }
  return out;
}

struct LoadedPair {
  ComplexTensor input;   // model domain, normalized
  ComplexTensor target;  // model domain, normalized
};

LoadedPair load_pair(const Manifest& manifest, const SampleRecord& rec,
                     bool rank3, double normalizer) {
  LoadedPair pair;
  pair.input = to_model_domain(
      load_crt1(manifest.resolve(rec.interfered_path)), rank3);
  pair.target =
      to_model_domain(load_crt1(manifest.resolve(rec.clean_path)), rank3);
  const cfloat scale(float(1.0 / normalizer), 0.0f);
  pair.input = scaled(pair.input, scale);
  pair.target = scaled(pair.target, scale);
  return pair;
}

double split_mse(const ModelSpec& spec, ModelParams& params,
                 const Manifest& manifest,
                 const std::vector<SampleRecord>& records, double normalizer,
                 std::size_t batch_size) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < records.size();
       start += batch_size) {
    const std::size_t stop =
        std::min(records.size(), start + batch_size);
    std::vector<ComplexTensor> inputs, targets;
    inputs.reserve(stop - start);
    targets.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      LoadedPair pair =
          load_pair(manifest, records[i], spec.rank3, normalizer);
      inputs.push_back(std::move(pair.input));
      targets.push_back(std::move(pair.target));
    }
    const ComplexTensor x = stack_batch(inputs);
    const ComplexTensor y = stack_batch(targets);
    const ComplexTensor pred = model_forward(spec, params, x, false);
    acc += mse_loss(pred, y) * double(stop - start);
    count += stop - start;
  }
  return acc / double(count);
}

}  // namespace

Checkpoint train_model(const ModelSpec& spec, const std::string& model_name,
                       const Manifest& manifest, const TrainConfig& cfg,
                       const std::function<void(const HistoryRow&)>& on_epoch,
                       const Checkpoint* resume) {
  spec.validate();
  cfg.validate();
  if (manifest.train.empty() || manifest.val.empty()) {
    throw DataError("train: empty train or validation split");
  }

  Checkpoint ckp;
  ckp.spec = spec;
  ckp.model_name = model_name;
  ckp.seed = cfg.seed;

  ModelParams params;
  AdamState adam;
  std::size_t start_epoch = 0;
  if (resume) {
    if (param_count(resume->spec) != param_count(spec)) {
      throw DataError("train: resume checkpoint does not match model spec");
    }
    params = resume->last;
    adam.m = resume->adam_m;
    adam.v = resume->adam_v;
    adam.t = resume->adam_t;
    start_epoch = resume->epochs_done;
    ckp = *resume;
    ckp.model_name = model_name.empty() ? resume->model_name : model_name;
  } else {
    Rng init_rng = Rng::stream(cfg.seed, 0);
    params = init_params(spec, init_rng);
  }

  // Global scale: the largest magnitude over the training split's inputs
  // and targets, measured in the model's input domain. Kept from the
  // original run when resuming so the loss stays comparable.
  double normalizer = resume ? resume->normalizer : 0.0;
  if (!resume) {
    for (const SampleRecord& rec : manifest.train) {
      normalizer = std::max(
          normalizer,
          max_abs(to_model_domain(
              load_crt1(manifest.resolve(rec.interfered_path)),
              spec.rank3)));
      normalizer = std::max(
          normalizer,
          max_abs(to_model_domain(load_crt1(manifest.resolve(rec.clean_path)),
                                  spec.rank3)));
    }
    if (!(normalizer > 0.0)) {
      throw DataError("train: training split has no signal energy");
    }
  }
  ckp.normalizer = normalizer;

  std::vector<float> flat = flatten_params(spec, params);
  ModelParams best = params;
  double best_val = resume ? resume->best_val_mse
                           : std::numeric_limits<double>::infinity();
  std::size_t best_epoch = resume ? resume->best_epoch : 0;
  if (resume) best = resume->best;
  std::size_t since_best =
      resume && std::isfinite(best_val) ? start_epoch - best_epoch : 0;
  const std::size_t stop_after = std::max<std::size_t>(
      cfg.early_stop_patience, 1);

  std::vector<std::size_t> order(manifest.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t epochs_done = start_epoch;
  for (std::size_t e = start_epoch; e < cfg.max_epochs; ++e) {
    const double lr = cfg.lr0 * std::pow(cfg.lr_decay, double(e));

    // Deterministic per-epoch shuffle from a dedicated stream.
    Rng shuffle_rng = Rng::stream(cfg.seed, 1000 + e);
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j =
          std::size_t(shuffle_rng.uniform_int(0, std::int64_t(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double train_acc = 0.0;
    std::size_t train_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      std::vector<ComplexTensor> inputs, targets;
      inputs.reserve(stop - start);
      targets.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        LoadedPair pair = load_pair(manifest, manifest.train[order[i]],
                                    spec.rank3, normalizer);
        inputs.push_back(std::move(pair.input));
        targets.push_back(std::move(pair.target));
      }
      const ComplexTensor x = stack_batch(inputs);
      const ComplexTensor y = stack_batch(targets);

      ForwardCache cache;
      const ComplexTensor pred = model_forward(spec, params, x, true, &cache);
      ComplexTensor loss_grad;
      const double loss = mse_loss(pred, y, &loss_grad);
      if (!std::isfinite(loss)) {
        throw NumericalError("train: non-finite loss at epoch " +
                             std::to_string(e) + ", batch offset " +
                             std::to_string(start));
      }
      train_acc += loss * double(stop - start);
      train_count += stop - start;

      const ModelGrads grads = model_backward(spec, params, cache, loss_grad);
      adam_step(flat, flatten_grads(spec, grads), adam, lr);
      unflatten_params(spec, flat, params);
    }
    const double train_mse = train_acc / double(train_count);

    const double val_mse = split_mse(spec, params, manifest, manifest.val,
                                     normalizer, cfg.batch_size);
    if (!std::isfinite(val_mse)) {
      throw NumericalError("train: non-finite validation MSE at epoch " +
                           std::to_string(e));
    }

    const HistoryRow row{e, lr, train_mse, val_mse};
    ckp.history.push_back(row);
    if (on_epoch) on_epoch(row);
    epochs_done = e + 1;

    if (val_mse < best_val) {
      best_val = val_mse;
      best_epoch = e;
      best = params;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= stop_after) break;
    }
  }

  ckp.epochs_done = epochs_done;
  ckp.best_epoch = best_epoch;
  ckp.best_val_mse = best_val;
  ckp.best = std::move(best);
  ckp.last = std::move(params);
  ckp.adam_m = std::move(adam.m);
  ckp.adam_v = std::move(adam.v);
  ckp.adam_t = adam.t;
  return ckp;
}

}  // namespace radarim
