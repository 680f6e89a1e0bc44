// Copyright 2026 The IRNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "irnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "format.hpp"
#include "irnet/metrics.hpp"

namespace irnet {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, "invalid train config: " + what);
  };
  if (!(lr_max > 0.0)) fail("lr_max must be positive");
  if (!(lr_min >= 0.0 && lr_min < lr_max)) fail("need 0 <= lr_min < lr_max");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (restart_period_epochs < 1) fail("restart_period_epochs must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    fail("val_fraction must lie in [0, 1)");
  }
}

double l1_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "l1_loss: shape mismatch, " + pred.shape().str() + " vs " +
                    target.shape().str());
  }
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    acc += std::abs(static_cast<double>(pred.raw()[i]) - target.raw()[i]);
  }
  return pred.size() ? acc / static_cast<double>(pred.size()) : 0.0;
}

void adam_step(std::span<Parameter* const> params, AdamState& state,
               double lr, const TrainConfig& cfg) {
  if (!(lr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "adam_step: lr must be positive");
  }
  if (state.m.size() != params.size()) {
    if (state.t != 0 || !state.m.empty()) {
      throw Error(ErrorCode::kState,
                  "adam_step: optimizer state belongs to another parameter set");
    }
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  for (const Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adam_step: gradient of '" + p->name + "' has wrong shape");
    }
    for (float g : p->grad.data()) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNumeric,
                    "adam_step: non-finite gradient in '" + p->name + "'");
      }
    }
  }
  state.t += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.size(); ++k) {
    float* theta = params[k]->value.raw();
    const float* g = params[k]->grad.raw();
    float* m = state.m[k].raw();
    float* v = state.v[k].raw();
    for (size_t i = 0; i < params[k]->value.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      theta[i] = static_cast<float>(
          theta[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + cfg.eps));
    }
  }
}

double lr_at(double epoch_progress, const TrainConfig& cfg) {
  const double period = cfg.restart_period_epochs;
  const double phase = std::fmod(std::max(0.0, epoch_progress), period) / period;
  return cfg.lr_min + (cfg.lr_max - cfg.lr_min) *
                          (1.0 + std::cos(std::numbers::pi * phase)) / 2.0;
}

namespace {

void check_patch_geometry(const IRNetModel& model,
                          const std::vector<PatchPair>& patches) {
  const int64_t s = model.config().mode == Mode::kSrItm ? model.config().scale : 1;
  const Shape& first = patches.front().sdr.shape();
  for (const PatchPair& p : patches) {
    if (p.sdr.shape() != first || p.sdr.c() != 3 || p.hdr.c() != 3 ||
        p.hdr.h() != p.sdr.h() * s || p.hdr.w() != p.sdr.w() * s) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("fit: patches do not match the model's ") +
                      to_string(model.config().mode) + " geometry (sdr " +
                      p.sdr.shape().str() + ", hdr " + p.hdr.shape().str() +
                      ")");
    }
  }
}

double validation_psnr(const IRNetModel& model,
                       const std::vector<PatchPair>& val) {
  double total = 0.0;
  size_t finite = 0;
  for (const PatchPair& p : val) {
    const double v = psnr(clamp(irnet_forward(p.sdr, model), 0.0f, 1.0f), p.hdr);
    if (std::isfinite(v)) {
      total += v;
      ++finite;
    }
  }
  if (finite == 0) return std::numeric_limits<double>::infinity();
  return total / static_cast<double>(finite);
}

}  // namespace

FitResult fit(IRNetModel& model, const std::vector<PatchPair>& patches,
              const TrainConfig& cfg, const FitOptions& options) {
  cfg.validate();
  if (patches.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "fit: empty dataset");
  }
  check_patch_geometry(model, patches);

  std::vector<size_t> order(patches.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 split_rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), split_rng);
  size_t n_val = static_cast<size_t>(
      std::floor(cfg.val_fraction * static_cast<double>(patches.size())));
  n_val = std::min(n_val, patches.size() - 1);
  std::vector<PatchPair> val, train;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val : train).push_back(patches[order[i]]);
  }

  FitResult result;
  result.best = model;
  double best_score = -std::numeric_limits<double>::infinity();
  auto write_checkpoints = [&]() {
    if (!options.checkpoint_dir) return;
    std::filesystem::create_directories(*options.checkpoint_dir);
    save_checkpoint(model, *options.checkpoint_dir / "last.ckpt");
    save_checkpoint(result.best, *options.checkpoint_dir / "best.ckpt");
  };
  if (cfg.epochs == 0) {
    write_checkpoints();
    return result;
  }

  const Batcher batcher(train.size(), cfg.batch_size, cfg.seed);
  const size_t per_epoch = batcher.batches_per_epoch();
  std::mt19937_64 aug_rng(cfg.seed ^ 0xa5a5a5a5deadbeefull);
  AdamState adam;
  const std::vector<Parameter*> params = model.parameters();
  int64_t iteration = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = batcher.epoch(static_cast<uint64_t>(epoch));
    double loss_sum = 0.0;
    size_t samples = 0;
    double lr = cfg.lr_max;
    for (size_t b = 0; b < batches.size(); ++b) {
      const double progress =
          cfg.per_epoch_lr ? epoch
                           : epoch + static_cast<double>(b) / per_epoch;
      lr = lr_at(progress, cfg);
      std::vector<Tensor> sdr, hdr;
      for (size_t idx : batches[b]) {
        if (cfg.augment) {
          PatchPair p = augment(train[idx], aug_rng);
          sdr.push_back(std::move(p.sdr));
          hdr.push_back(std::move(p.hdr));
        } else {
          sdr.push_back(train[idx].sdr);
          hdr.push_back(train[idx].hdr);
        }
      }
      const Tensor target = stack_batch(hdr);
      ag::Tape tape;
      ag::Var x = tape.constant(stack_batch(sdr));
      ag::Var loss = ag::l1_loss(irnet_forward(tape, x, model), target);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << b
           << " (lr " << lr << ")";
        throw Error(ErrorCode::kNumeric, os.str());
      }
      model.zero_grad();
      tape.backward(loss);
      adam_step(params, adam, lr, cfg);
      loss_sum += value * static_cast<double>(batches[b].size());
      samples += batches[b].size();
      if (options.callbacks.on_step) {
        options.callbacks.on_step(iteration, progress, lr, value);
      }
      ++iteration;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(samples);
    record.lr = lr;
    record.val_psnr = std::numeric_limits<double>::quiet_NaN();
    if (!val.empty() && (epoch + 1) % cfg.eval_every == 0) {
      record.val_psnr = validation_psnr(model, val);
    }
    const double score = val.empty() ? -record.mean_loss : record.val_psnr;
    if (!std::isnan(score) && score > best_score) {
      best_score = score;
      result.best = model;
    }
    result.history.push_back(record);
    if (options.callbacks.on_epoch) options.callbacks.on_epoch(record);
  }
  write_checkpoints();
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch,mean_loss,lr,val_psnr\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << "," << detail::g6(r.mean_loss) << ","
        << detail::g6(r.lr) << ","
        << (std::isnan(r.val_psnr) ? std::string() : detail::g6(r.val_psnr))
        << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace irnet
