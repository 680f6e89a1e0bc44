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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irnet/data.hpp"
#include "irnet/model.hpp"

namespace irnet {

struct TrainConfig {
  double lr_max = 5e-4;
  double lr_min = 1e-11;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  size_t batch_size = 16;
  int epochs = 200;
  int restart_period_epochs = 60;
  uint64_t seed = 0;
  int eval_every = 1;
  /// Fraction of patches held out for validation PSNR; 0 trains on all.
  double val_fraction = 0.02;
  /// Evaluate the schedule once per epoch instead of per iteration.
  bool per_epoch_lr = false;
  /// Random dihedral transform per sample per step.
  bool augment = true;

  void validate() const;
};

/// Mean absolute difference.
double l1_loss(const Tensor& pred, const Tensor& target);

/// Bias-corrected Adam moments for a fixed parameter list.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  int64_t t = 0;
};

/// One Adam update from each parameter's accumulated grad. Throws
/// Error(kNumeric) naming the first parameter with a non-finite gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state,
               double lr, const TrainConfig& cfg);

/// Cosine annealing from lr_max to lr_min, restarting every
/// restart_period_epochs.
double lr_at(double epoch_progress, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  /// Learning rate at the last step of the epoch.
  double lr = 0.0;
  /// NaN when no validation ran this epoch.
  double val_psnr = 0.0;
};

struct FitCallbacks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// (global iteration, epoch progress, lr, batch loss)
  std::function<void(int64_t, double, double, double)> on_step;
};

struct FitOptions {
  /// When set, best.ckpt and last.ckpt are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  FitCallbacks callbacks;
};

struct FitResult {
  IRNetModel best;
  std::vector<EpochRecord> history;
};

/// forward -> L1 -> backward -> Adam for cfg.epochs epochs. `model` holds
/// the last weights on return. Best-by-validation PSNR is tracked when a
/// validation split exists, otherwise best-by-training-loss.
FitResult fit(IRNetModel& model, const std::vector<PatchPair>& patches,
              const TrainConfig& cfg, const FitOptions& options = {});

/// Writes "epoch,mean_loss,lr,val_psnr".
void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path);

}  // namespace irnet
