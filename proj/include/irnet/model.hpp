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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irnet/autograd.hpp"
#include "irnet/tensor.hpp"

namespace irnet {

enum class Mode { kItm, kSrItm };

const char* to_string(Mode mode);
/// Accepts "itm" / "sritm" (case-insensitive).
Mode parse_mode(const std::string& text);

/// Hyperparameters that fully determine the network graph.
struct ModelConfig {
  Mode mode = Mode::kItm;
  int n_blocks = 2;
  int channels = 64;
  int cca_reduction = 16;
  float lrelu_slope = 0.1f;
  bool cca_residual = true;
  /// Upscale factor: 1 for ITM, 4 for SR-ITM (two x2 shuffle stages).
  int scale = 1;
  /// When false the IRB drops the F1 concatenation (the "w/o F1" ablation)
  /// and its output conv narrows to C/2 -> C.
  bool use_intermediate = true;

  /// n = 2 for ITM, n = 5 for joint SR-ITM, C = 64 for both.
  static ModelConfig defaults(Mode mode);
  /// Throws Error(kInvalidConfig) naming the violated constraint.
  void validate() const;
  /// Flat key=value lines, the checkpoint config record.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

struct ConvParams {
  Parameter kernel;
  Parameter bias;

  int padding() const { return static_cast<int>(kernel.value.h() / 2); }
};

struct IrbParams {
  ConvParams conv1;  // 3x3, C -> C/2
  ConvParams conv2;  // 3x3, C/2 -> C
  ConvParams fuse;   // 1x1, C -> C/2
  ConvParams out;    // 1x1, C -> C (C/2 -> C without F1)
};

struct CcaParams {
  ConvParams down;  // 1x1, C -> C/r
  ConvParams up;    // 1x1, C/r -> C
};

struct BlockGroup {
  IrbParams irb;
  CcaParams cca;
};

class IRNetModel {
 public:
  IRNetModel() = default;
  explicit IRNetModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  ConvParams head;                  // 1x1, 3 -> C
  std::vector<BlockGroup> groups;
  ConvParams fusion1;               // 1x1, nC -> C
  ConvParams fusion2;               // 3x3, C -> C
  ConvParams tail;                  // 3x3, C -> 3 (ITM) or C -> C (SR-ITM)
  std::optional<ConvParams> up1;    // 3x3, C -> 4C
  std::optional<ConvParams> up2;    // 3x3, C -> 12

  /// Every parameter in a fixed order (head, groups, fusion, tail, upsampler).
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(const std::string& name);
  size_t parameter_count() const;
  void zero_grad();

 private:
  ModelConfig config_;
};

/// Kaiming-normal kernels (std = sqrt(2 / fan_in)) and zero biases.
IRNetModel build(const ModelConfig& config, uint64_t seed);

Tensor irb_forward(const Tensor& x, const IrbParams& p, float slope);
Tensor cca_forward(const Tensor& x, const CcaParams& p, bool residual);
Tensor irnet_forward(const Tensor& x, const IRNetModel& m);

ag::Var irb_forward(ag::Tape& tape, ag::Var x, IrbParams& p, float slope);
ag::Var cca_forward(ag::Tape& tape, ag::Var x, CcaParams& p, bool residual);
ag::Var irnet_forward(ag::Tape& tape, ag::Var x, IRNetModel& m);

/// Intermediate features of one forward pass, for inspection tools.
struct ForwardTrace {
  std::vector<Tensor> block_outputs;  // F^2 .. F^{n+1}
  Tensor output;
};
ForwardTrace irnet_forward_trace(const Tensor& x, const IRNetModel& m);

/// Runs the model on overlapping tiles and averages the overlaps. tile <= 0
/// processes the whole image at once.
Tensor infer_tiled(const Tensor& x, const IRNetModel& m, int tile,
                   int overlap = 16);

/// Exact number of kernel and bias scalars, in closed form.
uint64_t count_params(const ModelConfig& config);

struct ComputeCost {
  uint64_t macs = 0;
  uint64_t flops = 0;
};

/// MACs summed over every convolution at an h x w input; CCA convolutions
/// run at 1x1. flops = 2 * macs.
ComputeCost count_macs(const ModelConfig& config, int64_t h, int64_t w);

void save_checkpoint(const IRNetModel& m, const std::filesystem::path& path);
IRNetModel load_checkpoint(const std::filesystem::path& path);
/// Loads and refuses checkpoints whose config differs from `expected`.
IRNetModel load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig& expected);

}  // namespace irnet
