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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irnet/tensor.hpp"

namespace irnet {

/// A trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  /// Logical rank used for serialization: 4 for kernels, 1 for biases.
  int rank = 4;

  Parameter() = default;
  Parameter(std::string name, Tensor value, int rank = 4);

  void zero_grad() { grad = Tensor(value.shape()); }
  /// Logical dimensions, e.g. {out} for a bias.
  std::vector<int64_t> dims() const;
};

namespace ag {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  size_t id_ = 0;
};

/// Ordered record of a forward pass. backward() replays the recorded
/// operations in exact reverse order and may run once per tape.
class Tape {
 public:
  /// Receives the upstream gradient of a node and accumulates into the
  /// gradients of its inputs via Tape::grad_of.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape (read it with grad()).
  Var input(Tensor value);
  /// Leaf bound to a parameter; backward adds into param.grad.
  Var param(Parameter& p);

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);
  /// Records a single-element result whose double-precision value is kept
  /// alongside the float tensor.
  Var record_scalar(double value, std::vector<Var> inputs,
                    BackwardFn backward);

  /// Seeds the gradient of `output` and propagates to every leaf.
  void backward(Var output, const Tensor& seed);
  /// Convenience: seeds with ones for a scalar output.
  void backward(Var output);

  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  /// Double-precision value of a single-element node.
  double scalar(Var v) const;
  /// Gradient slot for a node, allocated on first use.
  Tensor& grad_of(Var v);
  /// Gradient accumulated for a node by backward; empty if none reached it.
  const Tensor& grad(Var v) const { return nodes_[v.id()].grad; }

  size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Hash of the sign patterns of every piecewise op executed so far.
  /// Two forward passes with equal hashes took the same linear pieces.
  uint64_t kink_signature() const { return kink_signature_; }
  void mix_kink_signature(uint64_t h);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    std::optional<double> scalar;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
  uint64_t kink_signature_ = 0x9e3779b97f4a7c15ull;
};

// Differentiable counterparts of the tensor-core kernels.
Var conv2d(Var x, Var kernel, Var bias, int padding);
Var leaky_relu(Var x, float slope);
Var relu(Var x);
Var sigmoid(Var x);
Var add(Var x, Var y);
Var scale_channels(Var x, Var a);
Var concat_channels(std::span<const Var> parts);
Var pixel_shuffle(Var x, int s);
Var global_contrast_pool(Var x);
/// Sum of all elements, shape (1,1,1,1).
Var sum(Var x);
/// Mean absolute difference against a fixed target, shape (1,1,1,1).
Var l1_loss(Var pred, const Tensor& target);

struct GradCheckOptions {
  double eps = 1e-3;
  size_t coordinates = 64;
  uint64_t seed = 0;
  /// Skip coordinates whose perturbed passes change the kink signature.
  bool exclude_kinks = true;
  /// Skip coordinates whose analytic gradient is below this fraction of the
  /// largest one in `p`. Near-zero gradients make the relative error a ratio
  /// of rounding noise; 0 checks every coordinate.
  double min_grad_fraction = 0.0;
  /// Optional extra filter on flat coordinate indices.
  std::function<bool(size_t)> accept;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t checked = 0;
  size_t skipped = 0;
};

/// Compares the analytic gradient of a scalar function of `p` against
/// central differences on sampled coordinates. `f` must build its graph on
/// the supplied tape and return a single-element Var.
GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& f,
                                  Parameter& p,
                                  const GradCheckOptions& options = {});

}  // namespace ag
}  // namespace irnet
