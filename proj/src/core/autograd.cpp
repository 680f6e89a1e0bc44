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

#include "irnet/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kernels.hpp"

namespace irnet {

Parameter::Parameter(std::string n, Tensor v, int r)
    : name(std::move(n)), value(std::move(v)), rank(r) {
  grad = Tensor(value.shape());
}

std::vector<int64_t> Parameter::dims() const {
  if (rank == 1) return {value.n()};
  return {value.n(), value.c(), value.h(), value.w()};
}

namespace ag {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, {}, &p, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) {
      throw Error(ErrorCode::kState, "operand recorded on a different tape");
    }
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record_scalar(double value, std::vector<Var> inputs,
                        BackwardFn backward) {
  Var v = record(Tensor({1, 1, 1, 1}, static_cast<float>(value)),
                 std::move(inputs), std::move(backward));
  nodes_[v.id()].scalar = value;
  return v;
}

double Tape::scalar(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "scalar: node holds " + std::to_string(node.value.size()) +
                    " elements");
  }
  return node.scalar ? *node.scalar : node.value.raw()[0];
}

Tensor& Tape::grad_of(Var v) {
  Node& node = nodes_[v.id()];
  if (node.grad.shape() != node.value.shape() || node.grad.empty()) {
    node.grad = Tensor(node.value.shape());
  }
  return node.grad;
}

void Tape::mix_kink_signature(uint64_t h) {
  kink_signature_ ^= h + 0x9e3779b97f4a7c15ull + (kink_signature_ << 6) +
                     (kink_signature_ >> 2);
}

void Tape::backward(Var output, const Tensor& seed) {
  if (consumed_) {
    throw Error(ErrorCode::kState, "backward: tape was already consumed");
  }
  if (nodes_.empty()) {
    throw Error(ErrorCode::kState, "backward: empty tape");
  }
  if (output.tape() != this) {
    throw Error(ErrorCode::kState, "backward: output is not on this tape");
  }
  detail::require_same_shape(value(output), seed, "backward seed");
  consumed_ = true;
  grad_of(output).add_(seed);
  for (size_t i = output.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      if (node.param->grad.shape() != node.param->value.shape()) {
        node.param->zero_grad();
      }
      node.param->grad.add_(node.grad);
    } else if (node.backward) {
      // Copy the slot out: the callback may touch grad_of() for other nodes
      // but never this one.
      const Tensor upstream = node.grad;
      nodes_[i].backward(*this, upstream);
    }
  }
}

void Tape::backward(Var output) {
  backward(output, Tensor(value(output).shape(), 1.0f));
}

namespace {

uint64_t sign_hash(const Tensor& x, float threshold = 0.0f) {
  uint64_t h = 1469598103934665603ull;
  const float* p = x.raw();
  for (size_t i = 0; i < x.size(); ++i) {
    h ^= p[i] > threshold ? 1u : 0u;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Var conv2d(Var x, Var kernel, Var bias, int padding) {
  Tape& tape = *x.tape();
  Tensor out = irnet::conv2d(x.value(), kernel.value(), bias.value(), padding);
  return tape.record(
      std::move(out), {x, kernel, bias},
      [x, kernel, bias, padding](Tape& t, const Tensor& g) {
        if (t.requires_grad(x)) {
          detail::conv2d_backward_input(g, t.value(kernel), padding,
                                        t.grad_of(x));
        }
        if (t.requires_grad(kernel) || t.requires_grad(bias)) {
          detail::conv2d_backward_weights(g, t.value(x), padding,
                                          t.grad_of(kernel), t.grad_of(bias));
        }
      });
}

Var leaky_relu(Var x, float slope) {
  Tape& tape = *x.tape();
  Tensor out = irnet::leaky_relu(x.value(), slope);
  tape.mix_kink_signature(sign_hash(x.value()));
  return tape.record(std::move(out), {x}, [x, slope](Tape& t, const Tensor& g) {
    const float* in = t.value(x).raw();
    float* gx = t.grad_of(x).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      // The subgradient at exactly zero takes the negative-side slope.
      gx[i] += in[i] > 0.0f ? g.raw()[i] : slope * g.raw()[i];
    }
  });
}

Var relu(Var x) {
  Tape& tape = *x.tape();
  Tensor out = irnet::relu(x.value());
  tape.mix_kink_signature(sign_hash(x.value()));
  return tape.record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const float* in = t.value(x).raw();
    float* gx = t.grad_of(x).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0f) gx[i] += g.raw()[i];
    }
  });
}

Var sigmoid(Var x) {
  Tape& tape = *x.tape();
  Tensor out = irnet::sigmoid(x.value());
  return tape.record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor s = irnet::sigmoid(t.value(x));
    float* gx = t.grad_of(x).raw();
    for (size_t i = 0; i < g.size(); ++i) {
      gx[i] += g.raw()[i] * s.raw()[i] * (1.0f - s.raw()[i]);
    }
  });
}

Var add(Var x, Var y) {
  Tape& tape = *x.tape();
  Tensor out = irnet::add(x.value(), y.value());
  return tape.record(std::move(out), {x, y}, [x, y](Tape& t, const Tensor& g) {
    if (t.requires_grad(x)) t.grad_of(x).add_(g);
    if (t.requires_grad(y)) t.grad_of(y).add_(g);
  });
}

Var scale_channels(Var x, Var a) {
  Tape& tape = *x.tape();
  Tensor out = irnet::scale_channels(x.value(), a.value());
  return tape.record(std::move(out), {x, a}, [x, a](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& av = t.value(a);
    const size_t hw = xv.shape().plane();
    const bool need_x = t.requires_grad(x), need_a = t.requires_grad(a);
    for (int64_t n = 0; n < xv.n(); ++n) {
      for (int64_t c = 0; c < xv.c(); ++c) {
        const float* gp = g.plane(n, c);
        if (need_x) {
          const float s = av.at(n, c, 0, 0);
          float* gx = t.grad_of(x).plane(n, c);
          for (size_t i = 0; i < hw; ++i) gx[i] += gp[i] * s;
        }
        if (need_a) {
          const float* xp = xv.plane(n, c);
          double acc = 0.0;
          for (size_t i = 0; i < hw; ++i) acc += gp[i] * xp[i];
          t.grad_of(a).at(n, c, 0, 0) += static_cast<float>(acc);
        }
      }
    }
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "concat_channels: no inputs");
  }
  Tape& tape = *parts.front().tape();
  std::vector<Tensor> values;
  std::vector<int64_t> widths;
  for (const Var& v : parts) {
    values.push_back(v.value());
    widths.push_back(v.value().c());
  }
  Tensor out = irnet::concat_channels(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.record(
      std::move(out), inputs, [inputs, widths](Tape& t, const Tensor& g) {
        std::vector<Tensor> pieces = split_channels(g, widths);
        for (size_t i = 0; i < inputs.size(); ++i) {
          if (t.requires_grad(inputs[i])) t.grad_of(inputs[i]).add_(pieces[i]);
        }
      });
}

Var pixel_shuffle(Var x, int s) {
  Tape& tape = *x.tape();
  Tensor out = irnet::pixel_shuffle(x.value(), s);
  return tape.record(std::move(out), {x}, [x, s](Tape& t, const Tensor& g) {
    detail::pixel_shuffle_backward(g, s, t.grad_of(x));
  });
}

Var global_contrast_pool(Var x) {
  Tape& tape = *x.tape();
  Tensor out = irnet::global_contrast_pool(x.value());
  return tape.record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    detail::global_contrast_pool_backward(t.value(x), g, t.grad_of(x));
  });
}

Var sum(Var x) {
  Tape& tape = *x.tape();
  double acc = 0.0;
  for (float v : x.value().data()) acc += v;
  return tape.record_scalar(acc, {x}, [x](Tape& t, const Tensor& g) {
    const float gv = g.raw()[0];
    float* gx = t.grad_of(x).raw();
    for (size_t i = 0; i < t.value(x).size(); ++i) gx[i] += gv;
  });
}

Var l1_loss(Var pred, const Tensor& target) {
  Tape& tape = *pred.tape();
  detail::require_same_shape(pred.value(), target, "l1_loss");
  const Tensor& p = pred.value();
  double acc = 0.0;
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < p.size(); ++i) {
    const float d = p.raw()[i] - target.raw()[i];
    acc += std::abs(static_cast<double>(d));
    h = (h ^ (d > 0.0f ? 1u : 0u)) * 1099511628211ull;
  }
  tape.mix_kink_signature(h);
  const double count = static_cast<double>(p.size());
  return tape.record_scalar(
      acc / count, {pred}, [pred, target, count](Tape& t, const Tensor& g) {
        const float* pv = t.value(pred).raw();
        const float* tv = target.raw();
        float* gp = t.grad_of(pred).raw();
        const float scale = static_cast<float>(g.raw()[0] / count);
        for (size_t i = 0; i < target.size(); ++i) {
          const float d = pv[i] - tv[i];
          gp[i] += d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
        }
      });
}

GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& f,
                                  Parameter& p,
                                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "finite_diff_check: eps <= 0");
  }
  auto evaluate = [&](uint64_t* signature) {
    Tape tape;
    Var out = f(tape);
    const double v = tape.scalar(out);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNumeric,
                  "finite_diff_check: function value is not finite");
    }
    if (signature) *signature = tape.kink_signature();
    return v;
  };

  p.zero_grad();
  uint64_t base_signature = 0;
  {
    Tape tape;
    Var out = f(tape);
    if (!std::isfinite(tape.scalar(out))) {
      throw Error(ErrorCode::kNumeric,
                  "finite_diff_check: function value is not finite");
    }
    base_signature = tape.kink_signature();
    tape.backward(out);
  }
  const Tensor analytic = p.grad;
  double largest = 0.0;
  for (float g : analytic.data()) largest = std::max(largest, double(std::abs(g)));
  const double floor = options.min_grad_fraction * largest;

  std::vector<size_t> order(p.value.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);

  GradCheckResult result;
  for (size_t idx : order) {
    if (result.checked >= options.coordinates) break;
    if ((options.accept && !options.accept(idx)) ||
        std::abs(analytic.raw()[idx]) < floor) {
      ++result.skipped;
      continue;
    }
    float& slot = p.value.raw()[idx];
    const float original = slot;
    const float plus = static_cast<float>(original + options.eps);
    const float minus = static_cast<float>(original - options.eps);
    uint64_t sig_plus = 0, sig_minus = 0;
    slot = plus;
    const double f_plus = evaluate(&sig_plus);
    slot = minus;
    const double f_minus = evaluate(&sig_minus);
    slot = original;
    if (options.exclude_kinks &&
        (sig_plus != base_signature || sig_minus != base_signature)) {
      ++result.skipped;
      continue;
    }
    const double central =
        (f_plus - f_minus) / (static_cast<double>(plus) - minus);
    const double a = analytic.raw()[idx];
    const double denom = std::max({std::abs(a), std::abs(central), 1e-6});
    result.max_rel_error =
        std::max(result.max_rel_error, std::abs(a - central) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace ag
}  // namespace irnet
