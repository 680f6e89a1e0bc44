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

#include "irnet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include <omp.h>

#include "kernels.hpp"

namespace irnet {
namespace {

std::atomic<int> g_threads{1};

[[noreturn]] void shape_error(const std::string& msg) {
  throw Error(ErrorCode::kShapeMismatch, msg);
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "negative tensor extent " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape.numel()) {
    shape_error("tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + shape.str());
  }
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& other) {
  detail::require_same_shape(*this, other, "add_");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void set_num_threads(int threads) {
  g_threads = threads <= 0 ? std::max(1, omp_get_max_threads()) : threads;
}
int num_threads() { return g_threads.load(); }

namespace detail {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    shape_error(std::string(op) + ": shape mismatch, expected " +
                a.shape().str() + " got " + b.shape().str());
  }
}

void check_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                int padding) {
  if (x.c() != kernel.c()) {
    shape_error("conv2d: expected " + std::to_string(kernel.c()) +
                " input channels, got " + std::to_string(x.c()));
  }
  if (kernel.h() != kernel.w() || (kernel.h() != 1 && kernel.h() != 3)) {
    shape_error("conv2d: kernel must be 1x1 or 3x3, got " +
                kernel.shape().str());
  }
  if (padding != kernel.h() / 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "conv2d: padding " + std::to_string(padding) +
                    " does not preserve size for a " +
                    std::to_string(kernel.h()) + "x" +
                    std::to_string(kernel.w()) + " kernel");
  }
  if (bias.size() != static_cast<size_t>(kernel.n())) {
    shape_error("conv2d: bias has " + std::to_string(bias.size()) +
                " entries for " + std::to_string(kernel.n()) +
                " output channels");
  }
}

void conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel,
                           int padding, Tensor& grad_x) {
  const int64_t batch = grad_out.n(), cout = kernel.n(), cin = kernel.c();
  const int64_t H = grad_out.h(), W = grad_out.w(), K = kernel.h();
  const int threads = num_threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (int64_t idx = 0; idx < batch * cin; ++idx) {
    const int64_t n = idx / cin, ci = idx % cin;
    float* gx = grad_x.plane(n, ci);
    for (int64_t co = 0; co < cout; ++co) {
      const float* go = grad_out.plane(n, co);
      const float* kw = kernel.raw() + (co * cin + ci) * K * K;
      for (int64_t ky = 0; ky < K; ++ky) {
        const int64_t dy = ky - padding;
        const int64_t y0 = std::max<int64_t>(0, -dy);
        const int64_t y1 = std::min<int64_t>(H, H - dy);
        for (int64_t kx = 0; kx < K; ++kx) {
          const int64_t dx = kx - padding;
          const int64_t x0 = std::max<int64_t>(0, -dx);
          const int64_t x1 = std::min<int64_t>(W, W - dx);
          const float wv = kw[ky * K + kx];
          for (int64_t y = y0; y < y1; ++y) {
            const float* grow = go + y * W;
            float* xrow = gx + (y + dy) * W + dx;
            for (int64_t x = x0; x < x1; ++x) xrow[x] += wv * grow[x];
          }
        }
      }
    }
  }
}

namespace {

float dot(const float* a, const float* b, int64_t len) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int64_t i = 0;
  for (; i + 8 <= len; i += 8) {
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  }
  float tail = 0.0f;
  for (; i < len; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) +
         ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

}  // namespace

void conv2d_backward_weights(const Tensor& grad_out, const Tensor& x,
                             int padding, Tensor& grad_kernel,
                             Tensor& grad_bias) {
  const int64_t batch = grad_out.n(), cout = grad_kernel.n(),
                cin = grad_kernel.c();
  const int64_t H = grad_out.h(), W = grad_out.w(), K = grad_kernel.h();
  const int threads = num_threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (int64_t co = 0; co < cout; ++co) {
    double bsum = 0.0;
    for (int64_t n = 0; n < batch; ++n) {
      const float* go = grad_out.plane(n, co);
      for (int64_t y = 0; y < H; ++y) {
        float row = 0.0f;
        for (int64_t xi = 0; xi < W; ++xi) row += go[y * W + xi];
        bsum += row;
      }
    }
    grad_bias.raw()[co] += static_cast<float>(bsum);
    for (int64_t ci = 0; ci < cin; ++ci) {
      float* gk = grad_kernel.raw() + (co * cin + ci) * K * K;
      for (int64_t ky = 0; ky < K; ++ky) {
        const int64_t dy = ky - padding;
        const int64_t y0 = std::max<int64_t>(0, -dy);
        const int64_t y1 = std::min<int64_t>(H, H - dy);
        for (int64_t kx = 0; kx < K; ++kx) {
          const int64_t dx = kx - padding;
          const int64_t x0 = std::max<int64_t>(0, -dx);
          const int64_t x1 = std::min<int64_t>(W, W - dx);
          double acc = 0.0;
          for (int64_t n = 0; n < batch; ++n) {
            const float* go = grad_out.plane(n, co);
            const float* in = x.plane(n, ci);
            for (int64_t y = y0; y < y1; ++y) {
              acc += dot(go + y * W + x0, in + (y + dy) * W + x0 + dx,
                         x1 - x0);
            }
          }
          gk[ky * K + kx] += static_cast<float>(acc);
        }
      }
    }
  }
}

void pixel_shuffle_backward(const Tensor& grad_out, int s, Tensor& grad_x) {
  const int64_t batch = grad_x.n(), cin = grad_x.c(), H = grad_x.h(),
                W = grad_x.w();
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t ci = 0; ci < cin; ++ci) {
      const int64_t c = ci / (s * s), r = ci % (s * s);
      const int64_t dy = r / s, dx = r % s;
      float* gx = grad_x.plane(n, ci);
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
          gx[y * W + x] += grad_out.at(n, c, y * s + dy, x * s + dx);
        }
      }
    }
  }
}

void global_contrast_pool_backward(const Tensor& x, const Tensor& grad_z,
                                   Tensor& grad_x) {
  const size_t hw = x.shape().plane();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float* p = x.plane(n, c);
      double mean = 0.0;
      for (size_t i = 0; i < hw; ++i) mean += p[i];
      mean /= static_cast<double>(hw);
      double var = 0.0;
      for (size_t i = 0; i < hw; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= static_cast<double>(hw);
      const double sd = std::sqrt(var);
      const double g = grad_z.at(n, c, 0, 0);
      float* gx = grad_x.plane(n, c);
      for (size_t i = 0; i < hw; ++i) {
        // sqrt is not differentiable at zero variance; the std term
        // contributes nothing there.
        double d = 1.0 / static_cast<double>(hw);
        if (sd > 0.0) d += (p[i] - mean) / (static_cast<double>(hw) * sd);
        gx[i] += static_cast<float>(g * d);
      }
    }
  }
}

}  // namespace detail

Tensor conv2d(const Tensor& x, const ConvWeights& w, int padding) {
  return conv2d(x, w.kernel, w.bias, padding);
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int padding) {
  detail::check_conv(x, kernel, bias, padding);
  const int64_t batch = x.n(), cin = x.c(), cout = kernel.n();
  const int64_t H = x.h(), W = x.w(), K = kernel.h();
  Tensor out({batch, cout, H, W});
  const int threads = num_threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (int64_t idx = 0; idx < batch * cout; ++idx) {
    const int64_t n = idx / cout, co = idx % cout;
    float* o = out.plane(n, co);
    const float b = bias.raw()[co];
    for (int64_t y = 0; y < H; ++y) {
      float* orow = o + y * W;
      std::fill(orow, orow + W, b);
      for (int64_t ci = 0; ci < cin; ++ci) {
        const float* in = x.plane(n, ci);
        const float* kw = kernel.raw() + (co * cin + ci) * K * K;
        for (int64_t ky = 0; ky < K; ++ky) {
          const int64_t iy = y + ky - padding;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < K; ++kx) {
            const int64_t dx = kx - padding;
            const int64_t x0 = std::max<int64_t>(0, -dx);
            const int64_t x1 = std::min<int64_t>(W, W - dx);
            const float wv = kw[ky * K + kx];
            const float* irow = in + iy * W + dx;
            for (int64_t xi = x0; xi < x1; ++xi) orow[xi] += wv * irow[xi];
          }
        }
      }
    }
  }
  return out;
}

namespace {

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  const float* in = x.raw();
  float* o = out.raw();
  for (size_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace

Tensor leaky_relu(const Tensor& x, float slope) {
  if (!(slope > 0.0f && slope < 1.0f)) {
    throw Error(ErrorCode::kInvalidArgument,
                "leaky_relu: slope must lie in (0, 1)");
  }
  return map(x, [slope](float v) { return v > 0.0f ? v : slope * v; });
}

Tensor relu(const Tensor& x) {
  return map(x, [](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor sigmoid(const Tensor& x) {
  return map(x, [](float v) {
    if (v >= 0.0f) return 1.0f / (1.0f + std::exp(-v));
    const float e = std::exp(v);
    return e / (1.0f + e);
  });
}

Tensor add(const Tensor& x, const Tensor& y) {
  detail::require_same_shape(x, y, "add");
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out.raw()[i] = x.raw()[i] + y.raw()[i];
  return out;
}

Tensor subtract(const Tensor& x, const Tensor& y) {
  detail::require_same_shape(x, y, "subtract");
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out.raw()[i] = x.raw()[i] - y.raw()[i];
  return out;
}

Tensor scale(const Tensor& x, float alpha) {
  return map(x, [alpha](float v) { return alpha * v; });
}

Tensor scale_channels(const Tensor& x, const Tensor& a) {
  if (a.n() != x.n() || a.c() != x.c() || a.h() != 1 || a.w() != 1) {
    shape_error("scale_channels: expected scale of shape (" +
                std::to_string(x.n()) + "," + std::to_string(x.c()) +
                ",1,1), got " + a.shape().str());
  }
  Tensor out(x.shape());
  const size_t hw = x.shape().plane();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float s = a.at(n, c, 0, 0);
      const float* in = x.plane(n, c);
      float* o = out.plane(n, c);
      for (size_t i = 0; i < hw; ++i) o[i] = in[i] * s;
    }
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "concat_channels: no inputs");
  }
  const Shape& first = parts.front().shape();
  int64_t channels = 0;
  for (const Tensor& p : parts) {
    if (p.n() != first.n || p.h() != first.h || p.w() != first.w) {
      shape_error("concat_channels: part " + p.shape().str() +
                  " is incompatible with " + first.str());
    }
    channels += p.c();
  }
  Tensor out({first.n, channels, first.h, first.w});
  const size_t hw = first.plane();
  for (int64_t n = 0; n < first.n; ++n) {
    int64_t offset = 0;
    for (const Tensor& p : parts) {
      std::copy_n(p.plane(n, 0), hw * p.c(), out.plane(n, offset));
      offset += p.c();
    }
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& x,
                                   std::span<const int64_t> widths) {
  int64_t total = 0;
  for (int64_t w : widths) total += w;
  if (total != x.c()) {
    shape_error("split_channels: widths sum to " + std::to_string(total) +
                " but tensor has " + std::to_string(x.c()) + " channels");
  }
  std::vector<Tensor> parts;
  const size_t hw = x.shape().plane();
  int64_t offset = 0;
  for (int64_t width : widths) {
    Tensor p({x.n(), width, x.h(), x.w()});
    for (int64_t n = 0; n < x.n(); ++n) {
      std::copy_n(x.plane(n, offset), hw * width, p.plane(n, 0));
    }
    offset += width;
    parts.push_back(std::move(p));
  }
  return parts;
}

Tensor pixel_shuffle(const Tensor& x, int s) {
  if (s < 1) throw Error(ErrorCode::kInvalidArgument, "pixel_shuffle: s < 1");
  const int64_t ss = static_cast<int64_t>(s) * s;
  if (x.c() % ss != 0) {
    shape_error("pixel_shuffle: " + std::to_string(x.c()) +
                " channels not divisible by " + std::to_string(ss));
  }
  const int64_t cout = x.c() / ss, H = x.h(), W = x.w();
  Tensor out({x.n(), cout, H * s, W * s});
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t ci = 0; ci < x.c(); ++ci) {
      const int64_t c = ci / ss, r = ci % ss;
      const int64_t dy = r / s, dx = r % s;
      const float* in = x.plane(n, ci);
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t xi = 0; xi < W; ++xi) {
          out.at(n, c, y * s + dy, xi * s + dx) = in[y * W + xi];
        }
      }
    }
  }
  return out;
}

Tensor global_contrast_pool(const Tensor& x) {
  if (x.shape().plane() == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "global_contrast_pool: empty spatial extent");
  }
  Tensor out({x.n(), x.c(), 1, 1});
  const size_t hw = x.shape().plane();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float* p = x.plane(n, c);
      double mean = 0.0;
      for (size_t i = 0; i < hw; ++i) mean += p[i];
      mean /= static_cast<double>(hw);
      double var = 0.0;
      for (size_t i = 0; i < hw; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= static_cast<double>(hw);
      out.at(n, c, 0, 0) = static_cast<float>(std::sqrt(var) + mean);
    }
  }
  return out;
}

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  const double at = std::abs(t);
  if (at <= 1.0) return ((a + 2.0) * at - (a + 3.0)) * at * at + 1.0;
  if (at < 2.0) return ((a * at - 5.0 * a) * at + 8.0 * a) * at - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int64_t> first;  // first clamped source index per tap
  std::vector<std::vector<int64_t>> index;
  std::vector<std::vector<double>> weight;
};

// Resampling taps for a reduction by s. The kernel is stretched by s so the
// filter also acts as the antialiasing low-pass.
Taps make_taps(int64_t in_len, int s) {
  const int64_t out_len = in_len / s;
  Taps taps;
  taps.index.resize(out_len);
  taps.weight.resize(out_len);
  for (int64_t i = 0; i < out_len; ++i) {
    const double center = (static_cast<double>(i) + 0.5) * s - 0.5;
    const int64_t lo = static_cast<int64_t>(std::floor(center - 2.0 * s));
    const int64_t hi = static_cast<int64_t>(std::ceil(center + 2.0 * s));
    double total = 0.0;
    for (int64_t j = lo; j <= hi; ++j) {
      const double wv = cubic_kernel((center - static_cast<double>(j)) / s);
      if (wv == 0.0) continue;
      taps.index[i].push_back(std::clamp<int64_t>(j, 0, in_len - 1));
      taps.weight[i].push_back(wv);
      total += wv;
    }
    for (double& wv : taps.weight[i]) wv /= total;
  }
  return taps;
}

}  // namespace

Tensor bicubic_downsample(const Tensor& x, int s) {
  if (s < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bicubic_downsample: s < 1");
  }
  if (x.h() % s != 0 || x.w() % s != 0) {
    shape_error("bicubic_downsample: " + std::to_string(x.h()) + "x" +
                std::to_string(x.w()) + " is not divisible by " +
                std::to_string(s));
  }
  const int64_t H = x.h(), W = x.w(), oh = H / s, ow = W / s;
  const Taps tx = make_taps(W, s);
  const Taps ty = make_taps(H, s);
  Tensor out({x.n(), x.c(), oh, ow});
  std::vector<double> rows(static_cast<size_t>(H * ow));
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float* in = x.plane(n, c);
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (size_t t = 0; t < tx.index[j].size(); ++t) {
            acc += tx.weight[j][t] * in[y * W + tx.index[j][t]];
          }
          rows[y * ow + j] = acc;
        }
      }
      float* o = out.plane(n, c);
      for (int64_t i = 0; i < oh; ++i) {
        for (int64_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (size_t t = 0; t < ty.index[i].size(); ++t) {
            acc += ty.weight[i][t] * rows[ty.index[i][t] * ow + j];
          }
          o[i * ow + j] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

Tensor channel_mean(const Tensor& x) {
  Tensor out({x.n(), 1, x.h(), x.w()});
  const size_t hw = x.shape().plane();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (size_t i = 0; i < hw; ++i) {
      double acc = 0.0;
      for (int64_t c = 0; c < x.c(); ++c) acc += x.plane(n, c)[i];
      out.plane(n, 0)[i] = static_cast<float>(acc / static_cast<double>(x.c()));
    }
  }
  return out;
}

Tensor clamp(const Tensor& x, float lo, float hi) {
  return map(x, [lo, hi](float v) { return std::clamp(v, lo, hi); });
}

Tensor crop(const Tensor& x, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  if (y0 < 0 || x0 < 0 || h < 0 || w < 0 || y0 + h > x.h() ||
      x0 + w > x.w()) {
    throw Error(ErrorCode::kInvalidArgument,
                "crop: window exceeds image " + x.shape().str());
  }
  Tensor out({x.n(), x.c(), h, w});
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float* in = x.plane(n, c);
      float* o = out.plane(n, c);
      for (int64_t y = 0; y < h; ++y) {
        std::copy_n(in + (y0 + y) * x.w() + x0, w, o + y * w);
      }
    }
  }
  return out;
}

Tensor stack_batch(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "stack_batch: no inputs");
  }
  const Shape& s = parts.front().shape();
  int64_t batch = 0;
  for (const Tensor& p : parts) {
    if (p.c() != s.c || p.h() != s.h || p.w() != s.w) {
      shape_error("stack_batch: " + p.shape().str() + " vs " + s.str());
    }
    batch += p.n();
  }
  Tensor out({batch, s.c, s.h, s.w});
  size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.raw() + offset);
    offset += p.size();
  }
  return out;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInvalidConfig: return "invalid configuration";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kNumeric: return "numeric failure";
    case ErrorCode::kState: return "invalid state";
  }
  return "unknown error";
}

}  // namespace irnet
