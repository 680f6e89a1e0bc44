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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irnet/error.hpp"

namespace irnet {

/// Batch/channel/height/width extents of a 4-D tensor.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  size_t numel() const {
    return static_cast<size_t>(n) * static_cast<size_t>(c) *
           static_cast<size_t>(h) * static_cast<size_t>(w);
  }
  size_t plane() const {
    return static_cast<size_t>(h) * static_cast<size_t>(w);
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense float32 tensor in NCHW layout, width fastest.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  int64_t n() const { return shape_.n; }
  int64_t c() const { return shape_.c; }
  int64_t h() const { return shape_.h; }
  int64_t w() const { return shape_.w; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  float* plane(int64_t n, int64_t c) {
    return data_.data() + index(n, c, 0, 0);
  }
  const float* plane(int64_t n, int64_t c) const {
    return data_.data() + index(n, c, 0, 0);
  }

  float& at(int64_t n, int64_t c, int64_t y, int64_t x) {
    return data_[index(n, c, y, x)];
  }
  float at(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data_[index(n, c, y, x)];
  }

  void fill(float v);
  /// In-place elementwise accumulation; shapes must match.
  void add_(const Tensor& other);

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  size_t index(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return ((static_cast<size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w + x;
  }

  Shape shape_;
  std::vector<float> data_;
};

/// Convolution parameters. kernel is (out, in, k, k); bias is (out, 1, 1, 1).
struct ConvWeights {
  Tensor kernel;
  Tensor bias;

  int64_t out_channels() const { return kernel.n(); }
  int64_t in_channels() const { return kernel.c(); }
  int64_t kernel_size() const { return kernel.h(); }
};

// Threading. 1 (the default) selects the serial path and 0 uses every OpenMP
// thread. Kernels partition work by output element, so results do not
// depend on the thread count.
void set_num_threads(int threads);
int num_threads();

// Forward kernels.
Tensor conv2d(const Tensor& x, const ConvWeights& w, int padding);
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int padding);
Tensor leaky_relu(const Tensor& x, float slope);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor add(const Tensor& x, const Tensor& y);
Tensor subtract(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, float alpha);
Tensor scale_channels(const Tensor& x, const Tensor& a);
Tensor concat_channels(std::span<const Tensor> parts);
/// Inverse of concat_channels for the given channel widths.
std::vector<Tensor> split_channels(const Tensor& x,
                                   std::span<const int64_t> widths);
Tensor pixel_shuffle(const Tensor& x, int s);
/// Per-channel population standard deviation plus mean, shape (N, C, 1, 1).
Tensor global_contrast_pool(const Tensor& x);
/// Antialiased bicubic (a = -0.5) reduction by an integer factor with edge
/// clamping; output clamped to [0, 1].
Tensor bicubic_downsample(const Tensor& x, int s);
/// Mean over channels, shape (N, 1, H, W).
Tensor channel_mean(const Tensor& x);
Tensor clamp(const Tensor& x, float lo, float hi);
/// Copies a spatial window [y0, y0+h) x [x0, x0+w) of every channel.
Tensor crop(const Tensor& x, int64_t y0, int64_t x0, int64_t h, int64_t w);
/// Concatenates along the batch axis.
Tensor stack_batch(std::span<const Tensor> parts);

/// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double t);

}  // namespace irnet
