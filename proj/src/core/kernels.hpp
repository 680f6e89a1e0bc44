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

// Backward kernels shared by the autograd engine. Not part of the public
// headers.

#include "irnet/tensor.hpp"

namespace irnet::detail {

void check_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                int padding);

/// grad_x += conv2d^T(grad_out)
void conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel,
                           int padding, Tensor& grad_x);
/// grad_kernel += correlation of grad_out with x; grad_bias += sum(grad_out)
void conv2d_backward_weights(const Tensor& grad_out, const Tensor& x,
                             int padding, Tensor& grad_kernel,
                             Tensor& grad_bias);

/// grad_x += pixel_unshuffle(grad_out)
void pixel_shuffle_backward(const Tensor& grad_out, int s, Tensor& grad_x);

/// grad_x += d(global_contrast_pool)/dx applied to grad_z
void global_contrast_pool_backward(const Tensor& x, const Tensor& grad_z,
                                   Tensor& grad_x);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace irnet::detail
