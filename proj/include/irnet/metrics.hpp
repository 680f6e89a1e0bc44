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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "irnet/data.hpp"
#include "irnet/tensor.hpp"

namespace irnet {

/// 10 log10(1 / MSE) over every element with peak 1. Identical inputs give
/// +infinity.
double psnr(const Tensor& pred, const Tensor& gt);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1. Only windows fully inside the image count.
/// Computed per (batch, channel) plane and averaged.
double ssim(const Tensor& pred, const Tensor& gt);

enum class LumaStandard { kRec709, kRec2020 };

const char* to_string(LumaStandard s);
LumaStandard parse_luma_standard(const std::string& text);

/// Weighted RGB sum, shape (N, 1, H, W). Grey pixels map to their grey
/// level exactly.
Tensor luma(const Tensor& x, LumaStandard standard);

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  /// PSNR mean over finite rows (infinite rows are counted in `excluded`;
  /// +inf when every row is infinite). SSIM mean over all rows.
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  size_t excluded = 0;

  /// Recomputes the means from the rows.
  void finalize();
};

/// "name,psnr_db,ssim" rows, then a "mean" row.
void write_eval_csv(const EvalReport& report, const std::filesystem::path& path);

struct LuminanceRecord {
  std::string name;
  double hdr_max_luma = 0.0;
  double sdr_luma_at_hdr_argmax = 0.0;
  double hdr_min_luma = 0.0;
  double sdr_luma_at_hdr_argmin = 0.0;

  double max_gap() const { return hdr_max_luma - sdr_luma_at_hdr_argmax; }
  double min_gap() const { return hdr_min_luma - sdr_luma_at_hdr_argmin; }
};

struct LuminanceOptions {
  LumaStandard sdr_standard = LumaStandard::kRec709;
  LumaStandard hdr_standard = LumaStandard::kRec2020;
};

/// Locates the HDR luma extremes (first in row-major order on ties) and
/// reads the SDR luma at the same pixels.
LuminanceRecord analyze_luminance_pair(const Tensor& sdr, const Tensor& hdr,
                                       const std::string& name,
                                       const LuminanceOptions& options = {});
std::vector<LuminanceRecord> analyze_luminance(
    const DatasetManifest& manifest, const LuminanceOptions& options = {});
/// Normalized luma, columns suffixed "_div100" (a 0-100 scale over 100).
void write_luminance_csv(const std::vector<LuminanceRecord>& records,
                         const std::filesystem::path& path);

struct ProfileResult {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> ratio;
};

/// Luma of both images along row `row` for x in [x0, x1), and a / b with
/// the denominator floored at 1e-6.
ProfileResult profile_ratio(const Tensor& img_a, const Tensor& img_b,
                            int64_t row, int64_t x0, int64_t x1,
                            LumaStandard standard = LumaStandard::kRec709);
/// "x,luma_a,luma_b,ratio"
void write_profile_csv(const ProfileResult& profile, int64_t x0,
                       const std::filesystem::path& path);

/// Channel-mean maps of a and b shifted by their joint minimum and divided
/// by the larger of the two ranges. A zero range yields zero maps.
std::pair<Tensor, Tensor> normalize_mean_maps(const Tensor& a,
                                              const Tensor& b);

}  // namespace irnet
