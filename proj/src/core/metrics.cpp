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

#include "irnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "format.hpp"

namespace irnet {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) +
                                               ": shape mismatch, " +
                                               a.shape().str() + " vs " +
                                               b.shape().str());
  }
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int64_t H,
                                 int64_t W,
                                 const std::array<double, kWindow>& g) {
  const int64_t ow = W - kWindow + 1, oh = H - kWindow + 1;
  std::vector<double> rows(static_cast<size_t>(H * ow));
  for (int64_t y = 0; y < H; ++y) {
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * plane[y * W + x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int64_t y = 0; y < oh; ++y) {
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Tensor& pred, const Tensor& gt) {
  require_same(pred, gt, "psnr");
  if (pred.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "psnr: empty images");
  }
  double se = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.raw()[i]) - gt.raw()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& pred, const Tensor& gt) {
  require_same(pred, gt, "ssim");
  if (pred.h() < kWindow || pred.w() < kWindow) {
    throw Error(ErrorCode::kInvalidArgument,
                "ssim: image " + std::to_string(pred.w()) + "x" +
                    std::to_string(pred.h()) + " is smaller than the " +
                    std::to_string(kWindow) + "x" + std::to_string(kWindow) +
                    " window");
  }
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto g = gaussian_window();
  const int64_t H = pred.h(), W = pred.w();
  const size_t hw = pred.shape().plane();
  double total = 0.0;
  size_t planes = 0;
  std::vector<double> x(hw), y(hw), xx(hw), yy(hw), xy(hw);
  for (int64_t n = 0; n < pred.n(); ++n) {
    for (int64_t c = 0; c < pred.c(); ++c) {
      const float* a = pred.plane(n, c);
      const float* b = gt.plane(n, c);
      for (size_t i = 0; i < hw; ++i) {
        x[i] = a[i];
        y[i] = b[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mx = filter_valid(x, H, W, g);
      const auto my = filter_valid(y, H, W, g);
      const auto sxx = filter_valid(xx, H, W, g);
      const auto syy = filter_valid(yy, H, W, g);
      const auto sxy = filter_valid(xy, H, W, g);
      double plane_sum = 0.0;
      for (size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        plane_sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      }
      total += plane_sum / static_cast<double>(mx.size());
      ++planes;
    }
  }
  return total / static_cast<double>(planes);
}

const char* to_string(LumaStandard s) {
  return s == LumaStandard::kRec709 ? "rec709" : "rec2020";
}

LumaStandard parse_luma_standard(const std::string& text) {
  if (text == "rec709" || text == "REC709") return LumaStandard::kRec709;
  if (text == "rec2020" || text == "REC2020") return LumaStandard::kRec2020;
  throw Error(ErrorCode::kInvalidConfig, "unknown luma standard '" + text + "'");
}

Tensor luma(const Tensor& x, LumaStandard standard) {
  if (x.c() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "luma: expected 3 channels, got " + std::to_string(x.c()));
  }
  const double kr = standard == LumaStandard::kRec709 ? 0.2126 : 0.2627;
  const double kb = standard == LumaStandard::kRec709 ? 0.0722 : 0.0593;
  Tensor out({x.n(), 1, x.h(), x.w()});
  const size_t hw = x.shape().plane();
  for (int64_t n = 0; n < x.n(); ++n) {
    const float* r = x.plane(n, 0);
    const float* g = x.plane(n, 1);
    const float* b = x.plane(n, 2);
    float* o = out.plane(n, 0);
    for (size_t i = 0; i < hw; ++i) {
      // kr R + kg G + kb B with kg = 1 - kr - kb, arranged around G.
      const double gv = g[i];
      o[i] = static_cast<float>(gv + kr * (r[i] - gv) + kb * (b[i] - gv));
    }
  }
  return out;
}

void EvalReport::finalize() {
  double psnr_sum = 0.0, ssim_sum = 0.0;
  size_t finite = 0;
  excluded = 0;
  for (const EvalRow& r : rows) {
    ssim_sum += r.ssim;
    if (std::isfinite(r.psnr)) {
      psnr_sum += r.psnr;
      ++finite;
    } else {
      ++excluded;
    }
  }
  mean_psnr = finite ? psnr_sum / static_cast<double>(finite)
                     : std::numeric_limits<double>::infinity();
  mean_ssim = rows.empty() ? 0.0 : ssim_sum / static_cast<double>(rows.size());
}

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "name,psnr_db,ssim\n";
  for (const EvalRow& r : report.rows) {
    out << r.name << "," << detail::g6(r.psnr) << "," << detail::g6(r.ssim)
        << "\n";
  }
  out << "mean," << detail::g6(report.mean_psnr) << ","
      << detail::g6(report.mean_ssim) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

LuminanceRecord analyze_luminance_pair(const Tensor& sdr, const Tensor& hdr,
                                       const std::string& name,
                                       const LuminanceOptions& options) {
  if (sdr.h() != hdr.h() || sdr.w() != hdr.w() || sdr.n() != 1 ||
      hdr.n() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "analyze_luminance: pair " + name + " has mismatched sizes " +
                    sdr.shape().str() + " vs " + hdr.shape().str());
  }
  const Tensor ys = luma(sdr, options.sdr_standard);
  const Tensor yh = luma(hdr, options.hdr_standard);
  const float* h = yh.raw();
  size_t arg_max = 0, arg_min = 0;
  for (size_t i = 1; i < yh.size(); ++i) {
    if (h[i] > h[arg_max]) arg_max = i;
    if (h[i] < h[arg_min]) arg_min = i;
  }
  LuminanceRecord r;
  r.name = name;
  r.hdr_max_luma = h[arg_max];
  r.sdr_luma_at_hdr_argmax = ys.raw()[arg_max];
  r.hdr_min_luma = h[arg_min];
  r.sdr_luma_at_hdr_argmin = ys.raw()[arg_min];
  return r;
}

std::vector<LuminanceRecord> analyze_luminance(
    const DatasetManifest& manifest, const LuminanceOptions& options) {
  std::vector<LuminanceRecord> records;
  for (const ManifestEntry& e : manifest.entries) {
    records.push_back(analyze_luminance_pair(load_png8(e.sdr),
                                             load_png16(e.hdr), e.name(),
                                             options));
  }
  return records;
}

void write_luminance_csv(const std::vector<LuminanceRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  // Normalized luma equals a 0-100 scale divided by 100.
  out << "name,hdr_max_luma_div100,sdr_luma_at_hdr_argmax_div100,"
         "hdr_min_luma_div100,sdr_luma_at_hdr_argmin_div100\n";
  for (const LuminanceRecord& r : records) {
    out << r.name << "," << detail::g6(r.hdr_max_luma) << ","
        << detail::g6(r.sdr_luma_at_hdr_argmax) << ","
        << detail::g6(r.hdr_min_luma) << ","
        << detail::g6(r.sdr_luma_at_hdr_argmin) << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

ProfileResult profile_ratio(const Tensor& img_a, const Tensor& img_b,
                            int64_t row, int64_t x0, int64_t x1,
                            LumaStandard standard) {
  if (img_a.shape() != img_b.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "profile_ratio: images differ in shape, " +
                    img_a.shape().str() + " vs " + img_b.shape().str());
  }
  if (row < 0 || row >= img_a.h() || x0 < 0 || x1 <= x0 || x1 > img_a.w()) {
    throw Error(ErrorCode::kInvalidArgument,
                "profile_ratio: segment row " + std::to_string(row) + ", x [" +
                    std::to_string(x0) + ", " + std::to_string(x1) +
                    ") is outside the " + std::to_string(img_a.w()) + "x" +
                    std::to_string(img_a.h()) + " image");
  }
  const Tensor ya = luma(img_a, standard);
  const Tensor yb = luma(img_b, standard);
  ProfileResult p;
  for (int64_t x = x0; x < x1; ++x) {
    const double a = ya.at(0, 0, row, x), b = yb.at(0, 0, row, x);
    p.a.push_back(a);
    p.b.push_back(b);
    p.ratio.push_back(a / std::max(b, 1e-6));
  }
  return p;
}

void write_profile_csv(const ProfileResult& profile, int64_t x0,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "x,luma_a,luma_b,ratio\n";
  for (size_t i = 0; i < profile.a.size(); ++i) {
    out << x0 + static_cast<int64_t>(i) << "," << detail::g6(profile.a[i])
        << "," << detail::g6(profile.b[i]) << ","
        << detail::g6(profile.ratio[i]) << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::pair<Tensor, Tensor> normalize_mean_maps(const Tensor& a,
                                              const Tensor& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw Error(ErrorCode::kShapeMismatch,
                "normalize_mean_maps: spatial sizes differ, " +
                    a.shape().str() + " vs " + b.shape().str());
  }
  const Tensor ma = a.c() == 1 ? a : channel_mean(a);
  const Tensor mb = b.c() == 1 ? b : channel_mean(b);
  auto [amin, amax] = std::minmax_element(ma.data().begin(), ma.data().end());
  auto [bmin, bmax] = std::minmax_element(mb.data().begin(), mb.data().end());
  const double lo = std::min<double>(*amin, *bmin);
  const double range = std::max<double>(static_cast<double>(*amax) - *amin,
                                        static_cast<double>(*bmax) - *bmin);
  Tensor na(ma.shape()), nb(mb.shape());
  if (range > 0.0) {
    for (size_t i = 0; i < ma.size(); ++i) {
      na.raw()[i] = static_cast<float>((ma.raw()[i] - lo) / range);
      nb.raw()[i] = static_cast<float>((mb.raw()[i] - lo) / range);
    }
  }
  return {std::move(na), std::move(nb)};
}

}  // namespace irnet
