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

#include "irnet/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "binary_io.hpp"

namespace irnet {

namespace fs = std::filesystem;

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  DatasetManifest manifest;
  const fs::path base = path.parent_path();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.find("role=test") != std::string::npos) {
        manifest.role = Role::kTest;
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::kFormat,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected exactly two tab-separated paths");
    }
    ManifestEntry e{line.substr(0, tab), line.substr(tab + 1)};
    if (e.sdr.is_relative()) e.sdr = base / e.sdr;
    if (e.hdr.is_relative()) e.hdr = base / e.hdr;
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
  out << "# irnet manifest role="
      << (manifest.role == Role::kTrain ? "train" : "test") << "\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << e.sdr.string() << "\t" << e.hdr.string() << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void validate_manifest(const DatasetManifest& manifest) {
  for (const ManifestEntry& e : manifest.entries) {
    const Tensor sdr = load_png8(e.sdr);
    const Tensor hdr = load_png16(e.hdr);
    if (sdr.h() != hdr.h() || sdr.w() != hdr.w()) {
      throw Error(ErrorCode::kFormat,
                  "pair " + e.name() + ": SDR is " + std::to_string(sdr.w()) +
                      "x" + std::to_string(sdr.h()) + " but HDR is " +
                      std::to_string(hdr.w()) + "x" + std::to_string(hdr.h()));
    }
  }
}

namespace {

std::map<std::string, fs::path> png_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::map<std::string, fs::path> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
      stems[entry.path().stem().string()] = fs::absolute(entry.path());
    }
  }
  return stems;
}

}  // namespace

PairingResult pair_directories(const fs::path& sdr_dir,
                               const fs::path& hdr_dir) {
  const auto sdr = png_stems(sdr_dir);
  const auto hdr = png_stems(hdr_dir);
  PairingResult result;
  for (const auto& [stem, path] : sdr) {
    auto it = hdr.find(stem);
    if (it == hdr.end()) {
      result.unpaired.push_back(stem);
    } else {
      result.manifest.entries.push_back({path, it->second});
    }
  }
  for (const auto& [stem, path] : hdr) {
    if (!sdr.count(stem)) result.unpaired.push_back(stem);
  }
  std::sort(result.unpaired.begin(), result.unpaired.end());
  return result;
}

Tensor make_lr(const Tensor& sdr, int s) {
  return clamp(bicubic_downsample(sdr, s), 0.0f, 1.0f);
}

std::vector<PatchPair> crop_patches(const Tensor& sdr, const Tensor& hdr,
                                    const CropSpec& spec,
                                    std::mt19937_64& rng) {
  const int64_t s = spec.scale, P = spec.size;
  if (s < 1 || P < 1 || P % s != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "crop_patches: patch size must be a positive multiple of the "
                "scale");
  }
  if (spec.count < 0) {
    throw Error(ErrorCode::kInvalidArgument, "crop_patches: negative count");
  }
  if (sdr.h() != hdr.h() || sdr.w() != hdr.w()) {
    throw Error(ErrorCode::kShapeMismatch,
                "crop_patches: SDR " + sdr.shape().str() +
                    " and HDR " + hdr.shape().str() + " differ in size");
  }
  // Trim to the scale grid so the low-resolution counterpart is exact.
  const int64_t H = hdr.h() - hdr.h() % s, W = hdr.w() - hdr.w() % s;
  if (H < P || W < P) {
    throw Error(ErrorCode::kInvalidArgument,
                "crop_patches: image " + std::to_string(hdr.w()) + "x" +
                    std::to_string(hdr.h()) + " is smaller than patch " +
                    std::to_string(P));
  }
  Tensor lr;
  if (s > 1) lr = make_lr(crop(sdr, 0, 0, H, W), static_cast<int>(s));
  std::uniform_int_distribution<int64_t> pick_y(0, (H - P) / s);
  std::uniform_int_distribution<int64_t> pick_x(0, (W - P) / s);
  std::vector<PatchPair> patches;
  patches.reserve(static_cast<size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    const int64_t y = pick_y(rng) * s;
    const int64_t x = pick_x(rng) * s;
    PatchPair p;
    p.hdr = crop(hdr, y, x, P, P);
    p.sdr = s > 1 ? crop(lr, y / s, x / s, P / s, P / s) : crop(sdr, y, x, P, P);
    patches.push_back(std::move(p));
  }
  return patches;
}

Tensor dihedral(const Tensor& x, int transform) {
  const bool flip = (transform & 1) != 0;
  const int rotations = (transform >> 1) & 3;
  const int64_t H = x.h(), W = x.w();
  const bool swap = rotations % 2 == 1;
  Tensor out({x.n(), x.c(), swap ? W : H, swap ? H : W});
  const int64_t oh = out.h(), ow = out.w();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < x.c(); ++c) {
      const float* in = x.plane(n, c);
      float* o = out.plane(n, c);
      for (int64_t y = 0; y < oh; ++y) {
        for (int64_t xo = 0; xo < ow; ++xo) {
          // Undo the clockwise rotations to find the flipped-image pixel.
          int64_t sy = y, sx = xo;
          switch (rotations) {
            case 1: sy = H - 1 - xo; sx = y; break;
            case 2: sy = H - 1 - y; sx = W - 1 - xo; break;
            case 3: sy = xo; sx = W - 1 - y; break;
            default: break;
          }
          if (flip) sx = W - 1 - sx;
          o[y * ow + xo] = in[sy * W + sx];
        }
      }
    }
  }
  return out;
}

int draw_transform(std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(0, 7)(rng);
}

PatchPair augment(const PatchPair& patch, std::mt19937_64& rng) {
  const int t = draw_transform(rng);
  return {dihedral(patch.sdr, t), dihedral(patch.hdr, t)};
}

Batcher::Batcher(size_t count, size_t batch_size, uint64_t seed)
    : count_(count), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batcher: batch size must be >= 1");
  }
  if (count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batcher: empty patch set");
  }
}

size_t Batcher::batches_per_epoch() const {
  return (count_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<size_t>> Batcher::epoch(uint64_t epoch_index) const {
  std::vector<size_t> order(count_);
  std::iota(order.begin(), order.end(), size_t{0});
  std::seed_seq seq{static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
                    static_cast<uint32_t>(epoch_index),
                    static_cast<uint32_t>(epoch_index >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t i = 0; i < count_; i += batch_size_) {
    batches.emplace_back(order.begin() + static_cast<ptrdiff_t>(i),
                         order.begin() + static_cast<ptrdiff_t>(
                                             std::min(count_, i + batch_size_)));
  }
  return batches;
}

std::pair<Tensor, Tensor> collate(const std::vector<PatchPair>& patches,
                                  const std::vector<size_t>& indices) {
  std::vector<Tensor> sdr, hdr;
  sdr.reserve(indices.size());
  hdr.reserve(indices.size());
  for (size_t i : indices) {
    sdr.push_back(patches.at(i).sdr);
    hdr.push_back(patches.at(i).hdr);
  }
  return {stack_batch(sdr), stack_batch(hdr)};
}

namespace {

constexpr char kPatchMagic[4] = {'I', 'R', 'N', 'P'};
constexpr uint32_t kPatchVersion = 1;

std::vector<int64_t> dims_of(const Tensor& t) {
  return {t.n(), t.c(), t.h(), t.w()};
}

}  // namespace

void save_patch(const PatchPair& patch, const fs::path& path) {
  detail::BinaryWriter out(path);
  out.bytes(kPatchMagic, 4);
  out.u32(kPatchVersion);
  out.tensor_record("sdr", dims_of(patch.sdr), patch.sdr);
  out.tensor_record("hdr", dims_of(patch.hdr), patch.hdr);
  out.finish();
}

PatchPair load_patch(const fs::path& path) {
  detail::BinaryReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kPatchMagic)) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a patch file");
  }
  if (in.u32() != kPatchVersion) {
    throw Error(ErrorCode::kFormat, path.string() + ": unsupported version");
  }
  PatchPair p;
  for (const char* expected : {"sdr", "hdr"}) {
    const auto record = in.record_header();
    if (record.name != expected) {
      throw Error(ErrorCode::kFormat, path.string() + ": expected record '" +
                                          expected + "', found '" +
                                          record.name + "'");
    }
    Tensor t(detail::shape_from_dims(record.dims));
    in.floats(t.data());
    (record.name == "sdr" ? p.sdr : p.hdr) = std::move(t);
  }
  if (!in.at_end()) {
    throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes");
  }
  return p;
}

std::vector<fs::path> save_patch_set(const std::vector<PatchPair>& patches,
                                     const fs::path& dir,
                                     const std::string& stem) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (size_t i = 0; i < patches.size(); ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_%03zu.irnp", i);
    const fs::path path = dir / (stem + suffix);
    save_patch(patches[i], path);
    written.push_back(path);
  }
  return written;
}

std::vector<PatchPair> load_patch_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".irnp") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<PatchPair> patches;
  for (const fs::path& f : files) patches.push_back(load_patch(f));
  return patches;
}

}  // namespace irnet
