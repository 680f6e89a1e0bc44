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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "irnet/model.hpp"
#include "irnet/tensor.hpp"

namespace irnet {

// PNG I/O. Images are (1, 3, H, W) tensors normalized to [0, 1].

/// 8-bit RGB only; values / 255.
Tensor load_png8(const std::filesystem::path& path);
/// 16-bit RGB only; values / 65535.
Tensor load_png16(const std::filesystem::path& path);
/// Either depth, normalized by the depth's maximum.
Tensor load_png(const std::filesystem::path& path);
/// Bit depth of an RGB PNG without decoding pixels.
int png_bit_depth(const std::filesystem::path& path);
/// Clamps to [0, 1], scales by 65535, rounds to nearest.
void save_png16(const Tensor& image, const std::filesystem::path& path);
/// Clamps to [0, 1], scales by 255, rounds to nearest.
void save_png8(const Tensor& image, const std::filesystem::path& path);

enum class Role { kTrain, kTest };

struct ManifestEntry {
  std::filesystem::path sdr;
  std::filesystem::path hdr;

  /// File stem of the SDR image, used as the row name in reports.
  std::string name() const { return sdr.stem().string(); }
};

/// Ordered SDR/HDR pairs. Text form: one "sdr<TAB>hdr" pair per line; lines
/// starting with '#' are comments.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  Role role = Role::kTrain;
};

/// Parses a manifest. Relative paths resolve against the manifest directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);
/// Checks that every file exists and decodes with matching dimensions.
void validate_manifest(const DatasetManifest& manifest);

struct PairingResult {
  DatasetManifest manifest;
  /// Stems present in only one of the two directories.
  std::vector<std::string> unpaired;
};

/// Pairs *.png files of two directories by identical filename stem.
PairingResult pair_directories(const std::filesystem::path& sdr_dir,
                               const std::filesystem::path& hdr_dir);

/// Aligned training sample. For SR-ITM the SDR side is 1/4 of the HDR size.
struct PatchPair {
  Tensor sdr;
  Tensor hdr;
};

struct CropSpec {
  int count = 30;
  /// Patch side on the HDR grid (P). The SDR side is P / scale.
  int size = 256;
  /// 1 for ITM, 4 for SR-ITM.
  int scale = 1;
};

/// Seeded uniform crops. For scale > 1 windows sit at multiples of `scale`
/// on the HDR grid and the SDR side comes from make_lr of the full SDR image.
std::vector<PatchPair> crop_patches(const Tensor& sdr, const Tensor& hdr,
                                    const CropSpec& spec, std::mt19937_64& rng);

/// The 8 symmetries of the square: bit 0 = horizontal flip, bits 1-2 =
/// number of 90 degree clockwise rotations applied after the flip.
Tensor dihedral(const Tensor& x, int transform);
/// Applies one random dihedral transform identically to both sides.
PatchPair augment(const PatchPair& patch, std::mt19937_64& rng);
/// Transform index drawn by augment(); exposed for reproducibility tests.
int draw_transform(std::mt19937_64& rng);

/// Bicubic x`s` reduction clamped to [0, 1].
Tensor make_lr(const Tensor& sdr, int s);

/// Seeded epoch-wise shuffling into batches; the final short batch is kept.
class Batcher {
 public:
  Batcher(size_t count, size_t batch_size, uint64_t seed);

  /// Index batches for one epoch. The order depends only on (seed, epoch).
  std::vector<std::vector<size_t>> epoch(uint64_t epoch_index) const;
  size_t batches_per_epoch() const;

 private:
  size_t count_;
  size_t batch_size_;
  uint64_t seed_;
};

/// Stacks the selected patches into (sdr_batch, hdr_batch).
std::pair<Tensor, Tensor> collate(const std::vector<PatchPair>& patches,
                                  const std::vector<size_t>& indices);

// Patch cache: one "<stem>_<kkk>.irnp" file per patch holding magic "IRNP",
// u32 version, then two tensor records named "sdr" and "hdr" in the
// checkpoint record encoding.
void save_patch(const PatchPair& patch, const std::filesystem::path& path);
PatchPair load_patch(const std::filesystem::path& path);
/// Writes every patch of one source image; returns the written paths.
std::vector<std::filesystem::path> save_patch_set(
    const std::vector<PatchPair>& patches, const std::filesystem::path& dir,
    const std::string& stem);
/// Loads every *.irnp file of a directory in lexicographic order.
std::vector<PatchPair> load_patch_dir(const std::filesystem::path& dir);

}  // namespace irnet
