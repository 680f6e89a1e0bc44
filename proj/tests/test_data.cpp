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

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "irnet/data.hpp"
#include "irnet/error.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace irnet;

namespace {

std::vector<float> sorted_values(const Tensor& t) {
  std::vector<float> v(t.data().begin(), t.data().end());
  std::sort(v.begin(), v.end());
  return v;
}

bool in_unit_range(const Tensor& t) {
  for (float v : t.data())
    if (!(v >= 0.0f && v <= 1.0f)) return false;
  return true;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected irnet::Error");
  return ErrorCode::kState;
}

}  // namespace

TEST_CASE("png8 normalization and png16 round trip") {
  synth::TempDir dir("png");
  Tensor img({1, 3, 2, 2});
  img.at(0, 0, 0, 0) = 1.0f;
  img.at(0, 1, 1, 1) = 0.0f;
  img.at(0, 2, 0, 1) = 128.0f / 255.0f;
  save_png8(img, dir / "a.png");
  const Tensor back = load_png8(dir / "a.png");
  CHECK(back.at(0, 0, 0, 0) == 1.0f);
  CHECK(back.at(0, 1, 1, 1) == 0.0f);
  CHECK(back.at(0, 2, 0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));
  CHECK(png_bit_depth(dir / "a.png") == 8);

  std::mt19937_64 rng(3);
  const Tensor q = synth::quantize(oracle::random_tensor({1, 3, 9, 7}, rng, 0, 1), 65535.0);
  save_png16(q, dir / "b.png");
  CHECK(png_bit_depth(dir / "b.png") == 16);
  const Tensor q2 = load_png16(dir / "b.png");
  CHECK(oracle::max_abs_diff(q, q2) == 0.0);
  CHECK(load_png(dir / "b.png") == q2);
}

TEST_CASE("png16 save clamps out-of-range values") {
  synth::TempDir dir("clamp");
  Tensor img({1, 3, 1, 2});
  img.at(0, 0, 0, 0) = 1.5f;
  img.at(0, 1, 0, 1) = -0.5f;
  save_png16(img, dir / "c.png");
  const Tensor back = load_png16(dir / "c.png");
  CHECK(back.at(0, 0, 0, 0) == 1.0f);
  CHECK(back.at(0, 1, 0, 1) == 0.0f);
}

TEST_CASE("decode encode decode is idempotent after the first quantization") {
  synth::TempDir dir("idem");
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor raw = oracle::random_tensor({1, 3, 6, 5}, rng, -0.2f, 1.2f);
    save_png16(raw, dir / "x16.png");
    const Tensor d1 = load_png16(dir / "x16.png");
    save_png16(d1, dir / "y16.png");
    CHECK(load_png16(dir / "y16.png") == d1);
    save_png8(raw, dir / "x8.png");
    const Tensor e1 = load_png8(dir / "x8.png");
    save_png8(e1, dir / "y8.png");
    CHECK(load_png8(dir / "y8.png") == e1);
    CHECK(in_unit_range(d1));
    CHECK(in_unit_range(e1));
  }
}

TEST_CASE("wrong bit depth and undecodable files are rejected") {
  synth::TempDir dir("bad");
  save_png8(Tensor({1, 3, 2, 2}, 0.5f), dir / "e.png");
  save_png16(Tensor({1, 3, 2, 2}, 0.5f), dir / "s.png");
  CHECK(code_of([&] { load_png16(dir / "e.png"); }) == ErrorCode::kFormat);
  CHECK(code_of([&] { load_png8(dir / "s.png"); }) == ErrorCode::kFormat);
  { std::ofstream(dir / "junk.png") << "not a png"; }
  CHECK(code_of([&] { load_png(dir / "junk.png"); }) == ErrorCode::kFormat);
  try {
    load_png(dir / "junk.png");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("junk.png") != std::string::npos);
  }
  CHECK(code_of([&] { load_png(dir / "missing.png"); }) == ErrorCode::kIo);
}

TEST_CASE("manifest round trip, comments and relative paths") {
  synth::TempDir dir("manifest");
  std::mt19937_64 rng(1);
  synth::write_pair(dir / "sdr", dir / "hdr", "p0", 12, 12, rng);
  synth::write_pair(dir / "sdr", dir / "hdr", "p1", 12, 12, rng);
  {
    std::ofstream out(dir / "m.txt");
    out << "# comment\nsdr/p0.png\thdr/p0.png\n\nsdr/p1.png\thdr/p1.png\n";
  }
  const DatasetManifest m = read_manifest(dir / "m.txt");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].sdr == dir / "sdr" / "p0.png");
  CHECK(m.entries[1].hdr == dir / "hdr" / "p1.png");
  CHECK(m.entries[1].name() == "p1");
  validate_manifest(m);

  write_manifest(m, dir / "m2.txt");
  const DatasetManifest m2 = read_manifest(dir / "m2.txt");
  REQUIRE(m2.entries.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(m2.entries[i].sdr == m.entries[i].sdr);
    CHECK(m2.entries[i].hdr == m.entries[i].hdr);
  }

  { std::ofstream(dir / "bad.txt") << "only-one-column\n"; }
  CHECK(code_of([&] { read_manifest(dir / "bad.txt"); }) == ErrorCode::kFormat);

  DatasetManifest broken = m;
  broken.entries[0].hdr = dir / "hdr" / "nope.png";
  CHECK_THROWS_AS(validate_manifest(broken), Error);

  synth::write_pair(dir / "sdr2", dir / "hdr2", "odd", 12, 12, rng);
  save_png16(Tensor({1, 3, 10, 12}, 0.5f), dir / "hdr2" / "odd.png");
  DatasetManifest mismatch;
  mismatch.entries.push_back({dir / "sdr2" / "odd.png", dir / "hdr2" / "odd.png"});
  CHECK(code_of([&] { validate_manifest(mismatch); }) == ErrorCode::kFormat);
}

TEST_CASE("pair_directories matches stems and reports orphans") {
  synth::TempDir dir("pairs");
  std::mt19937_64 rng(2);
  for (const char* s : {"b", "a", "c"})
    synth::write_pair(dir / "sdr", dir / "hdr", s, 8, 8, rng);
  save_png8(Tensor({1, 3, 8, 8}, 0.1f), dir / "sdr" / "lonely.png");
  save_png16(Tensor({1, 3, 8, 8}, 0.1f), dir / "hdr" / "other.png");
  const PairingResult r = pair_directories(dir / "sdr", dir / "hdr");
  REQUIRE(r.manifest.entries.size() == 3);
  CHECK(r.manifest.entries[0].name() == "a");
  CHECK(r.manifest.entries[2].name() == "c");
  CHECK(r.unpaired == std::vector<std::string>{"lonely", "other"});
}

TEST_CASE("crop_patches: count, bounds, determinism") {
  std::mt19937_64 rng(4);
  const Tensor sdr = synth::smooth_image(70, 90, rng);
  const Tensor hdr = synth::to_hdr(sdr);
  CropSpec spec;
  spec.size = 32;
  CHECK(CropSpec{}.count == 30);
  CHECK(CropSpec{}.size == 256);

  std::mt19937_64 a(11), b(11);
  const auto pa = crop_patches(sdr, hdr, spec, a);
  const auto pb = crop_patches(sdr, hdr, spec, b);
  REQUIRE(pa.size() == 30);
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].sdr == pb[i].sdr);
    CHECK(pa[i].hdr == pb[i].hdr);
    CHECK(pa[i].sdr.shape() == Shape{1, 3, 32, 32});
    // Locate the window by brute force: it must exist inside the image and
    // the HDR crop must come from the same position.
    bool found = false;
    for (int64_t y = 0; y + 32 <= 70 && !found; ++y)
      for (int64_t x = 0; x + 32 <= 90 && !found; ++x)
        if (crop(sdr, y, x, 32, 32) == pa[i].sdr) {
          found = crop(hdr, y, x, 32, 32) == pa[i].hdr;
        }
    CHECK(found);
  }

  std::mt19937_64 c(12);
  const auto pc = crop_patches(sdr, hdr, spec, c);
  bool differs = false;
  for (size_t i = 0; i < pc.size(); ++i) differs |= !(pc[i].sdr == pa[i].sdr);
  CHECK(differs);

  spec.size = 80;
  CHECK(code_of([&] { crop_patches(sdr, hdr, spec, c); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("default crop of a 512x512 image yields thirty 256 patches") {
  std::mt19937_64 rng(8);
  const Tensor sdr = synth::smooth_image(512, 512, rng);
  const auto p = crop_patches(sdr, sdr, CropSpec{}, rng);
  CHECK(p.size() == 30);
  CHECK(p.front().hdr.shape() == Shape{1, 3, 256, 256});
}

TEST_CASE("SR-ITM crops sit on the x4 grid and pair with make_lr") {
  std::mt19937_64 rng(6);
  const Tensor sdr = synth::smooth_image(66, 83, rng);
  const Tensor hdr = synth::to_hdr(sdr);
  CropSpec spec;
  spec.count = 6;
  spec.size = 32;
  spec.scale = 4;
  std::mt19937_64 r(9);
  const auto patches = crop_patches(sdr, hdr, spec, r);
  const Tensor lr = make_lr(crop(sdr, 0, 0, 64, 80), 4);
  for (const PatchPair& p : patches) {
    CHECK(p.hdr.shape() == Shape{1, 3, 32, 32});
    CHECK(p.sdr.shape() == Shape{1, 3, 8, 8});
    bool found = false;
    for (int64_t y = 0; y + 32 <= 64 && !found; y += 4)
      for (int64_t x = 0; x + 32 <= 80 && !found; x += 4)
        if (crop(hdr, y, x, 32, 32) == p.hdr) {
          found = crop(lr, y / 4, x / 4, 8, 8) == p.sdr;
        }
    CHECK(found);
  }
  spec.size = 30;
  CHECK_THROWS_AS(crop_patches(sdr, hdr, spec, r), Error);
}

TEST_CASE("dihedral transforms match the permutation oracle") {
  std::mt19937_64 rng(10);
  const Tensor x = oracle::random_tensor({2, 3, 5, 5}, rng);
  const Tensor rect = oracle::random_tensor({1, 2, 3, 6}, rng);
  for (int t = 0; t < 8; ++t) {
    CAPTURE(t);
    CHECK(dihedral(x, t) == oracle::dihedral(x, t));
    CHECK(dihedral(rect, t) == oracle::dihedral(rect, t));
    CHECK(sorted_values(dihedral(x, t)) == sorted_values(x));
  }
  CHECK(dihedral(dihedral(x, 1), 1) == x);
  CHECK(dihedral(x, 0) == x);
}

TEST_CASE("augment covers the group and transforms both sides alike") {
  std::set<int> seen;
  for (uint64_t seed = 0; seed < 64; ++seed) {
    std::mt19937_64 r(seed);
    seen.insert(draw_transform(r));
  }
  CHECK(seen.size() >= 6);

  std::mt19937_64 rng(12);
  PatchPair p{oracle::random_tensor({1, 3, 6, 6}, rng, 0, 1),
              oracle::random_tensor({1, 3, 6, 6}, rng, 0, 1)};
  for (uint64_t seed = 0; seed < 16; ++seed) {
    std::mt19937_64 r1(seed), r2(seed);
    const int t = draw_transform(r1);
    const PatchPair q = augment(p, r2);
    CHECK(q.sdr == oracle::dihedral(p.sdr, t));
    CHECK(q.hdr == oracle::dihedral(p.hdr, t));
  }

  // SR-ITM pairs: the transform acts on each side at its own resolution.
  PatchPair sr{oracle::random_tensor({1, 3, 4, 4}, rng, 0, 1),
               oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1)};
  std::mt19937_64 r1(3), r2(3);
  const int t = draw_transform(r1);
  const PatchPair q = augment(sr, r2);
  CHECK(q.sdr == oracle::dihedral(sr.sdr, t));
  CHECK(q.hdr == oracle::dihedral(sr.hdr, t));
}

TEST_CASE("augmentation commutes with aligned cropping") {
  std::mt19937_64 rng(13);
  const int64_t S = 12, P = 5;
  const Tensor sdr = oracle::random_tensor({1, 3, S, S}, rng, 0, 1);
  const Tensor hdr = synth::to_hdr(sdr);
  std::uniform_int_distribution<int64_t> pos(0, S - P);
  for (int t = 0; t < 8; ++t)
    for (int k = 0; k < 5; ++k) {
      const int64_t y = pos(rng), x = pos(rng);
      const Tensor a_sdr = dihedral(crop(sdr, y, x, P, P), t);
      const Tensor a_hdr = dihedral(crop(hdr, y, x, P, P), t);
      // The same window in the transformed image: follow the corner through
      // the oracle's coordinate map.
      Tensor marker({1, 1, S, S});
      marker.at(0, 0, y, x) = 1.0f;
      marker.at(0, 0, y + P - 1, x + P - 1) = 1.0f;
      const Tensor mt = oracle::dihedral(marker, t);
      int64_t ty = S, tx = S;
      for (int64_t yy = 0; yy < S; ++yy)
        for (int64_t xx = 0; xx < S; ++xx)
          if (mt.at(0, 0, yy, xx) == 1.0f) {
            ty = std::min(ty, yy);
            tx = std::min(tx, xx);
          }
      CHECK(crop(dihedral(sdr, t), ty, tx, P, P) == a_sdr);
      CHECK(crop(dihedral(hdr, t), ty, tx, P, P) == a_hdr);
    }
}

TEST_CASE("make_lr: constant image, shape, oracle, range") {
  const Tensor flat({1, 3, 16, 20}, 0.3f);
  const Tensor lr = make_lr(flat, 4);
  CHECK(lr.shape() == Shape{1, 3, 4, 5});
  for (float v : lr.data()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = oracle::random_tensor({1, 3, 24, 16}, rng, 0, 1);
    const Tensor y = make_lr(x, 4);
    CHECK(oracle::max_abs_diff(y, oracle::bicubic_downsample(x, 4)) < 1e-4);
    CHECK(in_unit_range(y));
  }
  CHECK(code_of([&] { make_lr(Tensor({1, 3, 10, 12}), 4); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("batcher: sizes, partition, determinism") {
  const Batcher b(33, 16, 7);
  const auto e0 = b.epoch(0);
  REQUIRE(e0.size() == 3);
  CHECK(e0[0].size() == 16);
  CHECK(e0[1].size() == 16);
  CHECK(e0[2].size() == 1);
  CHECK(b.batches_per_epoch() == 3);

  std::vector<size_t> all;
  for (const auto& batch : e0) all.insert(all.end(), batch.begin(), batch.end());
  std::sort(all.begin(), all.end());
  for (size_t i = 0; i < 33; ++i) CHECK(all[i] == i);

  CHECK(Batcher(33, 16, 7).epoch(0) == e0);
  CHECK(b.epoch(1) != e0);
  CHECK(Batcher(33, 16, 8).epoch(0) != e0);
  CHECK_THROWS_AS(Batcher(0, 16, 1), Error);
  CHECK_THROWS_AS(Batcher(4, 0, 1), Error);
}

TEST_CASE("collate stacks patches in index order") {
  std::mt19937_64 rng(15);
  std::vector<PatchPair> p;
  for (int i = 0; i < 3; ++i)
    p.push_back({oracle::random_tensor({1, 3, 4, 4}, rng),
                 oracle::random_tensor({1, 3, 4, 4}, rng)});
  const auto [s, h] = collate(p, {2, 0});
  CHECK(s.shape() == Shape{2, 3, 4, 4});
  CHECK(s.at(0, 1, 2, 3) == p[2].sdr.at(0, 1, 2, 3));
  CHECK(h.at(1, 2, 0, 1) == p[0].hdr.at(0, 2, 0, 1));
}

TEST_CASE("patch cache round trip") {
  synth::TempDir dir("cache");
  std::mt19937_64 rng(16);
  std::vector<PatchPair> p;
  for (int i = 0; i < 3; ++i)
    p.push_back({oracle::random_tensor({1, 3, 2, 2}, rng, 0, 1),
                 oracle::random_tensor({1, 3, 8, 8}, rng, 0, 1)});
  const auto paths = save_patch_set(p, dir.path(), "img");
  REQUIRE(paths.size() == 3);
  CHECK(paths[0].filename() == "img_000.irnp");
  const auto back = load_patch_dir(dir.path());
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].sdr == p[i].sdr);
    CHECK(back[i].hdr == p[i].hdr);
  }
  { std::ofstream(dir / "bad.irnp") << "XXXX"; }
  CHECK(code_of([&] { load_patch(dir / "bad.irnp"); }) == ErrorCode::kFormat);
}
