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

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "irnet/data.hpp"

namespace irnet {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorState {
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof state->message, "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct RawImage {
  uint32_t width = 0;
  uint32_t height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char> bytes;
};

// No C++ objects with destructors may be created between setjmp and the
// possible longjmp inside libpng; everything lives in the caller's frame.
bool read_raw(std::FILE* fp, bool header_only, RawImage* out,
              std::vector<png_bytep>* rows, PngErrorState* err) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err,
                                           on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (!header_only && out->color_type == PNG_COLOR_TYPE_RGB &&
      (out->bit_depth == 8 || out->bit_depth == 16)) {
    const size_t stride = png_get_rowbytes(png, info);
    out->bytes.resize(stride * out->height);
    rows->resize(out->height);
    for (uint32_t y = 0; y < out->height; ++y) {
      (*rows)[y] = out->bytes.data() + y * stride;
    }
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawImage read_file(const std::filesystem::path& path, bool header_only) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a PNG file");
  }
  std::rewind(fp.get());
  RawImage raw;
  std::vector<png_bytep> rows;
  PngErrorState err;
  if (!read_raw(fp.get(), header_only, &raw, &rows, &err)) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": PNG decode failed: " + err.message);
  }
  if (raw.color_type != PNG_COLOR_TYPE_RGB) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": expected an RGB PNG (color type " +
                    std::to_string(raw.color_type) + ")");
  }
  if (raw.bit_depth != 8 && raw.bit_depth != 16) {
    throw Error(ErrorCode::kFormat, path.string() + ": unsupported bit depth " +
                                        std::to_string(raw.bit_depth));
  }
  return raw;
}

Tensor to_tensor(const RawImage& raw) {
  const int64_t H = raw.height, W = raw.width;
  Tensor t({1, 3, H, W});
  const size_t stride = raw.bytes.size() / raw.height;
  for (int64_t y = 0; y < H; ++y) {
    const unsigned char* row = raw.bytes.data() + y * stride;
    for (int64_t x = 0; x < W; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        if (raw.bit_depth == 8) {
          t.at(0, c, y, x) =
              static_cast<float>(row[x * 3 + c] / 255.0);
        } else {
          const unsigned char* p = row + (x * 3 + c) * 2;
          const unsigned v = (static_cast<unsigned>(p[0]) << 8) | p[1];
          t.at(0, c, y, x) = static_cast<float>(v / 65535.0);
        }
      }
    }
  }
  return t;
}

bool write_raw(std::FILE* fp, const RawImage* raw, std::vector<png_bytep>* rows,
               PngErrorState* err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err,
                                            on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, raw->width, raw->height, raw->bit_depth,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_file(const Tensor& image, const std::filesystem::path& path,
                int depth) {
  if (image.n() != 1 || image.c() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "PNG output expects a (1,3,H,W) image, got " +
                    image.shape().str());
  }
  RawImage raw;
  raw.width = static_cast<uint32_t>(image.w());
  raw.height = static_cast<uint32_t>(image.h());
  raw.bit_depth = depth;
  const size_t bytes_per_sample = depth == 16 ? 2 : 1;
  const size_t stride = raw.width * 3 * bytes_per_sample;
  raw.bytes.resize(stride * raw.height);
  const double peak = depth == 16 ? 65535.0 : 255.0;
  for (int64_t y = 0; y < image.h(); ++y) {
    unsigned char* row = raw.bytes.data() + y * stride;
    for (int64_t x = 0; x < image.w(); ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        double v = image.at(0, c, y, x);
        if (!(v > 0.0)) v = 0.0;  // also maps NaN to 0
        if (v > 1.0) v = 1.0;
        const auto q = static_cast<unsigned>(std::lround(v * peak));
        if (depth == 16) {
          row[(x * 3 + c) * 2] = static_cast<unsigned char>(q >> 8);
          row[(x * 3 + c) * 2 + 1] = static_cast<unsigned char>(q & 0xff);
        } else {
          row[x * 3 + c] = static_cast<unsigned char>(q);
        }
      }
    }
  }
  std::vector<png_bytep> rows(raw.height);
  for (uint32_t y = 0; y < raw.height; ++y) {
    rows[y] = raw.bytes.data() + y * stride;
  }
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  PngErrorState err;
  if (!write_raw(fp.get(), &raw, &rows, &err)) {
    throw Error(ErrorCode::kIo,
                path.string() + ": PNG encode failed: " + err.message);
  }
}

}  // namespace

Tensor load_png8(const std::filesystem::path& path) {
  RawImage raw = read_file(path, false);
  if (raw.bit_depth != 8) {
    throw Error(ErrorCode::kFormat, path.string() +
                                        ": expected an 8-bit PNG, found " +
                                        std::to_string(raw.bit_depth) + "-bit");
  }
  return to_tensor(raw);
}

Tensor load_png16(const std::filesystem::path& path) {
  RawImage raw = read_file(path, false);
  if (raw.bit_depth != 16) {
    throw Error(ErrorCode::kFormat, path.string() +
                                        ": expected a 16-bit PNG, found " +
                                        std::to_string(raw.bit_depth) + "-bit");
  }
  return to_tensor(raw);
}

Tensor load_png(const std::filesystem::path& path) {
  return to_tensor(read_file(path, false));
}

int png_bit_depth(const std::filesystem::path& path) {
  return read_file(path, true).bit_depth;
}

void save_png16(const Tensor& image, const std::filesystem::path& path) {
  write_file(image, path, 16);
}

void save_png8(const Tensor& image, const std::filesystem::path& path) {
  write_file(image, path, 8);
}

}  // namespace irnet
