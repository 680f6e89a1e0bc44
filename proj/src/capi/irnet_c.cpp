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

#include "irnet/irnet.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <new>
#include <random>
#include <string>
#include <vector>

#include "irnet/data.hpp"
#include "irnet/metrics.hpp"
#include "irnet/model.hpp"
#include "irnet/trainer.hpp"

struct irnet_model {
  irnet::IRNetModel model;
};

struct irnet_image {
  irnet::Tensor tensor;
};

namespace {

thread_local std::string g_last_error;

irnet_status status_of(irnet::ErrorCode code) {
  using irnet::ErrorCode;
  switch (code) {
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
      return IRNET_ERR_CONFIG;
    case ErrorCode::kNumeric:
      return IRNET_ERR_NUMERIC;
    case ErrorCode::kFormat:
    case ErrorCode::kIo:
      return IRNET_ERR_FORMAT;
    case ErrorCode::kState:
      break;
  }
  return IRNET_ERR_INTERNAL;
}

irnet_status fail(irnet_status s, std::string message) {
  g_last_error = std::move(message);
  return s;
}

template <typename F>
irnet_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const irnet::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(IRNET_ERR_FORMAT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(IRNET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IRNET_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IRNET_ERR_INTERNAL, "unknown exception");
  }
}

#define IRNET_REQUIRE(cond)                                         \
  do {                                                              \
    if (!(cond)) return fail(IRNET_ERR_USAGE, "invalid argument: " #cond); \
  } while (0)

irnet::Mode to_mode(int mode) {
  if (mode == IRNET_MODE_ITM) return irnet::Mode::kItm;
  if (mode == IRNET_MODE_SRITM) return irnet::Mode::kSrItm;
  throw irnet::Error(irnet::ErrorCode::kInvalidConfig,
                     "unknown mode " + std::to_string(mode));
}

irnet::LumaStandard to_luma(int luma) {
  if (luma == IRNET_LUMA_REC709) return irnet::LumaStandard::kRec709;
  if (luma == IRNET_LUMA_REC2020) return irnet::LumaStandard::kRec2020;
  throw irnet::Error(irnet::ErrorCode::kInvalidConfig,
                     "unknown luma standard " + std::to_string(luma));
}

irnet::ModelConfig from_c(const irnet_config& c) {
  irnet::ModelConfig m;
  m.mode = to_mode(c.mode);
  m.n_blocks = c.n_blocks;
  m.channels = c.channels;
  m.cca_reduction = c.cca_reduction;
  m.lrelu_slope = c.lrelu_slope;
  m.cca_residual = c.cca_residual != 0;
  m.scale = c.scale;
  m.use_intermediate = c.use_intermediate != 0;
  return m;
}

irnet_config to_c(const irnet::ModelConfig& m) {
  irnet_config c;
  c.mode = m.mode == irnet::Mode::kItm ? IRNET_MODE_ITM : IRNET_MODE_SRITM;
  c.n_blocks = m.n_blocks;
  c.channels = m.channels;
  c.cca_reduction = m.cca_reduction;
  c.lrelu_slope = m.lrelu_slope;
  c.cca_residual = m.cca_residual ? 1 : 0;
  c.scale = m.scale;
  c.use_intermediate = m.use_intermediate ? 1 : 0;
  return c;
}

int model_scale(const irnet::ModelConfig& m) {
  return m.mode == irnet::Mode::kSrItm ? m.scale : 1;
}

std::vector<irnet::PatchPair> crop_manifest(const irnet::DatasetManifest& mf,
                                            const irnet::CropSpec& spec,
                                            uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<irnet::PatchPair> patches;
  for (const irnet::ManifestEntry& e : mf.entries) {
    auto crops = irnet::crop_patches(irnet::load_png8(e.sdr),
                                     irnet::load_png16(e.hdr), spec, rng);
    for (auto& p : crops) patches.push_back(std::move(p));
  }
  return patches;
}

}  // namespace

extern "C" {

const char* irnet_last_error(void) { return g_last_error.c_str(); }

const char* irnet_version(void) { return "1.0.0"; }

void irnet_set_threads(int threads) { irnet::set_num_threads(threads); }

irnet_status irnet_config_default(int mode, irnet_config* out) {
  IRNET_REQUIRE(out);
  return guarded([&] {
    *out = to_c(irnet::ModelConfig::defaults(to_mode(mode)));
    return IRNET_OK;
  });
}

irnet_status irnet_config_validate(const irnet_config* config) {
  IRNET_REQUIRE(config);
  return guarded([&] {
    from_c(*config).validate();
    return IRNET_OK;
  });
}

irnet_status irnet_count_params(const irnet_config* config, uint64_t* params) {
  IRNET_REQUIRE(config && params);
  return guarded([&] {
    *params = irnet::count_params(from_c(*config));
    return IRNET_OK;
  });
}

irnet_status irnet_count_macs(const irnet_config* config, int64_t height,
                              int64_t width, uint64_t* macs, uint64_t* flops) {
  IRNET_REQUIRE(config);
  return guarded([&] {
    const irnet::ComputeCost cost =
        irnet::count_macs(from_c(*config), height, width);
    if (macs) *macs = cost.macs;
    if (flops) *flops = cost.flops;
    return IRNET_OK;
  });
}

irnet_status irnet_model_create(const irnet_config* config, uint64_t seed,
                                irnet_model** out) {
  IRNET_REQUIRE(config && out);
  return guarded([&] {
    *out = new irnet_model{irnet::build(from_c(*config), seed)};
    return IRNET_OK;
  });
}

irnet_status irnet_model_load(const char* path, irnet_model** out) {
  IRNET_REQUIRE(path && out);
  return guarded([&] {
    *out = new irnet_model{irnet::load_checkpoint(path)};
    return IRNET_OK;
  });
}

irnet_status irnet_model_load_expect(const char* path,
                                     const irnet_config* expected,
                                     irnet_model** out) {
  IRNET_REQUIRE(path && expected && out);
  return guarded([&] {
    *out = new irnet_model{irnet::load_checkpoint(path, from_c(*expected))};
    return IRNET_OK;
  });
}

irnet_status irnet_model_save(const irnet_model* model, const char* path) {
  IRNET_REQUIRE(model && path);
  return guarded([&] {
    irnet::save_checkpoint(model->model, path);
    return IRNET_OK;
  });
}

irnet_status irnet_model_config(const irnet_model* model, irnet_config* out) {
  IRNET_REQUIRE(model && out);
  *out = to_c(model->model.config());
  return IRNET_OK;
}

void irnet_model_destroy(irnet_model* model) { delete model; }

irnet_status irnet_image_load(const char* path, int expected_bits,
                              irnet_image** out) {
  IRNET_REQUIRE(path && out);
  return guarded([&] {
    irnet::Tensor t;
    switch (expected_bits) {
      case 0: t = irnet::load_png(path); break;
      case 8: t = irnet::load_png8(path); break;
      case 16: t = irnet::load_png16(path); break;
      default:
        return fail(IRNET_ERR_USAGE,
                    "expected_bits must be 0, 8 or 16, got " +
                        std::to_string(expected_bits));
    }
    *out = new irnet_image{std::move(t)};
    return IRNET_OK;
  });
}

irnet_status irnet_image_create(int width, int height, const float* planar,
                                irnet_image** out) {
  IRNET_REQUIRE(width > 0 && height > 0 && planar && out);
  return guarded([&] {
    irnet::Tensor t({1, 3, height, width});
    std::copy(planar, planar + t.size(), t.raw());
    *out = new irnet_image{std::move(t)};
    return IRNET_OK;
  });
}

irnet_status irnet_image_save16(const irnet_image* image, const char* path) {
  IRNET_REQUIRE(image && path);
  return guarded([&] {
    irnet::save_png16(image->tensor, path);
    return IRNET_OK;
  });
}

irnet_status irnet_image_save8(const irnet_image* image, const char* path) {
  IRNET_REQUIRE(image && path);
  return guarded([&] {
    irnet::save_png8(image->tensor, path);
    return IRNET_OK;
  });
}

void irnet_image_size(const irnet_image* image, int* width, int* height) {
  if (width) *width = image ? static_cast<int>(image->tensor.w()) : 0;
  if (height) *height = image ? static_cast<int>(image->tensor.h()) : 0;
}

const float* irnet_image_data(const irnet_image* image) {
  return image ? image->tensor.raw() : nullptr;
}

void irnet_image_destroy(irnet_image* image) { delete image; }

irnet_status irnet_infer(const irnet_model* model, const irnet_image* input,
                         int tile, irnet_image** out) {
  IRNET_REQUIRE(model && input && out);
  return guarded([&] {
    irnet::Tensor y = irnet::clamp(
        irnet::infer_tiled(input->tensor, model->model, tile), 0.0f, 1.0f);
    *out = new irnet_image{std::move(y)};
    return IRNET_OK;
  });
}

irnet_status irnet_infer_file(const irnet_model* model, const char* input_png,
                              const char* output_png, int tile) {
  IRNET_REQUIRE(model && input_png && output_png);
  return guarded([&] {
    const int depth = irnet::png_bit_depth(input_png);
    if (depth != 8) {
      return fail(IRNET_ERR_FORMAT, std::string(input_png) + ": expected an " +
                                        "8-bit SDR PNG, got " +
                                        std::to_string(depth) + "-bit");
    }
    const irnet::Tensor x = irnet::load_png8(input_png);
    irnet::save_png16(
        irnet::clamp(irnet::infer_tiled(x, model->model, tile), 0.0f, 1.0f),
        output_png);
    return IRNET_OK;
  });
}

irnet_status irnet_psnr(const irnet_image* pred, const irnet_image* gt,
                        double* out) {
  IRNET_REQUIRE(pred && gt && out);
  return guarded([&] {
    *out = irnet::psnr(pred->tensor, gt->tensor);
    return IRNET_OK;
  });
}

irnet_status irnet_ssim(const irnet_image* pred, const irnet_image* gt,
                        double* out) {
  IRNET_REQUIRE(pred && gt && out);
  return guarded([&] {
    *out = irnet::ssim(pred->tensor, gt->tensor);
    return IRNET_OK;
  });
}

void irnet_prepare_options_default(irnet_prepare_options* out) {
  if (!out) return;
  *out = irnet_prepare_options{};
  const irnet::CropSpec spec;
  out->mode = IRNET_MODE_ITM;
  out->patch_count = spec.count;
  out->patch_size = spec.size;
  out->seed = 0;
}

irnet_status irnet_prepare(const irnet_prepare_options* options, size_t* pairs,
                           size_t* patches) {
  IRNET_REQUIRE(options && options->sdr_dir && options->hdr_dir &&
                options->out_manifest);
  return guarded([&] {
    irnet::PairingResult paired =
        irnet::pair_directories(options->sdr_dir, options->hdr_dir);
    if (!paired.unpaired.empty()) {
      std::string msg = "unpaired files:";
      for (const std::string& s : paired.unpaired) msg += " " + s;
      return fail(IRNET_ERR_CONFIG, msg);
    }
    if (paired.manifest.entries.empty()) {
      return fail(IRNET_ERR_CONFIG, "no PNG pairs found");
    }
    irnet::validate_manifest(paired.manifest);
    irnet::write_manifest(paired.manifest, options->out_manifest);
    if (pairs) *pairs = paired.manifest.entries.size();
    size_t written = 0;
    if (options->patches_out) {
      const irnet::Mode mode = to_mode(options->mode);
      irnet::CropSpec spec;
      spec.count = options->patch_count;
      spec.size = options->patch_size;
      spec.scale = model_scale(irnet::ModelConfig::defaults(mode));
      std::filesystem::create_directories(options->patches_out);
      std::mt19937_64 rng(options->seed);
      for (const irnet::ManifestEntry& e : paired.manifest.entries) {
        const auto crops = irnet::crop_patches(
            irnet::load_png8(e.sdr), irnet::load_png16(e.hdr), spec, rng);
        written +=
            irnet::save_patch_set(crops, options->patches_out, e.name()).size();
      }
    }
    if (patches) *patches = written;
    return IRNET_OK;
  });
}

void irnet_train_options_default(int mode, irnet_train_options* out) {
  if (!out) return;
  *out = irnet_train_options{};
  const irnet::TrainConfig t;
  const irnet::CropSpec spec;
  irnet_config_default(mode == IRNET_MODE_SRITM ? IRNET_MODE_SRITM
                                                : IRNET_MODE_ITM,
                       &out->model);
  out->lr_max = t.lr_max;
  out->lr_min = t.lr_min;
  out->batch_size = static_cast<int>(t.batch_size);
  out->epochs = t.epochs;
  out->restart_period = t.restart_period_epochs;
  out->val_fraction = t.val_fraction;
  out->augment = t.augment ? 1 : 0;
  out->per_epoch_lr = t.per_epoch_lr ? 1 : 0;
  out->patch_count = spec.count;
  out->patch_size = spec.size;
  out->seed = t.seed;
}

irnet_status irnet_train(const irnet_train_options* options,
                         irnet_epoch_callback on_epoch, void* user) {
  IRNET_REQUIRE(options && options->out_dir);
  IRNET_REQUIRE(options->manifest || options->patch_dir);
  return guarded([&] {
    const irnet::ModelConfig mc = from_c(options->model);
    mc.validate();
    irnet::TrainConfig tc;
    tc.lr_max = options->lr_max;
    tc.lr_min = options->lr_min;
    if (options->batch_size < 1) {
      return fail(IRNET_ERR_CONFIG, "batch_size must be >= 1");
    }
    tc.batch_size = static_cast<size_t>(options->batch_size);
    tc.epochs = options->epochs;
    tc.restart_period_epochs = options->restart_period;
    tc.val_fraction = options->val_fraction;
    tc.augment = options->augment != 0;
    tc.per_epoch_lr = options->per_epoch_lr != 0;
    tc.seed = options->seed;
    tc.validate();

    std::vector<irnet::PatchPair> patches;
    if (options->patch_dir) {
      patches = irnet::load_patch_dir(options->patch_dir);
    } else {
      irnet::CropSpec spec;
      spec.count = options->patch_count;
      spec.size = options->patch_size;
      spec.scale = model_scale(mc);
      patches = crop_manifest(irnet::read_manifest(options->manifest), spec,
                              options->seed);
    }

    irnet::IRNetModel model = irnet::build(mc, options->seed);
    irnet::FitOptions fo;
    const std::filesystem::path out_dir = options->out_dir;
    fo.checkpoint_dir = out_dir;
    if (on_epoch) {
      fo.callbacks.on_epoch = [&](const irnet::EpochRecord& r) {
        on_epoch(r.epoch, r.mean_loss, r.lr, r.val_psnr, user);
      };
    }
    const irnet::FitResult result = irnet::fit(model, patches, tc, fo);
    irnet::write_history_csv(result.history, out_dir / "history.csv");
    return IRNET_OK;
  });
}

irnet_status irnet_evaluate(const irnet_model* model, const char* manifest,
                            const char* report_csv, int tile,
                            irnet_eval_summary* summary) {
  IRNET_REQUIRE(manifest && report_csv);
  return guarded([&] {
    const irnet::DatasetManifest mf = irnet::read_manifest(manifest);
    irnet::EvalReport report;
    std::string failures;
    size_t failed = 0;
    for (const irnet::ManifestEntry& e : mf.entries) {
      try {
        const irnet::Tensor gt = irnet::load_png(e.hdr);
        irnet::Tensor pred;
        if (model) {
          pred = irnet::clamp(
              irnet::infer_tiled(irnet::load_png8(e.sdr), model->model, tile),
              0.0f, 1.0f);
        } else {
          pred = irnet::load_png(e.sdr);
        }
        report.rows.push_back(
            {e.name(), irnet::psnr(pred, gt), irnet::ssim(pred, gt)});
      } catch (const irnet::Error& err) {
        ++failed;
        failures += "\n  " + e.name() + ": " + err.what();
      }
    }
    report.finalize();
    irnet::write_eval_csv(report, report_csv);
    if (summary) {
      summary->rows = report.rows.size();
      summary->failed = failed;
      summary->excluded = report.excluded;
      summary->mean_psnr = report.mean_psnr;
      summary->mean_ssim = report.mean_ssim;
    }
    if (failed) {
      return fail(IRNET_ERR_PARTIAL, std::to_string(failed) + " of " +
                                         std::to_string(mf.entries.size()) +
                                         " pairs failed:" + failures);
    }
    return IRNET_OK;
  });
}

irnet_status irnet_analyze_luminance(const char* manifest, const char* out_csv,
                                     int sdr_luma, int hdr_luma,
                                     irnet_luminance_summary* summary) {
  IRNET_REQUIRE(manifest && out_csv);
  return guarded([&] {
    irnet::LuminanceOptions lo;
    lo.sdr_standard = to_luma(sdr_luma);
    lo.hdr_standard = to_luma(hdr_luma);
    const auto records =
        irnet::analyze_luminance(irnet::read_manifest(manifest), lo);
    irnet::write_luminance_csv(records, out_csv);
    if (summary) {
      double max_gap = 0.0, min_gap = 0.0;
      for (const auto& r : records) {
        max_gap += r.max_gap();
        min_gap += std::abs(r.min_gap());
      }
      const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
      summary->pairs = records.size();
      summary->mean_max_gap = max_gap / n;
      summary->mean_abs_min_gap = min_gap / n;
    }
    return IRNET_OK;
  });
}

irnet_status irnet_profile(const char* image_a, const char* image_b,
                           int64_t row, int64_t x0, int64_t x1, int luma,
                           const char* out_csv) {
  IRNET_REQUIRE(image_a && image_b && out_csv);
  return guarded([&] {
    const irnet::ProfileResult p =
        irnet::profile_ratio(irnet::load_png(image_a), irnet::load_png(image_b),
                             row, x0, x1, to_luma(luma));
    irnet::write_profile_csv(p, x0, out_csv);
    return IRNET_OK;
  });
}

}  // extern "C"
