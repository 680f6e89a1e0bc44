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

#ifndef IRNET_IRNET_H_
#define IRNET_IRNET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(IRNET_BUILDING_LIBRARY)
#define IRNET_API __declspec(dllexport)
#else
#define IRNET_API __declspec(dllimport)
#endif
#else
#define IRNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum irnet_status {
  IRNET_OK = 0,
  IRNET_ERR_USAGE = 1,    /* null handle or malformed call */
  IRNET_ERR_CONFIG = 2,   /* invalid config, argument, shape or pairing */
  IRNET_ERR_NUMERIC = 3,  /* non-finite loss or gradient */
  IRNET_ERR_FORMAT = 4,   /* unreadable file, bad magic, wrong bit depth */
  IRNET_ERR_PARTIAL = 5,  /* evaluation finished but some rows failed */
  IRNET_ERR_INTERNAL = 6
} irnet_status;

/* Message of the last failing call on this thread; "" after success. */
IRNET_API const char* irnet_last_error(void);
IRNET_API const char* irnet_version(void);

/* 1 (default) = serial path, 0 = every OpenMP thread. */
IRNET_API void irnet_set_threads(int threads);

typedef enum irnet_mode { IRNET_MODE_ITM = 0, IRNET_MODE_SRITM = 1 } irnet_mode;

typedef enum irnet_luma {
  IRNET_LUMA_REC709 = 0,
  IRNET_LUMA_REC2020 = 1
} irnet_luma;

typedef struct irnet_config {
  int mode; /* irnet_mode */
  int n_blocks;
  int channels;
  int cca_reduction;
  float lrelu_slope;
  int cca_residual;
  int scale;
  int use_intermediate;
} irnet_config;

IRNET_API irnet_status irnet_config_default(int mode, irnet_config* out);
IRNET_API irnet_status irnet_config_validate(const irnet_config* config);
IRNET_API irnet_status irnet_count_params(const irnet_config* config,
                                          uint64_t* params);
IRNET_API irnet_status irnet_count_macs(const irnet_config* config,
                                        int64_t height, int64_t width,
                                        uint64_t* macs, uint64_t* flops);

/* Models */
typedef struct irnet_model irnet_model;

IRNET_API irnet_status irnet_model_create(const irnet_config* config,
                                          uint64_t seed, irnet_model** out);
IRNET_API irnet_status irnet_model_load(const char* path, irnet_model** out);
/* Fails with IRNET_ERR_CONFIG when the stored config differs. */
IRNET_API irnet_status irnet_model_load_expect(const char* path,
                                               const irnet_config* expected,
                                               irnet_model** out);
IRNET_API irnet_status irnet_model_save(const irnet_model* model,
                                        const char* path);
IRNET_API irnet_status irnet_model_config(const irnet_model* model,
                                          irnet_config* out);
IRNET_API void irnet_model_destroy(irnet_model* model);

/* RGB images in [0, 1], stored planar (all R, then G, then B). */
typedef struct irnet_image irnet_image;

/* expected_bits: 8, 16, or 0 for either. */
IRNET_API irnet_status irnet_image_load(const char* path, int expected_bits,
                                        irnet_image** out);
IRNET_API irnet_status irnet_image_create(int width, int height,
                                          const float* planar,
                                          irnet_image** out);
IRNET_API irnet_status irnet_image_save16(const irnet_image* image,
                                          const char* path);
IRNET_API irnet_status irnet_image_save8(const irnet_image* image,
                                         const char* path);
IRNET_API void irnet_image_size(const irnet_image* image, int* width,
                                int* height);
IRNET_API const float* irnet_image_data(const irnet_image* image);
IRNET_API void irnet_image_destroy(irnet_image* image);

/* Clamped model output. tile <= 0 runs on the whole image. */
IRNET_API irnet_status irnet_infer(const irnet_model* model,
                                   const irnet_image* input, int tile,
                                   irnet_image** out);
/* 8-bit PNG in, 16-bit PNG out. */
IRNET_API irnet_status irnet_infer_file(const irnet_model* model,
                                        const char* input_png,
                                        const char* output_png, int tile);

IRNET_API irnet_status irnet_psnr(const irnet_image* pred,
                                  const irnet_image* gt, double* out);
IRNET_API irnet_status irnet_ssim(const irnet_image* pred,
                                  const irnet_image* gt, double* out);

/* Pipeline */
typedef struct irnet_prepare_options {
  const char* sdr_dir;
  const char* hdr_dir;
  const char* out_manifest;
  const char* patches_out; /* optional patch cache directory */
  int mode;
  int patch_count;
  int patch_size; /* on the HDR grid */
  uint64_t seed;
} irnet_prepare_options;

IRNET_API void irnet_prepare_options_default(irnet_prepare_options* out);
/* Unpaired stems fail with IRNET_ERR_CONFIG and are named in the message. */
IRNET_API irnet_status irnet_prepare(const irnet_prepare_options* options,
                                     size_t* pairs, size_t* patches);

typedef struct irnet_train_options {
  const char* manifest;  /* crops patches on the fly ... */
  const char* patch_dir; /* ... or reads a patch cache; one is required */
  const char* out_dir;   /* last.ckpt, best.ckpt, history.csv */
  irnet_config model;
  double lr_max;
  double lr_min;
  int batch_size;
  int epochs;
  int restart_period;
  double val_fraction;
  int augment;
  int per_epoch_lr;
  int patch_count;
  int patch_size;
  uint64_t seed;
} irnet_train_options;

typedef void (*irnet_epoch_callback)(int epoch, double mean_loss, double lr,
                                     double val_psnr, void* user);

IRNET_API void irnet_train_options_default(int mode, irnet_train_options* out);
IRNET_API irnet_status irnet_train(const irnet_train_options* options,
                                   irnet_epoch_callback on_epoch, void* user);

typedef struct irnet_eval_summary {
  size_t rows;
  size_t failed;
  size_t excluded; /* rows with infinite PSNR left out of the mean */
  double mean_psnr;
  double mean_ssim;
} irnet_eval_summary;

/* model == NULL scores the input itself (identity baseline, ITM geometry
   only). Rows that fail to decode are skipped and reported through
   IRNET_ERR_PARTIAL after the report is written. */
IRNET_API irnet_status irnet_evaluate(const irnet_model* model,
                                      const char* manifest,
                                      const char* report_csv, int tile,
                                      irnet_eval_summary* summary);

typedef struct irnet_luminance_summary {
  size_t pairs;
  double mean_max_gap;
  double mean_abs_min_gap;
} irnet_luminance_summary;

IRNET_API irnet_status irnet_analyze_luminance(
    const char* manifest, const char* out_csv, int sdr_luma, int hdr_luma,
    irnet_luminance_summary* summary);

/* Luma ratio a / b along row `row` for x in [x0, x1). */
IRNET_API irnet_status irnet_profile(const char* image_a, const char* image_b,
                                     int64_t row, int64_t x0, int64_t x1,
                                     int luma, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* IRNET_IRNET_H_ */
