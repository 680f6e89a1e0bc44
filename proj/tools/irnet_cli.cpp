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

// irnet command-line tool. Every subcommand goes through the C API.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irnet/irnet.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;

struct Failure {
  int code;
};

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "irnet: " << message << "\n";
  throw Failure{code};
}

void check(irnet_status s) {
  if (s != IRNET_OK) die(static_cast<int>(s), irnet_last_error());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

int parse_mode(const std::string& text) {
  const std::string t = lower(text);
  if (t == "itm") return IRNET_MODE_ITM;
  if (t == "sritm" || t == "sr-itm") return IRNET_MODE_SRITM;
  die(kExitConfig, "unknown mode '" + text + "' (expected itm or sritm)");
}

int parse_luma(const std::string& text) {
  const std::string t = lower(text);
  if (t == "rec709") return IRNET_LUMA_REC709;
  if (t == "rec2020") return IRNET_LUMA_REC2020;
  die(kExitConfig, "unknown luma standard '" + text + "'");
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Flat key=value file; keys name long flags with '_' or '-' separators.
// Values fill only options that were not given on the command line.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) die(kExitConfig, "cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      die(kExitConfig, path + ":" + std::to_string(lineno) +
                           ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config" || key == "help") {
      die(kExitConfig, path + ":" + std::to_string(lineno) +
                           ": unknown key '" + key + "' for '" +
                           sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      die(kExitConfig, path + ":" + std::to_string(lineno) + ": bad value for '" +
                           key + "': " + e.what());
    }
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) die(kExitUsage, std::string(flag) + " is required");
}

struct Common {
  std::string config;
  int threads = 0;
  uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_seed) {
  sub->add_option("--config", c.config,
                  "Flat key=value file; command-line flags take precedence");
  sub->add_option("--threads", c.threads,
                  "Worker threads (1 = deterministic serial path, 0 = "
                  "OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  if (with_seed) sub->add_option("--seed", c.seed, "Random seed");
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  Common common;
  std::string sdr_dir, hdr_dir, out_manifest, patches_out, mode = "itm";
  int patch_count = 30;
  int patch_size = 256;
};

int run_prepare(const PrepareArgs& a) {
  require(a.sdr_dir, "--sdr-dir");
  require(a.hdr_dir, "--hdr-dir");
  require(a.out_manifest, "--out-manifest");
  irnet_prepare_options o;
  irnet_prepare_options_default(&o);
  o.sdr_dir = a.sdr_dir.c_str();
  o.hdr_dir = a.hdr_dir.c_str();
  o.out_manifest = a.out_manifest.c_str();
  o.patches_out = a.patches_out.empty() ? nullptr : a.patches_out.c_str();
  o.mode = parse_mode(a.mode);
  o.patch_count = a.patch_count;
  o.patch_size = a.patch_size;
  o.seed = a.common.seed;
  size_t pairs = 0, patches = 0;
  check(irnet_prepare(&o, &pairs, &patches));
  std::cout << "pairs: " << pairs << "\n";
  if (o.patches_out) std::cout << "patches: " << patches << "\n";
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  Common common;
  std::string manifest, patches, out, mode = "itm";
  std::optional<int> blocks, channels, cca_reduction;
  std::optional<float> lrelu_slope;
  bool no_intermediate = false;
  bool plain_cca = false;
  std::optional<double> lr_max, lr_min, val_fraction;
  std::optional<int> batch_size, epochs, restart_period, patch_count,
      patch_size;
  bool augment = true;
  bool per_epoch_lr = false;
  int log_every = 1;
};

struct TrainLog {
  int every;
};

void print_epoch(int epoch, double loss, double lr, double val, void* user) {
  const auto* log = static_cast<const TrainLog*>(user);
  if (log->every <= 0 || (epoch + 1) % log->every != 0) return;
  std::printf("epoch %d loss %.6g lr %.6g", epoch, loss, lr);
  if (!std::isnan(val)) std::printf(" val_psnr %.4f", val);
  std::printf("\n");
  std::fflush(stdout);
}

int run_train(const TrainArgs& a) {
  require(a.out, "--out");
  if (a.manifest.empty() == a.patches.empty()) {
    die(kExitUsage, "exactly one of --manifest or --patches is required");
  }
  const int mode = parse_mode(a.mode);
  irnet_train_options o;
  irnet_train_options_default(mode, &o);
  o.manifest = a.manifest.empty() ? nullptr : a.manifest.c_str();
  o.patch_dir = a.patches.empty() ? nullptr : a.patches.c_str();
  o.out_dir = a.out.c_str();
  if (a.blocks) o.model.n_blocks = *a.blocks;
  if (a.channels) o.model.channels = *a.channels;
  if (a.cca_reduction) o.model.cca_reduction = *a.cca_reduction;
  if (a.lrelu_slope) o.model.lrelu_slope = *a.lrelu_slope;
  o.model.use_intermediate = a.no_intermediate ? 0 : 1;
  o.model.cca_residual = a.plain_cca ? 0 : 1;
  if (a.lr_max) o.lr_max = *a.lr_max;
  if (a.lr_min) o.lr_min = *a.lr_min;
  if (a.val_fraction) o.val_fraction = *a.val_fraction;
  if (a.batch_size) o.batch_size = *a.batch_size;
  if (a.epochs) o.epochs = *a.epochs;
  if (a.restart_period) o.restart_period = *a.restart_period;
  if (a.patch_count) o.patch_count = *a.patch_count;
  if (a.patch_size) o.patch_size = *a.patch_size;
  o.augment = a.augment ? 1 : 0;
  o.per_epoch_lr = a.per_epoch_lr ? 1 : 0;
  o.seed = a.common.seed;
  check(irnet_config_validate(&o.model));
  TrainLog log{a.log_every};
  check(irnet_train(&o, print_epoch, &log));
  std::cout << "wrote " << a.out << "/last.ckpt, best.ckpt, history.csv\n";
  return 0;
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  Common common;
  std::string ckpt, input, output;
  int tile = 0;
};

int run_infer(const InferArgs& a) {
  require(a.ckpt, "--ckpt");
  require(a.input, "--input");
  require(a.output, "--output");
  irnet_model* model = nullptr;
  check(irnet_model_load(a.ckpt.c_str(), &model));
  const irnet_status s =
      irnet_infer_file(model, a.input.c_str(), a.output.c_str(), a.tile);
  irnet_model_destroy(model);
  check(s);
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string ckpt, manifest, report;
  int tile = 0;
  bool identity = false;
};

int run_eval(const EvalArgs& a) {
  require(a.manifest, "--manifest");
  require(a.report, "--report");
  if (a.identity == !a.ckpt.empty()) {
    die(kExitUsage, "exactly one of --ckpt or --identity is required");
  }
  irnet_model* model = nullptr;
  if (!a.identity) check(irnet_model_load(a.ckpt.c_str(), &model));
  irnet_eval_summary summary{};
  const irnet_status s = irnet_evaluate(model, a.manifest.c_str(),
                                        a.report.c_str(), a.tile, &summary);
  irnet_model_destroy(model);
  if (s != IRNET_OK && s != IRNET_ERR_PARTIAL) check(s);
  std::printf("rows %zu failed %zu mean_psnr %.4f mean_ssim %.6f\n",
              summary.rows, summary.failed, summary.mean_psnr,
              summary.mean_ssim);
  if (summary.excluded) {
    std::cerr << "irnet: warning: " << summary.excluded
              << " row(s) with infinite PSNR excluded from the mean\n";
  }
  check(s);
  return 0;
}

// ------------------------------------------------------------------ audit

struct AuditArgs {
  Common common;
  std::string mode = "itm";
  std::optional<int> blocks, channels, cca_reduction;
  bool no_intermediate = false;
  int64_t height = 0, width = 0;
};

int run_audit(const AuditArgs& a) {
  irnet_config c;
  check(irnet_config_default(parse_mode(a.mode), &c));
  if (a.blocks) c.n_blocks = *a.blocks;
  if (a.channels) c.channels = *a.channels;
  if (a.cca_reduction) c.cca_reduction = *a.cca_reduction;
  c.use_intermediate = a.no_intermediate ? 0 : 1;
  check(irnet_config_validate(&c));
  uint64_t params = 0;
  check(irnet_count_params(&c, &params));
  std::cout << "mode " << (c.mode == IRNET_MODE_ITM ? "itm" : "sritm")
            << " blocks " << c.n_blocks << " channels " << c.channels << "\n";
  std::cout << "params " << params << " ("
            << fixed2(static_cast<double>(params) / 1e3) << "K)\n";
  if ((a.height > 0) != (a.width > 0)) {
    die(kExitUsage, "--height and --width must be given together");
  }
  if (a.height > 0) {
    uint64_t macs = 0, flops = 0;
    check(irnet_count_macs(&c, a.height, a.width, &macs, &flops));
    std::cout << "input " << a.width << "x" << a.height << "\n";
    std::cout << "macs " << macs << " (" << fixed2(macs / 1e9) << "G)\n";
    std::cout << "flops " << flops << " (" << fixed2(flops / 1e9) << "G)\n";
  }
  return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  Common common;
  std::string manifest, out;
  std::vector<std::string> profile;
  std::string luma = "rec709";
  std::string sdr_luma = "rec709";
  std::string hdr_luma = "rec2020";
};

int run_analyze(const AnalyzeArgs& a) {
  require(a.out, "--out");
  if (a.manifest.empty() == a.profile.empty()) {
    die(kExitUsage, "exactly one of --manifest or --profile is required");
  }
  if (!a.profile.empty()) {
    int64_t row = 0, x0 = 0, x1 = 0;
    try {
      row = std::stoll(a.profile[2]);
      x0 = std::stoll(a.profile[3]);
      x1 = std::stoll(a.profile[4]);
    } catch (const std::exception&) {
      die(kExitUsage, "--profile expects IMG_A IMG_B ROW X0 X1 with integer "
                      "ROW, X0, X1");
    }
    check(irnet_profile(a.profile[0].c_str(), a.profile[1].c_str(), row, x0,
                        x1, parse_luma(a.luma), a.out.c_str()));
    std::cout << "profile samples " << (x1 - x0) << "\n";
    return 0;
  }
  irnet_luminance_summary s{};
  check(irnet_analyze_luminance(a.manifest.c_str(), a.out.c_str(),
                                parse_luma(a.sdr_luma), parse_luma(a.hdr_luma),
                                &s));
  std::printf("pairs %zu mean_max_gap %.6g mean_abs_min_gap %.6g\n", s.pairs,
              s.mean_max_gap, s.mean_abs_min_gap);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRNet inverse tone mapping: data preparation, training, "
               "inference, evaluation, analysis and architecture audit"};
  app.name("irnet");
  app.require_subcommand(1);
  app.set_version_flag("--version", irnet_version());

  PrepareArgs pa;
  auto* prepare = app.add_subcommand(
      "prepare", "Pair SDR/HDR directories into a manifest and cache patches");
  add_common(prepare, pa.common, true);
  prepare->add_option("--sdr-dir", pa.sdr_dir, "Directory of 8-bit SDR PNGs");
  prepare->add_option("--hdr-dir", pa.hdr_dir, "Directory of 16-bit HDR PNGs");
  prepare->add_option("--out-manifest", pa.out_manifest, "Manifest to write");
  prepare->add_option("--patches-out", pa.patches_out,
                      "Optional patch cache directory");
  prepare->add_option("--mode", pa.mode, "itm or sritm (patch geometry)");
  prepare->add_option("--patch-count", pa.patch_count, "Crops per image")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--patch-size", pa.patch_size,
                      "Patch side on the HDR grid")
      ->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train = app.add_subcommand(
      "train", "Train a model; writes last.ckpt, best.ckpt and history.csv");
  add_common(train, ta.common, true);
  train->add_option("--manifest", ta.manifest, "Training manifest");
  train->add_option("--patches", ta.patches, "Patch cache directory");
  train->add_option("--out", ta.out, "Output directory");
  train->add_option("--mode", ta.mode, "itm or sritm");
  train->add_option("--blocks", ta.blocks, "Number of IRB+CCA groups");
  train->add_option("--channels", ta.channels, "Feature channels");
  train->add_option("--cca-reduction", ta.cca_reduction,
                    "CCA channel reduction ratio");
  train->add_option("--lrelu-slope", ta.lrelu_slope, "LeakyReLU slope");
  train->add_flag("--no-intermediate", ta.no_intermediate,
                  "Drop the F1 concatenation inside each IRB");
  train->add_flag("--plain-cca", ta.plain_cca,
                  "CCA output x*w instead of x + x*w");
  train->add_option("--epochs", ta.epochs, "Training epochs");
  train->add_option("--batch-size", ta.batch_size, "Mini-batch size");
  train->add_option("--lr-max", ta.lr_max, "Peak learning rate");
  train->add_option("--lr-min", ta.lr_min, "Floor learning rate");
  train->add_option("--restart-period", ta.restart_period,
                    "Epochs per cosine cycle");
  train->add_option("--val-fraction", ta.val_fraction,
                    "Fraction of patches held out for validation PSNR");
  train->add_option("--patch-count", ta.patch_count,
                    "Crops per image when reading a manifest");
  train->add_option("--patch-size", ta.patch_size,
                    "Patch side on the HDR grid when reading a manifest");
  train->add_option("--augment", ta.augment,
                    "Random flips/rotations per step (true/false)");
  train->add_flag("--per-epoch-lr", ta.per_epoch_lr,
                  "Step the schedule once per epoch");
  train->add_option("--log-every", ta.log_every,
                    "Print every N epochs (0 = silent)");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Run a checkpoint on an 8-bit PNG");
  add_common(infer, ia.common, false);
  infer->add_option("--ckpt", ia.ckpt, "Checkpoint file");
  infer->add_option("--input", ia.input, "8-bit SDR PNG");
  infer->add_option("--output", ia.output, "16-bit PNG to write");
  infer->add_option("--tile", ia.tile, "Tile size (0 = whole image)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM report over a manifest");
  add_common(eval, ea.common, false);
  eval->add_option("--ckpt", ea.ckpt, "Checkpoint file");
  eval->add_flag("--identity", ea.identity,
                 "Score the SDR input itself (baseline)");
  eval->add_option("--manifest", ea.manifest, "Test manifest");
  eval->add_option("--report", ea.report, "CSV report to write");
  eval->add_option("--tile", ea.tile, "Tile size (0 = whole image)");

  AuditArgs aa;
  auto* audit = app.add_subcommand(
      "audit", "Exact parameter count and MACs/FLOPs of a configuration");
  add_common(audit, aa.common, false);
  audit->add_option("--mode", aa.mode, "itm or sritm");
  audit->add_option("--blocks", aa.blocks, "Number of IRB+CCA groups");
  audit->add_option("--channels", aa.channels, "Feature channels");
  audit->add_option("--cca-reduction", aa.cca_reduction,
                    "CCA channel reduction ratio");
  audit->add_flag("--no-intermediate", aa.no_intermediate,
                  "Drop the F1 concatenation inside each IRB");
  audit->add_option("--height", aa.height, "Input height for MACs");
  audit->add_option("--width", aa.width, "Input width for MACs");

  AnalyzeArgs na;
  auto* analyze = app.add_subcommand(
      "analyze", "Luminance extremes per pair, or a luma profile ratio");
  add_common(analyze, na.common, false);
  analyze->add_option("--manifest", na.manifest, "Manifest of pairs");
  analyze->add_option("--out", na.out, "CSV to write");
  analyze->add_option("--profile", na.profile,
                      "IMG_A IMG_B ROW X0 X1: luma ratio along [X0, X1)")
      ->expected(5);
  analyze->add_option("--luma", na.luma, "Profile luma standard");
  analyze->add_option("--sdr-luma", na.sdr_luma, "SDR luma standard");
  analyze->add_option("--hdr-luma", na.hdr_luma, "HDR luma standard");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::map<CLI::App*, Common*> commons = {
        {prepare, &pa.common}, {train, &ta.common}, {infer, &ia.common},
        {eval, &ea.common},    {audit, &aa.common}, {analyze, &na.common}};
    Common* common = commons.at(sub);
    if (!common->config.empty()) apply_config(sub, common->config);
    irnet_set_threads(common->threads);

    if (sub == prepare) return run_prepare(pa);
    if (sub == train) return run_train(ta);
    if (sub == infer) return run_infer(ia);
    if (sub == eval) return run_eval(ea);
    if (sub == audit) return run_audit(aa);
    return run_analyze(na);
  } catch (const Failure& f) {
    return f.code;
  }
}
