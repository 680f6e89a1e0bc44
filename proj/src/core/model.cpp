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

#include "irnet/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"

namespace irnet {

const char* to_string(Mode mode) {
  return mode == Mode::kItm ? "itm" : "sritm";
}

Mode parse_mode(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "itm") return Mode::kItm;
  if (lower == "sritm" || lower == "sr-itm") return Mode::kSrItm;
  throw Error(ErrorCode::kInvalidConfig, "unknown mode '" + text + "'");
}

ModelConfig ModelConfig::defaults(Mode mode) {
  ModelConfig c;
  c.mode = mode;
  c.channels = 64;
  c.n_blocks = mode == Mode::kItm ? 2 : 5;
  c.scale = mode == Mode::kItm ? 1 : 4;
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, "invalid model config: " + what);
  };
  if (n_blocks < 1) fail("n_blocks must be >= 1");
  if (channels < 2 || channels % 2 != 0) fail("channels must be even and >= 2");
  if (cca_reduction < 1) fail("cca_reduction must be >= 1");
  if (channels % cca_reduction != 0) {
    fail("channels (" + std::to_string(channels) +
         ") must be divisible by cca_reduction (" +
         std::to_string(cca_reduction) + ")");
  }
  if (!(lrelu_slope > 0.0f && lrelu_slope < 1.0f)) {
    fail("lrelu_slope must lie in (0, 1)");
  }
  if (mode == Mode::kItm && scale != 1) fail("ITM requires scale = 1");
  if (mode == Mode::kSrItm && scale != 4) {
    fail("SR-ITM head upsamples by exactly 4 (two x2 shuffles)");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os.precision(9);
  os << "mode=" << irnet::to_string(mode) << "\n"
     << "n_blocks=" << n_blocks << "\n"
     << "channels=" << channels << "\n"
     << "cca_reduction=" << cca_reduction << "\n"
     << "lrelu_slope=" << lrelu_slope << "\n"
     << "cca_residual=" << (cca_residual ? 1 : 0) << "\n"
     << "scale=" << scale << "\n"
     << "use_intermediate=" << (use_intermediate ? 1 : 0) << "\n"
     << "upsampler_relu=after_first_shuffle\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat, "config record line without '=': " + line);
    }
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "mode") c.mode = parse_mode(value);
      else if (key == "n_blocks") c.n_blocks = std::stoi(value);
      else if (key == "channels") c.channels = std::stoi(value);
      else if (key == "cca_reduction") c.cca_reduction = std::stoi(value);
      else if (key == "lrelu_slope") c.lrelu_slope = std::stof(value);
      else if (key == "cca_residual") c.cca_residual = std::stoi(value) != 0;
      else if (key == "scale") c.scale = std::stoi(value);
      else if (key == "use_intermediate") c.use_intermediate = std::stoi(value) != 0;
      else if (key == "upsampler_relu") {
        if (value != "after_first_shuffle") {
          throw Error(ErrorCode::kFormat, "unsupported upsampler_relu " + value);
        }
      } else {
        throw Error(ErrorCode::kFormat, "unknown config key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kFormat, "bad value for config key '" + key + "'");
    }
    seen.insert(key);
  }
  for (const char* required : {"mode", "n_blocks", "channels"}) {
    if (!seen.count(required)) {
      throw Error(ErrorCode::kFormat,
                  std::string("config record missing '") + required + "'");
    }
  }
  return c;
}

namespace {

ConvParams make_conv(const std::string& name, int64_t cin, int64_t cout,
                     int64_t k) {
  ConvParams c;
  c.kernel = Parameter(name + ".kernel", Tensor({cout, cin, k, k}), 4);
  c.bias = Parameter(name + ".bias", Tensor({cout, 1, 1, 1}), 1);
  return c;
}

uint64_t conv_params(uint64_t k, uint64_t cin, uint64_t cout) {
  return k * k * cin * cout + cout;
}

}  // namespace

IRNetModel::IRNetModel(const ModelConfig& config) : config_(config) {
  config.validate();
  const int64_t C = config.channels, half = C / 2;
  const int64_t reduced = C / config.cca_reduction;
  head = make_conv("head", 3, C, 1);
  for (int i = 0; i < config.n_blocks; ++i) {
    const std::string prefix = "block" + std::to_string(i + 1);
    BlockGroup g;
    g.irb.conv1 = make_conv(prefix + ".irb.conv1", C, half, 3);
    g.irb.conv2 = make_conv(prefix + ".irb.conv2", half, C, 3);
    g.irb.fuse = make_conv(prefix + ".irb.fuse", C, half, 1);
    g.irb.out = make_conv(prefix + ".irb.out",
                          config.use_intermediate ? C : half, C, 1);
    g.cca.down = make_conv(prefix + ".cca.down", C, reduced, 1);
    g.cca.up = make_conv(prefix + ".cca.up", reduced, C, 1);
    groups.push_back(std::move(g));
  }
  fusion1 = make_conv("fusion1", C * config.n_blocks, C, 1);
  fusion2 = make_conv("fusion2", C, C, 3);
  if (config.mode == Mode::kItm) {
    tail = make_conv("tail", C, 3, 3);
  } else {
    tail = make_conv("tail", C, C, 3);
    up1 = make_conv("up1", C, 4 * C, 3);
    up2 = make_conv("up2", C, 12, 3);
  }
}

std::vector<Parameter*> IRNetModel::parameters() {
  std::vector<Parameter*> out;
  auto push = [&out](ConvParams& c) {
    out.push_back(&c.kernel);
    out.push_back(&c.bias);
  };
  push(head);
  for (BlockGroup& g : groups) {
    push(g.irb.conv1);
    push(g.irb.conv2);
    push(g.irb.fuse);
    push(g.irb.out);
    push(g.cca.down);
    push(g.cca.up);
  }
  push(fusion1);
  push(fusion2);
  push(tail);
  if (up1) push(*up1);
  if (up2) push(*up2);
  return out;
}

std::vector<const Parameter*> IRNetModel::parameters() const {
  auto mutable_params = const_cast<IRNetModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

Parameter* IRNetModel::find(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

size_t IRNetModel::parameter_count() const {
  size_t total = 0;
  for (const Parameter* p : parameters()) total += p->value.size();
  return total;
}

void IRNetModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

IRNetModel build(const ModelConfig& config, uint64_t seed) {
  IRNetModel m(config);
  std::mt19937_64 rng(seed);
  for (Parameter* p : m.parameters()) {
    if (p->rank == 1) continue;  // biases stay zero
    const double fan_in =
        static_cast<double>(p->value.c() * p->value.h() * p->value.w());
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (float& v : p->value.data()) v = static_cast<float>(normal(rng));
  }
  return m;
}

namespace {

// The network is written once against this small op vocabulary and
// instantiated for plain tensors (inference) and for the tape (training).
struct PlainOps {
  using Value = Tensor;
  Tensor conv(const Tensor& x, const ConvParams& c) {
    return conv2d(x, c.kernel.value, c.bias.value, c.padding());
  }
  Tensor lrelu(const Tensor& x, float slope) { return leaky_relu(x, slope); }
  Tensor relu(const Tensor& x) { return irnet::relu(x); }
  Tensor sigmoid(const Tensor& x) { return irnet::sigmoid(x); }
  Tensor add(const Tensor& a, const Tensor& b) { return irnet::add(a, b); }
  Tensor scale(const Tensor& x, const Tensor& a) {
    return scale_channels(x, a);
  }
  Tensor concat(const std::vector<Tensor>& parts) {
    return concat_channels(parts);
  }
  Tensor shuffle(const Tensor& x, int s) { return pixel_shuffle(x, s); }
  Tensor pool(const Tensor& x) { return global_contrast_pool(x); }
  const Shape& shape(const Tensor& x) { return x.shape(); }
};

struct TapeOps {
  using Value = ag::Var;
  ag::Tape& tape;
  ag::Var conv(ag::Var x, ConvParams& c) {
    return ag::conv2d(x, tape.param(c.kernel), tape.param(c.bias),
                      c.padding());
  }
  ag::Var lrelu(ag::Var x, float slope) { return ag::leaky_relu(x, slope); }
  ag::Var relu(ag::Var x) { return ag::relu(x); }
  ag::Var sigmoid(ag::Var x) { return ag::sigmoid(x); }
  ag::Var add(ag::Var a, ag::Var b) { return ag::add(a, b); }
  ag::Var scale(ag::Var x, ag::Var a) { return ag::scale_channels(x, a); }
  ag::Var concat(const std::vector<ag::Var>& parts) {
    return ag::concat_channels(parts);
  }
  ag::Var shuffle(ag::Var x, int s) { return ag::pixel_shuffle(x, s); }
  ag::Var pool(ag::Var x) { return ag::global_contrast_pool(x); }
  const Shape& shape(ag::Var x) { return x.shape(); }
};

void require_channels(const Shape& s, int64_t expected, const char* where) {
  if (s.c != expected) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(where) + ": expected " + std::to_string(expected) +
                    " channels, got " + std::to_string(s.c));
  }
}

template <class Ops, class Irb>
typename Ops::Value irb_impl(Ops& ops, typename Ops::Value x, Irb& p,
                             float slope, bool use_intermediate) {
  require_channels(ops.shape(x), p.conv1.kernel.value.c(), "irb_forward");
  auto f1 = ops.lrelu(ops.conv(x, p.conv1), slope);
  auto f2 = ops.conv(f1, p.conv2);
  auto fused = ops.conv(ops.add(x, f2), p.fuse);
  if (!use_intermediate) return ops.conv(fused, p.out);
  return ops.conv(ops.concat({fused, f1}), p.out);
}

template <class Ops, class Cca>
typename Ops::Value cca_impl(Ops& ops, typename Ops::Value x, Cca& p,
                             bool residual) {
  require_channels(ops.shape(x), p.down.kernel.value.c(), "cca_forward");
  if (p.up.kernel.value.n() != p.down.kernel.value.c() ||
      p.up.kernel.value.c() != p.down.kernel.value.n()) {
    throw Error(ErrorCode::kShapeMismatch,
                "cca_forward: reduction widths of down/up convs disagree");
  }
  auto z = ops.pool(x);
  auto w = ops.sigmoid(ops.conv(ops.relu(ops.conv(z, p.down)), p.up));
  auto scaled = ops.scale(x, w);
  return residual ? ops.add(x, scaled) : scaled;
}

template <class Ops, class Model>
typename Ops::Value irnet_impl(Ops& ops, typename Ops::Value x, Model& m,
                               std::vector<typename Ops::Value>* trace) {
  require_channels(ops.shape(x), 3, "irnet_forward");
  const ModelConfig& cfg = m.config();
  auto feature = ops.conv(x, m.head);
  std::vector<typename Ops::Value> scales;
  for (auto& g : m.groups) {
    auto refined = cca_impl(
        ops, irb_impl(ops, feature, g.irb, cfg.lrelu_slope,
                      cfg.use_intermediate),
        g.cca, cfg.cca_residual);
    feature = ops.add(feature, refined);
    scales.push_back(feature);
  }
  if (trace) *trace = scales;
  auto fused = ops.conv(
      ops.lrelu(ops.conv(ops.concat(scales), m.fusion1), cfg.lrelu_slope),
      m.fusion2);
  scales.clear();
  auto out = ops.conv(fused, m.tail);
  if (cfg.mode == Mode::kItm) return out;
  auto up = ops.relu(ops.shuffle(ops.conv(out, *m.up1), 2));
  return ops.shuffle(ops.conv(up, *m.up2), 2);
}

}  // namespace

Tensor irb_forward(const Tensor& x, const IrbParams& p, float slope) {
  PlainOps ops;
  const bool use_f1 = p.out.kernel.value.c() == p.conv1.kernel.value.c();
  return irb_impl(ops, x, p, slope, use_f1);
}

Tensor cca_forward(const Tensor& x, const CcaParams& p, bool residual) {
  PlainOps ops;
  return cca_impl(ops, x, p, residual);
}

Tensor irnet_forward(const Tensor& x, const IRNetModel& m) {
  PlainOps ops;
  return irnet_impl(ops, x, m, nullptr);
}

ag::Var irb_forward(ag::Tape& tape, ag::Var x, IrbParams& p, float slope) {
  TapeOps ops{tape};
  const bool use_f1 = p.out.kernel.value.c() == p.conv1.kernel.value.c();
  return irb_impl(ops, x, p, slope, use_f1);
}

ag::Var cca_forward(ag::Tape& tape, ag::Var x, CcaParams& p, bool residual) {
  TapeOps ops{tape};
  return cca_impl(ops, x, p, residual);
}

ag::Var irnet_forward(ag::Tape& tape, ag::Var x, IRNetModel& m) {
  TapeOps ops{tape};
  return irnet_impl(ops, x, m, nullptr);
}

ForwardTrace irnet_forward_trace(const Tensor& x, const IRNetModel& m) {
  PlainOps ops;
  ForwardTrace trace;
  trace.output = irnet_impl(ops, x, m, &trace.block_outputs);
  return trace;
}

namespace {

std::vector<int64_t> tile_starts(int64_t len, int64_t tile, int64_t stride) {
  std::vector<int64_t> starts;
  if (len <= tile) return {0};
  for (int64_t s = 0;; s += stride) {
    if (s + tile >= len) {
      starts.push_back(len - tile);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

}  // namespace

Tensor infer_tiled(const Tensor& x, const IRNetModel& m, int tile,
                   int overlap) {
  if (tile <= 0 || (tile >= x.h() && tile >= x.w())) return irnet_forward(x, m);
  if (overlap < 0 || overlap >= tile) {
    throw Error(ErrorCode::kInvalidArgument,
                "infer_tiled: overlap must lie in [0, tile)");
  }
  const int64_t s = m.config().mode == Mode::kSrItm ? m.config().scale : 1;
  const int64_t th = std::min<int64_t>(tile, x.h());
  const int64_t tw = std::min<int64_t>(tile, x.w());
  Tensor sum({x.n(), 3, x.h() * s, x.w() * s});
  std::vector<float> weight(static_cast<size_t>(x.h() * s * x.w() * s), 0.0f);
  for (int64_t y0 : tile_starts(x.h(), th, th - std::min<int64_t>(overlap, th - 1))) {
    for (int64_t x0 : tile_starts(x.w(), tw, tw - std::min<int64_t>(overlap, tw - 1))) {
      const Tensor out = irnet_forward(crop(x, y0, x0, th, tw), m);
      for (int64_t n = 0; n < x.n(); ++n) {
        for (int64_t c = 0; c < 3; ++c) {
          for (int64_t y = 0; y < th * s; ++y) {
            for (int64_t xi = 0; xi < tw * s; ++xi) {
              sum.at(n, c, y0 * s + y, x0 * s + xi) += out.at(n, c, y, xi);
            }
          }
        }
      }
      for (int64_t y = 0; y < th * s; ++y) {
        for (int64_t xi = 0; xi < tw * s; ++xi) {
          weight[(y0 * s + y) * x.w() * s + x0 * s + xi] += 1.0f;
        }
      }
    }
  }
  const size_t plane = weight.size();
  for (int64_t n = 0; n < x.n(); ++n) {
    for (int64_t c = 0; c < 3; ++c) {
      float* p = sum.plane(n, c);
      for (size_t i = 0; i < plane; ++i) p[i] /= weight[i];
    }
  }
  return sum;
}

uint64_t count_params(const ModelConfig& config) {
  config.validate();
  const uint64_t C = static_cast<uint64_t>(config.channels), half = C / 2;
  const uint64_t reduced = C / static_cast<uint64_t>(config.cca_reduction);
  const uint64_t n = static_cast<uint64_t>(config.n_blocks);
  const uint64_t irb = conv_params(3, C, half) + conv_params(3, half, C) +
                       conv_params(1, C, half) +
                       conv_params(1, config.use_intermediate ? C : half, C);
  const uint64_t cca = conv_params(1, C, reduced) + conv_params(1, reduced, C);
  uint64_t total = conv_params(1, 3, C) + n * (irb + cca) +
                   conv_params(1, n * C, C) + conv_params(3, C, C);
  if (config.mode == Mode::kItm) {
    total += conv_params(3, C, 3);
  } else {
    total += conv_params(3, C, C) + conv_params(3, C, 4 * C) +
             conv_params(3, C, 12);
  }
  return total;
}

ComputeCost count_macs(const ModelConfig& config, int64_t h, int64_t w) {
  config.validate();
  if (h <= 0 || w <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "count_macs: non-positive size");
  }
  const uint64_t C = static_cast<uint64_t>(config.channels), half = C / 2;
  const uint64_t reduced = C / static_cast<uint64_t>(config.cca_reduction);
  const uint64_t n = static_cast<uint64_t>(config.n_blocks);
  const uint64_t px = static_cast<uint64_t>(h) * static_cast<uint64_t>(w);
  auto macs = [](uint64_t k, uint64_t cin, uint64_t cout, uint64_t pixels) {
    return k * k * cin * cout * pixels;
  };
  const uint64_t irb = macs(3, C, half, px) + macs(3, half, C, px) +
                       macs(1, C, half, px) +
                       macs(1, config.use_intermediate ? C : half, C, px);
  const uint64_t cca = macs(1, C, reduced, 1) + macs(1, reduced, C, 1);
  uint64_t total = macs(1, 3, C, px) + n * (irb + cca) +
                   macs(1, n * C, C, px) + macs(3, C, C, px);
  if (config.mode == Mode::kItm) {
    total += macs(3, C, 3, px);
  } else {
    // up2 runs after the first x2 shuffle.
    total += macs(3, C, C, px) + macs(3, C, 4 * C, px) +
             macs(3, C, 12, 4 * px);
  }
  return {total, 2 * total};
}

namespace {

constexpr char kCheckpointMagic[4] = {'I', 'R', 'N', 'C'};
constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const IRNetModel& m, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  out.bytes(kCheckpointMagic, 4);
  out.u32(kCheckpointVersion);
  out.str(m.config().to_text());
  for (const Parameter* p : m.parameters()) {
    out.tensor_record(p->name, p->dims(), p->value);
  }
  out.finish();
}

IRNetModel load_checkpoint(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  char magic[4];
  try {
    in.bytes(magic, 4);
  } catch (const Error&) {
    throw Error(ErrorCode::kFormat, path.string() + ": not an IRNet checkpoint");
  }
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": bad magic, not an IRNet checkpoint");
  }
  const uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat, path.string() +
                                        ": unsupported checkpoint version " +
                                        std::to_string(version));
  }
  const ModelConfig config = ModelConfig::from_text(in.str());
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  IRNetModel m(config);
  std::set<std::string> loaded;
  while (!in.at_end()) {
    const auto record = in.record_header();
    Parameter* p = m.find(record.name);
    if (p == nullptr) {
      throw Error(ErrorCode::kFormat, path.string() +
                                          ": unknown parameter '" +
                                          record.name + "'");
    }
    if (record.dims != p->dims()) {
      throw Error(ErrorCode::kFormat, path.string() + ": parameter '" +
                                          record.name +
                                          "' has unexpected dimensions");
    }
    if (!loaded.insert(record.name).second) {
      throw Error(ErrorCode::kFormat, path.string() + ": duplicate parameter '" +
                                          record.name + "'");
    }
    in.floats(p->value.data());
  }
  for (const Parameter* p : m.parameters()) {
    if (!loaded.count(p->name)) {
      throw Error(ErrorCode::kFormat, path.string() +
                                          ": truncated, missing parameter '" +
                                          p->name + "'");
    }
  }
  return m;
}

IRNetModel load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig& expected) {
  IRNetModel m = load_checkpoint(path);
  if (!(m.config() == expected)) {
    throw Error(ErrorCode::kInvalidConfig,
                path.string() + ": checkpoint config does not match request (" +
                    "checkpoint " + to_string(m.config().mode) + " n=" +
                    std::to_string(m.config().n_blocks) + " C=" +
                    std::to_string(m.config().channels) + ", requested " +
                    to_string(expected.mode) + " n=" +
                    std::to_string(expected.n_blocks) + " C=" +
                    std::to_string(expected.channels) + ")");
  }
  return m;
}

}  // namespace irnet
