#include "videokit/transforms/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "videokit/transforms/mix.hpp"

namespace videokit::transforms {

namespace {

constexpr float kFill = 0.5f;

struct OpInfo {
  AugOp op;
  std::string_view name;
};

constexpr std::array<OpInfo, 12> kOps{{
    {AugOp::rotate, "rotate"},
    {AugOp::shear_x, "shear_x"},
    {AugOp::shear_y, "shear_y"},
    {AugOp::translate_x, "translate_x"},
    {AugOp::translate_y, "translate_y"},
    {AugOp::posterize, "posterize"},
    {AugOp::solarize, "solarize"},
    {AugOp::contrast, "contrast"},
    {AugOp::brightness, "brightness"},
    {AugOp::sharpness, "sharpness"},
    {AugOp::auto_contrast, "auto_contrast"},
    {AugOp::equalize, "equalize"},
}};

float clamp01(double x) { return static_cast<float>(std::clamp(x, 0.0, 1.0)); }

std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

// Frames are the (batch, T) pairs; each channel plane of a frame is
// addressed as plane(frame, c).
struct FrameView {
  ClipDims d;
  std::int64_t frames() const { return d.batch * d.t; }
  std::int64_t plane_offset(std::int64_t frame, std::int64_t c) const {
    const auto b = frame / d.t;
    const auto t = frame % d.t;
    return ((b * d.c + c) * d.t + t) * d.h * d.w;
  }
};

void log_frame(OpLog* log, std::vector<double> params) {
  if (log) log->back().frame_params.push_back(std::move(params));
}

// Inverse-mapped bilinear warp around the frame centre: a destination pixel
// p samples the source at inv * (p - c - shift) + c.
Tensor warp(const Tensor& v, const std::array<double, 4>& inv, double shift_x, double shift_y, OpLog* log) {
  const FrameView f{clip_dims(v)};
  const auto H = f.d.h;
  const auto W = f.d.w;
  const double cx = (static_cast<double>(W) - 1.0) / 2.0;
  const double cy = (static_cast<double>(H) - 1.0) / 2.0;
  Tensor out(v.shape());
  for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
    log_frame(log, {inv[0], inv[1], inv[2], inv[3], shift_x, shift_y});
    for (std::int64_t c = 0; c < f.d.c; ++c) {
      const float* src = v.data() + f.plane_offset(fr, c);
      float* dst = out.data() + f.plane_offset(fr, c);
      for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
          const double dx = static_cast<double>(x) - cx - shift_x;
          const double dy = static_cast<double>(y) - cy - shift_y;
          const double sx = inv[0] * dx + inv[1] * dy + cx;
          const double sy = inv[2] * dx + inv[3] * dy + cy;
          const auto x0 = static_cast<std::int64_t>(std::floor(sx));
          const auto y0 = static_cast<std::int64_t>(std::floor(sy));
          const double wx = sx - static_cast<double>(x0);
          const double wy = sy - static_cast<double>(y0);
          double acc = 0.0;
          for (int k = 0; k < 4; ++k) {
            const auto xi = x0 + (k & 1);
            const auto yi = y0 + (k >> 1);
            const double w = ((k & 1) ? wx : 1.0 - wx) * ((k >> 1) ? wy : 1.0 - wy);
            if (w == 0.0) continue;
            const double s = (xi >= 0 && xi < W && yi >= 0 && yi < H) ? src[yi * W + xi] : kFill;
            acc += w * s;
          }
          dst[y * W + x] = clamp01(acc);
        }
      }
    }
  }
  return out;
}

// Pointwise map applied to every pixel of every frame.
template <typename Fn>
Tensor map_pixels(const Tensor& v, const std::vector<double>& params, OpLog* log, Fn fn) {
  const FrameView f{clip_dims(v)};
  Tensor out(v.shape());
  const auto plane = f.d.h * f.d.w;
  for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
    log_frame(log, params);
    for (std::int64_t c = 0; c < f.d.c; ++c) {
      const float* src = v.data() + f.plane_offset(fr, c);
      float* dst = out.data() + f.plane_offset(fr, c);
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = fn(c, src[i]);
    }
  }
  return out;
}

double clip_gray_mean(const Tensor& v) {
  const FrameView f{clip_dims(v)};
  const auto plane = f.d.h * f.d.w;
  double sum = 0.0;
  for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
    for (std::int64_t i = 0; i < plane; ++i) {
      if (f.d.c == 3) {
        sum += 0.299 * v.data()[f.plane_offset(fr, 0) + i] + 0.587 * v.data()[f.plane_offset(fr, 1) + i] +
               0.114 * v.data()[f.plane_offset(fr, 2) + i];
      } else {
        double s = 0.0;
        for (std::int64_t c = 0; c < f.d.c; ++c) s += v.data()[f.plane_offset(fr, c) + i];
        sum += s / static_cast<double>(f.d.c);
      }
    }
  }
  return sum / static_cast<double>(f.frames() * plane);
}

Tensor sharpen(const Tensor& v, double factor, OpLog* log) {
  const FrameView f{clip_dims(v)};
  const auto H = f.d.h;
  const auto W = f.d.w;
  Tensor out = v;
  for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
    log_frame(log, {factor});
    for (std::int64_t c = 0; c < f.d.c; ++c) {
      const float* src = v.data() + f.plane_offset(fr, c);
      float* dst = out.data() + f.plane_offset(fr, c);
      // Border pixels keep their value, as the smoothing kernel is undefined there.
      for (std::int64_t y = 1; y + 1 < H; ++y) {
        for (std::int64_t x = 1; x + 1 < W; ++x) {
          double s = 4.0 * src[y * W + x];
          for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dx = -1; dx <= 1; ++dx) s += src[(y + dy) * W + x + dx];
          }
          const double blur = s / 13.0;
          dst[y * W + x] = clamp01(blur + factor * (src[y * W + x] - blur));
        }
      }
    }
  }
  return out;
}

// Per-channel lookup tables built from a histogram over the whole clip.
Tensor equalize(const Tensor& v, OpLog* log) {
  const FrameView f{clip_dims(v)};
  const auto plane = f.d.h * f.d.w;
  std::vector<std::array<float, 256>> luts(static_cast<std::size_t>(f.d.c));
  std::vector<double> params;
  for (std::int64_t c = 0; c < f.d.c; ++c) {
    std::array<std::int64_t, 256> hist{};
    for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
      const float* src = v.data() + f.plane_offset(fr, c);
      for (std::int64_t i = 0; i < plane; ++i) ++hist[to_u8(src[i])];
    }
    std::int64_t total = 0;
    std::int64_t last = 0;
    for (auto h : hist) {
      total += h;
      if (h > 0) last = h;
    }
    const std::int64_t step = (total - last) / 255;
    auto& lut = luts[static_cast<std::size_t>(c)];
    std::int64_t n = step / 2;
    for (int i = 0; i < 256; ++i) {
      lut[static_cast<std::size_t>(i)] =
          step == 0 ? static_cast<float>(i) / 255.0f
                    : static_cast<float>(std::min<std::int64_t>(255, n / step)) / 255.0f;
      n += hist[static_cast<std::size_t>(i)];
    }
    params.push_back(static_cast<double>(step));
  }
  return map_pixels(v, params, log, [&](std::int64_t c, float x) { return luts[static_cast<std::size_t>(c)][to_u8(x)]; });
}

Tensor auto_contrast(const Tensor& v, OpLog* log) {
  const FrameView f{clip_dims(v)};
  const auto plane = f.d.h * f.d.w;
  std::vector<float> lo(static_cast<std::size_t>(f.d.c), 1.0f);
  std::vector<float> hi(static_cast<std::size_t>(f.d.c), 0.0f);
  std::vector<double> params;
  for (std::int64_t c = 0; c < f.d.c; ++c) {
    for (std::int64_t fr = 0; fr < f.frames(); ++fr) {
      const float* src = v.data() + f.plane_offset(fr, c);
      const auto [mn, mx] = std::minmax_element(src, src + plane);
      lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], *mn);
      hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], *mx);
    }
    params.push_back(lo[static_cast<std::size_t>(c)]);
    params.push_back(hi[static_cast<std::size_t>(c)]);
  }
  return map_pixels(v, params, log, [&](std::int64_t c, float x) {
    const auto l = lo[static_cast<std::size_t>(c)];
    const auto h = hi[static_cast<std::size_t>(c)];
    return h > l ? clamp01((x - l) / (h - l)) : x;
  });
}

}  // namespace

std::string_view to_string(AugOp op) {
  for (const auto& o : kOps) {
    if (o.op == op) return o.name;
  }
  return "unknown";
}

AugOp parse_aug_op(std::string_view name) {
  for (const auto& o : kOps) {
    if (o.name == name) return o.op;
  }
  throw ConfigError("unknown augmentation op '" + std::string(name) + "'");
}

std::vector<AugOp> rand_augment_ops() {
  std::vector<AugOp> out;
  for (const auto& o : kOps) out.push_back(o.op);
  return out;
}

std::vector<AugOp> augmix_ops() {
  std::vector<AugOp> out;
  for (const auto& o : kOps) {
    if (o.op != AugOp::contrast && o.op != AugOp::brightness && o.op != AugOp::sharpness) out.push_back(o.op);
  }
  return out;
}

OpCall sample_op_call(AugOp op, int magnitude, Rng& rng) {
  if (magnitude < 0 || magnitude > 10) throw ConfigError("magnitude must lie in [0, 10]");
  const double level = magnitude / 10.0;
  const double sign = std::bernoulli_distribution(0.5)(rng) ? -1.0 : 1.0;
  OpCall c{op, 0.0};
  switch (op) {
    case AugOp::rotate: c.arg = sign * 30.0 * level; break;
    case AugOp::shear_x:
    case AugOp::shear_y: c.arg = sign * 0.3 * level; break;
    case AugOp::translate_x:
    case AugOp::translate_y: c.arg = sign * 0.45 * level; break;
    case AugOp::posterize: c.arg = 8.0 - std::floor(4.0 * level); break;
    case AugOp::solarize: c.arg = (256.0 - 256.0 * level) / 255.0; break;
    case AugOp::contrast:
    case AugOp::brightness:
    case AugOp::sharpness: c.arg = 1.0 + sign * 0.9 * level; break;
    case AugOp::auto_contrast:
    case AugOp::equalize: break;
  }
  return c;
}

double max_frame_param_spread(const OpLog& log) {
  double spread = 0.0;
  for (const auto& rec : log) {
    if (rec.frame_params.empty()) continue;
    const auto& first = rec.frame_params.front();
    for (const auto& p : rec.frame_params) {
      if (p.size() != first.size()) return std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < p.size(); ++k) spread = std::max(spread, std::abs(p[k] - first[k]));
    }
  }
  return spread;
}

Tensor apply_op(const Tensor& v, const OpCall& call, OpLog* log) {
  const auto d = clip_dims(v);
  if (log) log->push_back(OpRecord{std::string(to_string(call.op)), {}});
  const double a = call.arg;
  switch (call.op) {
    case AugOp::rotate: {
      const double r = a * std::numbers::pi / 180.0;
      // Inverse of a rotation is the rotation by -r.
      return warp(v, {std::cos(r), std::sin(r), -std::sin(r), std::cos(r)}, 0.0, 0.0, log);
    }
    case AugOp::shear_x: return warp(v, {1.0, -a, 0.0, 1.0}, 0.0, 0.0, log);
    case AugOp::shear_y: return warp(v, {1.0, 0.0, -a, 1.0}, 0.0, 0.0, log);
    case AugOp::translate_x: return warp(v, {1.0, 0.0, 0.0, 1.0}, a * static_cast<double>(d.w), 0.0, log);
    case AugOp::translate_y: return warp(v, {1.0, 0.0, 0.0, 1.0}, 0.0, a * static_cast<double>(d.h), log);
    case AugOp::posterize: {
      const int bits = std::clamp(static_cast<int>(a), 1, 8);
      const auto mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
      return map_pixels(v, {a}, log, [&](std::int64_t, float x) {
        return static_cast<float>(to_u8(x) & mask) / 255.0f;
      });
    }
    case AugOp::solarize:
      return map_pixels(v, {a}, log, [&](std::int64_t, float x) { return x >= a ? 1.0f - x : x; });
    case AugOp::contrast: {
      const double mean = clip_gray_mean(v);
      return map_pixels(v, {a, mean}, log, [&](std::int64_t, float x) { return clamp01(mean + a * (x - mean)); });
    }
    case AugOp::brightness:
      return map_pixels(v, {a}, log, [&](std::int64_t, float x) { return clamp01(a * x); });
    case AugOp::sharpness: return sharpen(v, a, log);
    case AugOp::auto_contrast: return auto_contrast(v, log);
    case AugOp::equalize: return equalize(v, log);
  }
  return v;
}

Tensor rand_augment(const Tensor& v, const RandAugmentConfig& cfg, Rng& rng, OpLog* log) {
  if (cfg.magnitude < 0 || cfg.magnitude > 10) throw ConfigError("magnitude must lie in [0, 10]");
  if (cfg.num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (cfg.ops.empty()) throw ConfigError("rand_augment needs at least one op");
  clip_dims(v);
  Tensor out = v;
  std::uniform_int_distribution<std::size_t> pick(0, cfg.ops.size() - 1);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto op = cfg.ops[pick(rng)];
    out = apply_op(out, sample_op_call(op, cfg.magnitude, rng), log);
  }
  return out;
}

AugMixDraw sample_augmix(const AugMixConfig& cfg, Rng& rng) {
  if (cfg.width < 1) throw ConfigError("augmix width must be >= 1");
  if (cfg.depth == 0 || cfg.depth < -1) throw ConfigError("augmix depth must be >= 1 or -1 for random");
  if (!(cfg.alpha > 0.0)) throw ConfigError("augmix alpha must be > 0");
  if (cfg.ops.empty()) throw ConfigError("augmix needs at least one op");
  AugMixDraw d;
  d.m = sample_beta(cfg.alpha, rng);
  d.weights = sample_dirichlet(cfg.alpha, cfg.width, rng);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.ops.size() - 1);
  for (int i = 0; i < cfg.width; ++i) {
    const int depth = cfg.depth > 0 ? cfg.depth : std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<OpCall> chain;
    for (int k = 0; k < depth; ++k) chain.push_back(sample_op_call(cfg.ops[pick(rng)], cfg.magnitude, rng));
    d.chains.push_back(std::move(chain));
  }
  return d;
}

Tensor augmix_with(const Tensor& v, const AugMixDraw& draw, OpLog* log) {
  clip_dims(v);
  if (draw.weights.size() != draw.chains.size()) throw ConfigError("one weight per augmix chain required");
  if (!(draw.m >= 0.0 && draw.m <= 1.0)) throw ConfigError("augmix m must lie in [0, 1]");
  std::vector<double> mix(static_cast<std::size_t>(v.numel()), 0.0);
  for (std::size_t i = 0; i < draw.chains.size(); ++i) {
    Tensor x = v;
    for (const auto& call : draw.chains[i]) x = apply_op(x, call, log);
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] += draw.weights[i] * x[k];
  }
  Tensor out(v.shape());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    out[k] = static_cast<float>(draw.m * v[k] + (1.0 - draw.m) * mix[k]);
  }
  return out;
}

Tensor augmix(const Tensor& v, const AugMixConfig& cfg, Rng& rng, OpLog* log) {
  return augmix_with(v, sample_augmix(cfg, rng), log);
}

}  // namespace videokit::transforms
