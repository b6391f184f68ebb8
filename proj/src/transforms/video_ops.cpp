#include "videokit/transforms/video_ops.hpp"

#include <algorithm>
#include <cmath>

#include "videokit/data/clip_sampler.hpp"

namespace videokit::transforms {

namespace {

Shape with_trailing(const Tensor& v, std::int64_t t, std::int64_t h, std::int64_t w) {
  Shape s = v.shape();
  const auto r = s.size();
  s[r - 3] = t;
  s[r - 2] = h;
  s[r - 1] = w;
  return s;
}

// Copies frames `idx` of every (batch, channel) plane stack.
Tensor gather_frames(const Tensor& v, const std::vector<std::int64_t>& idx) {
  const auto d = clip_dims(v);
  const auto n = static_cast<std::int64_t>(idx.size());
  Tensor out(with_trailing(v, n, d.h, d.w));
  const auto plane = d.h * d.w;
  for (std::int64_t bc = 0; bc < d.batch * d.c; ++bc) {
    for (std::int64_t i = 0; i < n; ++i) {
      std::copy_n(v.data() + (bc * d.t + idx[static_cast<std::size_t>(i)]) * plane, plane,
                  out.data() + (bc * n + i) * plane);
    }
  }
  return out;
}

void check_channel_stats(const ClipDims& d, std::span<const float> mean, std::span<const float> std) {
  if (static_cast<std::int64_t>(mean.size()) != d.c || static_cast<std::int64_t>(std.size()) != d.c) {
    throw ConfigError("normalize needs one mean and std per channel (" + std::to_string(d.c) + ")");
  }
  for (auto s : std) {
    if (!(s > 0.0f)) throw ConfigError("normalize std must be > 0");
  }
}

}  // namespace

ClipDims clip_dims(const Tensor& v) {
  if (v.rank() < 4) throw ShapeError("expected [..., C, T, H, W], got " + shape_to_string(v.shape()));
  ClipDims d;
  d.c = v.dim(-4);
  d.t = v.dim(-3);
  d.h = v.dim(-2);
  d.w = v.dim(-1);
  for (std::size_t i = 0; i + 4 < v.rank(); ++i) d.batch *= v.shape()[i];
  return d;
}

Tensor uniform_temporal_subsample(const Tensor& v, std::int64_t n) {
  const auto d = clip_dims(v);
  return gather_frames(v, data::uniform_temporal_indices(d.t, n));
}

Tensor temporal_stride(const Tensor& v, std::int64_t alpha) {
  if (alpha < 1) throw ConfigError("temporal stride must be >= 1");
  const auto d = clip_dims(v);
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < d.t; i += alpha) idx.push_back(i);
  return gather_frames(v, idx);
}

std::pair<std::int64_t, std::int64_t> short_side_target(std::int64_t h, std::int64_t w, std::int64_t size) {
  if (size < 1) throw ConfigError("short side size must be >= 1");
  if (h < 1 || w < 1) throw ShapeError("cannot scale an empty frame");
  if (h <= w) return {size, static_cast<std::int64_t>(static_cast<double>(w) * static_cast<double>(size) / static_cast<double>(h))};
  return {static_cast<std::int64_t>(static_cast<double>(h) * static_cast<double>(size) / static_cast<double>(w)), size};
}

Tensor resize(const Tensor& v, std::int64_t out_h, std::int64_t out_w, Interp interp) {
  if (v.rank() < 2) throw ShapeError("resize needs at least two axes");
  if (out_h < 1 || out_w < 1) throw ConfigError("resize target must be >= 1");
  const auto H = v.dim(-2);
  const auto W = v.dim(-1);
  if (H == out_h && W == out_w) return v;
  Shape s = v.shape();
  s[s.size() - 2] = out_h;
  s[s.size() - 1] = out_w;
  Tensor out(s);
  const auto planes = v.numel() / (H * W);
  const double sy = static_cast<double>(H) / static_cast<double>(out_h);
  const double sx = static_cast<double>(W) / static_cast<double>(out_w);
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = v.data() + p * H * W;
    float* dst = out.data() + p * out_h * out_w;
    for (std::int64_t y = 0; y < out_h; ++y) {
      if (interp == Interp::nearest) {
        const auto iy = std::min<std::int64_t>(H - 1, static_cast<std::int64_t>(std::floor(static_cast<double>(y) * sy)));
        for (std::int64_t x = 0; x < out_w; ++x) {
          const auto ix = std::min<std::int64_t>(W - 1, static_cast<std::int64_t>(std::floor(static_cast<double>(x) * sx)));
          dst[y * out_w + x] = src[iy * W + ix];
        }
        continue;
      }
      const double fy = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
      const auto y0 = std::min<std::int64_t>(H - 1, static_cast<std::int64_t>(fy));
      const auto y1 = std::min<std::int64_t>(H - 1, y0 + 1);
      const double wy = fy - static_cast<double>(y0);
      for (std::int64_t x = 0; x < out_w; ++x) {
        const double fx = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
        const auto x0 = std::min<std::int64_t>(W - 1, static_cast<std::int64_t>(fx));
        const auto x1 = std::min<std::int64_t>(W - 1, x0 + 1);
        const double wx = fx - static_cast<double>(x0);
        const double top = src[y0 * W + x0] * (1.0 - wx) + src[y0 * W + x1] * wx;
        const double bot = src[y1 * W + x0] * (1.0 - wx) + src[y1 * W + x1] * wx;
        dst[y * out_w + x] = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Tensor short_side_scale(const Tensor& v, std::int64_t size, Interp interp) {
  const auto d = clip_dims(v);
  const auto [h, w] = short_side_target(d.h, d.w, size);
  return resize(v, h, w, interp);
}

Tensor random_short_side_scale(const Tensor& v, std::int64_t min_size, std::int64_t max_size, Rng& rng,
                               Interp interp) {
  if (min_size < 1 || max_size < min_size) throw ConfigError("bad short side range");
  const auto size = std::uniform_int_distribution<std::int64_t>(min_size, max_size)(rng);
  return short_side_scale(v, size, interp);
}

Tensor crop(const Tensor& v, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w) {
  const auto d = clip_dims(v);
  if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > d.h || left + w > d.w) {
    throw ShapeError("crop window outside a " + std::to_string(d.h) + "x" + std::to_string(d.w) + " frame");
  }
  Tensor out(with_trailing(v, d.t, h, w));
  const auto planes = d.batch * d.c * d.t;
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t y = 0; y < h; ++y) {
      std::copy_n(v.data() + p * d.h * d.w + (top + y) * d.w + left, w, out.data() + (p * h + y) * w);
    }
  }
  return out;
}

Tensor center_crop(const Tensor& v, std::int64_t size) {
  const auto d = clip_dims(v);
  if (size > d.h || size > d.w) throw ShapeError("center crop larger than the frame");
  return crop(v, (d.h - size) / 2, (d.w - size) / 2, size, size);
}

Tensor random_crop(const Tensor& v, std::int64_t size, Rng& rng) {
  const auto d = clip_dims(v);
  if (size > d.h || size > d.w) throw ShapeError("random crop larger than the frame");
  const auto top = std::uniform_int_distribution<std::int64_t>(0, d.h - size)(rng);
  const auto left = std::uniform_int_distribution<std::int64_t>(0, d.w - size)(rng);
  return crop(v, top, left, size, size);
}

Tensor horizontal_flip(const Tensor& v) {
  const auto d = clip_dims(v);
  Tensor out = v;
  const auto rows = v.numel() / d.w;
  for (std::int64_t r = 0; r < rows; ++r) std::reverse(out.data() + r * d.w, out.data() + (r + 1) * d.w);
  return out;
}

Tensor random_horizontal_flip(const Tensor& v, double p, Rng& rng) {
  const bool flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  return flip ? horizontal_flip(v) : v;
}

Tensor normalize(const Tensor& v, std::span<const float> mean, std::span<const float> std) {
  const auto d = clip_dims(v);
  check_channel_stats(d, mean, std);
  Tensor out = v;
  const auto vol = d.t * d.h * d.w;
  for (std::int64_t b = 0; b < d.batch; ++b) {
    for (std::int64_t c = 0; c < d.c; ++c) {
      float* p = out.data() + (b * d.c + c) * vol;
      const auto m = mean[static_cast<std::size_t>(c)];
      const auto s = std[static_cast<std::size_t>(c)];
      for (std::int64_t i = 0; i < vol; ++i) p[i] = (p[i] - m) / s;
    }
  }
  return out;
}

Tensor denormalize(const Tensor& v, std::span<const float> mean, std::span<const float> std) {
  const auto d = clip_dims(v);
  check_channel_stats(d, mean, std);
  Tensor out = v;
  const auto vol = d.t * d.h * d.w;
  for (std::int64_t b = 0; b < d.batch; ++b) {
    for (std::int64_t c = 0; c < d.c; ++c) {
      float* p = out.data() + (b * d.c + c) * vol;
      const auto m = mean[static_cast<std::size_t>(c)];
      const auto s = std[static_cast<std::size_t>(c)];
      for (std::int64_t i = 0; i < vol; ++i) p[i] = p[i] * s + m;
    }
  }
  return out;
}

std::vector<Tensor> pack_pathways(const Tensor& v, std::int64_t alpha) {
  if (alpha < 1) throw ConfigError("pathway alpha must be >= 1");
  const auto d = clip_dims(v);
  if (d.t % alpha != 0) {
    throw ConfigError("frame count " + std::to_string(d.t) + " is not divisible by alpha " + std::to_string(alpha));
  }
  return {temporal_stride(v, alpha), v};
}

}  // namespace videokit::transforms
