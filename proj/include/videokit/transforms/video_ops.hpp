#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "videokit/core/tensor.hpp"

// Clip-level operations on [..., C, T, H, W] float tensors. Functions taking
// a generator draw from it and nothing else, so equal seeds give equal
// outputs bit for bit.
namespace videokit::transforms {

using Rng = std::mt19937_64;

// Frames picked by round(linspace(0, T - 1, n)).
Tensor uniform_temporal_subsample(const Tensor& v, std::int64_t n);

// Frames 0, alpha, 2 alpha, ... of v.
Tensor temporal_stride(const Tensor& v, std::int64_t alpha);

enum class Interp { bilinear, nearest };

// Target (H', W') with the short side set to `size` and the long side
// scaled by the same factor, truncated toward zero.
std::pair<std::int64_t, std::int64_t> short_side_target(std::int64_t h, std::int64_t w, std::int64_t size);

// Resamples the last two axes. Bilinear uses half-pixel centers without
// corner alignment.
Tensor resize(const Tensor& v, std::int64_t out_h, std::int64_t out_w, Interp interp = Interp::bilinear);
Tensor short_side_scale(const Tensor& v, std::int64_t size, Interp interp = Interp::bilinear);
// Short side drawn uniformly from [min_size, max_size].
Tensor random_short_side_scale(const Tensor& v, std::int64_t min_size, std::int64_t max_size, Rng& rng,
                               Interp interp = Interp::bilinear);

// Throws ShapeError when the window leaves the frame.
Tensor crop(const Tensor& v, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w);
Tensor center_crop(const Tensor& v, std::int64_t size);
Tensor random_crop(const Tensor& v, std::int64_t size, Rng& rng);

Tensor horizontal_flip(const Tensor& v);
// Flips with probability p (one Bernoulli draw per call).
Tensor random_horizontal_flip(const Tensor& v, double p, Rng& rng);

// out[c] = (v[c] - mean[c]) / std[c] along axis -4. ConfigError on a length
// mismatch or a non-positive std.
Tensor normalize(const Tensor& v, std::span<const float> mean, std::span<const float> std);
Tensor denormalize(const Tensor& v, std::span<const float> mean, std::span<const float> std);

// (slow, fast): fast is v, slow keeps every alpha-th frame. ConfigError when
// T is not divisible by alpha.
std::vector<Tensor> pack_pathways(const Tensor& v, std::int64_t alpha);

// Channel, frame, height and width extents of a [..., C, T, H, W] tensor
// with leading dims folded into `batch`.
struct ClipDims {
  std::int64_t batch = 1;
  std::int64_t c = 0;
  std::int64_t t = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
};
ClipDims clip_dims(const Tensor& v);

}  // namespace videokit::transforms
