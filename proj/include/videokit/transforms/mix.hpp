#pragma once

#include <cstdint>
#include <vector>

#include "videokit/transforms/video_ops.hpp"

// Batch-level label mixing. Batches are (B, C, T, H, W) after collation and
// labels are (B, K) rows summing to 1.
namespace videokit::transforms {

// (B, K) one-hot rows; smoothing spreads `smoothing` mass uniformly.
Tensor one_hot(std::span<const std::int64_t> labels, std::int64_t num_classes, float smoothing = 0.0f);

// Draw from Beta(alpha, alpha) via two gamma draws.
double sample_beta(double alpha, Rng& rng);
std::vector<double> sample_dirichlet(double alpha, std::int64_t k, Rng& rng);

// Inclusive-exclusive pixel window [top, top + h) x [left, left + w).
struct CutBox {
  std::int64_t top = 0;
  std::int64_t left = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::int64_t area() const { return h * w; }
};

struct MixResult {
  Tensor batch;
  Tensor labels;
  double lambda = 1.0;  // weight of the original sample in the labels
  std::vector<std::int64_t> permutation;
  CutBox box;  // cutmix only
};

// Uniformly random permutation of [0, B).
std::vector<std::int64_t> sample_permutation(std::int64_t b, Rng& rng);

// x' = lambda x + (1 - lambda) x[perm], same for labels. ConfigError when
// B < 2, lambda is outside [0, 1] or perm is not a permutation.
MixResult mixup_with(const Tensor& batch, const Tensor& labels, double lambda,
                     const std::vector<std::int64_t>& perm);
MixResult mixup(const Tensor& batch, const Tensor& labels, double alpha, Rng& rng);

// Box of relative area about 1 - lambda centred uniformly in the frame and
// clipped at the borders.
CutBox sample_cut_box(std::int64_t h, std::int64_t w, double lambda, Rng& rng);

// Pastes `box` from the partner clip into every frame; the label weight is
// 1 - box_area / (H W).
MixResult cutmix_with(const Tensor& batch, const Tensor& labels, const CutBox& box,
                      const std::vector<std::int64_t>& perm);
MixResult cutmix(const Tensor& batch, const Tensor& labels, double alpha, Rng& rng);

}  // namespace videokit::transforms
