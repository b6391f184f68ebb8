#pragma once

#include <cstdint>
#include <vector>

#include "videokit/kernels/ops.hpp"
#include "videokit/models/blocks.hpp"
#include "videokit/models/init.hpp"

namespace videokit::models {

struct RoiHeadConfig {
  std::int64_t dim_in = 2048;
  std::int64_t num_classes = 80;
  // Per pathway frame count of the backbone output; each pathway is
  // average-pooled over time with this kernel before the pathways are
  // concatenated.
  std::vector<int> temporal_pool_kernels{4};
  kernels::RoiAlignConfig roi;
  double dropout = 0.5;
  HeadActivation activation = HeadActivation::sigmoid;
};

ModulePtr create_roi_head(const RoiHeadConfig& cfg);

// Attaches a box head to a headless backbone Net. The result takes the
// backbone inputs plus a (K, 5) box tensor and returns (K, num_classes).
ModulePtr create_detection_head(const ModulePtr& backbone, const RoiHeadConfig& cfg,
                                bool initialize_head = true, std::uint64_t seed = 0);

// AVA-style reference detectors: stage-4 spatial stride 1 with dilation 2.
// Slow R50 takes 4 frames; SlowFast R50 takes 8 slow / 32 fast frames.
ModulePtr create_slow_r50_detection(std::int64_t num_classes = 80, bool initialize_weights = true);
ModulePtr create_slowfast_r50_detection(std::int64_t num_classes = 80,
                                        bool initialize_weights = true);

}  // namespace videokit::models
