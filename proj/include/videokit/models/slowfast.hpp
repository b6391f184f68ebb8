#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "videokit/models/blocks.hpp"
#include "videokit/models/init.hpp"

namespace videokit::models {

// Two-pathway network. Index 0 is the slow pathway, 1 the fast one; the
// fast pathway has `1 / beta_inv` of the slow widths and `alpha` times the
// frames.
struct SlowFastConfig {
  int depth = 50;
  std::int64_t model_num_class = 400;
  std::int64_t input_channel = 3;

  int alpha = 4;
  int beta_inv = 8;
  int fusion_channel_ratio = 2;
  int fusion_kernel = 7;
  // Off: no lateral connections; pathways run independently until the head.
  bool fusion = true;

  std::int64_t slow_stem_dim_out = 64;
  std::array<Triple, 2> stem_conv_kernels{Triple{1, 7, 7}, Triple{5, 7, 7}};
  std::array<int, 4> stage_depths{3, 4, 6, 3};
  // [pathway][stage] -> per-block conv_a temporal extent.
  std::array<std::array<std::vector<int>, 4>, 2> conv_a_temporal_kernels;
  std::array<int, 4> spatial_strides{1, 2, 2, 2};
  std::array<Triple, 4> conv_b_dilation{Triple{1, 1, 1}, Triple{1, 1, 1}, Triple{1, 1, 1},
                                        Triple{1, 1, 1}};

  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();

  // Null disables the head (backbone only).
  HeadFactory head = create_res_basic_head;
  std::array<Triple, 2> head_pool_kernels{Triple{8, 7, 7}, Triple{32, 7, 7}};
  double dropout = 0.5;
  HeadActivation head_activation = HeadActivation::none;

  bool initialize_weights = true;
  InitOptions init;
};

// R50 8x8 (depth 50) or R101 16x8 (depth 101) reference configuration.
SlowFastConfig slowfast_config(int depth = 50, std::int64_t model_num_class = 400);

// Net with children "stem", "stage1".."stage4" (each a MultiPathway whose
// "fusion" child feeds fast features into the slow pathway) and "head". The
// net takes [slow, fast] and checks the frame ratio.
ModulePtr create_slowfast(const SlowFastConfig& cfg);

// Channels entering the head: slow width + fast width of the last stage.
std::int64_t slowfast_head_dim(const SlowFastConfig& cfg);

}  // namespace videokit::models
