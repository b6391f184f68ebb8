#pragma once

#include <cstdint>
#include <string>

#include "videokit/models/blocks.hpp"
#include "videokit/models/init.hpp"

namespace videokit::models {

enum class X3DVariant { xs, s, m, l };

X3DVariant parse_x3d_variant(const std::string& name);

struct X3DConfig {
  std::int64_t input_channel = 3;
  int input_clip_length = 16;
  int input_crop_size = 312;
  std::int64_t model_num_class = 400;
  double width_factor = 2.0;
  double depth_factor = 5.0;
  double bottleneck_factor = 2.25;
  double se_ratio = 0.0625;
  std::int64_t stem_dim_in = 12;
  std::int64_t head_dim_out = 2048;
  double dropout = 0.5;
  HeadActivation head_activation = HeadActivation::none;

  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();
  // Activation between the depthwise conv and the last pointwise conv.
  ActivationFactory inner_activation = make_swish();

  bool initialize_weights = true;
  InitOptions init;
};

// Expansion preset: clip length, crop size and depth factor.
X3DConfig x3d_config(X3DVariant variant, std::int64_t model_num_class = 400);

// Channel rounding used by the X3D width expansion.
std::int64_t x3d_round_width(double width, double multiplier, std::int64_t min_width = 8,
                             std::int64_t divisor = 8);
int x3d_round_repeats(int repeats, double multiplier);

// Net with children "stem", "stage1".."stage4", "head". Blocks are inverted
// bottlenecks: pointwise -> depthwise kT x 3 x 3 -> squeeze-excite (every
// other block) -> pointwise.
ModulePtr create_x3d(const X3DConfig& cfg);
ModulePtr create_x3d(X3DVariant variant, std::int64_t model_num_class = 400);

}  // namespace videokit::models
