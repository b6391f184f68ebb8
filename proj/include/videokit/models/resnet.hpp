#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "videokit/models/blocks.hpp"
#include "videokit/models/init.hpp"

namespace videokit::models {

enum class ResNetVariant { c2d, i3d, slow };

ResNetVariant parse_resnet_variant(const std::string& name);

// Every knob of the single-stream ResNet skeleton. Start from
// resnet_config() and override what you need.
struct ResNetConfig {
  std::int64_t input_channel = 3;
  std::int64_t model_num_class = 400;
  int depth = 50;

  std::int64_t stem_dim_out = 64;
  Triple stem_conv_kernel{1, 7, 7};
  Triple stem_conv_stride{1, 2, 2};
  StemPool stem_pool = StemPool::max;
  Triple stem_pool_kernel{1, 3, 3};
  Triple stem_pool_stride{1, 2, 2};
  // Stem conv split into a temporal (kT,1,1) and a spatial (1,kH,kW) conv
  // whose outputs are summed (acoustic stem).
  bool separable_stem = false;

  // Max pool after stage 1 with kernel == stride (I3D/C2D temporal halving).
  std::optional<Triple> stage1_pool;

  std::array<int, 4> stage_depths{3, 4, 6, 3};
  // Per stage, per block temporal extent of conv_a (spatial extent is 1).
  std::array<std::vector<int>, 4> conv_a_temporal_kernels;
  std::array<Triple, 4> conv_b_kernel{Triple{1, 3, 3}, Triple{1, 3, 3}, Triple{1, 3, 3},
                                      Triple{1, 3, 3}};
  std::array<Triple, 4> conv_b_dilation{Triple{1, 1, 1}, Triple{1, 1, 1}, Triple{1, 1, 1},
                                        Triple{1, 1, 1}};
  std::array<bool, 4> separable_conv_b{false, false, false, false};
  std::array<int, 4> temporal_strides{1, 1, 1, 1};
  std::array<int, 4> spatial_h_strides{1, 2, 2, 2};
  std::array<int, 4> spatial_w_strides{1, 2, 2, 2};

  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();

  // Null disables the head (backbone only, e.g. for a detection head).
  HeadFactory head = create_res_basic_head;
  std::optional<Triple> head_pool_kernel;
  double dropout = 0.5;
  HeadActivation head_activation = HeadActivation::none;

  bool initialize_weights = true;
  InitOptions init;
};

// Stage temporal kernels, stem and pools for the named variant. The head
// pool kernel is the one the variant uses for 8-frame 224 px clips.
ResNetConfig resnet_config(ResNetVariant variant, int depth = 50,
                           std::int64_t model_num_class = 400);

// stem + 4 stages + head as a Net with children "stem", "stage1",
// ["stage1_pool"], "stage2", "stage3", "stage4", "head".
ModulePtr create_resnet(const ResNetConfig& cfg);
ModulePtr create_resnet(ResNetVariant variant, int depth = 50, std::int64_t model_num_class = 400);

// Stage output widths for a config: stem_dim_out * 4 * 2^i.
std::array<std::int64_t, 4> resnet_stage_widths(std::int64_t stem_dim_out);

struct AcousticConfig {
  std::int64_t model_num_class = 400;
  int depth = 50;
  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();
  double dropout = 0.5;
  bool initialize_weights = true;
  InitOptions init;
};

// Slow-only style backbone over spectrograms laid out as (N, 1, T, F, 1).
ResNetConfig acoustic_resnet_config(const AcousticConfig& cfg);
ModulePtr create_acoustic_resnet(const AcousticConfig& cfg = {});

// [..., T, F] spectrogram -> (N, 1, T, F, 1) with the leading dims folded
// into N (a rank-2 input gets N = 1).
Tensor spectrogram_to_video(const Tensor& spec);

}  // namespace videokit::models
