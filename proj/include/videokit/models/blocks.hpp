#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "videokit/models/layers.hpp"

// Building-block factories. Norm and activation layers are injected as
// constructors so a caller can swap BatchNorm3d/ReLU for anything with the
// same shape contract; a constructor that returns null means "no layer".
namespace videokit::models {

using Triple = std::array<int, 3>;

using NormFactory = std::function<ModulePtr(std::int64_t channels)>;
using ActivationFactory = std::function<ModulePtr()>;

NormFactory make_batch_norm(double eps = 1e-5);
ActivationFactory make_relu();
ActivationFactory make_swish();
ActivationFactory make_identity();
// Returns null: the activation slot is left out of the network entirely.
ActivationFactory no_activation();

enum class StemPool { none, max, avg };

struct StemConfig {
  std::int64_t dim_in = 3;
  std::int64_t dim_out = 64;
  Triple conv_kernel{1, 7, 7};
  Triple conv_stride{1, 2, 2};
  StemPool pool = StemPool::max;
  Triple pool_kernel{1, 3, 3};
  Triple pool_stride{1, 2, 2};
  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();
};

// conv -> norm -> activation -> optional pool, as a Sequential with children
// "conv", "norm", "act", "pool".
ModulePtr create_res_basic_stem(const StemConfig& cfg);

struct BottleneckConfig {
  std::int64_t dim_in = 64;
  std::int64_t dim_inner = 64;
  std::int64_t dim_out = 256;
  Triple conv_a_kernel{1, 1, 1};
  Triple conv_a_stride{1, 1, 1};
  Triple conv_b_kernel{1, 3, 3};
  Triple conv_b_stride{1, 1, 1};
  Triple conv_b_dilation{1, 1, 1};
  int conv_b_groups = 1;
  // Split conv_b into a temporal (kT,1,1) and a spatial (1,kH,kW) conv whose
  // outputs are summed (the acoustic bottleneck).
  bool separable_conv_b = false;
  NormFactory norm = make_batch_norm();
  ActivationFactory activation = make_relu();
  // When false, a dims or stride mismatch is a ConfigError instead of adding
  // a 1x1x1 conv + norm shortcut.
  bool allow_projection = true;
};

// 1x1x1-ish conv_a -> kT x 3 x 3 conv_b -> 1x1x1 conv_c with norms and
// activations, residual add, activation. Returns a ResidualBlock whose
// "branch2" Sequential has children conv_a, norm_a, act_a, conv_b, norm_b,
// act_b, conv_c, norm_c. The final norm is tagged `block_final`.
ModulePtr create_bottleneck_block(const BottleneckConfig& cfg);

struct StageConfig {
  int depth = 3;
  BottleneckConfig block;
  // Optional per-block temporal kernel of conv_a; overrides
  // block.conv_a_kernel[0] when non-empty (size must equal depth).
  std::vector<int> conv_a_temporal_kernels;
};

// `depth` blocks chained as a Sequential ("block0", "block1", ...). Only the
// first block uses the configured strides and dim_in.
ModulePtr create_res_stage(const StageConfig& cfg);

enum class HeadActivation { none, softmax, sigmoid };

struct HeadConfig {
  std::int64_t dim_in = 2048;
  std::int64_t num_classes = 400;
  // Average-pool kernel with stride 1; nullopt means global average.
  std::optional<Triple> pool_kernel;
  // Replaces the average pool when set (multi-pathway heads).
  ModulePtr pool;
  double dropout = 0.5;
  HeadActivation activation = HeadActivation::none;
  bool output_with_global_average = true;
};

using HeadFactory = std::function<ModulePtr(const HeadConfig&)>;

// pool -> dropout -> linear -> optional activation -> global average, as a
// Sequential with children "pool", "dropout", "proj", "activation",
// "output_pool".
ModulePtr create_res_basic_head(const HeadConfig& cfg);

// Throws ConfigError unless every kernel extent is odd.
void check_odd_kernel(const Triple& k, const std::string& what);

}  // namespace videokit::models
