#pragma once

#include <span>

#include "videokit/models/layers.hpp"

// Efficient stand-ins for Conv3d that the deployment pass swaps in.
namespace videokit::accelerator {

using models::FlopTally;
using models::ModulePtr;

// A (1, kH, kW) conv with temporal stride 1: time is folded into the batch
// and a 2-D conv runs on every frame.
class Conv2dPerFrame : public models::Cloneable<Conv2dPerFrame, models::UnaryModule> {
 public:
  Conv2dPerFrame(std::int64_t dim_in, std::int64_t dim_out, kernels::Conv2dGeometry g,
                 Tensor weight, Tensor bias);
  std::string_view kind() const override { return "Conv2dPerFrame"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;
  const kernels::Conv2dGeometry& geometry() const noexcept { return geometry_; }

 private:
  std::int64_t dim_in_;
  std::int64_t dim_out_;
  kernels::Conv2dGeometry geometry_;
};

// A (kT, 1, 1) conv with spatial stride 1: every pixel becomes a batch entry
// and a 1-D conv runs along time.
class Conv1dTemporal : public models::Cloneable<Conv1dTemporal, models::UnaryModule> {
 public:
  Conv1dTemporal(std::int64_t dim_in, std::int64_t dim_out, kernels::Conv1dGeometry g,
                 Tensor weight, Tensor bias);
  std::string_view kind() const override { return "Conv1dTemporal"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;
  const kernels::Conv1dGeometry& geometry() const noexcept { return geometry_; }

 private:
  std::int64_t dim_in_;
  std::int64_t dim_out_;
  kernels::Conv1dGeometry geometry_;
};

struct FusedConv {
  Tensor weight;
  Tensor bias;
};

// Folds inference batch norm into the preceding conv:
//   W'_c = W_c * g_c,  b'_c = (b_c - mean_c) * g_c + beta_c,
//   g_c = gamma_c / sqrt(var_c + eps).
// `bias` may be empty (treated as zero). Throws ShapeError on a channel
// count mismatch.
FusedConv fuse_conv_bn(const Tensor& weight, std::span<const float> bias,
                       std::span<const float> gamma, std::span<const float> beta,
                       std::span<const float> mean, std::span<const float> var, double eps);

// Module-level forms. Throw MatchError when the conv does not qualify.
ModulePtr fuse_conv_bn(const models::Conv3d& conv, const models::BatchNorm3d& bn);
ModulePtr decompose_spatial_conv(const models::Conv3d& conv);
ModulePtr decompose_temporal_conv(const models::Conv3d& conv);

bool is_spatial_conv(const models::Conv3d& conv);
bool is_temporal_conv(const models::Conv3d& conv);

}  // namespace videokit::accelerator
