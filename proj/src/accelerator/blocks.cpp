#include "videokit/accelerator/blocks.hpp"

#include <cmath>
#include <string>

namespace videokit::accelerator {

namespace {

std::span<const float> bias_of(const models::Module& m) {
  if (!m.has_param("bias")) return {};
  return m.param("bias").values();
}

void check_input(const Shape& x, std::int64_t c, std::string_view who) {
  if (x.size() != 5 || x[1] != c) {
    throw ShapeError(std::string(who) + " expects (N," + std::to_string(c) + ",T,H,W), got " +
                     shape_to_string(x));
  }
}

}  // namespace

// ---- Conv2dPerFrame ----------------------------------------------------

Conv2dPerFrame::Conv2dPerFrame(std::int64_t dim_in, std::int64_t dim_out,
                               kernels::Conv2dGeometry g, Tensor weight, Tensor bias)
    : dim_in_(dim_in), dim_out_(dim_out), geometry_(g) {
  if (weight.shape() != Shape{dim_out, dim_in / g.groups, g.kernel[0], g.kernel[1]}) {
    throw ShapeError("per-frame conv weight has shape " + shape_to_string(weight.shape()));
  }
  add_parameter("weight", std::move(weight));
  if (!bias.empty()) add_parameter("bias", std::move(bias));
}

Tensor Conv2dPerFrame::forward_one(const Tensor& x) const {
  check_input(x.shape(), dim_in_, "Conv2dPerFrame");
  const auto N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  static constexpr int to_frames[] = {0, 2, 1, 3, 4};
  Tensor frames = permute(x, to_frames).reshaped({N * T, C, H, W});
  Tensor y = kernels::conv2d<float>(frames, param("weight"), bias_of(*this), geometry_);
  const auto Ho = y.dim(2), Wo = y.dim(3);
  y.reshape({N, T, dim_out_, Ho, Wo});
  return permute(y, to_frames);
}

Shape Conv2dPerFrame::trace_one(const Shape& x, FlopTally& tally) const {
  check_input(x, dim_in_, "Conv2dPerFrame");
  const auto& g = geometry_;
  const auto ho = kernels::conv_out_extent(x[3], g.kernel[0], g.stride[0], g.padding[0], g.dilation[0]);
  const auto wo = kernels::conv_out_extent(x[4], g.kernel[1], g.stride[1], g.padding[1], g.dilation[1]);
  Shape out{x[0], dim_out_, x[2], ho, wo};
  tally.conv_macs += shape_numel(out) * (dim_in_ / g.groups) * g.kernel[0] * g.kernel[1];
  return out;
}

// ---- Conv1dTemporal ----------------------------------------------------

Conv1dTemporal::Conv1dTemporal(std::int64_t dim_in, std::int64_t dim_out,
                               kernels::Conv1dGeometry g, Tensor weight, Tensor bias)
    : dim_in_(dim_in), dim_out_(dim_out), geometry_(g) {
  if (weight.shape() != Shape{dim_out, dim_in / g.groups, g.kernel}) {
    throw ShapeError("temporal conv weight has shape " + shape_to_string(weight.shape()));
  }
  add_parameter("weight", std::move(weight));
  if (!bias.empty()) add_parameter("bias", std::move(bias));
}

Tensor Conv1dTemporal::forward_one(const Tensor& x) const {
  check_input(x.shape(), dim_in_, "Conv1dTemporal");
  const auto N = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
  static constexpr int to_lines[] = {0, 3, 4, 1, 2};    // (N,H,W,C,T)
  static constexpr int from_lines[] = {0, 3, 4, 1, 2};  // (N,H,W,C,T) -> (N,C,T,H,W)
  Tensor lines = permute(x, to_lines).reshaped({N * H * W, C, T});
  Tensor y = kernels::conv1d<float>(lines, param("weight"), bias_of(*this), geometry_);
  const auto To = y.dim(2);
  y.reshape({N, H, W, dim_out_, To});
  return permute(y, from_lines);
}

Shape Conv1dTemporal::trace_one(const Shape& x, FlopTally& tally) const {
  check_input(x, dim_in_, "Conv1dTemporal");
  const auto& g = geometry_;
  const auto to = kernels::conv_out_extent(x[2], g.kernel, g.stride, g.padding, g.dilation);
  Shape out{x[0], dim_out_, to, x[3], x[4]};
  tally.conv_macs += shape_numel(out) * (dim_in_ / g.groups) * g.kernel;
  return out;
}

// ---- rules -------------------------------------------------------------

FusedConv fuse_conv_bn(const Tensor& weight, std::span<const float> bias,
                       std::span<const float> gamma, std::span<const float> beta,
                       std::span<const float> mean, std::span<const float> var, double eps) {
  if (weight.rank() < 1) throw ShapeError("conv weight must have an output-channel axis");
  const auto C = weight.dim(0);
  const auto n = static_cast<std::size_t>(C);
  if (gamma.size() != n || beta.size() != n || mean.size() != n || var.size() != n ||
      (!bias.empty() && bias.size() != n)) {
    throw ShapeError("batch norm has " + std::to_string(gamma.size()) +
                     " channels but the conv has " + std::to_string(C) + " outputs");
  }
  FusedConv out{weight, Tensor({C})};
  const std::int64_t per = weight.numel() / C;
  for (std::int64_t c = 0; c < C; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double g = gamma[i] / std::sqrt(static_cast<double>(var[i]) + eps);
    float* w = out.weight.data() + c * per;
    for (std::int64_t k = 0; k < per; ++k) w[k] = static_cast<float>(w[k] * g);
    const double b = bias.empty() ? 0.0 : bias[i];
    out.bias[i] = static_cast<float>((b - mean[i]) * g + beta[i]);
  }
  return out;
}

ModulePtr fuse_conv_bn(const models::Conv3d& conv, const models::BatchNorm3d& bn) {
  if (bn.channels() != conv.dim_out()) {
    throw ShapeError("batch norm has " + std::to_string(bn.channels()) +
                     " channels but the conv has " + std::to_string(conv.dim_out()) + " outputs");
  }
  auto fused = fuse_conv_bn(conv.param("weight"), bias_of(conv), bn.param("weight").values(),
                            bn.param("bias").values(), bn.param("running_mean").values(),
                            bn.param("running_var").values(), bn.eps());
  auto out = std::make_shared<models::Conv3d>(conv.dim_in(), conv.dim_out(), conv.geometry(), true);
  out->param("weight") = std::move(fused.weight);
  out->param("bias") = std::move(fused.bias);
  return out;
}

bool is_spatial_conv(const models::Conv3d& conv) {
  const auto& g = conv.geometry();
  return g.kernel[0] == 1 && g.stride[0] == 1 && g.padding[0] == 0;
}

bool is_temporal_conv(const models::Conv3d& conv) {
  const auto& g = conv.geometry();
  return g.kernel[1] == 1 && g.kernel[2] == 1 && g.stride[1] == 1 && g.stride[2] == 1 &&
         g.padding[1] == 0 && g.padding[2] == 0;
}

ModulePtr decompose_spatial_conv(const models::Conv3d& conv) {
  if (!is_spatial_conv(conv)) {
    throw MatchError("spatial decomposition needs kT=1, temporal stride 1 and no temporal padding");
  }
  const auto& g3 = conv.geometry();
  kernels::Conv2dGeometry g;
  g.kernel = {g3.kernel[1], g3.kernel[2]};
  g.stride = {g3.stride[1], g3.stride[2]};
  g.padding = {g3.padding[1], g3.padding[2]};
  g.dilation = {g3.dilation[1], g3.dilation[2]};
  g.groups = g3.groups;
  const Tensor& w = conv.param("weight");
  Tensor w2 = w.reshaped({w.dim(0), w.dim(1), w.dim(3), w.dim(4)});
  Tensor b = conv.has_bias() ? conv.param("bias") : Tensor();
  return std::make_shared<Conv2dPerFrame>(conv.dim_in(), conv.dim_out(), g, std::move(w2),
                                          std::move(b));
}

ModulePtr decompose_temporal_conv(const models::Conv3d& conv) {
  if (!is_temporal_conv(conv)) {
    throw MatchError("temporal decomposition needs kH=kW=1, spatial stride 1 and no spatial padding");
  }
  const auto& g3 = conv.geometry();
  kernels::Conv1dGeometry g;
  g.kernel = g3.kernel[0];
  g.stride = g3.stride[0];
  g.padding = g3.padding[0];
  g.dilation = g3.dilation[0];
  g.groups = g3.groups;
  const Tensor& w = conv.param("weight");
  Tensor w1 = w.reshaped({w.dim(0), w.dim(1), w.dim(2)});
  Tensor b = conv.has_bias() ? conv.param("bias") : Tensor();
  return std::make_shared<Conv1dTemporal>(conv.dim_in(), conv.dim_out(), g, std::move(w1),
                                          std::move(b));
}

}  // namespace videokit::accelerator
