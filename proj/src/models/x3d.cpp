#include "videokit/models/x3d.hpp"

#include <algorithm>
#include <cmath>

namespace videokit::models {

namespace {

ModulePtr maybe_norm(const X3DConfig& cfg, std::int64_t c) { return cfg.norm ? cfg.norm(c) : nullptr; }
ModulePtr maybe_act(const ActivationFactory& f) { return f ? f() : nullptr; }

void add_if(Sequential& seq, std::string name, ModulePtr m) {
  if (m) seq.add(std::move(name), std::move(m));
}

ModulePtr x3d_stem(const X3DConfig& cfg, std::int64_t dim_out) {
  auto seq = std::make_shared<Sequential>();
  kernels::ConvGeometry xy = kernels::same_padded({1, 3, 3}, {1, 2, 2});
  seq->add("conv_xy", std::make_shared<Conv3d>(cfg.input_channel, dim_out, xy));
  kernels::ConvGeometry t = kernels::same_padded({5, 1, 1}, {1, 1, 1}, {1, 1, 1},
                                                 static_cast<int>(dim_out));
  seq->add("conv_t", std::make_shared<Conv3d>(dim_out, dim_out, t));
  add_if(*seq, "norm", maybe_norm(cfg, dim_out));
  add_if(*seq, "act", maybe_act(cfg.activation));
  return seq;
}

ModulePtr x3d_block(const X3DConfig& cfg, std::int64_t dim_in, std::int64_t dim_inner,
                    std::int64_t dim_out, int spatial_stride, bool use_se) {
  auto b2 = std::make_shared<Sequential>();
  b2->add("conv_a", std::make_shared<Conv3d>(dim_in, dim_inner, kernels::ConvGeometry{}));
  add_if(*b2, "norm_a", maybe_norm(cfg, dim_inner));
  add_if(*b2, "act_a", maybe_act(cfg.activation));
  b2->add("conv_b", std::make_shared<Conv3d>(
                        dim_inner, dim_inner,
                        kernels::same_padded({3, 3, 3}, {1, spatial_stride, spatial_stride},
                                             {1, 1, 1}, static_cast<int>(dim_inner))));
  add_if(*b2, "norm_b", maybe_norm(cfg, dim_inner));
  if (use_se) {
    b2->add("se", std::make_shared<SqueezeExcite>(
                      dim_inner, x3d_round_width(static_cast<double>(dim_inner), cfg.se_ratio)));
  }
  add_if(*b2, "act_b", maybe_act(cfg.inner_activation));
  b2->add("conv_c", std::make_shared<Conv3d>(dim_inner, dim_out, kernels::ConvGeometry{}));
  if (auto n = maybe_norm(cfg, dim_out)) {
    if (auto* bn = dynamic_cast<BatchNorm3d*>(n.get())) bn->block_final = true;
    b2->add("norm_c", std::move(n));
  }

  ModulePtr b1;
  if (dim_in != dim_out || spatial_stride != 1) {
    auto s = std::make_shared<Sequential>();
    kernels::ConvGeometry g;
    g.stride = {1, spatial_stride, spatial_stride};
    s->add("conv", std::make_shared<Conv3d>(dim_in, dim_out, g));
    // A stride-only projection keeps its conv but has no norm.
    if (dim_in != dim_out) add_if(*s, "norm", maybe_norm(cfg, dim_out));
    b1 = s;
  }
  return std::make_shared<ResidualBlock>(b1, b2, maybe_act(cfg.activation));
}

}  // namespace

X3DVariant parse_x3d_variant(const std::string& name) {
  if (name == "xs") return X3DVariant::xs;
  if (name == "s") return X3DVariant::s;
  if (name == "m") return X3DVariant::m;
  if (name == "l") return X3DVariant::l;
  throw ConfigError("unknown x3d variant '" + name + "'");
}

X3DConfig x3d_config(X3DVariant variant, std::int64_t model_num_class) {
  X3DConfig cfg;
  cfg.model_num_class = model_num_class;
  switch (variant) {
    case X3DVariant::xs:
      cfg.input_clip_length = 4;
      cfg.input_crop_size = 160;
      cfg.depth_factor = 2.2;
      break;
    case X3DVariant::s:
      cfg.input_clip_length = 13;
      cfg.input_crop_size = 160;
      cfg.depth_factor = 2.2;
      break;
    case X3DVariant::m:
      cfg.input_clip_length = 16;
      cfg.input_crop_size = 224;
      cfg.depth_factor = 2.2;
      break;
    case X3DVariant::l:
      cfg.input_clip_length = 16;
      cfg.input_crop_size = 312;
      cfg.depth_factor = 5.0;
      break;
  }
  return cfg;
}

std::int64_t x3d_round_width(double width, double multiplier, std::int64_t min_width,
                             std::int64_t divisor) {
  if (multiplier == 0.0) return static_cast<std::int64_t>(width);
  const double w = width * multiplier;
  const auto d = static_cast<double>(divisor);
  std::int64_t out = std::max(min_width, static_cast<std::int64_t>((w + d / 2) / d) * divisor);
  if (static_cast<double>(out) < 0.9 * w) out += divisor;
  return out;
}

int x3d_round_repeats(int repeats, double multiplier) {
  if (multiplier == 0.0) return repeats;
  return static_cast<int>(std::ceil(multiplier * repeats));
}

ModulePtr create_x3d(const X3DConfig& cfg) {
  if (cfg.input_clip_length < 1 || cfg.input_crop_size < 32) {
    throw ConfigError("x3d clip length must be >= 1 and crop size >= 32");
  }
  auto net = std::make_shared<Net>();
  const std::int64_t stem_out = x3d_round_width(static_cast<double>(cfg.stem_dim_in), cfg.width_factor);
  net->add("stem", x3d_stem(cfg, stem_out));

  const int base_depths[4] = {1, 2, 5, 3};
  std::int64_t stage_dims[4];
  stage_dims[0] = cfg.stem_dim_in;
  for (int i = 1; i < 4; ++i) stage_dims[i] = x3d_round_width(static_cast<double>(stage_dims[i - 1]), 2.0);

  std::int64_t dim_in = stem_out, dim_inner = 0, dim_out = 0;
  for (int s = 0; s < 4; ++s) {
    dim_out = x3d_round_width(static_cast<double>(stage_dims[s]), cfg.width_factor);
    dim_inner = static_cast<std::int64_t>(cfg.bottleneck_factor * static_cast<double>(dim_out));
    const int depth = x3d_round_repeats(base_depths[s], cfg.depth_factor);
    auto stage = std::make_shared<Sequential>();
    for (int i = 0; i < depth; ++i) {
      stage->add("block" + std::to_string(i),
                 x3d_block(cfg, i == 0 ? dim_in : dim_out, dim_inner, dim_out, i == 0 ? 2 : 1,
                           cfg.se_ratio > 0 && i % 2 == 0));
    }
    net->add("stage" + std::to_string(s + 1), stage);
    dim_in = dim_out;
  }

  // Total spatial stride is 32 (stem 2, four stages 2 each).
  const int pool_hw = (cfg.input_crop_size + 31) / 32;
  auto pool = std::make_shared<Sequential>();
  pool->add("pre_conv", std::make_shared<Conv3d>(dim_out, dim_inner, kernels::ConvGeometry{}));
  add_if(*pool, "pre_norm", maybe_norm(cfg, dim_inner));
  add_if(*pool, "pre_act", maybe_act(cfg.activation));
  kernels::PoolGeometry pg;
  pg.kernel = {cfg.input_clip_length, pool_hw, pool_hw};
  pool->add("pool", std::make_shared<AvgPool3d>(pg));
  pool->add("post_conv", std::make_shared<Conv3d>(dim_inner, cfg.head_dim_out, kernels::ConvGeometry{}));
  add_if(*pool, "post_act", maybe_act(cfg.activation));

  HeadConfig h;
  h.dim_in = cfg.head_dim_out;
  h.num_classes = cfg.model_num_class;
  h.pool = pool;
  h.dropout = cfg.dropout;
  h.activation = cfg.head_activation;
  net->add("head", create_res_basic_head(h));
  if (cfg.initialize_weights) initialize(*net, cfg.init);
  return net;
}

ModulePtr create_x3d(X3DVariant variant, std::int64_t model_num_class) {
  return create_x3d(x3d_config(variant, model_num_class));
}

}  // namespace videokit::models
