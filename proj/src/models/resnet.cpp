#include "videokit/models/resnet.hpp"

#include <string>

namespace videokit::models {

namespace {

std::vector<int> repeat(int kt, int n) { return std::vector<int>(static_cast<std::size_t>(n), kt); }

// 3, 1, 3, 1, ... of length n.
std::vector<int> alternating(int n, int first = 3, int second = 1) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(i % 2 == 0 ? first : second);
  return out;
}

std::array<int, 4> depths_for(int depth) {
  switch (depth) {
    case 50:
      return {3, 4, 6, 3};
    case 101:
      return {3, 4, 23, 3};
    case 152:
      return {3, 8, 36, 3};
    default:
      throw ConfigError("unsupported resnet depth " + std::to_string(depth) +
                        " (expected 50, 101 or 152)");
  }
}

ModulePtr separable_stem(const ResNetConfig& cfg) {
  const Triple kt{cfg.stem_conv_kernel[0], 1, 1};
  const Triple ks{1, cfg.stem_conv_kernel[1], cfg.stem_conv_kernel[2]};
  check_odd_kernel(cfg.stem_conv_kernel, "stem conv");
  std::vector<ModulePtr> convs;
  convs.push_back(std::make_shared<Conv3d>(cfg.input_channel, cfg.stem_dim_out,
                                           kernels::same_padded(kt, cfg.stem_conv_stride)));
  convs.push_back(std::make_shared<Conv3d>(cfg.input_channel, cfg.stem_dim_out,
                                           kernels::same_padded(ks, cfg.stem_conv_stride)));
  auto seq = std::make_shared<Sequential>();
  seq->add("conv", std::make_shared<ConvReduce>(std::move(convs)));
  if (cfg.norm) {
    if (auto n = cfg.norm(cfg.stem_dim_out)) seq->add("norm", n);
  }
  if (cfg.activation) {
    if (auto a = cfg.activation()) seq->add("act", a);
  }
  return seq;
}

}  // namespace

ResNetVariant parse_resnet_variant(const std::string& name) {
  if (name == "c2d") return ResNetVariant::c2d;
  if (name == "i3d") return ResNetVariant::i3d;
  if (name == "slow") return ResNetVariant::slow;
  throw ConfigError("unknown resnet variant '" + name + "'");
}

std::array<std::int64_t, 4> resnet_stage_widths(std::int64_t stem_dim_out) {
  return {stem_dim_out * 4, stem_dim_out * 8, stem_dim_out * 16, stem_dim_out * 32};
}

ResNetConfig resnet_config(ResNetVariant variant, int depth, std::int64_t model_num_class) {
  ResNetConfig cfg;
  cfg.depth = depth;
  cfg.model_num_class = model_num_class;
  cfg.stage_depths = depths_for(depth);
  const auto& d = cfg.stage_depths;
  switch (variant) {
    case ResNetVariant::c2d:
      cfg.stem_conv_kernel = {1, 7, 7};
      cfg.stage1_pool = Triple{2, 1, 1};
      for (int s = 0; s < 4; ++s) cfg.conv_a_temporal_kernels[s] = repeat(1, d[s]);
      cfg.head_pool_kernel = Triple{4, 7, 7};
      break;
    case ResNetVariant::i3d:
      cfg.stem_conv_kernel = {5, 7, 7};
      cfg.stage1_pool = Triple{2, 1, 1};
      cfg.conv_a_temporal_kernels[0] = repeat(3, d[0]);
      cfg.conv_a_temporal_kernels[1] = alternating(d[1]);
      cfg.conv_a_temporal_kernels[2] = alternating(d[2]);
      cfg.conv_a_temporal_kernels[3] = alternating(d[3], 1, 3);
      cfg.head_pool_kernel = Triple{4, 7, 7};
      break;
    case ResNetVariant::slow:
      cfg.stem_conv_kernel = {1, 7, 7};
      cfg.conv_a_temporal_kernels[0] = repeat(1, d[0]);
      cfg.conv_a_temporal_kernels[1] = repeat(1, d[1]);
      cfg.conv_a_temporal_kernels[2] = repeat(3, d[2]);
      cfg.conv_a_temporal_kernels[3] = repeat(3, d[3]);
      cfg.head_pool_kernel = Triple{8, 7, 7};
      break;
  }
  return cfg;
}

ModulePtr create_resnet(const ResNetConfig& cfg) {
  for (int s = 0; s < 4; ++s) {
    if (cfg.stage_depths[s] < 1) throw ConfigError("stage depths must be >= 1");
  }
  auto net = std::make_shared<Net>();

  if (cfg.separable_stem) {
    net->add("stem", separable_stem(cfg));
  } else {
    StemConfig stem;
    stem.dim_in = cfg.input_channel;
    stem.dim_out = cfg.stem_dim_out;
    stem.conv_kernel = cfg.stem_conv_kernel;
    stem.conv_stride = cfg.stem_conv_stride;
    stem.pool = cfg.stem_pool;
    stem.pool_kernel = cfg.stem_pool_kernel;
    stem.pool_stride = cfg.stem_pool_stride;
    stem.norm = cfg.norm;
    stem.activation = cfg.activation;
    net->add("stem", create_res_basic_stem(stem));
  }

  std::int64_t dim_in = cfg.stem_dim_out;
  const auto widths = resnet_stage_widths(cfg.stem_dim_out);
  for (int s = 0; s < 4; ++s) {
    StageConfig st;
    st.depth = cfg.stage_depths[s];
    st.conv_a_temporal_kernels = cfg.conv_a_temporal_kernels[s];
    if (st.conv_a_temporal_kernels.empty()) st.conv_a_temporal_kernels = repeat(1, st.depth);
    auto& b = st.block;
    b.dim_in = dim_in;
    b.dim_out = widths[s];
    b.dim_inner = widths[s] / 4;
    b.conv_a_kernel = {1, 1, 1};
    b.conv_a_stride = {cfg.temporal_strides[s], 1, 1};
    b.conv_b_kernel = cfg.conv_b_kernel[s];
    b.conv_b_stride = {1, cfg.spatial_h_strides[s], cfg.spatial_w_strides[s]};
    b.conv_b_dilation = cfg.conv_b_dilation[s];
    b.separable_conv_b = cfg.separable_conv_b[s];
    b.norm = cfg.norm;
    b.activation = cfg.activation;
    net->add("stage" + std::to_string(s + 1), create_res_stage(st));
    if (s == 0 && cfg.stage1_pool) {
      kernels::PoolGeometry g;
      g.kernel = *cfg.stage1_pool;
      g.stride = *cfg.stage1_pool;
      net->add("stage1_pool", std::make_shared<MaxPool3d>(g));
    }
    dim_in = widths[s];
  }

  if (cfg.head) {
    HeadConfig h;
    h.dim_in = dim_in;
    h.num_classes = cfg.model_num_class;
    h.pool_kernel = cfg.head_pool_kernel;
    h.dropout = cfg.dropout;
    h.activation = cfg.head_activation;
    net->add("head", cfg.head(h));
  }
  if (cfg.initialize_weights) initialize(*net, cfg.init);
  return net;
}

ModulePtr create_resnet(ResNetVariant variant, int depth, std::int64_t model_num_class) {
  return create_resnet(resnet_config(variant, depth, model_num_class));
}

ResNetConfig acoustic_resnet_config(const AcousticConfig& a) {
  ResNetConfig cfg;
  cfg.input_channel = 1;
  cfg.model_num_class = a.model_num_class;
  cfg.depth = a.depth;
  cfg.stage_depths = depths_for(a.depth);
  // Layout (N, 1, T, F, 1): frequency lives on H, so the temporal/frequency
  // kernels sit on axes 0 and 1.
  cfg.separable_stem = true;
  cfg.stem_conv_kernel = {9, 9, 1};
  cfg.stem_conv_stride = {1, 3, 1};
  cfg.stem_pool = StemPool::none;
  for (int s = 0; s < 4; ++s) {
    cfg.conv_a_temporal_kernels[s] = repeat(3, cfg.stage_depths[s]);
    cfg.conv_b_kernel[s] = {3, 3, 1};
    cfg.separable_conv_b[s] = s < 2;
  }
  cfg.temporal_strides = {1, 2, 2, 2};
  cfg.spatial_h_strides = {1, 2, 2, 2};
  cfg.spatial_w_strides = {1, 1, 1, 1};
  cfg.norm = a.norm;
  cfg.activation = a.activation;
  cfg.head_pool_kernel.reset();
  cfg.dropout = a.dropout;
  cfg.initialize_weights = a.initialize_weights;
  cfg.init = a.init;
  return cfg;
}

ModulePtr create_acoustic_resnet(const AcousticConfig& cfg) {
  return create_resnet(acoustic_resnet_config(cfg));
}

Tensor spectrogram_to_video(const Tensor& spec) {
  if (spec.rank() < 2) throw ShapeError("spectrogram must be [..., T, F]");
  const std::int64_t t = spec.dim(-2), f = spec.dim(-1);
  const std::int64_t n = spec.numel() / (t * f);
  return spec.reshaped({n, 1, t, f, 1});
}

}  // namespace videokit::models
