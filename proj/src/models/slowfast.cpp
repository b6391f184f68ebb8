#include "videokit/models/slowfast.hpp"

#include <string>

#include "videokit/models/resnet.hpp"

namespace videokit::models {

namespace {

std::vector<int> repeat(int kt, int n) { return std::vector<int>(static_cast<std::size_t>(n), kt); }

ModulePtr make_fusion(const SlowFastConfig& cfg, std::int64_t fast_dim) {
  if (!cfg.fusion) return nullptr;
  auto lateral = std::make_shared<Sequential>();
  const Triple k{cfg.fusion_kernel, 1, 1};
  check_odd_kernel(k, "fusion conv");
  lateral->add("conv", std::make_shared<Conv3d>(fast_dim, fast_dim * cfg.fusion_channel_ratio,
                                                kernels::same_padded(k, {cfg.alpha, 1, 1})));
  if (cfg.norm) {
    if (auto n = cfg.norm(fast_dim * cfg.fusion_channel_ratio)) lateral->add("norm", n);
  }
  if (cfg.activation) {
    if (auto a = cfg.activation()) lateral->add("act", a);
  }
  return std::make_shared<FastToSlowFusion>(lateral);
}

}  // namespace

SlowFastConfig slowfast_config(int depth, std::int64_t model_num_class) {
  SlowFastConfig cfg;
  cfg.depth = depth;
  cfg.model_num_class = model_num_class;
  if (depth == 50) {
    cfg.stage_depths = {3, 4, 6, 3};
  } else if (depth == 101) {
    cfg.stage_depths = {3, 4, 23, 3};
  } else {
    throw ConfigError("unsupported slowfast depth " + std::to_string(depth));
  }
  const auto& d = cfg.stage_depths;
  auto& slow = cfg.conv_a_temporal_kernels[0];
  auto& fast = cfg.conv_a_temporal_kernels[1];
  slow = {repeat(1, d[0]), repeat(1, d[1]), repeat(3, d[2]), repeat(3, d[3])};
  fast = {repeat(3, d[0]), repeat(3, d[1]), repeat(3, d[2]), repeat(3, d[3])};
  if (depth == 101) {
    // 16x8 R101: temporal kernels only in the first 6 res4 blocks.
    for (auto* p : {&slow, &fast}) {
      auto& s3 = (*p)[2];
      for (std::size_t i = 6; i < s3.size(); ++i) s3[i] = 1;
    }
    cfg.fusion_kernel = 5;
    cfg.head_pool_kernels = {Triple{16, 7, 7}, Triple{64, 7, 7}};
  }
  return cfg;
}

std::int64_t slowfast_head_dim(const SlowFastConfig& cfg) {
  const auto widths = resnet_stage_widths(cfg.slow_stem_dim_out);
  return widths[3] + widths[3] / cfg.beta_inv;
}

ModulePtr create_slowfast(const SlowFastConfig& cfg) {
  if (cfg.alpha < 1 || cfg.beta_inv < 1) throw ConfigError("alpha and beta_inv must be >= 1");
  if (cfg.slow_stem_dim_out % cfg.beta_inv != 0) {
    throw ConfigError("slow stem width must be divisible by beta_inv");
  }
  auto net = std::make_shared<Net>(NetInputSpec{2, cfg.alpha, false});
  const std::int64_t fast_stem = cfg.slow_stem_dim_out / cfg.beta_inv;

  std::vector<ModulePtr> stems;
  for (int p = 0; p < 2; ++p) {
    StemConfig s;
    s.dim_in = cfg.input_channel;
    s.dim_out = p == 0 ? cfg.slow_stem_dim_out : fast_stem;
    s.conv_kernel = cfg.stem_conv_kernels[static_cast<std::size_t>(p)];
    s.norm = cfg.norm;
    s.activation = cfg.activation;
    stems.push_back(create_res_basic_stem(s));
  }
  net->add("stem", std::make_shared<MultiPathway>(std::move(stems), make_fusion(cfg, fast_stem)));

  const auto widths = resnet_stage_widths(cfg.slow_stem_dim_out);
  std::int64_t slow_in = cfg.slow_stem_dim_out;
  std::int64_t fast_in = fast_stem;
  for (int s = 0; s < 4; ++s) {
    if (cfg.fusion) slow_in += fast_in * cfg.fusion_channel_ratio;
    const std::int64_t outs[2] = {widths[s], widths[s] / cfg.beta_inv};
    const std::int64_t ins[2] = {slow_in, fast_in};
    std::vector<ModulePtr> paths;
    for (int p = 0; p < 2; ++p) {
      StageConfig st;
      st.depth = cfg.stage_depths[s];
      st.conv_a_temporal_kernels = cfg.conv_a_temporal_kernels[p][s];
      if (st.conv_a_temporal_kernels.empty()) st.conv_a_temporal_kernels = repeat(1, st.depth);
      auto& b = st.block;
      b.dim_in = ins[p];
      b.dim_inner = outs[p] / 4;
      b.dim_out = outs[p];
      b.conv_b_stride = {1, cfg.spatial_strides[s], cfg.spatial_strides[s]};
      b.conv_b_dilation = cfg.conv_b_dilation[s];
      b.norm = cfg.norm;
      b.activation = cfg.activation;
      paths.push_back(create_res_stage(st));
    }
    ModulePtr fusion = s < 3 ? make_fusion(cfg, outs[1]) : nullptr;
    net->add("stage" + std::to_string(s + 1),
             std::make_shared<MultiPathway>(std::move(paths), fusion));
    slow_in = outs[0];
    fast_in = outs[1];
  }

  if (cfg.head) {
    std::vector<ModulePtr> pools;
    for (const auto& k : cfg.head_pool_kernels) {
      kernels::PoolGeometry g;
      g.kernel = k;
      pools.push_back(std::make_shared<AvgPool3d>(g));
    }
    HeadConfig h;
    h.dim_in = slowfast_head_dim(cfg);
    h.num_classes = cfg.model_num_class;
    h.pool = std::make_shared<PoolConcat>(std::move(pools));
    h.dropout = cfg.dropout;
    h.activation = cfg.head_activation;
    net->add("head", cfg.head(h));
  }
  if (cfg.initialize_weights) initialize(*net, cfg.init);
  return net;
}

}  // namespace videokit::models
