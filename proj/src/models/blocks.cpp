#include "videokit/models/blocks.hpp"

#include <string>

namespace videokit::models {

namespace {

kernels::ConvGeometry conv_geometry(Triple kernel, Triple stride, Triple dilation = {1, 1, 1},
                                    int groups = 1) {
  return kernels::same_padded(kernel, stride, dilation, groups);
}

void add_if(Sequential& seq, std::string name, ModulePtr m) {
  if (m) seq.add(std::move(name), std::move(m));
}

bool is_unit(const Triple& t) { return t[0] == 1 && t[1] == 1 && t[2] == 1; }

}  // namespace

NormFactory make_batch_norm(double eps) {
  return [eps](std::int64_t c) -> ModulePtr { return std::make_shared<BatchNorm3d>(c, eps); };
}

ActivationFactory make_relu() {
  return []() -> ModulePtr { return std::make_shared<ReLU>(); };
}

ActivationFactory make_swish() {
  return []() -> ModulePtr { return std::make_shared<Swish>(); };
}

ActivationFactory make_identity() {
  return []() -> ModulePtr { return std::make_shared<Identity>(); };
}

ActivationFactory no_activation() {
  return []() -> ModulePtr { return nullptr; };
}

void check_odd_kernel(const Triple& k, const std::string& what) {
  for (int v : k) {
    if (v < 1 || v % 2 == 0) {
      throw ConfigError(what + " kernel (" + std::to_string(k[0]) + "," + std::to_string(k[1]) +
                        "," + std::to_string(k[2]) + ") must be odd per axis");
    }
  }
}

ModulePtr create_res_basic_stem(const StemConfig& cfg) {
  check_odd_kernel(cfg.conv_kernel, "stem conv");
  if (cfg.dim_in < 1 || cfg.dim_out < 1) throw ConfigError("stem dims must be positive");
  auto seq = std::make_shared<Sequential>();
  seq->add("conv", std::make_shared<Conv3d>(cfg.dim_in, cfg.dim_out,
                                            conv_geometry(cfg.conv_kernel, cfg.conv_stride)));
  add_if(*seq, "norm", cfg.norm ? cfg.norm(cfg.dim_out) : nullptr);
  add_if(*seq, "act", cfg.activation ? cfg.activation() : nullptr);
  if (cfg.pool != StemPool::none) {
    kernels::PoolGeometry g;
    g.kernel = cfg.pool_kernel;
    g.stride = cfg.pool_stride;
    for (int a = 0; a < 3; ++a) g.padding[a] = cfg.pool_kernel[a] / 2;
    if (cfg.pool == StemPool::max) {
      seq->add("pool", std::make_shared<MaxPool3d>(g));
    } else {
      seq->add("pool", std::make_shared<AvgPool3d>(g));
    }
  }
  return seq;
}

ModulePtr create_bottleneck_block(const BottleneckConfig& cfg) {
  if (cfg.dim_in < 1 || cfg.dim_inner < 1 || cfg.dim_out < 1) {
    throw ConfigError("bottleneck dims must be positive");
  }
  check_odd_kernel(cfg.conv_a_kernel, "conv_a");
  check_odd_kernel(cfg.conv_b_kernel, "conv_b");
  Triple total_stride;
  for (int a = 0; a < 3; ++a) total_stride[a] = cfg.conv_a_stride[a] * cfg.conv_b_stride[a];
  const bool needs_projection = cfg.dim_in != cfg.dim_out || !is_unit(total_stride);
  if (needs_projection && !cfg.allow_projection) {
    throw ConfigError("bottleneck " + std::to_string(cfg.dim_in) + "->" +
                      std::to_string(cfg.dim_out) +
                      " changes shape but the projection shortcut is disabled");
  }

  auto act = [&]() { return cfg.activation ? cfg.activation() : nullptr; };
  auto norm = [&](std::int64_t c) { return cfg.norm ? cfg.norm(c) : nullptr; };

  auto branch2 = std::make_shared<Sequential>();
  branch2->add("conv_a", std::make_shared<Conv3d>(cfg.dim_in, cfg.dim_inner,
                                                  conv_geometry(cfg.conv_a_kernel, cfg.conv_a_stride)));
  add_if(*branch2, "norm_a", norm(cfg.dim_inner));
  add_if(*branch2, "act_a", act());
  if (cfg.separable_conv_b) {
    const Triple kt{cfg.conv_b_kernel[0], 1, 1};
    const Triple ks{1, cfg.conv_b_kernel[1], cfg.conv_b_kernel[2]};
    std::vector<ModulePtr> convs;
    convs.push_back(std::make_shared<Conv3d>(
        cfg.dim_inner, cfg.dim_inner,
        conv_geometry(kt, cfg.conv_b_stride, cfg.conv_b_dilation, cfg.conv_b_groups)));
    convs.push_back(std::make_shared<Conv3d>(
        cfg.dim_inner, cfg.dim_inner,
        conv_geometry(ks, cfg.conv_b_stride, cfg.conv_b_dilation, cfg.conv_b_groups)));
    branch2->add("conv_b", std::make_shared<ConvReduce>(std::move(convs)));
  } else {
    branch2->add("conv_b", std::make_shared<Conv3d>(
                               cfg.dim_inner, cfg.dim_inner,
                               conv_geometry(cfg.conv_b_kernel, cfg.conv_b_stride,
                                             cfg.conv_b_dilation, cfg.conv_b_groups)));
  }
  add_if(*branch2, "norm_b", norm(cfg.dim_inner));
  add_if(*branch2, "act_b", act());
  branch2->add("conv_c", std::make_shared<Conv3d>(cfg.dim_inner, cfg.dim_out,
                                                  kernels::ConvGeometry{}));
  if (auto n = norm(cfg.dim_out)) {
    if (auto* bn = dynamic_cast<BatchNorm3d*>(n.get())) bn->block_final = true;
    branch2->add("norm_c", std::move(n));
  }

  ModulePtr branch1;
  if (needs_projection) {
    auto b1 = std::make_shared<Sequential>();
    kernels::ConvGeometry g;
    g.stride = total_stride;
    b1->add("conv", std::make_shared<Conv3d>(cfg.dim_in, cfg.dim_out, g));
    add_if(*b1, "norm", norm(cfg.dim_out));
    branch1 = b1;
  }
  return std::make_shared<ResidualBlock>(branch1, branch2, act());
}

ModulePtr create_res_stage(const StageConfig& cfg) {
  if (cfg.depth < 1) throw ConfigError("stage depth must be >= 1");
  if (!cfg.conv_a_temporal_kernels.empty() &&
      static_cast<int>(cfg.conv_a_temporal_kernels.size()) != cfg.depth) {
    throw ConfigError("stage has " + std::to_string(cfg.depth) + " blocks but " +
                      std::to_string(cfg.conv_a_temporal_kernels.size()) + " temporal kernels");
  }
  auto seq = std::make_shared<Sequential>();
  for (int i = 0; i < cfg.depth; ++i) {
    BottleneckConfig b = cfg.block;
    if (i > 0) {
      b.dim_in = cfg.block.dim_out;
      b.conv_a_stride = {1, 1, 1};
      b.conv_b_stride = {1, 1, 1};
    }
    if (!cfg.conv_a_temporal_kernels.empty()) {
      b.conv_a_kernel[0] = cfg.conv_a_temporal_kernels[static_cast<std::size_t>(i)];
    }
    seq->add("block" + std::to_string(i), create_bottleneck_block(b));
  }
  return seq;
}

ModulePtr create_res_basic_head(const HeadConfig& cfg) {
  if (cfg.dim_in < 1 || cfg.num_classes < 1) throw ConfigError("head dims must be positive");
  auto seq = std::make_shared<Sequential>();
  if (cfg.pool) {
    seq->add("pool", cfg.pool);
  } else if (cfg.pool_kernel) {
    kernels::PoolGeometry g;
    g.kernel = *cfg.pool_kernel;
    seq->add("pool", std::make_shared<AvgPool3d>(g));
  } else {
    seq->add("pool", std::make_shared<GlobalAvgPool>());
  }
  if (cfg.dropout > 0) seq->add("dropout", std::make_shared<Dropout>(cfg.dropout));
  seq->add("proj", std::make_shared<Linear>(cfg.dim_in, cfg.num_classes));
  switch (cfg.activation) {
    case HeadActivation::softmax:
      seq->add("activation", std::make_shared<Softmax>());
      break;
    case HeadActivation::sigmoid:
      seq->add("activation", std::make_shared<Sigmoid>());
      break;
    case HeadActivation::none:
      break;
  }
  if (cfg.output_with_global_average) seq->add("output_pool", std::make_shared<GlobalAvgPool>());
  return seq;
}

}  // namespace videokit::models
