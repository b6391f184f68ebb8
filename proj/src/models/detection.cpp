#include "videokit/models/detection.hpp"

#include "videokit/models/resnet.hpp"
#include "videokit/models/slowfast.hpp"

namespace videokit::models {

ModulePtr create_roi_head(const RoiHeadConfig& cfg) {
  if (cfg.temporal_pool_kernels.empty()) throw ConfigError("roi head needs at least one pathway");
  std::vector<ModulePtr> pools;
  for (int t : cfg.temporal_pool_kernels) {
    kernels::PoolGeometry g;
    g.kernel = {t, 1, 1};
    pools.push_back(std::make_shared<AvgPool3d>(g));
  }
  ModulePtr act;
  if (cfg.activation == HeadActivation::sigmoid) act = std::make_shared<Sigmoid>();
  if (cfg.activation == HeadActivation::softmax) act = std::make_shared<Softmax>();
  return std::make_shared<RoiHead>(std::make_shared<PoolConcat>(std::move(pools)), cfg.roi,
                                   cfg.dropout > 0 ? std::make_shared<Dropout>(cfg.dropout) : nullptr,
                                   std::make_shared<Linear>(cfg.dim_in, cfg.num_classes), act);
}

ModulePtr create_detection_head(const ModulePtr& backbone, const RoiHeadConfig& cfg,
                                bool initialize_head, std::uint64_t seed) {
  const auto* bb = dynamic_cast<const Net*>(backbone.get());
  if (!bb) throw ConfigError("detection backbone must be a Net");
  if (bb->input_spec().takes_boxes) throw ConfigError("backbone already has a box head");
  if (static_cast<int>(cfg.temporal_pool_kernels.size()) != bb->input_spec().pathways) {
    throw ConfigError("roi head pool count must match the backbone pathway count");
  }
  NetInputSpec spec = bb->input_spec();
  spec.takes_boxes = true;
  auto net = std::make_shared<Net>(spec);
  for (const auto& [name, m] : bb->children()) {
    if (name == "head") throw ConfigError("backbone already has a classification head");
    net->add(name, m->clone());
  }
  auto head = create_roi_head(cfg);
  if (initialize_head) initialize(*head, InitOptions{seed, false});
  net->add("head", head);
  return net;
}

ModulePtr create_slow_r50_detection(std::int64_t num_classes, bool initialize_weights) {
  ResNetConfig cfg = resnet_config(ResNetVariant::slow, 50, num_classes);
  cfg.head = nullptr;
  cfg.spatial_h_strides = {1, 2, 2, 1};
  cfg.spatial_w_strides = {1, 2, 2, 1};
  cfg.conv_b_dilation[3] = {1, 2, 2};
  cfg.initialize_weights = initialize_weights;
  RoiHeadConfig h;
  h.dim_in = 2048;
  h.num_classes = num_classes;
  h.temporal_pool_kernels = {4};
  return create_detection_head(create_resnet(cfg), h, initialize_weights);
}

ModulePtr create_slowfast_r50_detection(std::int64_t num_classes, bool initialize_weights) {
  SlowFastConfig cfg = slowfast_config(50, num_classes);
  cfg.head = nullptr;
  cfg.spatial_strides = {1, 2, 2, 1};
  cfg.conv_b_dilation[3] = {1, 2, 2};
  cfg.initialize_weights = initialize_weights;
  RoiHeadConfig h;
  h.dim_in = slowfast_head_dim(cfg);
  h.num_classes = num_classes;
  h.temporal_pool_kernels = {8, 32};
  return create_detection_head(create_slowfast(cfg), h, initialize_weights);
}

}  // namespace videokit::models
