#include "videokit/models/toy_net.hpp"

#include "videokit/models/layers.hpp"

namespace videokit::models {

ModulePtr toy_net_module(const std::map<std::string, Tensor>& params, int num_blocks) {
  const Tensor& sw = params.at("stem.weight");
  const auto width = sw.dim(0);
  auto net = std::make_shared<Net>();

  auto stem_conv = std::make_shared<Conv3d>(sw.dim(1), width, ToyNet<float>::stem_geometry(), true);
  stem_conv->param("weight") = sw;
  stem_conv->param("bias") = params.at("stem.bias");
  auto stem = std::make_shared<Sequential>();
  stem->add("conv", stem_conv).add("act", std::make_shared<ReLU>());
  net->add("stem", stem);

  constexpr double kEps = 1e-5;
  for (int b = 0; b < num_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    auto conv = std::make_shared<Conv3d>(width, width, ToyNet<float>::block_geometry());
    conv->param("weight") = params.at(p + "conv.weight");
    auto norm = std::make_shared<BatchNorm3d>(width, kEps);
    norm->param("weight") = params.at(p + "norm.weight");
    norm->param("bias") = params.at(p + "norm.bias");
    norm->param("running_var").fill(static_cast<float>(1.0 - kEps));
    auto branch = std::make_shared<Sequential>();
    branch->add("conv", conv).add("norm", norm);
    net->add("block" + std::to_string(b),
             std::make_shared<ResidualBlock>(nullptr, branch, std::make_shared<ReLU>()));
  }

  const Tensor& hw = params.at("head.weight");
  auto proj = std::make_shared<Linear>(hw.dim(1), hw.dim(0));
  proj->param("weight") = hw;
  proj->param("bias") = params.at("head.bias");
  auto head = std::make_shared<Sequential>();
  head->add("pool", std::make_shared<GlobalAvgPool>()).add("proj", proj);
  net->add("head", head);
  return net;
}

}  // namespace videokit::models
