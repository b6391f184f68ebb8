#include "videokit/models/init.hpp"

#include <cmath>
#include <random>

#include "videokit/models/layers.hpp"

namespace videokit::models {

namespace {

void fill_normal(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
  for (auto& v : t.values()) v = dist(rng);
}

}  // namespace

void initialize(Module& root, const InitOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  visit_mut(root, [&](const std::string&, Module& m) {
    if (auto* conv = dynamic_cast<Conv3d*>(&m)) {
      Tensor& w = conv->param("weight");
      const auto& k = conv->geometry().kernel;
      const double fan_out = static_cast<double>(conv->dim_out()) * k[0] * k[1] * k[2];
      fill_normal(w, std::sqrt(2.0 / fan_out), rng);
      if (conv->has_bias()) conv->param("bias").fill(0.0f);
    } else if (auto* lin = dynamic_cast<Linear*>(&m)) {
      fill_normal(lin->param("weight"), 0.01, rng);
      if (lin->has_param("bias")) lin->param("bias").fill(0.0f);
    } else if (auto* bn = dynamic_cast<BatchNorm3d*>(&m)) {
      bn->param("weight").fill(opts.zero_init_final_norm && bn->block_final ? 0.0f : 1.0f);
      bn->param("bias").fill(0.0f);
      bn->param("running_mean").fill(0.0f);
      bn->param("running_var").fill(1.0f);
    }
  });
}

}  // namespace videokit::models
