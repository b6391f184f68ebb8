#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "videokit/kernels/conv.hpp"
#include "videokit/kernels/ops.hpp"
#include "videokit/models/module.hpp"

// Small residual network with a hand-written backward pass, used to check
// gradients against finite differences and as a quick accuracy probe for
// weight quantization.
//
//   x -> conv(stem, bias) -> relu
//     -> [h = relu(h + gamma * conv(h) + beta)] x num_blocks
//     -> global average -> linear -> logits (N, classes)
namespace videokit::models {

template <typename T>
class ToyNet {
 public:
  using TensorT = BasicTensor<T>;

  struct Config {
    std::int64_t in_channels = 3;
    std::int64_t width = 4;
    std::int64_t classes = 5;
    int num_blocks = 2;
    std::uint64_t seed = 0;
  };

  explicit ToyNet(Config cfg) : cfg_(cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> n(0.0, 1.0);
    auto fill = [&](TensorT& t, double scale) {
      for (auto& v : t.values()) v = static_cast<T>(n(rng) * scale);
    };
    const auto c = cfg.width;
    params_["stem.weight"] = TensorT({c, cfg.in_channels, 1, 3, 3});
    fill(params_["stem.weight"], 0.3);
    params_["stem.bias"] = TensorT({c});
    fill(params_["stem.bias"], 0.1);
    for (int b = 0; b < cfg.num_blocks; ++b) {
      const std::string p = block_prefix(b);
      params_[p + "conv.weight"] = TensorT({c, c, 3, 3, 3});
      fill(params_[p + "conv.weight"], 0.15);
      params_[p + "norm.weight"] = TensorT({c});
      fill(params_[p + "norm.weight"], 0.5);
      params_[p + "norm.bias"] = TensorT({c});
      fill(params_[p + "norm.bias"], 0.1);
    }
    params_["head.weight"] = TensorT({cfg.classes, c});
    fill(params_["head.weight"], 0.5);
    params_["head.bias"] = TensorT({cfg.classes});
    fill(params_["head.bias"], 0.1);
  }

  std::map<std::string, TensorT>& params() { return params_; }
  const std::map<std::string, TensorT>& params() const { return params_; }
  const Config& config() const { return cfg_; }

  TensorT forward(const TensorT& x) const { return run(x, nullptr); }

  // Gradients of sum(logits * upstream) with respect to every parameter.
  std::map<std::string, TensorT> backward(const TensorT& x, const TensorT& upstream) const {
    Cache cache;
    TensorT logits = run(x, &cache);
    if (upstream.shape() != logits.shape()) throw ShapeError("upstream gradient shape mismatch");
    std::map<std::string, TensorT> grads;
    const auto N = logits.dim(0), K = logits.dim(1), C = cfg_.width;

    // Linear layer.
    const TensorT& W = params_.at("head.weight");
    TensorT gW({K, C}), gb({K}), gpooled({N, C});
    for (std::int64_t n = 0; n < N; ++n) {
      for (std::int64_t k = 0; k < K; ++k) {
        const T u = upstream.at({n, k});
        gb[static_cast<std::size_t>(k)] += u;
        for (std::int64_t c = 0; c < C; ++c) {
          gW.at({k, c}) += u * cache.pooled.at({n, c});
          gpooled.at({n, c}) += u * W.at({k, c});
        }
      }
    }
    grads["head.weight"] = gW;
    grads["head.bias"] = gb;

    // Global average.
    const TensorT& last = cache.acts.back();
    const std::int64_t inner = last.numel() / (N * C);
    TensorT g(last.shape());
    for (std::int64_t i = 0; i < last.numel(); ++i) {
      const std::int64_t nc = i / inner;
      g[static_cast<std::size_t>(i)] = gpooled[static_cast<std::size_t>(nc)] / static_cast<T>(inner);
    }

    for (int b = cfg_.num_blocks - 1; b >= 0; --b) {
      const std::string p = block_prefix(b);
      const TensorT& h_in = cache.acts[static_cast<std::size_t>(b)];
      const TensorT& out = cache.acts[static_cast<std::size_t>(b) + 1];
      const TensorT& z = cache.conv_out[static_cast<std::size_t>(b)];
      const TensorT& gamma = params_.at(p + "norm.weight");
      // Through the output relu: out > 0 exactly where the pre-activation was.
      TensorT gu = g;
      for (std::int64_t i = 0; i < gu.numel(); ++i) {
        if (!(out[static_cast<std::size_t>(i)] > T(0))) gu[static_cast<std::size_t>(i)] = T(0);
      }
      TensorT ggamma({C}), gbeta({C}), gz(z.shape());
      per_channel(gu, [&](std::int64_t c, std::int64_t i) {
        const auto s = static_cast<std::size_t>(i);
        ggamma[static_cast<std::size_t>(c)] += gu[s] * z[s];
        gbeta[static_cast<std::size_t>(c)] += gu[s];
        gz[s] = gu[s] * gamma[static_cast<std::size_t>(c)];
      });
      auto cg = kernels::serial::conv3d_backward<T>(h_in, params_.at(p + "conv.weight"), gz,
                                                    block_geometry(), false);
      grads[p + "conv.weight"] = cg.weight;
      grads[p + "norm.weight"] = ggamma;
      grads[p + "norm.bias"] = gbeta;
      g = gu;
      kernels::add_inplace(g, cg.input);
    }

    // Stem relu and conv.
    const TensorT& stem_out = cache.acts.front();
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      if (!(stem_out[static_cast<std::size_t>(i)] > T(0))) g[static_cast<std::size_t>(i)] = T(0);
    }
    auto sg = kernels::serial::conv3d_backward<T>(x, params_.at("stem.weight"), g,
                                                  stem_geometry(), true);
    grads["stem.weight"] = sg.weight;
    grads["stem.bias"] = sg.bias;
    return grads;
  }

  // The same function as a float Module tree (stem, block{i}, head), with
  // each affine norm expressed as a BatchNorm3d over unit running variance.
  ModulePtr to_module() const;

  static kernels::ConvGeometry stem_geometry() {
    return kernels::same_padded({1, 3, 3});
  }
  static kernels::ConvGeometry block_geometry() {
    return kernels::same_padded({3, 3, 3});
  }

 private:
  struct Cache {
    std::vector<TensorT> acts;      // stem output, then each block output
    std::vector<TensorT> conv_out;  // block conv outputs before the affine
    TensorT pooled;
  };

  static std::string block_prefix(int b) { return "block" + std::to_string(b) + "."; }

  template <typename F>
  static void per_channel(const TensorT& t, F&& f) {
    const auto C = t.dim(1);
    const std::int64_t inner = t.numel() / (t.dim(0) * C);
    for (std::int64_t i = 0; i < t.numel(); ++i) f((i / inner) % C, i);
  }

  TensorT run(const TensorT& x, Cache* cache) const {
    const auto& sb = params_.at("stem.bias");
    TensorT h = kernels::serial::conv3d<T>(x, params_.at("stem.weight"),
                                           std::span<const T>(sb.values()), stem_geometry());
    kernels::relu_inplace(h);
    if (cache) cache->acts.push_back(h);
    for (int b = 0; b < cfg_.num_blocks; ++b) {
      const std::string p = block_prefix(b);
      TensorT z = kernels::serial::conv3d<T>(h, params_.at(p + "conv.weight"), {}, block_geometry());
      const auto& gamma = params_.at(p + "norm.weight");
      const auto& beta = params_.at(p + "norm.bias");
      TensorT out = h;
      per_channel(z, [&](std::int64_t c, std::int64_t i) {
        const auto s = static_cast<std::size_t>(i);
        out[s] += gamma[static_cast<std::size_t>(c)] * z[s] + beta[static_cast<std::size_t>(c)];
      });
      kernels::relu_inplace(out);
      if (cache) {
        cache->conv_out.push_back(std::move(z));
        cache->acts.push_back(out);
      }
      h = std::move(out);
    }
    TensorT pooled = kernels::global_avg_pool(h);
    if (cache) cache->pooled = pooled;
    const auto& hb = params_.at("head.bias");
    return kernels::linear<T>(pooled, params_.at("head.weight"), std::span<const T>(hb.values()));
  }

  Config cfg_;
  std::map<std::string, TensorT> params_;
};

// Builds the float module form of a toy net's parameters.
ModulePtr toy_net_module(const std::map<std::string, Tensor>& params, int num_blocks);

template <typename T>
ModulePtr ToyNet<T>::to_module() const {
  std::map<std::string, Tensor> p;
  for (const auto& [name, t] : params_) p.emplace(name, t.template cast<float>());
  return toy_net_module(p, cfg_.num_blocks);
}

}  // namespace videokit::models
