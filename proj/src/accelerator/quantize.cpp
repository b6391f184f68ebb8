#include "videokit/accelerator/quantize.hpp"

#include <algorithm>
#include <cmath>

namespace videokit::accelerator {

namespace {

bool is_weighted_layer(const models::Module& m) {
  const auto k = m.kind();
  return k == "Conv3d" || k == "Conv2dPerFrame" || k == "Conv1dTemporal" || k == "Linear";
}

}  // namespace

QuantizedTensor quantize_per_channel(const Tensor& w) {
  if (w.rank() < 1 || w.dim(0) < 1) throw ShapeError("cannot quantize an empty weight");
  QuantizedTensor q;
  q.shape = w.shape();
  q.values.resize(static_cast<std::size_t>(w.numel()));
  const auto C = w.dim(0);
  const std::int64_t per = w.numel() / C;
  q.scales.resize(static_cast<std::size_t>(C));
  for (std::int64_t c = 0; c < C; ++c) {
    const float* src = w.data() + c * per;
    float amax = 0.0f;
    for (std::int64_t i = 0; i < per; ++i) amax = std::max(amax, std::abs(src[i]));
    const float scale = amax > 0.0f ? amax / 127.0f : 1.0f;
    q.scales[static_cast<std::size_t>(c)] = scale;
    for (std::int64_t i = 0; i < per; ++i) {
      const float r = std::nearbyint(src[i] / scale);
      q.values[static_cast<std::size_t>(c * per + i)] =
          static_cast<std::int8_t>(std::clamp(r, -127.0f, 127.0f));
    }
  }
  return q;
}

Tensor dequantize(const QuantizedTensor& q) {
  Tensor out(q.shape);
  const auto C = static_cast<std::int64_t>(q.scales.size());
  const std::int64_t per = out.numel() / C;
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    out[static_cast<std::size_t>(i)] =
        static_cast<float>(q.values[static_cast<std::size_t>(i)]) * q.scales[static_cast<std::size_t>(i / per)];
  }
  return out;
}

QuantizedModel quantize_weights_int8(const models::Module& model) {
  QuantizedModel out;
  out.model = model.clone();
  models::visit_mut(*out.model, [&](const std::string& path, models::Module& m) {
    if (!is_weighted_layer(m)) return;
    Tensor& w = m.param("weight");
    auto q = quantize_per_channel(w);
    w = dequantize(q);
    out.weights.emplace(path.empty() ? "weight" : path + ".weight", std::move(q));
  });
  return out;
}

}  // namespace videokit::accelerator
