#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "videokit/models/module.hpp"

namespace videokit::accelerator {

// Symmetric per-output-channel int8: value ~= q * scale[c] with
// scale[c] = max|W_c| / 127 (1 for an all-zero channel).
struct QuantizedTensor {
  Shape shape;
  std::vector<std::int8_t> values;
  std::vector<float> scales;  // one per slice along axis 0
};

QuantizedTensor quantize_per_channel(const Tensor& w);
Tensor dequantize(const QuantizedTensor& q);

struct QuantizedModel {
  // Copy of the input whose weights are replaced by their dequantized values.
  models::ModulePtr model;
  // int8 weights by qualified parameter name.
  std::map<std::string, QuantizedTensor> weights;
};

// Quantizes the "weight" of every conv and linear layer (Conv3d,
// Conv2dPerFrame, Conv1dTemporal, Linear). Biases, norms and activations stay
// in float: this is weight-only quantization.
QuantizedModel quantize_weights_int8(const models::Module& model);

}  // namespace videokit::accelerator
