#include "videokit/models/counting.hpp"

namespace videokit::models {

std::int64_t count_params(const Module& m) {
  std::int64_t n = 0;
  for (const auto& [name, p] : named_parameters(m)) {
    if (p->learnable) n += p->value.numel();
  }
  return n;
}

FlopTally count_flops(const Module& m, const std::vector<Shape>& input_shapes) {
  FlopTally tally;
  m.trace(input_shapes, tally);
  return tally;
}

FlopTally count_flops(const Module& m, const Shape& input_shape) {
  return count_flops(m, std::vector<Shape>{input_shape});
}

std::vector<Shape> trace_shapes(const Module& m, const std::vector<Shape>& input_shapes) {
  FlopTally tally;
  return m.trace(input_shapes, tally);
}

}  // namespace videokit::models
