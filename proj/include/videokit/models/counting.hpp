#pragma once

#include <cstdint>
#include <vector>

#include "videokit/models/module.hpp"

namespace videokit::models {

// Learnable scalars only; running statistics are excluded.
std::int64_t count_params(const Module& m);

// Traces one forward pass per input shape list (one shape per pathway, plus
// a box shape for detection nets). Throws TraceError for modules that cannot
// be traced.
FlopTally count_flops(const Module& m, const std::vector<Shape>& input_shapes);
FlopTally count_flops(const Module& m, const Shape& input_shape);

// Output shapes without running the network.
std::vector<Shape> trace_shapes(const Module& m, const std::vector<Shape>& input_shapes);

}  // namespace videokit::models
