#pragma once

#include <cstdint>

#include "videokit/models/module.hpp"

namespace videokit::models {

struct InitOptions {
  std::uint64_t seed = 0;
  // Sets gamma = 0 on every norm tagged `block_final`, so each residual block
  // starts as the identity map on its shortcut.
  bool zero_init_final_norm = false;
};

// Conv weights: He normal with fan_out, zero bias. Linear: N(0, 0.01), zero
// bias. Norms: gamma 1 (or 0, see above), beta 0, running stats (0, 1).
// Draws come from one generator in depth-first parameter order, so the same
// seed and architecture give identical weights.
void initialize(Module& root, const InitOptions& opts = {});

}  // namespace videokit::models
