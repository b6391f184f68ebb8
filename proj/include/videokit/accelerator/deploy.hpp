#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "videokit/models/module.hpp"

namespace videokit::accelerator {

using models::Module;
using models::ModulePtr;

enum class Equivalence { exact, approximate };

// A local substitution applied to the child at `index` of `parent`.
// `build` must leave the function computed by `parent` unchanged up to
// `tolerance` (max abs difference).
struct RewriteRule {
  std::string name;
  std::function<bool(const Module& parent, std::size_t index)> match;
  std::function<void(Module& parent, std::size_t index)> build;
  Equivalence equivalence = Equivalence::exact;
  double tolerance = 1e-5;
};

// fuse_conv_bn (Conv3d followed by BatchNorm3d inside a Sequential; the
// norm becomes Identity), decompose_spatial (kT = 1 convs), then
// decompose_temporal (1 x 1 spatial convs).
std::vector<RewriteRule> default_rules();

struct ConvertOptions {
  double tolerance = 1e-4;  // equivalence gate on the example input
};

struct Conversion {
  ModulePtr model;
  // "<rule>@<dotted path of the rewritten child>" in application order.
  std::vector<std::string> rule_log;
  double max_abs_error = 0.0;
};

// Applies each rule in registry order over the whole tree (depth-first,
// children in declaration order), repeating until no rule matches. The input
// model is never modified; when nothing matches the returned model is the
// input pointer itself. Throws EquivalenceError when the converted output
// drifts beyond the tolerance on `example_inputs`.
Conversion convert_to_deployable_form(const ModulePtr& model,
                                      const std::vector<Tensor>& example_inputs,
                                      const std::vector<RewriteRule>& rules = default_rules(),
                                      const ConvertOptions& opts = {});

// A rule set that keeps matching its own output never converges.
inline constexpr int kMaxRewritePasses = 32;

// Applies rules without the equivalence gate; returns the log. Throws
// ConfigError after kMaxRewritePasses passes that each rewrote something.
std::vector<std::string> apply_rules(Module& root, const std::vector<RewriteRule>& rules);

}  // namespace videokit::accelerator
