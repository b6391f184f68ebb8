#include "videokit/accelerator/deploy.hpp"

#include <algorithm>

#include "videokit/accelerator/blocks.hpp"

namespace videokit::accelerator {

namespace {

const models::Conv3d* conv_at(const Module& parent, std::size_t i) {
  return dynamic_cast<const models::Conv3d*>(parent.children()[i].second.get());
}

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

// One depth-first sweep of a single rule. Returns the number of rewrites.
std::size_t sweep(Module& m, const std::string& path, const RewriteRule& rule,
                  std::vector<std::string>& log) {
  std::size_t applied = 0;
  for (std::size_t i = 0; i < m.children().size(); ++i) {
    if (rule.match(m, i)) {
      log.push_back(rule.name + "@" + join(path, m.children()[i].first));
      rule.build(m, i);
      ++applied;
      // A fresh replacement is only revisited by the next pass.
      continue;
    }
    auto& [name, child] = m.children()[i];
    applied += sweep(*child, join(path, name), rule, log);
  }
  return applied;
}

}  // namespace

std::vector<RewriteRule> default_rules() {
  std::vector<RewriteRule> rules;

  RewriteRule fuse;
  fuse.name = "fuse_conv_bn";
  fuse.match = [](const Module& parent, std::size_t i) {
    if (!dynamic_cast<const models::Sequential*>(&parent)) return false;
    if (i + 1 >= parent.children().size()) return false;
    const auto* conv = conv_at(parent, i);
    const auto* bn = dynamic_cast<const models::BatchNorm3d*>(parent.children()[i + 1].second.get());
    return conv && bn && bn->channels() == conv->dim_out();
  };
  fuse.build = [](Module& parent, std::size_t i) {
    const auto& conv = *conv_at(parent, i);
    const auto& bn = dynamic_cast<const models::BatchNorm3d&>(*parent.children()[i + 1].second);
    auto fused = fuse_conv_bn(conv, bn);
    parent.set_child(i, fused);
    parent.set_child(i + 1, std::make_shared<models::Identity>());
  };
  rules.push_back(fuse);

  RewriteRule spatial;
  spatial.name = "decompose_spatial";
  spatial.match = [](const Module& parent, std::size_t i) {
    const auto* conv = conv_at(parent, i);
    return conv && is_spatial_conv(*conv);
  };
  spatial.build = [](Module& parent, std::size_t i) {
    parent.set_child(i, decompose_spatial_conv(*conv_at(parent, i)));
  };
  rules.push_back(spatial);

  RewriteRule temporal;
  temporal.name = "decompose_temporal";
  temporal.match = [](const Module& parent, std::size_t i) {
    const auto* conv = conv_at(parent, i);
    return conv && is_temporal_conv(*conv);
  };
  temporal.build = [](Module& parent, std::size_t i) {
    parent.set_child(i, decompose_temporal_conv(*conv_at(parent, i)));
  };
  rules.push_back(temporal);
  return rules;
}

std::vector<std::string> apply_rules(Module& root, const std::vector<RewriteRule>& rules) {
  std::vector<std::string> log;
  for (int pass = 0;; ++pass) {
    if (pass == kMaxRewritePasses) {
      throw ConfigError("rewrite rules did not reach a fixpoint after " +
                        std::to_string(kMaxRewritePasses) + " passes");
    }
    std::size_t applied = 0;
    for (const auto& rule : rules) applied += sweep(root, "", rule, log);
    if (applied == 0) break;
  }
  return log;
}

Conversion convert_to_deployable_form(const ModulePtr& model,
                                      const std::vector<Tensor>& example_inputs,
                                      const std::vector<RewriteRule>& rules,
                                      const ConvertOptions& opts) {
  if (!model) throw ConfigError("cannot convert a null model");
  // Validates the example input before any work.
  {
    std::vector<Shape> shapes;
    for (const auto& t : example_inputs) shapes.push_back(t.shape());
    models::FlopTally tally;
    model->trace(shapes, tally);
  }
  ModulePtr converted = model->clone();
  Conversion out;
  out.rule_log = apply_rules(*converted, rules);
  if (out.rule_log.empty()) {
    out.model = model;
    return out;
  }
  const auto ref = model->forward(example_inputs);
  const auto got = converted->forward(example_inputs);
  if (ref.size() != got.size()) throw EquivalenceError("conversion changed the output count");
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i].shape() != got[i].shape()) throw EquivalenceError("conversion changed an output shape");
    out.max_abs_error = std::max(out.max_abs_error, max_abs_diff(ref[i], got[i]));
  }
  if (!(out.max_abs_error <= opts.tolerance)) {
    throw EquivalenceError("converted model differs by " + std::to_string(out.max_abs_error) +
                           " (tolerance " + std::to_string(opts.tolerance) +
                           "); conversion aborted, original model unchanged");
  }
  out.model = converted;
  return out;
}

}  // namespace videokit::accelerator
