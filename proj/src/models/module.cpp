#include "videokit/models/module.hpp"

#include <string>

namespace videokit::models {

std::vector<Shape> Module::trace(std::span<const Shape>, FlopTally&) const {
  throw TraceError("module '" + std::string(kind()) + "' does not support shape tracing");
}

Tensor Module::operator()(const Tensor& x) const {
  const Tensor inputs[] = {x};
  auto out = forward(inputs);
  if (out.size() != 1) {
    throw ShapeError(std::string(kind()) + " produced " + std::to_string(out.size()) +
                     " outputs; expected one");
  }
  return std::move(out.front());
}

Tensor& Module::param(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw KeyError("no parameter '" + std::string(name) + "' in " + std::string(kind()));
}

const Tensor& Module::param(std::string_view name) const {
  return const_cast<Module*>(this)->param(name);
}

bool Module::has_param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

ModulePtr Module::child(std::string_view name) const {
  for (const auto& [n, m] : children_) {
    if (n == name) return m;
  }
  return nullptr;
}

void Module::set_child(std::size_t index, ModulePtr m) {
  if (index >= children_.size()) {
    throw KeyError("child index " + std::to_string(index) + " out of range");
  }
  if (!m) throw ConfigError("cannot set a null child");
  children_[index].second = std::move(m);
}

void Module::add_parameter(std::string name, Tensor value, bool learnable) {
  params_.push_back({std::move(name), std::move(value), learnable});
}

void Module::add_child(std::string name, ModulePtr m) {
  if (!m) throw ConfigError("child '" + name + "' is null");
  children_.emplace_back(std::move(name), std::move(m));
}

void Module::deep_copy_children() {
  for (auto& [name, m] : children_) m = m->clone();
}

std::vector<Tensor> UnaryModule::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() != 1) {
    throw ShapeError(std::string(kind()) + " takes one input, got " +
                     std::to_string(inputs.size()));
  }
  std::vector<Tensor> out;
  out.push_back(forward_one(inputs[0]));
  return out;
}

std::vector<Shape> UnaryModule::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  if (inputs.size() != 1) {
    throw ShapeError(std::string(kind()) + " takes one input, got " +
                     std::to_string(inputs.size()));
  }
  return {trace_one(inputs[0], tally)};
}

namespace {

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

void visit_impl(const Module& m, const std::string& path,
                const std::function<void(const std::string&, const Module&)>& fn) {
  fn(path, m);
  for (const auto& [name, c] : m.children()) visit_impl(*c, join(path, name), fn);
}

void visit_mut_impl(Module& m, const std::string& path,
                    const std::function<void(const std::string&, Module&)>& fn) {
  fn(path, m);
  for (auto& [name, c] : m.children()) visit_mut_impl(*c, join(path, name), fn);
}

}  // namespace

void visit(const Module& root,
           const std::function<void(const std::string&, const Module&)>& fn) {
  visit_impl(root, "", fn);
}

void visit_mut(Module& root, const std::function<void(const std::string&, Module&)>& fn) {
  visit_mut_impl(root, "", fn);
}

std::vector<std::pair<std::string, const Parameter*>> named_parameters(const Module& root) {
  std::vector<std::pair<std::string, const Parameter*>> out;
  visit(root, [&](const std::string& path, const Module& m) {
    for (const auto& p : m.parameters()) out.emplace_back(join(path, p.name), &p);
  });
  return out;
}

std::vector<std::pair<std::string, Parameter*>> named_parameters_mut(Module& root) {
  std::vector<std::pair<std::string, Parameter*>> out;
  visit_mut(root, [&](const std::string& path, Module& m) {
    for (auto& p : m.parameters()) out.emplace_back(join(path, p.name), &p);
  });
  return out;
}

ModulePtr find_module(const ModulePtr& root, std::string_view path) {
  ModulePtr cur = root;
  while (cur && !path.empty()) {
    const auto dot = path.find('.');
    const auto head = path.substr(0, dot);
    cur = cur->child(head);
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
  }
  return cur;
}

}  // namespace videokit::models
