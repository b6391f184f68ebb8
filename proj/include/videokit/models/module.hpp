#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "videokit/core/tensor.hpp"

namespace videokit::models {

class Module;
using ModulePtr = std::shared_ptr<Module>;

struct Parameter {
  std::string name;
  Tensor value;
  bool learnable = true;  // running statistics are stored but not learnable
};

// Work recorded while tracing shapes through a network.
struct FlopTally {
  std::int64_t conv_macs = 0;
  std::int64_t linear_macs = 0;
  std::int64_t norm_elements = 0;

  // Multiply-adds of conv and linear layers plus four operations per
  // normalized element (subtract, divide, scale, shift).
  std::int64_t total() const { return conv_macs + linear_macs + 4 * norm_elements; }
};

// A node in a network. Modules are immutable during inference: forward() and
// trace() are const and safe to call concurrently. Inputs and outputs are
// lists so multi-pathway networks use the same interface as single-stream
// ones; most modules consume and produce exactly one tensor.
class Module {
 public:
  Module() = default;
  virtual ~Module() = default;

  virtual std::string_view kind() const = 0;
  virtual std::vector<Tensor> forward(std::span<const Tensor> inputs) const = 0;
  // Shape propagation without data. Throws TraceError when the output shape
  // cannot be known without running the module.
  virtual std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const;
  virtual ModulePtr clone() const = 0;

  Tensor operator()(const Tensor& x) const;

  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  Tensor& param(std::string_view name);
  const Tensor& param(std::string_view name) const;
  bool has_param(std::string_view name) const;

  using Child = std::pair<std::string, ModulePtr>;
  std::vector<Child>& children() noexcept { return children_; }
  const std::vector<Child>& children() const noexcept { return children_; }
  // Null when absent.
  ModulePtr child(std::string_view name) const;
  void set_child(std::size_t index, ModulePtr m);

 protected:
  Module(const Module&) = default;
  Module& operator=(const Module&) = default;

  void add_parameter(std::string name, Tensor value, bool learnable = true);
  void add_child(std::string name, ModulePtr m);
  void deep_copy_children();

  template <class, class>
  friend class Cloneable;

 private:
  std::vector<Parameter> params_;
  std::vector<Child> children_;
};

// Provides clone() as a deep copy of the derived type.
template <class Derived, class Base = Module>
class Cloneable : public Base {
 public:
  using Base::Base;
  ModulePtr clone() const override {
    auto copy = std::make_shared<Derived>(static_cast<const Derived&>(*this));
    static_cast<Module&>(*copy).deep_copy_children();
    return copy;
  }
};

// Single-input single-output module.
class UnaryModule : public Module {
 public:
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const final;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const final;

  virtual Tensor forward_one(const Tensor& x) const = 0;
  virtual Shape trace_one(const Shape& x, FlopTally& tally) const = 0;
};

// Depth-first pre-order walk; `path` is the dotted child-name path ("" for root).
void visit(const Module& root,
           const std::function<void(const std::string& path, const Module&)>& fn);
void visit_mut(Module& root, const std::function<void(const std::string& path, Module&)>& fn);

// Fully qualified parameter names such as "stage1.block0.branch2.conv_a.weight".
std::vector<std::pair<std::string, const Parameter*>> named_parameters(const Module& root);
std::vector<std::pair<std::string, Parameter*>> named_parameters_mut(Module& root);

// Finds a module by dotted path; null when absent.
ModulePtr find_module(const ModulePtr& root, std::string_view path);

}  // namespace videokit::models
