#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "videokit/kernels/conv.hpp"
#include "videokit/kernels/ops.hpp"
#include "videokit/models/module.hpp"

// Leaf and container modules. Containers hold their children as named
// entries in Module::children() so the accelerator can find and replace
// them; leaf modules keep their tensors in Module::parameters().
namespace videokit::models {

class Conv3d : public Cloneable<Conv3d, UnaryModule> {
 public:
  Conv3d(std::int64_t dim_in, std::int64_t dim_out, kernels::ConvGeometry geometry,
         bool bias = false);

  std::string_view kind() const override { return "Conv3d"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;

  std::int64_t dim_in() const noexcept { return dim_in_; }
  std::int64_t dim_out() const noexcept { return dim_out_; }
  const kernels::ConvGeometry& geometry() const noexcept { return geometry_; }
  bool has_bias() const { return has_param("bias"); }
  // Adds a zero bias if the conv has none.
  void ensure_bias();

 private:
  std::int64_t dim_in_;
  std::int64_t dim_out_;
  kernels::ConvGeometry geometry_;
};

// Inference-mode batch norm over axis 1. Parameters: weight (gamma) and
// bias (beta) are learnable; running_mean and running_var are buffers.
class BatchNorm3d : public Cloneable<BatchNorm3d, UnaryModule> {
 public:
  explicit BatchNorm3d(std::int64_t channels, double eps = 1e-5);

  std::string_view kind() const override { return "BatchNorm3d"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;

  std::int64_t channels() const noexcept { return channels_; }
  double eps() const noexcept { return eps_; }

  // Marks the last norm of a residual branch; initialization sets its gamma
  // to zero when zero-init is requested.
  bool block_final = false;

 private:
  std::int64_t channels_;
  double eps_;
};

class Activation : public UnaryModule {
 public:
  Shape trace_one(const Shape& x, FlopTally&) const override { return x; }
};

class ReLU : public Cloneable<ReLU, Activation> {
 public:
  std::string_view kind() const override { return "ReLU"; }
  Tensor forward_one(const Tensor& x) const override;
};

class Sigmoid : public Cloneable<Sigmoid, Activation> {
 public:
  std::string_view kind() const override { return "Sigmoid"; }
  Tensor forward_one(const Tensor& x) const override;
};

class Swish : public Cloneable<Swish, Activation> {
 public:
  std::string_view kind() const override { return "Swish"; }
  Tensor forward_one(const Tensor& x) const override;
};

// Softmax over axis 1.
class Softmax : public Cloneable<Softmax, Activation> {
 public:
  std::string_view kind() const override { return "Softmax"; }
  Tensor forward_one(const Tensor& x) const override;
};

class Identity : public Cloneable<Identity, Activation> {
 public:
  std::string_view kind() const override { return "Identity"; }
  Tensor forward_one(const Tensor& x) const override { return x; }
};

// Inference only, so this is the identity; the rate is kept for export.
class Dropout : public Cloneable<Dropout, Activation> {
 public:
  explicit Dropout(double p) : p_(p) {}
  std::string_view kind() const override { return "Dropout"; }
  Tensor forward_one(const Tensor& x) const override { return x; }
  double p() const noexcept { return p_; }

 private:
  double p_;
};

class MaxPool3d : public Cloneable<MaxPool3d, UnaryModule> {
 public:
  explicit MaxPool3d(kernels::PoolGeometry g) : geometry_(g) {}
  std::string_view kind() const override { return "MaxPool3d"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally&) const override;
  const kernels::PoolGeometry& geometry() const noexcept { return geometry_; }

 private:
  kernels::PoolGeometry geometry_;
};

class AvgPool3d : public Cloneable<AvgPool3d, UnaryModule> {
 public:
  explicit AvgPool3d(kernels::PoolGeometry g) : geometry_(g) {}
  std::string_view kind() const override { return "AvgPool3d"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally&) const override;
  const kernels::PoolGeometry& geometry() const noexcept { return geometry_; }

 private:
  kernels::PoolGeometry geometry_;
};

// Mean over every axis after the channels: (N, C, ...) -> (N, C).
class GlobalAvgPool : public Cloneable<GlobalAvgPool, UnaryModule> {
 public:
  std::string_view kind() const override { return "GlobalAvgPool"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally&) const override;
};

// Fully connected layer applied along axis 1 at every trailing position.
class Linear : public Cloneable<Linear, UnaryModule> {
 public:
  Linear(std::int64_t dim_in, std::int64_t dim_out, bool bias = true);
  std::string_view kind() const override { return "Linear"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;
  std::int64_t dim_in() const noexcept { return dim_in_; }
  std::int64_t dim_out() const noexcept { return dim_out_; }

 private:
  std::int64_t dim_in_;
  std::int64_t dim_out_;
};

// Runs its children in order, feeding each one's outputs to the next.
class Sequential : public Cloneable<Sequential> {
 public:
  Sequential() = default;
  std::string_view kind() const override { return "Sequential"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;

  Sequential& add(std::string name, ModulePtr m);
  std::size_t size() const noexcept { return children().size(); }
};

// y = activation(branch2(x) + shortcut(x)) where the shortcut is branch1 or
// the identity. Children: "branch1" (optional), "branch2", "activation"
// (optional).
class ResidualBlock : public Cloneable<ResidualBlock> {
 public:
  ResidualBlock(ModulePtr branch1, ModulePtr branch2, ModulePtr activation);
  std::string_view kind() const override { return "ResidualBlock"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
};

// Channel gating: x * sigmoid(fc2(relu(fc1(mean(x))))) with 1x1x1 convs.
class SqueezeExcite : public Cloneable<SqueezeExcite, UnaryModule> {
 public:
  SqueezeExcite(std::int64_t channels, std::int64_t reduced);
  std::string_view kind() const override { return "SqueezeExcite"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;
};

// Sum of parallel convs over the same input (children "conv0", "conv1", ...).
class ConvReduce : public Cloneable<ConvReduce, UnaryModule> {
 public:
  explicit ConvReduce(std::vector<ModulePtr> convs);
  std::string_view kind() const override { return "ConvReduce"; }
  Tensor forward_one(const Tensor& x) const override;
  Shape trace_one(const Shape& x, FlopTally& tally) const override;
};

// Applies "pathway{i}" to input i, then the optional "fusion" child to all
// pathway outputs.
class MultiPathway : public Cloneable<MultiPathway> {
 public:
  MultiPathway(std::vector<ModulePtr> pathways, ModulePtr fusion);
  std::string_view kind() const override { return "MultiPathway"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
  std::size_t num_pathways() const noexcept { return num_pathways_; }

 private:
  std::size_t num_pathways_;
};

// [slow, fast] -> [concat(slow, lateral(fast)), fast]; "lateral" is usually a
// time-strided conv, norm and activation.
class FastToSlowFusion : public Cloneable<FastToSlowFusion> {
 public:
  explicit FastToSlowFusion(ModulePtr lateral);
  std::string_view kind() const override { return "FastToSlowFusion"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
};

// Pools each pathway with its own "pool{i}" and concatenates along channels.
class PoolConcat : public Cloneable<PoolConcat> {
 public:
  explicit PoolConcat(std::vector<ModulePtr> pools);
  std::string_view kind() const override { return "PoolConcat"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
};

// Box classifier. Inputs: backbone features (one tensor per pathway)
// followed by boxes (K, 5) with rows (batch_index, x1, y1, x2, y2) in input
// pixels. Children: "pool" merges the pathways into (N, C, 1, H, W), then
// RoI align, spatial max over the aligned grid, "dropout", "proj" and an
// optional "activation". Output (K, num_classes).
class RoiHead : public Cloneable<RoiHead> {
 public:
  RoiHead(ModulePtr pool, kernels::RoiAlignConfig roi, ModulePtr dropout, ModulePtr proj,
          ModulePtr activation);
  std::string_view kind() const override { return "RoiHead"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
  const kernels::RoiAlignConfig& roi_config() const noexcept { return roi_; }

 private:
  kernels::RoiAlignConfig roi_;
};

// Throws BoxError unless every box has x2 > x1 and y2 > y1 and a batch index
// in [0, batch).
void check_boxes(const Tensor& boxes, std::int64_t batch);

// Top-level network: a Sequential that validates its pathway inputs. With
// `takes_boxes` the last input is a box tensor routed to the final child.
struct NetInputSpec {
  int pathways = 1;
  int alpha = 0;  // required T ratio fast/slow for two pathways; 0 = unchecked
  bool takes_boxes = false;
};

class Net : public Cloneable<Net, Sequential> {
 public:
  explicit Net(NetInputSpec spec = {}) : spec_(spec) {}
  std::string_view kind() const override { return "Net"; }
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const override;
  std::vector<Shape> trace(std::span<const Shape> inputs, FlopTally& tally) const override;
  const NetInputSpec& input_spec() const noexcept { return spec_; }

 private:
  void check_inputs(std::span<const Shape> shapes) const;
  NetInputSpec spec_;
};

}  // namespace videokit::models
