#include "videokit/models/layers.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace videokit::models {

namespace {

std::span<const float> bias_span(const Module& m) {
  if (!m.has_param("bias")) return {};
  return m.param("bias").values();
}

void require_rank5(const Shape& s, std::string_view who) {
  if (s.size() != 5) {
    throw ShapeError(std::string(who) + " expects (N,C,T,H,W), got " + shape_to_string(s));
  }
}

void require_channels(const Shape& s, std::int64_t c, std::string_view who) {
  if (s.size() < 2 || s[1] != c) {
    throw ShapeError(std::string(who) + " expects " + std::to_string(c) +
                     " channels at axis 1, got " + shape_to_string(s));
  }
}

std::vector<Shape> shapes_of(std::span<const Tensor> ts) {
  std::vector<Shape> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.shape());
  return out;
}

}  // namespace

// ---- Conv3d ------------------------------------------------------------

Conv3d::Conv3d(std::int64_t dim_in, std::int64_t dim_out, kernels::ConvGeometry geometry,
               bool bias)
    : dim_in_(dim_in), dim_out_(dim_out), geometry_(geometry) {
  if (dim_in < 1 || dim_out < 1) throw ConfigError("conv dims must be positive");
  if (geometry.groups < 1 || dim_in % geometry.groups != 0 || dim_out % geometry.groups != 0) {
    throw ConfigError("conv groups " + std::to_string(geometry.groups) + " must divide " +
                      std::to_string(dim_in) + " and " + std::to_string(dim_out));
  }
  const auto& k = geometry.kernel;
  add_parameter("weight", Tensor({dim_out, dim_in / geometry.groups, k[0], k[1], k[2]}));
  if (bias) add_parameter("bias", Tensor({dim_out}));
}

Tensor Conv3d::forward_one(const Tensor& x) const {
  require_channels(x.shape(), dim_in_, "Conv3d");
  return kernels::conv3d<float>(x, param("weight"), bias_span(*this), geometry_);
}

Shape Conv3d::trace_one(const Shape& x, FlopTally& tally) const {
  require_rank5(x, "Conv3d");
  require_channels(x, dim_in_, "Conv3d");
  Shape out = kernels::conv3d_output_shape(x, dim_out_, geometry_);
  const auto& k = geometry_.kernel;
  tally.conv_macs += shape_numel(out) * (dim_in_ / geometry_.groups) * k[0] * k[1] * k[2];
  return out;
}

void Conv3d::ensure_bias() {
  if (!has_bias()) add_parameter("bias", Tensor({dim_out_}));
}

// ---- BatchNorm3d -------------------------------------------------------

BatchNorm3d::BatchNorm3d(std::int64_t channels, double eps) : channels_(channels), eps_(eps) {
  if (channels < 1) throw ConfigError("norm channel count must be positive");
  add_parameter("weight", Tensor({channels}, 1.0f));
  add_parameter("bias", Tensor({channels}, 0.0f));
  add_parameter("running_mean", Tensor({channels}, 0.0f), false);
  add_parameter("running_var", Tensor({channels}, 1.0f), false);
}

Tensor BatchNorm3d::forward_one(const Tensor& x) const {
  require_channels(x.shape(), channels_, "BatchNorm3d");
  return kernels::batch_norm<float>(x, param("weight").values(), param("bias").values(),
                                    param("running_mean").values(),
                                    param("running_var").values(), eps_);
}

Shape BatchNorm3d::trace_one(const Shape& x, FlopTally& tally) const {
  require_channels(x, channels_, "BatchNorm3d");
  tally.norm_elements += shape_numel(x);
  return x;
}

// ---- activations -------------------------------------------------------

Tensor ReLU::forward_one(const Tensor& x) const {
  Tensor y = x;
  kernels::relu_inplace(y);
  return y;
}

Tensor Sigmoid::forward_one(const Tensor& x) const {
  Tensor y = x;
  kernels::sigmoid_inplace(y);
  return y;
}

Tensor Swish::forward_one(const Tensor& x) const {
  Tensor y = x;
  kernels::swish_inplace(y);
  return y;
}

Tensor Softmax::forward_one(const Tensor& x) const { return kernels::softmax_channels(x); }

// ---- pooling -----------------------------------------------------------

Tensor MaxPool3d::forward_one(const Tensor& x) const {
  return kernels::max_pool3d(x, geometry_);
}

Shape MaxPool3d::trace_one(const Shape& x, FlopTally&) const {
  return kernels::pool3d_output_shape(x, geometry_);
}

Tensor AvgPool3d::forward_one(const Tensor& x) const {
  return kernels::avg_pool3d(x, geometry_);
}

Shape AvgPool3d::trace_one(const Shape& x, FlopTally&) const {
  return kernels::pool3d_output_shape(x, geometry_);
}

Tensor GlobalAvgPool::forward_one(const Tensor& x) const { return kernels::global_avg_pool(x); }

Shape GlobalAvgPool::trace_one(const Shape& x, FlopTally&) const {
  if (x.size() < 2) throw ShapeError("GlobalAvgPool expects (N,C,...)");
  return {x[0], x[1]};
}

// ---- Linear ------------------------------------------------------------

Linear::Linear(std::int64_t dim_in, std::int64_t dim_out, bool bias)
    : dim_in_(dim_in), dim_out_(dim_out) {
  if (dim_in < 1 || dim_out < 1) throw ConfigError("linear dims must be positive");
  add_parameter("weight", Tensor({dim_out, dim_in}));
  if (bias) add_parameter("bias", Tensor({dim_out}));
}

Tensor Linear::forward_one(const Tensor& x) const {
  return kernels::linear<float>(x, param("weight"), bias_span(*this));
}

Shape Linear::trace_one(const Shape& x, FlopTally& tally) const {
  require_channels(x, dim_in_, "Linear");
  Shape out = x;
  out[1] = dim_out_;
  tally.linear_macs += shape_numel(x) * dim_out_;
  return out;
}

// ---- Sequential --------------------------------------------------------

std::vector<Tensor> Sequential::forward(std::span<const Tensor> inputs) const {
  std::vector<Tensor> cur(inputs.begin(), inputs.end());
  for (const auto& [name, m] : children()) cur = m->forward(cur);
  return cur;
}

std::vector<Shape> Sequential::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  std::vector<Shape> cur(inputs.begin(), inputs.end());
  for (const auto& [name, m] : children()) cur = m->trace(cur, tally);
  return cur;
}

Sequential& Sequential::add(std::string name, ModulePtr m) {
  add_child(std::move(name), std::move(m));
  return *this;
}

// ---- ResidualBlock -----------------------------------------------------

ResidualBlock::ResidualBlock(ModulePtr branch1, ModulePtr branch2, ModulePtr activation) {
  if (branch1) add_child("branch1", std::move(branch1));
  add_child("branch2", std::move(branch2));
  if (activation) add_child("activation", std::move(activation));
}

std::vector<Tensor> ResidualBlock::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() != 1) throw ShapeError("ResidualBlock takes one input");
  const auto b1 = child("branch1");
  const auto act = child("activation");
  Tensor y = (*child("branch2"))(inputs[0]);
  if (b1) {
    kernels::add_inplace(y, (*b1)(inputs[0]));
  } else {
    kernels::add_inplace(y, inputs[0]);
  }
  if (act) y = (*act)(y);
  std::vector<Tensor> out;
  out.push_back(std::move(y));
  return out;
}

std::vector<Shape> ResidualBlock::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  if (inputs.size() != 1) throw ShapeError("ResidualBlock takes one input");
  const Shape in[] = {inputs[0]};
  auto main = child("branch2")->trace(in, tally);
  Shape shortcut = inputs[0];
  if (auto b1 = child("branch1")) shortcut = b1->trace(in, tally).at(0);
  if (main.size() != 1 || main[0] != shortcut) {
    throw ShapeError("residual branches disagree: " + shape_to_string(main.at(0)) + " vs " +
                     shape_to_string(shortcut));
  }
  if (auto act = child("activation")) return act->trace(main, tally);
  return main;
}

// ---- SqueezeExcite -----------------------------------------------------

SqueezeExcite::SqueezeExcite(std::int64_t channels, std::int64_t reduced) {
  add_child("fc1", std::make_shared<Conv3d>(channels, reduced, kernels::ConvGeometry{}, true));
  add_child("act", std::make_shared<ReLU>());
  add_child("fc2", std::make_shared<Conv3d>(reduced, channels, kernels::ConvGeometry{}, true));
  add_child("gate", std::make_shared<Sigmoid>());
}

Tensor SqueezeExcite::forward_one(const Tensor& x) const {
  require_rank5(x.shape(), "SqueezeExcite");
  Tensor s = kernels::global_avg_pool(x).reshaped({x.dim(0), x.dim(1), 1, 1, 1});
  for (const auto& [name, m] : children()) s = (*m)(s);
  s.reshape({x.dim(0), x.dim(1)});
  Tensor y = x;
  kernels::scale_channels_inplace(y, s);
  return y;
}

Shape SqueezeExcite::trace_one(const Shape& x, FlopTally& tally) const {
  require_rank5(x, "SqueezeExcite");
  std::vector<Shape> s = {{x[0], x[1], 1, 1, 1}};
  for (const auto& [name, m] : children()) s = m->trace(s, tally);
  if (s.at(0)[1] != x[1]) throw ShapeError("squeeze-excite gate width mismatch");
  return x;
}

// ---- ConvReduce --------------------------------------------------------

ConvReduce::ConvReduce(std::vector<ModulePtr> convs) {
  if (convs.empty()) throw ConfigError("ConvReduce needs at least one conv");
  for (std::size_t i = 0; i < convs.size(); ++i) {
    add_child("conv" + std::to_string(i), std::move(convs[i]));
  }
}

Tensor ConvReduce::forward_one(const Tensor& x) const {
  Tensor y = (*children().front().second)(x);
  for (std::size_t i = 1; i < children().size(); ++i) {
    kernels::add_inplace(y, (*children()[i].second)(x));
  }
  return y;
}

Shape ConvReduce::trace_one(const Shape& x, FlopTally& tally) const {
  const Shape in[] = {x};
  Shape out;
  for (const auto& [name, m] : children()) {
    Shape s = m->trace(in, tally).at(0);
    if (!out.empty() && s != out) throw ShapeError("ConvReduce branch shapes disagree");
    out = std::move(s);
  }
  return out;
}

// ---- MultiPathway ------------------------------------------------------

MultiPathway::MultiPathway(std::vector<ModulePtr> pathways, ModulePtr fusion)
    : num_pathways_(pathways.size()) {
  for (std::size_t i = 0; i < pathways.size(); ++i) {
    add_child("pathway" + std::to_string(i), std::move(pathways[i]));
  }
  if (fusion) add_child("fusion", std::move(fusion));
}

std::vector<Tensor> MultiPathway::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() != num_pathways_) {
    throw ShapeError("expected " + std::to_string(num_pathways_) + " pathways, got " +
                     std::to_string(inputs.size()));
  }
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < num_pathways_; ++i) out.push_back((*children()[i].second)(inputs[i]));
  if (auto f = child("fusion")) out = f->forward(out);
  return out;
}

std::vector<Shape> MultiPathway::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  if (inputs.size() != num_pathways_) {
    throw ShapeError("expected " + std::to_string(num_pathways_) + " pathways, got " +
                     std::to_string(inputs.size()));
  }
  std::vector<Shape> out;
  for (std::size_t i = 0; i < num_pathways_; ++i) {
    const Shape in[] = {inputs[i]};
    out.push_back(children()[i].second->trace(in, tally).at(0));
  }
  if (auto f = child("fusion")) out = f->trace(out, tally);
  return out;
}

// ---- FastToSlowFusion --------------------------------------------------

FastToSlowFusion::FastToSlowFusion(ModulePtr lateral) { add_child("lateral", std::move(lateral)); }

std::vector<Tensor> FastToSlowFusion::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() != 2) throw ShapeError("fusion expects [slow, fast]");
  std::vector<Tensor> parts;
  parts.push_back(inputs[0]);
  parts.push_back((*child("lateral"))(inputs[1]));
  std::vector<Tensor> out;
  out.push_back(concat<float>(parts, 1));
  out.push_back(inputs[1]);
  return out;
}

std::vector<Shape> FastToSlowFusion::trace(std::span<const Shape> inputs,
                                           FlopTally& tally) const {
  if (inputs.size() != 2) throw ShapeError("fusion expects [slow, fast]");
  const Shape fast[] = {inputs[1]};
  Shape lat = child("lateral")->trace(fast, tally).at(0);
  Shape slow = inputs[0];
  if (lat.size() != slow.size() || lat[0] != slow[0] ||
      !std::equal(lat.begin() + 2, lat.end(), slow.begin() + 2)) {
    throw ShapeError("fast-to-slow lateral " + shape_to_string(lat) +
                     " does not align with slow " + shape_to_string(slow));
  }
  slow[1] += lat[1];
  return {slow, inputs[1]};
}

// ---- PoolConcat --------------------------------------------------------

PoolConcat::PoolConcat(std::vector<ModulePtr> pools) {
  for (std::size_t i = 0; i < pools.size(); ++i) {
    add_child("pool" + std::to_string(i), std::move(pools[i]));
  }
}

std::vector<Tensor> PoolConcat::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() != children().size()) throw ShapeError("PoolConcat pathway count mismatch");
  std::vector<Tensor> pooled;
  for (std::size_t i = 0; i < inputs.size(); ++i) pooled.push_back((*children()[i].second)(inputs[i]));
  std::vector<Tensor> out;
  out.push_back(concat<float>(pooled, 1));
  return out;
}

std::vector<Shape> PoolConcat::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  if (inputs.size() != children().size()) throw ShapeError("PoolConcat pathway count mismatch");
  Shape out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape in[] = {inputs[i]};
    Shape s = children()[i].second->trace(in, tally).at(0);
    if (out.empty()) {
      out = s;
    } else if (!std::equal(s.begin() + 2, s.end(), out.begin() + 2) || s[0] != out[0]) {
      throw ShapeError("pooled pathways disagree: " + shape_to_string(out) + " vs " +
                       shape_to_string(s));
    } else {
      out[1] += s[1];
    }
  }
  return {out};
}

// ---- RoiHead -----------------------------------------------------------

void check_boxes(const Tensor& boxes, std::int64_t batch) {
  if (boxes.rank() != 2 || boxes.dim(1) != 5) {
    throw BoxError("boxes must be (K,5) rows of (batch_index, x1, y1, x2, y2), got " +
                   shape_to_string(boxes.shape()));
  }
  for (std::int64_t k = 0; k < boxes.dim(0); ++k) {
    const float* r = boxes.data() + k * 5;
    if (r[0] < 0 || r[0] >= static_cast<float>(batch) || r[0] != static_cast<float>(static_cast<std::int64_t>(r[0]))) {
      throw BoxError("box " + std::to_string(k) + " has invalid batch index");
    }
    if (!(r[3] > r[1]) || !(r[4] > r[2])) {
      throw BoxError("box " + std::to_string(k) + " is degenerate (need x2>x1 and y2>y1)");
    }
  }
}

RoiHead::RoiHead(ModulePtr pool, kernels::RoiAlignConfig roi, ModulePtr dropout, ModulePtr proj,
                 ModulePtr activation)
    : roi_(roi) {
  add_child("pool", std::move(pool));
  if (dropout) add_child("dropout", std::move(dropout));
  add_child("proj", std::move(proj));
  if (activation) add_child("activation", std::move(activation));
}

std::vector<Tensor> RoiHead::forward(std::span<const Tensor> inputs) const {
  if (inputs.size() < 2) throw ShapeError("RoiHead expects features and boxes");
  const Tensor& boxes = inputs.back();
  Tensor f = child("pool")->forward(inputs.first(inputs.size() - 1)).at(0);
  if (f.rank() != 5 || f.dim(2) != 1) {
    throw ShapeError("RoiHead pool must reduce time to 1, got " + shape_to_string(f.shape()));
  }
  check_boxes(boxes, f.dim(0));
  f.reshape({f.dim(0), f.dim(1), f.dim(3), f.dim(4)});
  Tensor r = kernels::roi_align(f, boxes, roi_);
  // Spatial max over the aligned grid.
  const std::int64_t K = r.dim(0), C = r.dim(1), area = r.dim(2) * r.dim(3);
  Tensor y({K, C});
  for (std::int64_t i = 0; i < K * C; ++i) {
    const float* p = r.data() + i * area;
    y[static_cast<std::size_t>(i)] = *std::max_element(p, p + area);
  }
  for (const auto& name : {"dropout", "proj", "activation"}) {
    if (auto m = child(name)) y = (*m)(y);
  }
  std::vector<Tensor> out;
  out.push_back(std::move(y));
  return out;
}

std::vector<Shape> RoiHead::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  if (inputs.size() < 2) throw ShapeError("RoiHead expects features and boxes");
  const Shape& boxes = inputs.back();
  if (boxes.size() != 2 || boxes[1] != 5) throw BoxError("boxes must be (K,5)");
  Shape f = child("pool")->trace(inputs.first(inputs.size() - 1), tally).at(0);
  if (f.size() != 5 || f[2] != 1) {
    throw ShapeError("RoiHead pool must reduce time to 1, got " + shape_to_string(f));
  }
  std::vector<Shape> cur = {{boxes[0], f[1]}};
  for (const auto& name : {"dropout", "proj", "activation"}) {
    if (auto m = child(name)) cur = m->trace(cur, tally);
  }
  return cur;
}

// ---- Net ---------------------------------------------------------------

void Net::check_inputs(std::span<const Shape> shapes) const {
  const std::size_t expected = static_cast<std::size_t>(spec_.pathways) + (spec_.takes_boxes ? 1 : 0);
  if (shapes.size() != expected) {
    throw ShapeError("network expects " + std::to_string(spec_.pathways) + " pathway input(s)" +
                     (spec_.takes_boxes ? " plus boxes" : "") + ", got " +
                     std::to_string(shapes.size()) + " tensors");
  }
  for (int i = 0; i < spec_.pathways; ++i) require_rank5(shapes[static_cast<std::size_t>(i)], "network");
  if (spec_.pathways == 2 && spec_.alpha > 0) {
    const auto ts = shapes[0][2], tf = shapes[1][2];
    if (tf != ts * spec_.alpha) {
      throw ShapeError("fast/slow frame ratio must be " + std::to_string(spec_.alpha) + ", got " +
                       std::to_string(tf) + "/" + std::to_string(ts));
    }
  }
}

std::vector<Tensor> Net::forward(std::span<const Tensor> inputs) const {
  check_inputs(shapes_of(inputs));
  const std::size_t n = static_cast<std::size_t>(spec_.pathways);
  std::vector<Tensor> cur(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n));
  const auto& kids = children();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (spec_.takes_boxes && i + 1 == kids.size()) cur.push_back(inputs.back());
    cur = kids[i].second->forward(cur);
  }
  return cur;
}

std::vector<Shape> Net::trace(std::span<const Shape> inputs, FlopTally& tally) const {
  check_inputs(inputs);
  const std::size_t n = static_cast<std::size_t>(spec_.pathways);
  std::vector<Shape> cur(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n));
  const auto& kids = children();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (spec_.takes_boxes && i + 1 == kids.size()) cur.push_back(inputs.back());
    cur = kids[i].second->trace(cur, tally);
  }
  return cur;
}

}  // namespace videokit::models
