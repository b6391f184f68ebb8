#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "videokit/core/errors.hpp"
#include "videokit/models/blocks.hpp"
#include "videokit/models/checkpoint.hpp"
#include "videokit/models/counting.hpp"
#include "videokit/models/detection.hpp"
#include "videokit/models/init.hpp"
#include "videokit/models/layers.hpp"
#include "videokit/models/resnet.hpp"
#include "videokit/models/slowfast.hpp"
#include "videokit/models/toy_net.hpp"
#include "videokit/models/x3d.hpp"

using namespace videokit;
using namespace videokit::models;
using videokit::kernels::same_padded;
using videokit::testing::random_tensor;
using videokit::testing::TempDir;

namespace {

// Parameter counts measured on the reference PyTorch implementation of each
// architecture (pytorchvideo 0.1.5 hub builders).
constexpr std::int64_t kI3dR50Params = 28'043'472;
constexpr std::int64_t kC2dR50Params = 24'327'632;
constexpr std::int64_t kSlowR50Params = 32'454'096;
constexpr std::int64_t kX3dLParams = 6'153'384;
constexpr std::int64_t kX3dXsParams = 3'794'274;
constexpr std::int64_t kSlowFastR101Params = 53'774'808;
constexpr std::int64_t kSlowFastR50Params = 34'566'488;
constexpr std::int64_t kSlowDetParams = 31'798'416;
constexpr std::int64_t kSlowFastDetParams = 33'828'888;

ResNetConfig tiny_resnet(ActivationFactory act = make_relu(), NormFactory norm = make_batch_norm()) {
  auto cfg = resnet_config(ResNetVariant::slow, 50, 7);
  cfg.stem_dim_out = 4;
  cfg.stage_depths = {1, 2, 1, 1};
  for (int s = 0; s < 4; ++s) cfg.conv_a_temporal_kernels[s].assign(static_cast<std::size_t>(cfg.stage_depths[s]), s < 2 ? 1 : 3);
  cfg.head_pool_kernel.reset();
  cfg.activation = std::move(act);
  cfg.norm = std::move(norm);
  return cfg;
}

// Output shape after each top-level child of a Net.
std::vector<Shape> child_shapes(const Module& net, Shape in) {
  std::vector<Shape> out;
  std::vector<Shape> cur{std::move(in)};
  FlopTally t;
  for (const auto& [name, child] : net.children()) {
    cur = child->trace(cur, t);
    out.push_back(cur.front());
  }
  return out;
}

class Opaque : public Cloneable<Opaque> {
 public:
  std::string_view kind() const override { return "Opaque"; }
  std::vector<Tensor> forward(std::span<const Tensor> in) const override { return {in.begin(), in.end()}; }
};

}  // namespace

TEST_CASE("count_params closed forms") {
  CHECK(count_params(Linear(10, 5)) == 55);
  Conv3d conv(3, 8, same_padded({3, 3, 3}), true);
  CHECK(count_params(conv) == 8 * 3 * 27 + 8);
  CHECK(count_params(conv) == 656);
  CHECK(count_params(BatchNorm3d(16)) == 32);  // running stats are not learnable
}

TEST_CASE("count_flops closed forms") {
  CHECK(count_flops(Linear(10, 5), Shape{1, 10}).linear_macs == 50);
  Conv3d conv(3, 8, same_padded({1, 3, 3}));
  const auto t = count_flops(conv, Shape{1, 3, 8, 32, 32});
  CHECK(t.conv_macs == 8 * 3 * 9 * 8 * 32 * 32);
  CHECK(t.conv_macs == 1'769'472);
  CHECK(t.total() == 1'769'472);
  BatchNorm3d bn(8);
  CHECK(count_flops(bn, Shape{1, 8, 2, 4, 4}).total() == 4 * 8 * 2 * 4 * 4);
}

TEST_CASE("tracing an opaque module raises TraceError") {
  Opaque m;
  CHECK_THROWS_AS(count_flops(m, Shape{1, 3, 1, 1, 1}), TraceError);
}

TEST_CASE("stem shapes") {
  StemConfig cfg;
  const auto stem = create_res_basic_stem(cfg);
  CHECK(trace_shapes(*stem, {{1, 3, 8, 224, 224}}).front() == Shape{1, 64, 8, 56, 56});
  CHECK(stem->child("conv")->param("weight").shape() == Shape{64, 3, 1, 7, 7});
  cfg.conv_kernel = {5, 7, 7};
  cfg.pool = StemPool::none;
  const auto i3d = create_res_basic_stem(cfg);
  CHECK(trace_shapes(*i3d, {{1, 3, 8, 224, 224}}).front() == Shape{1, 64, 8, 112, 112});
  CHECK(i3d->child("conv")->param("weight").shape() == Shape{64, 3, 5, 7, 7});
  cfg.conv_kernel = {4, 7, 7};
  CHECK_THROWS_AS(create_res_basic_stem(cfg), ConfigError);
}

TEST_CASE("bottleneck params match the closed form") {
  BottleneckConfig cfg;
  cfg.dim_in = 256;
  cfg.dim_inner = 64;
  cfg.dim_out = 256;
  cfg.conv_a_kernel = {3, 1, 1};
  const auto block = create_bottleneck_block(cfg);
  const std::int64_t convs = 256 * 64 * 3 + 64 * 64 * 9 + 64 * 256;
  const std::int64_t norms = 2 * (64 + 64 + 256);
  CHECK(count_params(*block) == convs + norms);
  CHECK(count_params(*block) == 103'168);
}

TEST_CASE("strided bottleneck engages the projection") {
  BottleneckConfig cfg;
  cfg.dim_in = 64;
  cfg.dim_inner = 64;
  cfg.dim_out = 256;
  cfg.conv_b_stride = {1, 2, 2};
  const auto block = create_bottleneck_block(cfg);
  CHECK(block->child("branch1") != nullptr);
  CHECK(trace_shapes(*block, {{1, 64, 4, 16, 16}}).front() == Shape{1, 256, 4, 8, 8});
  const std::int64_t proj = 64 * 256 + 2 * 256;
  const std::int64_t main = 64 * 64 + 64 * 64 * 9 + 64 * 256 + 2 * (64 + 64 + 256);
  CHECK(count_params(*block) == proj + main);
  cfg.allow_projection = false;
  CHECK_THROWS_AS(create_bottleneck_block(cfg), ConfigError);
}

TEST_CASE("stage params and shape") {
  StageConfig s;
  s.depth = 3;
  s.block.dim_in = 64;
  s.block.dim_inner = 64;
  s.block.dim_out = 256;
  const auto stage3 = create_res_stage(s);
  auto first = s.block;
  const auto b0 = count_params(*create_bottleneck_block(first));
  first.dim_in = 256;
  const auto b1 = count_params(*create_bottleneck_block(first));
  CHECK(count_params(*stage3) == b0 + 2 * b1);
  s.depth = 1;
  const auto stage1 = create_res_stage(s);
  CHECK(count_params(*stage1) == b0);
  const Shape in{1, 64, 2, 8, 8};
  CHECK(trace_shapes(*stage1, {in}) == trace_shapes(*stage3, {in}));
}

TEST_CASE("head formulas") {
  HeadConfig h;
  h.dim_in = 32;
  h.num_classes = 10;
  const auto head = create_res_basic_head(h);
  CHECK(count_params(*head) == 32 * 10 + 10);

  // Constant input c: logits = c * rowsum(W) + b.
  auto& w = head->child("proj")->param("weight");
  auto& b = head->child("proj")->param("bias");
  w = random_tensor(w.shape(), 1);
  b = random_tensor(b.shape(), 2);
  const Tensor x({1, 32, 2, 3, 3}, 0.75f);
  const auto y = (*head)(x);
  CHECK(y.shape() == Shape{1, 10});
  for (std::int64_t k = 0; k < 10; ++k) {
    double row = 0;
    for (std::int64_t i = 0; i < 32; ++i) row += w.at({k, i});
    CHECK(y.at({0, k}) == doctest::Approx(0.75 * row + b[static_cast<std::size_t>(k)]).epsilon(1e-5));
  }
  w.fill(0);
  b.fill(0);
  const auto zero = (*head)(random_tensor({2, 32, 1, 2, 2}, 3));
  for (float v : zero.values()) CHECK(v == 0.0f);
}

TEST_CASE("reference parameter counts") {
  auto count = [](ModulePtr m) { return count_params(*m); };
  auto cfg = resnet_config(ResNetVariant::i3d);
  cfg.initialize_weights = false;
  CHECK(count(create_resnet(cfg)) == kI3dR50Params);
  cfg = resnet_config(ResNetVariant::c2d);
  cfg.initialize_weights = false;
  CHECK(count(create_resnet(cfg)) == kC2dR50Params);
  cfg = resnet_config(ResNetVariant::slow);
  cfg.initialize_weights = false;
  CHECK(count(create_resnet(cfg)) == kSlowR50Params);
  auto x = x3d_config(X3DVariant::l);
  x.initialize_weights = false;
  CHECK(count(create_x3d(x)) == kX3dLParams);
  x = x3d_config(X3DVariant::xs);
  x.initialize_weights = false;
  CHECK(count(create_x3d(x)) == kX3dXsParams);
  auto sf = slowfast_config(101);
  sf.initialize_weights = false;
  CHECK(count(create_slowfast(sf)) == kSlowFastR101Params);
  sf = slowfast_config(50);
  sf.initialize_weights = false;
  CHECK(count(create_slowfast(sf)) == kSlowFastR50Params);
  CHECK(count(create_slow_r50_detection(80, false)) == kSlowDetParams);
  CHECK(count(create_slowfast_r50_detection(80, false)) == kSlowFastDetParams);
}

TEST_CASE("reference FLOPs") {
  // fvcore on the reference implementation, with the 4-op batch-norm rule.
  auto cfg = resnet_config(ResNetVariant::i3d);
  cfg.initialize_weights = false;
  const auto i3d = count_flops(*create_resnet(cfg), Shape{1, 3, 8, 256, 256});
  CHECK(static_cast<double>(i3d.total()) / 1e9 == doctest::Approx(37.4474).epsilon(1e-4));

  auto x = x3d_config(X3DVariant::xs);
  x.initialize_weights = false;
  const auto xs = count_flops(*create_x3d(x), Shape{1, 3, 4, 160, 160});
  CHECK(xs.conv_macs == 604'437'312);
  CHECK(xs.linear_macs == 819'200);
  CHECK(xs.norm_elements == 10'444'800);
  CHECK(xs.total() == 647'035'712);
}

TEST_CASE("x3d depthwise conv has no cross-channel terms") {
  auto x = x3d_config(X3DVariant::xs);
  x.initialize_weights = false;
  const auto net = create_x3d(x);
  const auto conv = std::dynamic_pointer_cast<Conv3d>(find_module(net, "stage1.block0.branch2.conv_b"));
  REQUIRE(conv);
  const auto c = conv->dim_out();
  CHECK(conv->geometry().groups == c);
  CHECK(count_params(*conv) == c * 3 * 3 * 3);
}

TEST_CASE("slowfast without fusion and beta 1 is two slow backbones plus a head") {
  auto sf = slowfast_config(50, 400);
  sf.alpha = 1;
  sf.beta_inv = 1;
  sf.fusion = false;
  sf.stem_conv_kernels = {Triple{1, 7, 7}, Triple{1, 7, 7}};
  sf.conv_a_temporal_kernels[1] = sf.conv_a_temporal_kernels[0];
  sf.initialize_weights = false;
  auto slow = resnet_config(ResNetVariant::slow, 50, 400);
  slow.head = nullptr;
  slow.initialize_weights = false;
  const auto backbone = count_params(*create_resnet(slow));
  const std::int64_t head = 4096 * 400 + 400;
  CHECK(count_params(*create_slowfast(sf)) == 2 * backbone + head);
}

TEST_CASE("slowfast input contract") {
  auto sf = slowfast_config(50, 10);
  sf.initialize_weights = false;
  const auto net = create_slowfast(sf);
  CHECK_THROWS_AS(trace_shapes(*net, {{1, 3, 8, 64, 64}}), ShapeError);
  CHECK_THROWS_AS(trace_shapes(*net, {{1, 3, 8, 64, 64}, {1, 3, 16, 64, 64}}), ShapeError);
}

TEST_CASE("factory determinism") {
  auto a = create_resnet(tiny_resnet());
  auto b = create_resnet(tiny_resnet());
  CHECK(state_dict(*a) == state_dict(*b));
  auto cfg = tiny_resnet();
  cfg.init.seed = 9;
  CHECK(state_dict(*create_resnet(cfg)) != state_dict(*a));
}

TEST_CASE("swapping norm or activation constructors changes no shape") {
  const Shape in{1, 3, 4, 32, 32};
  const auto base = child_shapes(*create_resnet(tiny_resnet()), in);
  CHECK(child_shapes(*create_resnet(tiny_resnet(make_identity())), in) == base);
  CHECK(child_shapes(*create_resnet(tiny_resnet(make_swish())), in) == base);
  CHECK(child_shapes(*create_resnet(tiny_resnet(no_activation())), in) == base);
  NormFactory no_norm = [](std::int64_t) -> ModulePtr { return std::make_shared<Identity>(); };
  CHECK(child_shapes(*create_resnet(tiny_resnet(make_relu(), no_norm)), in) == base);
}

TEST_CASE("identity activation equals the network without activations") {
  const auto with_identity = create_resnet(tiny_resnet(make_identity()));
  const auto without = create_resnet(tiny_resnet(no_activation()));
  const auto x = random_tensor({2, 3, 4, 32, 32}, 4);
  CHECK(max_abs_diff((*with_identity)(x), (*without)(x)) == 0.0);
  const auto relu = create_resnet(tiny_resnet());
  CHECK(max_abs_diff((*relu)(x), (*without)(x)) > 0.0);
}

TEST_CASE("zero-initialized final norm makes residual blocks the identity") {
  BottleneckConfig cfg;
  cfg.dim_in = 16;
  cfg.dim_inner = 4;
  cfg.dim_out = 16;
  cfg.conv_a_kernel = {3, 1, 1};
  const auto block = create_bottleneck_block(cfg);
  initialize(*block, InitOptions{3, true});
  // Non-negative input, as it is after the previous block's ReLU.
  const auto x = random_tensor({2, 16, 4, 6, 6}, 5, 0.0, 1.0);
  CHECK(max_abs_diff((*block)(x), x) <= 1e-6);

  StageConfig s;
  s.depth = 3;
  s.block = cfg;
  const auto stage = create_res_stage(s);
  initialize(*stage, InitOptions{4, true});
  CHECK(max_abs_diff((*stage)(x), x) <= 1e-6);

  auto xc = x3d_config(X3DVariant::xs);
  xc.init.zero_init_final_norm = true;
  const auto x3d = create_x3d(xc);
  const auto blk = find_module(x3d, "stage2.block1");
  REQUIRE(blk);
  const auto in = random_tensor({1, 48, 2, 5, 5}, 6, 0.0, 1.0);
  CHECK(max_abs_diff((*blk)(in), in) <= 1e-6);
}

TEST_CASE("toy network gradients match central differences") {
  ToyNet<double>::Config cfg;
  cfg.in_channels = 2;
  cfg.width = 3;
  cfg.classes = 4;
  cfg.num_blocks = 2;
  cfg.seed = 11;
  ToyNet<double> net(cfg);
  const auto x = random_tensor<double>({2, 2, 3, 4, 4}, 12);
  const auto up = random_tensor<double>({2, 4}, 13);
  const auto grads = net.backward(x, up);
  auto objective = [&](const ToyNet<double>& n) {
    const auto y = n.forward(x);
    double s = 0;
    for (std::size_t i = 0; i < y.storage().size(); ++i) s += y[i] * up[i];
    return s;
  };
  const double h = 1e-6;
  for (const auto& [name, g] : grads) {
    auto& p = net.params().at(name);
    double diff2 = 0, ref2 = 0;
    for (std::size_t i = 0; i < p.storage().size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double fp = objective(net);
      p[i] = keep - h;
      const double fm = objective(net);
      p[i] = keep;
      const double num = (fp - fm) / (2 * h);
      diff2 += (num - g[i]) * (num - g[i]);
      ref2 += num * num;
    }
    INFO(name);
    CHECK(std::sqrt(diff2 / std::max(ref2, 1e-30)) <= 1e-4);
  }
}

TEST_CASE("toy module form agrees with the templated forward") {
  ToyNet<double>::Config cfg;
  cfg.seed = 3;
  ToyNet<double> net(cfg);
  const auto x = random_tensor<double>({1, 3, 2, 5, 5}, 4);
  const auto m = net.to_module();
  const auto y = (*m)(x.cast<float>());
  CHECK(max_abs_diff(y.cast<double>(), net.forward(x)) <= 1e-5);
}

TEST_CASE("acoustic resnet on spectrograms") {
  AcousticConfig cfg;
  cfg.init.seed = 2;
  const auto net = create_acoustic_resnet(cfg);
  const auto spec = random_tensor({2, 64, 32}, 7, 0.0, 1.0);
  const auto video = spectrogram_to_video(spec);
  CHECK(video.shape() == Shape{2, 1, 64, 32, 1});
  const auto y = (*net)(video);
  CHECK(y.shape() == Shape{2, 400});
  const auto silent = (*net)(Tensor(video.shape()));
  for (float v : silent.values()) CHECK(std::isfinite(v));
  Tensor loud = video;
  for (auto& v : loud.values()) v *= 2.0f;
  CHECK(max_abs_diff((*net)(loud), y) > 1e-6);
}

TEST_CASE("detection boxes are validated") {
  CHECK_THROWS_AS(check_boxes(Tensor({1, 5}, {0, 10, 10, 10, 20}), 1), BoxError);
  CHECK_THROWS_AS(check_boxes(Tensor({1, 5}, {0, 10, 10, 20, 5}), 1), BoxError);
  CHECK_THROWS_AS(check_boxes(Tensor({1, 5}, {1, 0, 0, 4, 4}), 1), BoxError);
  CHECK_THROWS_AS(check_boxes(Tensor({1, 4}, {0, 0, 4, 4}), 1), BoxError);
  CHECK_NOTHROW(check_boxes(Tensor({2, 5}, {0, 0, 0, 4, 4, 0, 1, 1, 3, 3}), 1));
}

TEST_CASE("detection head on a small backbone") {
  auto cfg = tiny_resnet();
  cfg.head = nullptr;
  const auto backbone = create_resnet(cfg);
  RoiHeadConfig rh;
  rh.dim_in = 4 * 4 * 8;
  rh.num_classes = 6;
  rh.temporal_pool_kernels = {4};
  rh.roi.spatial_scale = 1.0 / 32.0;
  const auto det = create_detection_head(backbone, rh);
  const std::vector<Tensor> in{random_tensor({1, 3, 4, 64, 64}, 8), Tensor({2, 5}, {0, 0, 0, 32, 32, 0, 10, 20, 60, 50})};
  const auto y = det->forward(in);
  CHECK(y.front().shape() == Shape{2, 6});
  for (float v : y.front().values()) CHECK((v > 0.0f && v < 1.0f));  // sigmoid
  CHECK(trace_shapes(*det, {{1, 3, 4, 64, 64}, {2, 5}}).front() == Shape{2, 6});
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  const auto net = create_resnet(tiny_resnet());
  CheckpointMeta meta;
  meta.factory = "resnet";
  meta.args = {{"variant", "slow"}};
  meta.param_count = count_params(*net);
  const auto path = dir / "tiny.ckpt";
  save_checkpoint(*net, path, meta);
  const auto back = read_checkpoint_meta(path);
  CHECK(back.factory == "resnet");
  CHECK(back.args == meta.args);
  CHECK(back.param_count == meta.param_count);

  auto other = tiny_resnet();
  other.init.seed = 77;
  const auto fresh = create_resnet(other);
  load_state_dict(*fresh, read_checkpoint(path));
  const auto x = random_tensor({1, 3, 4, 32, 32}, 9);
  CHECK(max_abs_diff((*fresh)(x), (*net)(x)) == 0.0);
  for (const auto& [name, t] : state_dict(*net)) {
    const bool ok = name.rfind("stem.", 0) == 0 || name.rfind("stage", 0) == 0 || name.rfind("head.", 0) == 0;
    CHECK_MESSAGE(ok, name);
  }
  auto sd = read_checkpoint(path);
  sd.erase(sd.begin());
  CHECK_THROWS_AS(load_state_dict(*fresh, sd), KeyError);
}
