// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failing criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "videokit/accelerator/blocks.hpp"
#include "videokit/accelerator/deploy.hpp"
#include "videokit/core/errors.hpp"
#include "videokit/data/clip_sampler.hpp"
#include "videokit/data/dataset.hpp"
#include "videokit/data/media_io.hpp"
#include "videokit/data/records.hpp"
#include "videokit/models/blocks.hpp"
#include "videokit/models/counting.hpp"
#include "videokit/models/detection.hpp"
#include "videokit/models/init.hpp"
#include "videokit/models/layers.hpp"
#include "videokit/models/resnet.hpp"
#include "videokit/models/slowfast.hpp"
#include "videokit/models/toy_net.hpp"
#include "videokit/models/x3d.hpp"
#include "videokit/ssl/ssl.hpp"
#include "videokit/transforms/augment.hpp"
#include "videokit/transforms/mix.hpp"
#include "videokit/zoo/cli.hpp"
#include "videokit/zoo/zoo.hpp"

using namespace videokit;
using videokit::testing::random_tensor;
using videokit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

constexpr double kParamTol = 0.005;
constexpr double kFlopTol = 0.02;
constexpr double kRuleTol = 1e-5;
constexpr double kConvertTol = 1e-4;
constexpr double kLabelSumTol = 1e-6;
constexpr double kOracleTol = 1e-6;
constexpr double kGradTol = 1e-4;
constexpr double kIdentityTol = 1e-6;
constexpr double kParamBudgetSec = 60;
constexpr double kFlopBudgetSec = 300;
constexpr double kConvertBudgetSec = 300;
constexpr int kEquivalenceInputs = 10;

// Collects failed sub-checks and a short summary for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + std::string("failed: ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double measured, double expected) { return (measured - expected) / expected; }

void expect_params(Check& c, const std::string& name, const models::Module& m, double expected) {
  const auto p = static_cast<double>(models::count_params(m));
  const double e = rel(p, expected);
  c.note(name + fmt(" %.3fM (%+.2f%%)", p / 1e6, 100 * e));
  c.expect(std::abs(e) <= kParamTol, name + " params");
}

// ---- 1, 2: parameter counts -------------------------------------------------

void ac1(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto i3d = models::resnet_config(models::ResNetVariant::i3d, 50);
  i3d.initialize_weights = false;
  expect_params(c, "i3d_r50", *models::create_resnet(i3d), 28.0e6);
  auto x3d = models::x3d_config(models::X3DVariant::l);
  x3d.initialize_weights = false;
  expect_params(c, "x3d_l", *models::create_x3d(x3d), 6.2e6);
  auto sf = models::slowfast_config(101);
  sf.initialize_weights = false;
  expect_params(c, "slowfast_r101", *models::create_slowfast(sf), 53.8e6);
  const double dt = seconds_since(t0);
  c.note(fmt("%.1fs", dt));
  c.expect(dt < kParamBudgetSec, "runtime");
}

void ac2(Check& c) {
  expect_params(c, "slow_r50_detection", *models::create_slow_r50_detection(80, false), 31.78e6);
  expect_params(c, "slowfast_r50_detection", *models::create_slowfast_r50_detection(80, false), 33.82e6);
}

// ---- 3: FLOPs at manifest shapes --------------------------------------------

void ac3(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto entries = zoo::load_manifest(zoo::default_manifest_path());
  const auto reg = zoo::default_registry();
  const std::pair<const char*, double> targets[] = {{"i3d_r50", 37.5}, {"x3d_l", 26.6}, {"slowfast_r101_16x8", 215.6}};
  for (const auto& [name, expected] : targets) {
    const auto* e = zoo::find_entry(entries, name);
    if (!e) {
      c.expect(false, std::string(name) + " missing from manifest");
      continue;
    }
    const auto m = reg.build(e->factory, e->args, {false, 0});
    const double g = static_cast<double>(models::count_flops(*m, e->input_shape).total()) / 1e9;
    const double err = rel(g, expected);
    c.note(std::string(name) + fmt(" %.2fG (%+.2f%%)", g, 100 * err));
    c.expect(std::abs(err) <= kFlopTol, std::string(name) + " FLOPs");
  }
  const double dt = seconds_since(t0);
  c.note(fmt("%.1fs", dt));
  c.expect(dt < kFlopBudgetSec, "runtime");
}

// ---- 4: accelerator equivalence ---------------------------------------------

void perturb_norms(models::Module& root, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  models::visit_mut(root, [&](const std::string&, models::Module& m) {
    if (m.kind() != "BatchNorm3d") return;
    for (auto& v : m.param("running_mean").values()) v = u(rng);
    for (auto& v : m.param("running_var").values()) v = 1.0f + u(rng);
    for (auto& v : m.param("weight").values()) v = 1.0f + u(rng);
    for (auto& v : m.param("bias").values()) v = u(rng);
  });
}

std::shared_ptr<models::Conv3d> random_conv(std::int64_t cin, std::int64_t cout, kernels::ConvGeometry g,
                                            std::uint64_t seed) {
  auto conv = std::make_shared<models::Conv3d>(cin, cout, g, true);
  models::initialize(*conv, {seed});
  conv->param("bias") = random_tensor({cout}, seed + 1);
  return conv;
}

double max_error(const models::Module& a, const models::Module& b, const Shape& shape, std::uint64_t seed) {
  double worst = 0;
  for (int k = 0; k < kEquivalenceInputs; ++k) {
    const auto x = random_tensor(shape, seed + static_cast<std::uint64_t>(k));
    worst = std::max(worst, max_abs_diff(a(x), b(x)));
  }
  return worst;
}

void ac4(Check& c) {
  using kernels::same_padded;
  const auto t0 = std::chrono::steady_clock::now();

  auto conv = random_conv(3, 6, same_padded({3, 3, 3}, {1, 2, 2}), 10);
  auto bn = std::make_shared<models::BatchNorm3d>(6);
  perturb_norms(*bn, 11);
  auto ref = std::make_shared<models::Sequential>();
  ref->add("conv", conv);
  ref->add("norm", bn);
  const double fuse = max_error(*ref, *accelerator::fuse_conv_bn(*conv, *bn), {2, 3, 4, 9, 9}, 100);
  c.note(fmt("fuse %.1e", fuse));
  c.expect(fuse <= kRuleTol, "fuse_conv_bn");

  const auto spatial = random_conv(4, 5, same_padded({1, 3, 3}, {1, 2, 2}), 20);
  const double es =
      max_error(*spatial, *accelerator::decompose_spatial_conv(*spatial), {1, 4, 6, 11, 11}, 200);
  c.note(fmt("spatial %.1e", es));
  c.expect(es <= kRuleTol, "decompose_spatial");

  const auto temporal = random_conv(6, 6, same_padded({3, 1, 1}), 30);
  const double et =
      max_error(*temporal, *accelerator::decompose_temporal_conv(*temporal), {1, 6, 8, 5, 5}, 300);
  c.note(fmt("temporal %.1e", et));
  c.expect(et <= kRuleTol, "decompose_temporal");

  auto cfg = models::x3d_config(models::X3DVariant::xs);
  cfg.init.seed = 3;
  const auto m = models::create_x3d(cfg);
  perturb_norms(*m, 1);
  const Shape shape{1, 3, 4, 160, 160};
  const auto conv_out = accelerator::convert_to_deployable_form(m, {random_tensor(shape, 2)});
  const double ex = max_error(*m, *conv_out.model, shape, 400);
  c.note(fmt("x3d_xs %.1e over %.0f rewrites", ex, static_cast<double>(conv_out.rule_log.size())));
  c.expect(ex <= kConvertTol, "x3d_xs conversion");
  const auto again = accelerator::convert_to_deployable_form(conv_out.model, {random_tensor(shape, 3)});
  c.expect(again.rule_log.empty(), "idempotence");

  const double dt = seconds_since(t0);
  c.note(fmt("%.1fs", dt));
  c.expect(dt < kConvertBudgetSec, "runtime");
}

// ---- 5: data pipeline -------------------------------------------------------

void write_frames(const fs::path& dir, std::int64_t n) {
  fs::create_directories(dir);
  for (std::int64_t i = 0; i < n; ++i) {
    data::Image img{4, 4, 3, std::vector<std::uint8_t>(48, static_cast<std::uint8_t>(i % 256))};
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(i));
    data::write_png(dir / name, img);
  }
}

void ac5(Check& c) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ud(0.05, 30.0), uc(0.1, 5.0);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double D = ud(rng), d = uc(rng);
    const auto clips = data::enumerate_clips(data::make_clip_sampler("uniform", d), D, rng);
    bool ok = !clips.empty() && clips.front().start_sec == 0.0 && clips.back().is_last_clip &&
              clips.back().end_sec >= D - 1e-9 && clips.back().start_sec < D;
    for (std::size_t k = 1; k < clips.size(); ++k) {
      ok = ok && std::abs(clips[k].start_sec - clips[k - 1].end_sec) <= 1e-9 && !clips[k - 1].is_last_clip;
    }
    bad += ok ? 0 : 1;
  }
  c.note(fmt("tiling %.0f/200", 200.0 - bad));
  c.expect(bad == 0, "uniform tiling");

  TempDir dir("acceptance_data");
  std::vector<data::LabeledVideoRecord> recs;
  const std::int64_t lengths[] = {10, 25, 31, 7, 40};
  for (int i = 0; i < 5; ++i) {
    const auto p = dir / ("v" + std::to_string(i));
    write_frames(p, lengths[i]);
    recs.push_back({p.string(), std::int64_t{i}, std::nullopt});
  }
  using Key = std::pair<std::string, std::int64_t>;
  std::multiset<Key> full, merged;
  bool stamps = true;
  for (const auto& s : data::frame_video_dataset(recs, 10.0, data::make_clip_sampler("uniform", 1.0)).load_all()) {
    full.insert({s.video_name, s.clip_info.clip_index});
    for (std::size_t t = 0; t < s.frame_indices.size(); ++t) {
      const auto i = s.frame_indices[t];
      stamps = stamps && std::abs(s.frame_timestamps[t] - static_cast<double>(i) / 10.0) <= 1e-9 &&
               std::llround(s.video.at({0, static_cast<std::int64_t>(t), 0, 0}) * 255.0) == i % 256;
    }
  }
  for (int w = 0; w < 3; ++w) {
    const auto ds = data::frame_video_dataset(data::shard_for_worker(recs, w, 3), 10.0,
                                              data::make_clip_sampler("uniform", 1.0));
    for (const auto& s : ds.load_all()) merged.insert({s.video_name, s.clip_info.clip_index});
  }
  c.note(fmt("%.0f clips, 3 shards", static_cast<double>(full.size())));
  c.expect(merged == full, "shard union");
  c.expect(stamps, "timestamps i/fps");
}

// ---- 6: transforms ----------------------------------------------------------

void ac6(Check& c) {
  using namespace transforms;
  Rng rng(7);
  double worst_sum = 0;
  bool lambda_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto batch = random_tensor({4, 3, 2, 8, 8}, 1000 + static_cast<std::uint64_t>(trial), 0, 1);
    const auto labels = one_hot(std::vector<std::int64_t>{0, 1, 2, 1}, 5);
    for (const auto& r : {mixup(batch, labels, 0.8, rng), cutmix(batch, labels, 1.0, rng)}) {
      for (std::int64_t i = 0; i < 4; ++i) {
        double s = 0;
        for (std::int64_t k = 0; k < 5; ++k) s += r.labels.at({i, k});
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
    const auto cm = cutmix(batch, labels, 1.0, rng);
    lambda_exact = lambda_exact && cm.lambda == 1.0 - static_cast<double>(cm.box.area()) / 64.0;
  }
  const auto fixed = cutmix_with(random_tensor({2, 3, 2, 8, 8}, 5, 0, 1), one_hot(std::vector<std::int64_t>{0, 1}, 2),
                                 CutBox{2, 2, 4, 4}, {1, 0});
  lambda_exact = lambda_exact && fixed.lambda == 0.75;
  c.note(fmt("label row error %.1e", worst_sum));
  c.expect(worst_sum <= kLabelSumTol, "label rows");
  c.expect(lambda_exact, "cutmix lambda");

  const auto v = random_tensor({3, 4, 12, 12}, 9, 0, 1);
  OpLog log;
  for (int i = 0; i < 20; ++i) {
    rand_augment(v, RandAugmentConfig{}, rng, &log);
    augmix(v, AugMixConfig{}, rng, &log);
  }
  const double spread = max_frame_param_spread(log);
  c.note(fmt("%.0f op applications, spread %g", static_cast<double>(log.size()), spread));
  c.expect(spread == 0.0, "temporal consistency");

  Rng a(123), b(123);
  const bool same = rand_augment(v, RandAugmentConfig{}, a) == rand_augment(v, RandAugmentConfig{}, b) &&
                    augmix(v, AugMixConfig{}, a) == augmix(v, AugMixConfig{}, b) &&
                    mixup(random_tensor({2, 3, 1, 4, 4}, 1), one_hot(std::vector<std::int64_t>{0, 1}, 2), 0.8, a).batch ==
                        mixup(random_tensor({2, 3, 1, 4, 4}, 1), one_hot(std::vector<std::int64_t>{0, 1}, 2), 0.8, b).batch;
  c.expect(same, "bit-exact determinism");
}

// ---- 7: self-supervised losses ----------------------------------------------

double brute_force_info_nce(const TensorD& a, const TensorD& b, double tau) {
  const auto B = a.dim(0), D = a.dim(1), N = 2 * B;
  auto row = [&](std::int64_t i, std::int64_t d) { return i < B ? a.at({i, d}) : b.at({i - B, d}); };
  double total = 0;
  for (std::int64_t i = 0; i < N; ++i) {
    std::vector<double> sims(static_cast<std::size_t>(N));
    for (std::int64_t j = 0; j < N; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (std::int64_t d = 0; d < D; ++d) {
        dot += row(i, d) * row(j, d);
        ni += row(i, d) * row(i, d);
        nj += row(j, d) * row(j, d);
      }
      sims[static_cast<std::size_t>(j)] = dot / std::sqrt(ni * nj) / tau;
    }
    double denom = 0;
    for (std::int64_t j = 0; j < N; ++j)
      if (j != i) denom += std::exp(sims[static_cast<std::size_t>(j)]);
    total -= std::log(std::exp(sims[static_cast<std::size_t>((i + B) % N)]) / denom);
  }
  return total / static_cast<double>(N);
}

void ac7(Check& c) {
  double worst = 0;
  std::uint64_t seed = 0;
  for (std::int64_t B : {2, 3, 4}) {
    for (std::int64_t D : {3, 8}) {
      for (double tau : {0.1, 0.5, 1.0}) {
        const auto a = ssl::l2_normalize(random_tensor<double>({B, D}, ++seed));
        const auto b = ssl::l2_normalize(random_tensor<double>({B, D}, ++seed));
        worst = std::max(worst, std::abs(ssl::info_nce_loss(a, b, tau) - brute_force_info_nce(a.z, b.z, tau)));
      }
    }
  }
  c.note(fmt("oracle error %.1e", worst));
  c.expect(worst <= kOracleTol, "info_nce oracle");

  double degenerate = 0;
  for (std::int64_t B : {2, 3, 4}) {
    TensorD z({B, 5});
    for (std::int64_t i = 0; i < B; ++i) z.at({i, 2}) = 1.0;
    const auto e = ssl::l2_normalize(z);
    degenerate = std::max(degenerate, std::abs(ssl::info_nce_loss(e, e, 0.3) - std::log(2.0 * static_cast<double>(B) - 1)));
  }
  c.expect(degenerate <= kOracleTol, "degenerate log(2B-1)");

  const TensorD p({2, 2}, std::vector<double>{1, 0, 0, 3});
  const TensorD orth({2, 2}, std::vector<double>{0, 2, 5, 0});
  const TensorD anti({2, 2}, std::vector<double>{-2, 0, 0, -1});
  const bool endpoints = ssl::byol_loss(p, p) == 0.0 && ssl::byol_loss(p, orth) == 2.0 && ssl::byol_loss(p, anti) == 4.0;
  c.expect(endpoints, "byol endpoints");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> um(0.0, 1.0);
  std::map<std::string, TensorD> target{{"w", random_tensor<double>({3, 4}, 1)}};
  double worst_ratio = 0;
  for (std::uint64_t step = 0; step < 50; ++step) {
    const std::map<std::string, TensorD> online{{"w", random_tensor<double>({3, 4}, 10 + step)}};
    const double m = um(rng);
    auto dist = [&](const TensorD& x) {
      double s = 0;
      for (std::size_t i = 0; i < x.storage().size(); ++i) s += (x[i] - online.at("w")[i]) * (x[i] - online.at("w")[i]);
      return std::sqrt(s);
    };
    const double before = dist(target.at("w"));
    ssl::momentum_update(online, target, m);
    worst_ratio = std::max(worst_ratio, std::abs(dist(target.at("w")) - m * before));
  }
  c.expect(worst_ratio <= 1e-9, "momentum contraction");
}

// ---- 8: gradients and zero-initialized residuals ----------------------------

void ac8(Check& c) {
  models::ToyNet<double>::Config cfg;
  cfg.in_channels = 2;
  cfg.width = 3;
  cfg.classes = 4;
  cfg.seed = 11;
  models::ToyNet<double> net(cfg);
  const auto x = random_tensor<double>({2, 2, 3, 4, 4}, 12);
  const auto up = random_tensor<double>({2, 4}, 13);
  const auto grads = net.backward(x, up);
  auto objective = [&] {
    const auto y = net.forward(x);
    double s = 0;
    for (std::size_t i = 0; i < y.storage().size(); ++i) s += y[i] * up[i];
    return s;
  };
  const double h = 1e-6;
  double worst = 0;
  for (const auto& [name, g] : grads) {
    auto& p = net.params().at(name);
    double diff2 = 0, ref2 = 0;
    for (std::size_t i = 0; i < p.storage().size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double fp = objective();
      p[i] = keep - h;
      const double fm = objective();
      p[i] = keep;
      const double num = (fp - fm) / (2 * h);
      diff2 += (num - g[i]) * (num - g[i]);
      ref2 += num * num;
    }
    worst = std::max(worst, std::sqrt(diff2 / std::max(ref2, 1e-30)));
  }
  c.note(fmt("gradient rel error %.1e", worst));
  c.expect(worst <= kGradTol, "finite differences");

  models::BottleneckConfig bc;
  bc.dim_in = 16;
  bc.dim_inner = 4;
  bc.dim_out = 16;
  bc.conv_a_kernel = {3, 1, 1};
  const auto block = models::create_bottleneck_block(bc);
  models::initialize(*block, models::InitOptions{3, true});
  const auto in = random_tensor({2, 16, 4, 6, 6}, 5, 0.0, 1.0);
  auto xc = models::x3d_config(models::X3DVariant::xs);
  xc.init.zero_init_final_norm = true;
  const auto x3d = models::create_x3d(xc);
  const auto blk = models::find_module(x3d, "stage2.block1");
  const auto in48 = random_tensor({1, 48, 2, 5, 5}, 6, 0.0, 1.0);
  const double e = std::max(max_abs_diff((*block)(in), in), blk ? max_abs_diff((*blk)(in48), in48) : 1.0);
  c.note(fmt("identity error %.1e", e));
  c.expect(e <= kIdentityTol, "gamma=0 identity");
}

// ---- 9: CLI contract --------------------------------------------------------

zoo::FactoryRegistry perturbed_registry() {
  auto reg = zoo::default_registry();
  reg.add(
      "resnet",
      [](const nlohmann::json& args, const zoo::FactoryOptions& o) {
        auto cfg = models::resnet_config(models::parse_resnet_variant(args.value("variant", "slow")),
                                         args.value("depth", 50), args.value("num_classes", 400));
        cfg.stem_dim_out += 1;
        cfg.initialize_weights = o.initialize_weights;
        return models::create_resnet(cfg);
      },
      true);
  return reg;
}

int cli(const std::vector<std::string>& args, const zoo::FactoryRegistry& reg, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = zoo::run_cli(args, o, e, reg);
  if (out) *out = o.str();
  return code;
}

void ac9(Check& c) {
  std::string table;
  const int pristine = cli({"verify", "--all"}, zoo::default_registry(), &table);
  c.note(fmt("verify --all exit %.0f", pristine));
  if (pristine != zoo::kExitOk) {
    std::istringstream lines(table);
    for (std::string line; std::getline(lines, line);)
      if (line.find("FAIL") != std::string::npos && line.find("verification") == std::string::npos)
        c.note("red row: " + line.substr(0, line.find(' ')));
  }
  c.expect(pristine == zoo::kExitOk, "pristine verify --all exits 0");

  const int perturbed = cli({"verify", "--all"}, perturbed_registry());
  c.note(fmt("perturbed exit %.0f", perturbed));
  c.expect(perturbed == zoo::kExitVerifyFailed, "perturbed verify --all exits 1");

  // The same flip on a single entry that passes when pristine.
  const int one_ok = cli({"verify", "--model", "i3d_r50"}, zoo::default_registry());
  const int one_bad = cli({"verify", "--model", "i3d_r50"}, perturbed_registry());
  c.note(fmt("i3d_r50 exit %.0f -> %.0f", one_ok, one_bad));
  c.expect(one_ok == zoo::kExitOk && one_bad == zoo::kExitVerifyFailed, "i3d_r50 flip");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Check&)>> criteria[] = {
      {"AC1 params, recognition models", ac1}, {"AC2 params, detection models", ac2},
      {"AC3 FLOPs, recognition models", ac3},  {"AC4 accelerator equivalence", ac4},
      {"AC5 data pipeline properties", ac5},   {"AC6 transform properties", ac6},
      {"AC7 ssl oracles", ac7},                {"AC8 gradients and identity blocks", ac8},
      {"AC9 cli contract", ac9},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += c.ok() ? 0 : 1;
    std::cout << (c.ok() ? "PASS " : "FAIL ") << name << " | " << c.summary() << std::endl;
  }
  return failed;
}
