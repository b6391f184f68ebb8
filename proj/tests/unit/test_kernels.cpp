#include <doctest.h>

#include <vector>

#include "test_support.hpp"
#include "videokit/core/errors.hpp"
#include "videokit/kernels/conv.hpp"
#include "videokit/kernels/ops.hpp"

using namespace videokit;
using namespace videokit::kernels;
using videokit::testing::random_tensor;

TEST_CASE("conv3d against a hand-computed 1x1x3x3 sum") {
  // 3x3 all-ones kernel with zero padding on a 1..9 image: centre = 45,
  // corner (0,0) = 1+2+4+5 = 12.
  Tensor x({1, 1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w({1, 1, 1, 3, 3}, 1.0f);
  const auto y = conv3d<float>(x, w, {}, same_padded({1, 3, 3}));
  CHECK(y.shape() == Shape{1, 1, 1, 3, 3});
  CHECK(y.at({0, 0, 0, 1, 1}) == 45.0f);
  CHECK(y.at({0, 0, 0, 0, 0}) == 12.0f);
  CHECK(y.at({0, 0, 0, 2, 2}) == 28.0f);
}

TEST_CASE("parallel conv3d matches the serial reference") {
  struct Case {
    Shape x;
    std::int64_t cout;
    ConvGeometry g;
  };
  std::vector<Case> cases = {
      {{2, 4, 5, 9, 7}, 6, same_padded({3, 3, 3})},
      {{1, 4, 6, 8, 8}, 4, same_padded({3, 3, 3}, {1, 2, 2}, {1, 1, 1}, 4)},
      {{1, 6, 4, 10, 10}, 4, same_padded({1, 3, 3}, {1, 1, 1}, {1, 2, 2}, 2)},
      {{1, 3, 8, 9, 9}, 5, ConvGeometry{{5, 7, 7}, {2, 2, 2}, {2, 3, 3}, {1, 1, 1}, 1}},
  };
  std::uint64_t seed = 0;
  for (const auto& c : cases) {
    const auto x = random_tensor(c.x, ++seed);
    const auto w = random_tensor({c.cout, c.x[1] / c.g.groups, c.g.kernel[0], c.g.kernel[1], c.g.kernel[2]}, ++seed);
    const auto b = random_tensor({c.cout}, ++seed);
    const auto fast = conv3d<float>(x, w, b.values(), c.g);
    const auto ref = serial::conv3d<float>(x, w, b.values(), c.g);
    CHECK(fast.shape() == conv3d_output_shape(c.x, c.cout, c.g));
    CHECK(max_abs_diff(fast, ref) <= 1e-5);
  }
}

TEST_CASE("conv2d and conv1d agree with conv3d on degenerate axes") {
  const auto x = random_tensor({2, 3, 9, 11}, 1);
  const auto w = random_tensor({4, 3, 3, 3}, 2);
  const auto y2 = conv2d<float>(x, w, {}, Conv2dGeometry{{3, 3}, {2, 1}, {1, 1}, {1, 1}, 1});
  const auto y3 = serial::conv3d<float>(x.reshaped({2, 3, 1, 9, 11}), w.reshaped({4, 3, 1, 3, 3}), {},
                                        ConvGeometry{{1, 3, 3}, {1, 2, 1}, {0, 1, 1}, {1, 1, 1}, 1});
  CHECK(max_abs_diff(y2, y3.reshaped(y2.shape())) <= 1e-5);

  const auto s = random_tensor({3, 4, 10}, 3);
  const auto k = random_tensor({4, 1, 3}, 4);
  const auto y1 = conv1d<float>(s, k, {}, Conv1dGeometry{3, 1, 1, 1, 4});
  const auto y1r = serial::conv3d<float>(s.reshaped({3, 4, 10, 1, 1}), k.reshaped({4, 1, 3, 1, 1}), {},
                                         ConvGeometry{{3, 1, 1}, {1, 1, 1}, {1, 0, 0}, {1, 1, 1}, 4});
  CHECK(max_abs_diff(y1, y1r.reshaped(y1.shape())) <= 1e-5);
}

TEST_CASE("conv output extent and errors") {
  CHECK(conv_out_extent(224, 7, 2, 3, 1) == 112);
  CHECK(conv_out_extent(8, 3, 1, 2, 2) == 8);
  CHECK_THROWS_AS(conv_out_extent(2, 5, 1, 0, 1), ShapeError);
}

TEST_CASE("pools match the serial reference and padding semantics") {
  const auto x = random_tensor({2, 3, 4, 9, 9}, 5);
  const PoolGeometry g{{1, 3, 3}, {1, 2, 2}, {0, 1, 1}};
  CHECK(max_abs_diff(max_pool3d(x, g), serial::max_pool3d(x, g)) == 0.0);
  CHECK(max_abs_diff(avg_pool3d(x, g), serial::avg_pool3d(x, g)) <= 1e-6);
  // All-negative input: padding never wins the max, but counts in the average.
  Tensor neg({1, 1, 1, 2, 2}, -1.0f);
  CHECK(max_pool3d(neg, g).at({0, 0, 0, 0, 0}) == -1.0f);
  CHECK(avg_pool3d(neg, g).at({0, 0, 0, 0, 0}) == doctest::Approx(-4.0 / 9.0));
}

TEST_CASE("batch norm kernel") {
  const auto x = random_tensor({2, 3, 2, 4, 4}, 6);
  const std::vector<float> g{1.5f, 0.5f, 2.0f}, b{0.1f, -0.2f, 0.0f}, m{0.3f, 0.0f, -0.1f}, v{2.0f, 0.5f, 1.0f};
  const auto y = batch_norm<float>(x, g, b, m, v, 1e-5);
  CHECK(max_abs_diff(y, serial::batch_norm<float>(x, g, b, m, v, 1e-5)) <= 1e-6);
  const float expect = (x.at({1, 2, 1, 3, 0}) - m[2]) / std::sqrt(v[2] + 1e-5f) * g[2] + b[2];
  CHECK(y.at({1, 2, 1, 3, 0}) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("roi align with a full-map box reproduces the map") {
  const auto f = random_tensor({1, 2, 4, 4}, 7);
  Tensor boxes({1, 5}, {0.0f, 0.0f, 0.0f, 4.0f, 4.0f});
  RoiAlignConfig cfg;
  cfg.pooled_h = 4;
  cfg.pooled_w = 4;
  cfg.spatial_scale = 1.0;
  cfg.sampling_ratio = 1;
  cfg.aligned = true;
  const auto y = roi_align(f, boxes, cfg);
  CHECK(y.shape() == Shape{1, 2, 4, 4});
  CHECK(max_abs_diff(y, f) <= 1e-6);
}

TEST_CASE("linear, global pool and activations") {
  Tensor x({1, 2, 1, 1, 2}, {1, 3, 2, 4});
  const auto p = global_avg_pool(x);
  CHECK(p.shape() == Shape{1, 2});
  CHECK(p[0] == 2.0f);
  CHECK(p[1] == 3.0f);
  Tensor w({3, 2}, {1, 0, 0, 1, 1, 1});
  const std::vector<float> b{0, 0, 1};
  const auto y = linear<float>(p, w, b);
  CHECK(y.storage() == std::vector<float>{2, 3, 6});
  Tensor r({3}, {-1, 0, 2});
  relu_inplace(r);
  CHECK(r.storage() == std::vector<float>{0, 0, 2});
  Tensor s({1}, {0.0f});
  sigmoid_inplace(s);
  CHECK(s[0] == 0.5f);
}
