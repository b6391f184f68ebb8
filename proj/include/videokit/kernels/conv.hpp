#pragma once

#include <array>
#include <span>

#include "videokit/core/tensor.hpp"

// Convolution kernels over the canonical (N, C, T, H, W) layout.
//
// Every kernel exists twice: an OpenMP version in `videokit::kernels` that the
// models call, and a plain loop version in `videokit::kernels::serial` that is
// kept as the oracle for tests and as the baseline for bench/.
namespace videokit::kernels {

struct ConvGeometry {
  std::array<int, 3> kernel{1, 1, 1};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};
  std::array<int, 3> dilation{1, 1, 1};
  int groups = 1;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

// "Same" padding for odd kernels: k / 2 per axis, scaled by dilation.
ConvGeometry same_padded(std::array<int, 3> kernel, std::array<int, 3> stride = {1, 1, 1},
                         std::array<int, 3> dilation = {1, 1, 1}, int groups = 1);

// Output extent of one axis; throws ShapeError when it would be < 1.
std::int64_t conv_out_extent(std::int64_t in, int kernel, int stride, int padding,
                             int dilation);

Shape conv3d_output_shape(const Shape& input, std::int64_t out_channels,
                          const ConvGeometry& g);

// x: (N, Cin, T, H, W); weight: (Cout, Cin / groups, kT, kH, kW);
// bias: empty or Cout values.
template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const ConvGeometry& g);

struct Conv2dGeometry {
  std::array<int, 2> kernel{1, 1};
  std::array<int, 2> stride{1, 1};
  std::array<int, 2> padding{0, 0};
  std::array<int, 2> dilation{1, 1};
  int groups = 1;
};

// x: (N, Cin, H, W); weight: (Cout, Cin / groups, kH, kW).
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const Conv2dGeometry& g);

struct Conv1dGeometry {
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int groups = 1;
};

// x: (N, Cin, L); weight: (Cout, Cin / groups, k).
template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const Conv1dGeometry& g);

template <typename T>
struct Conv3dGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;  // empty when the conv has no bias
};

namespace serial {

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const ConvGeometry& g);

// Gradients of conv3d w.r.t. input, weight and (optionally) bias.
template <typename T>
Conv3dGrads<T> conv3d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out, const ConvGeometry& g,
                               bool with_bias);

}  // namespace serial
}  // namespace videokit::kernels
