#pragma once

#include <array>
#include <span>

#include "videokit/core/tensor.hpp"

namespace videokit::kernels {

struct PoolGeometry {
  std::array<int, 3> kernel{1, 1, 1};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};
};

Shape pool3d_output_shape(const Shape& input, const PoolGeometry& g);

// Padding positions never win a max.
template <typename T>
BasicTensor<T> max_pool3d(const BasicTensor<T>& x, const PoolGeometry& g);

// Padded positions count as zeros in the divisor (count_include_pad).
template <typename T>
BasicTensor<T> avg_pool3d(const BasicTensor<T>& x, const PoolGeometry& g);

// (N, C, ...) -> (N, C): mean over every trailing axis.
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

// Inference-mode batch norm over axis 1 with running statistics.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, std::span<const T> gamma,
                          std::span<const T> beta, std::span<const T> mean,
                          std::span<const T> var, double eps);

template <typename T>
void relu_inplace(BasicTensor<T>& x);
template <typename T>
void sigmoid_inplace(BasicTensor<T>& x);
template <typename T>
void swish_inplace(BasicTensor<T>& x);
// Softmax over axis 1.
template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& x);

// Applies weight (Cout, Cin) along axis 1 at every trailing position:
// (N, Cin, ...) -> (N, Cout, ...).
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias);

// x * scale[n, c] broadcast over trailing axes; scale is (N, C).
template <typename T>
void scale_channels_inplace(BasicTensor<T>& x, const BasicTensor<T>& scale);

template <typename T>
void add_inplace(BasicTensor<T>& x, const BasicTensor<T>& y);

struct RoiAlignConfig {
  int pooled_h = 7;
  int pooled_w = 7;
  double spatial_scale = 1.0 / 16.0;
  int sampling_ratio = 0;  // 0: adaptive ceil(bin size)
  bool aligned = true;     // half-pixel offset
};

// features: (N, C, H, W); boxes: (K, 5) rows (batch_index, x1, y1, x2, y2) in
// input-pixel coordinates. Returns (K, C, pooled_h, pooled_w).
template <typename T>
BasicTensor<T> roi_align(const BasicTensor<T>& features, const BasicTensor<T>& boxes,
                         const RoiAlignConfig& cfg);

namespace serial {

template <typename T>
BasicTensor<T> max_pool3d(const BasicTensor<T>& x, const PoolGeometry& g);
template <typename T>
BasicTensor<T> avg_pool3d(const BasicTensor<T>& x, const PoolGeometry& g);
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, std::span<const T> gamma,
                          std::span<const T> beta, std::span<const T> mean,
                          std::span<const T> var, double eps);

}  // namespace serial
}  // namespace videokit::kernels
