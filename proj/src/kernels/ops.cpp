#include "videokit/kernels/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "videokit/kernels/conv.hpp"

namespace videokit::kernels {

namespace {

void check_rank5(const Shape& s, const char* what) {
  if (s.size() != 5) {
    throw ShapeError(std::string(what) + " expects (N,C,T,H,W), got " + shape_to_string(s));
  }
}

template <typename T>
void check_norm_params(const BasicTensor<T>& x, std::size_t n_gamma, std::size_t n_beta,
                       std::size_t n_mean, std::size_t n_var) {
  if (x.rank() < 2) throw ShapeError("batch_norm expects (N,C,...)");
  const auto c = static_cast<std::size_t>(x.dim(1));
  if (n_gamma != c || n_beta != c || n_mean != c || n_var != c) {
    throw ShapeError("batch_norm parameter size does not match channel count " +
                     std::to_string(c));
  }
}

template <typename T, bool kMax>
BasicTensor<T> pool3d_impl(const BasicTensor<T>& x, const PoolGeometry& g, bool parallel) {
  check_rank5(x.shape(), "pool3d");
  const Shape os = pool3d_output_shape(x.shape(), g);
  BasicTensor<T> out(os);
  const std::int64_t Ti = x.dim(2), Hi = x.dim(3), Wi = x.dim(4);
  const std::int64_t To = os[2], Ho = os[3], Wo = os[4];
  const std::int64_t planes = os[0] * os[1];
  const double window = static_cast<double>(g.kernel[0]) * g.kernel[1] * g.kernel[2];
  const T* xin = x.data();
  T* yo = out.data();

  auto one_plane = [&](std::int64_t p) {
    const T* in = xin + p * Ti * Hi * Wi;
    T* o = yo + p * To * Ho * Wo;
    for (std::int64_t to = 0; to < To; ++to)
      for (std::int64_t ho = 0; ho < Ho; ++ho)
        for (std::int64_t wo = 0; wo < Wo; ++wo) {
          T best = -std::numeric_limits<T>::infinity();
          double sum = 0.0;
          for (int kt = 0; kt < g.kernel[0]; ++kt) {
            const std::int64_t ti = to * g.stride[0] - g.padding[0] + kt;
            if (ti < 0 || ti >= Ti) continue;
            for (int kh = 0; kh < g.kernel[1]; ++kh) {
              const std::int64_t hi = ho * g.stride[1] - g.padding[1] + kh;
              if (hi < 0 || hi >= Hi) continue;
              for (int kw = 0; kw < g.kernel[2]; ++kw) {
                const std::int64_t wi = wo * g.stride[2] - g.padding[2] + kw;
                if (wi < 0 || wi >= Wi) continue;
                const T v = in[(ti * Hi + hi) * Wi + wi];
                if constexpr (kMax) {
                  best = std::max(best, v);
                } else {
                  sum += v;
                }
              }
            }
          }
          if constexpr (kMax) {
            o[(to * Ho + ho) * Wo + wo] = best;
          } else {
            o[(to * Ho + ho) * Wo + wo] = static_cast<T>(sum / window);
          }
        }
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < planes; ++p) one_plane(p);
  } else {
    for (std::int64_t p = 0; p < planes; ++p) one_plane(p);
  }
  return out;
}

template <typename T>
BasicTensor<T> batch_norm_impl(const BasicTensor<T>& x, std::span<const T> gamma,
                               std::span<const T> beta, std::span<const T> mean,
                               std::span<const T> var, double eps, bool parallel) {
  check_norm_params(x, gamma.size(), beta.size(), mean.size(), var.size());
  BasicTensor<T> out(x.shape());
  const std::int64_t N = x.dim(0), C = x.dim(1);
  const std::int64_t inner = N * C == 0 ? 0 : x.numel() / (N * C);
  auto one_plane = [&](std::int64_t p) {
    const std::int64_t c = p % C;
    const T scale = static_cast<T>(gamma[c] / std::sqrt(static_cast<double>(var[c]) + eps));
    const T shift = beta[c] - mean[c] * scale;
    const T* in = x.data() + p * inner;
    T* o = out.data() + p * inner;
    for (std::int64_t i = 0; i < inner; ++i) o[i] = in[i] * scale + shift;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < N * C; ++p) one_plane(p);
  } else {
    for (std::int64_t p = 0; p < N * C; ++p) one_plane(p);
  }
  return out;
}

template <typename T>
T bilinear(const T* plane, std::int64_t H, std::int64_t W, double y, double x) {
  if (y < -1.0 || y > static_cast<double>(H) || x < -1.0 || x > static_cast<double>(W)) {
    return T{};
  }
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);
  auto y_low = static_cast<std::int64_t>(y);
  auto x_low = static_cast<std::int64_t>(x);
  std::int64_t y_high, x_high;
  if (y_low >= H - 1) {
    y_high = y_low = H - 1;
    y = static_cast<double>(y_low);
  } else {
    y_high = y_low + 1;
  }
  if (x_low >= W - 1) {
    x_high = x_low = W - 1;
    x = static_cast<double>(x_low);
  } else {
    x_high = x_low + 1;
  }
  const double ly = y - static_cast<double>(y_low), lx = x - static_cast<double>(x_low);
  const double hy = 1.0 - ly, hx = 1.0 - lx;
  return static_cast<T>(hy * hx * plane[y_low * W + x_low] + hy * lx * plane[y_low * W + x_high] +
                        ly * hx * plane[y_high * W + x_low] + ly * lx * plane[y_high * W + x_high]);
}

}  // namespace

Shape pool3d_output_shape(const Shape& input, const PoolGeometry& g) {
  check_rank5(input, "pool3d");
  return {input[0], input[1],
          conv_out_extent(input[2], g.kernel[0], g.stride[0], g.padding[0], 1),
          conv_out_extent(input[3], g.kernel[1], g.stride[1], g.padding[1], 1),
          conv_out_extent(input[4], g.kernel[2], g.stride[2], g.padding[2], 1)};
}

template <typename T>
BasicTensor<T> max_pool3d(const BasicTensor<T>& x, const PoolGeometry& g) {
  return pool3d_impl<T, true>(x, g, true);
}

template <typename T>
BasicTensor<T> avg_pool3d(const BasicTensor<T>& x, const PoolGeometry& g) {
  return pool3d_impl<T, false>(x, g, true);
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("global_avg_pool expects (N,C,...)");
  const std::int64_t N = x.dim(0), C = x.dim(1);
  const std::int64_t inner = N * C == 0 ? 0 : x.numel() / (N * C);
  BasicTensor<T> out({N, C});
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * C; ++p) {
    double s = 0.0;
    const T* in = x.data() + p * inner;
    for (std::int64_t i = 0; i < inner; ++i) s += in[i];
    out[static_cast<std::size_t>(p)] = static_cast<T>(s / static_cast<double>(inner));
  }
  return out;
}

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, std::span<const T> gamma,
                          std::span<const T> beta, std::span<const T> mean,
                          std::span<const T> var, double eps) {
  return batch_norm_impl(x, gamma, beta, mean, var, eps, true);
}

template <typename T>
void relu_inplace(BasicTensor<T>& x) {
  T* d = x.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = d[i] > T{} ? d[i] : T{};
}

template <typename T>
void sigmoid_inplace(BasicTensor<T>& x) {
  T* d = x.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = T{1} / (T{1} + std::exp(-d[i]));
}

template <typename T>
void swish_inplace(BasicTensor<T>& x) {
  T* d = x.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = d[i] / (T{1} + std::exp(-d[i]));
}

template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("softmax expects (N,C,...)");
  const std::int64_t N = x.dim(0), C = x.dim(1);
  const std::int64_t inner = N * C == 0 ? 0 : x.numel() / (N * C);
  BasicTensor<T> out(x.shape());
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t i = 0; i < inner; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(x[(n * C + c) * inner + i]));
      double s = 0.0;
      for (std::int64_t c = 0; c < C; ++c) s += std::exp(static_cast<double>(x[(n * C + c) * inner + i]) - mx);
      for (std::int64_t c = 0; c < C; ++c) {
        out[(n * C + c) * inner + i] =
            static_cast<T>(std::exp(static_cast<double>(x[(n * C + c) * inner + i]) - mx) / s);
      }
    }
  return out;
}

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias) {
  if (x.rank() < 2 || weight.rank() != 2) throw ShapeError("linear expects (N,Cin,...) and (Cout,Cin)");
  const std::int64_t N = x.dim(0), Cin = x.dim(1), Cout = weight.dim(0);
  if (weight.dim(1) != Cin) {
    throw ShapeError("linear expects " + std::to_string(weight.dim(1)) + " input features, got " +
                     std::to_string(Cin));
  }
  if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != Cout) {
    throw ShapeError("linear bias size mismatch");
  }
  const std::int64_t inner = x.numel() / (N * Cin);
  Shape os = x.shape();
  os[1] = Cout;
  BasicTensor<T> out(os);
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * Cout; ++p) {
    const std::int64_t n = p / Cout, co = p % Cout;
    T* o = out.data() + p * inner;
    std::fill(o, o + inner, bias.empty() ? T{} : bias[static_cast<std::size_t>(co)]);
    const T* wrow = weight.data() + co * Cin;
    for (std::int64_t ci = 0; ci < Cin; ++ci) {
      const T wv = wrow[ci];
      const T* in = x.data() + (n * Cin + ci) * inner;
      for (std::int64_t i = 0; i < inner; ++i) o[i] += wv * in[i];
    }
  }
  return out;
}

template <typename T>
void scale_channels_inplace(BasicTensor<T>& x, const BasicTensor<T>& scale) {
  const std::int64_t N = x.dim(0), C = x.dim(1);
  if (scale.rank() != 2 || scale.dim(0) != N || scale.dim(1) != C) {
    throw ShapeError("channel scale must be (N,C)");
  }
  const std::int64_t inner = x.numel() / (N * C);
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * C; ++p) {
    const T s = scale[static_cast<std::size_t>(p)];
    T* d = x.data() + p * inner;
    for (std::int64_t i = 0; i < inner; ++i) d[i] *= s;
  }
}

template <typename T>
void add_inplace(BasicTensor<T>& x, const BasicTensor<T>& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("add shape mismatch: " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(y.shape()));
  }
  T* d = x.data();
  const T* s = y.data();
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

template <typename T>
BasicTensor<T> roi_align(const BasicTensor<T>& features, const BasicTensor<T>& boxes,
                         const RoiAlignConfig& cfg) {
  if (features.rank() != 4) throw ShapeError("roi_align expects features (N,C,H,W)");
  if (boxes.rank() != 2 || boxes.dim(1) != 5) throw ShapeError("roi_align expects boxes (K,5)");
  if (cfg.pooled_h < 1 || cfg.pooled_w < 1) throw ConfigError("roi_align output size must be >= 1");
  const std::int64_t N = features.dim(0), C = features.dim(1), H = features.dim(2),
                     W = features.dim(3), K = boxes.dim(0);
  BasicTensor<T> out({K, C, cfg.pooled_h, cfg.pooled_w});
  const double offset = cfg.aligned ? 0.5 : 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    const auto b = static_cast<std::int64_t>(boxes.at({k, 0}));
    if (b < 0 || b >= N) throw BoxError("roi batch index out of range");
    const double x1 = boxes.at({k, 1}) * cfg.spatial_scale - offset;
    const double y1 = boxes.at({k, 2}) * cfg.spatial_scale - offset;
    const double x2 = boxes.at({k, 3}) * cfg.spatial_scale - offset;
    const double y2 = boxes.at({k, 4}) * cfg.spatial_scale - offset;
    double roi_w = x2 - x1, roi_h = y2 - y1;
    if (!cfg.aligned) {
      roi_w = std::max(roi_w, 1.0);
      roi_h = std::max(roi_h, 1.0);
    }
    const double bin_h = roi_h / cfg.pooled_h, bin_w = roi_w / cfg.pooled_w;
    const int grid_h = cfg.sampling_ratio > 0 ? cfg.sampling_ratio
                                              : static_cast<int>(std::ceil(roi_h / cfg.pooled_h));
    const int grid_w = cfg.sampling_ratio > 0 ? cfg.sampling_ratio
                                              : static_cast<int>(std::ceil(roi_w / cfg.pooled_w));
    const double count = std::max(grid_h * grid_w, 1);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < C; ++c) {
      const T* plane = features.data() + (b * C + c) * H * W;
      for (int ph = 0; ph < cfg.pooled_h; ++ph)
        for (int pw = 0; pw < cfg.pooled_w; ++pw) {
          double acc = 0.0;
          for (int iy = 0; iy < grid_h; ++iy) {
            const double y = y1 + ph * bin_h + (iy + 0.5) * bin_h / grid_h;
            for (int ix = 0; ix < grid_w; ++ix) {
              const double xx = x1 + pw * bin_w + (ix + 0.5) * bin_w / grid_w;
              acc += bilinear(plane, H, W, y, xx);
            }
          }
          out.at({k, c, ph, pw}) = static_cast<T>(acc / count);
        }
    }
  }
  return out;
}

namespace serial {

template <typename T>
BasicTensor<T> max_pool3d(const BasicTensor<T>& x, const PoolGeometry& g) {
  return pool3d_impl<T, true>(x, g, false);
}
template <typename T>
BasicTensor<T> avg_pool3d(const BasicTensor<T>& x, const PoolGeometry& g) {
  return pool3d_impl<T, false>(x, g, false);
}
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, std::span<const T> gamma,
                          std::span<const T> beta, std::span<const T> mean,
                          std::span<const T> var, double eps) {
  return batch_norm_impl(x, gamma, beta, mean, var, eps, false);
}

}  // namespace serial

#define VIDEOKIT_INSTANTIATE(T)                                                                \
  template BasicTensor<T> max_pool3d<T>(const BasicTensor<T>&, const PoolGeometry&);          \
  template BasicTensor<T> avg_pool3d<T>(const BasicTensor<T>&, const PoolGeometry&);          \
  template BasicTensor<T> global_avg_pool<T>(const BasicTensor<T>&);                          \
  template BasicTensor<T> batch_norm<T>(const BasicTensor<T>&, std::span<const T>,            \
                                        std::span<const T>, std::span<const T>,               \
                                        std::span<const T>, double);                          \
  template void relu_inplace<T>(BasicTensor<T>&);                                             \
  template void sigmoid_inplace<T>(BasicTensor<T>&);                                          \
  template void swish_inplace<T>(BasicTensor<T>&);                                            \
  template BasicTensor<T> softmax_channels<T>(const BasicTensor<T>&);                         \
  template BasicTensor<T> linear<T>(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                    std::span<const T>);                                      \
  template void scale_channels_inplace<T>(BasicTensor<T>&, const BasicTensor<T>&);            \
  template void add_inplace<T>(BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> roi_align<T>(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                       const RoiAlignConfig&);                                \
  template BasicTensor<T> serial::max_pool3d<T>(const BasicTensor<T>&, const PoolGeometry&);  \
  template BasicTensor<T> serial::avg_pool3d<T>(const BasicTensor<T>&, const PoolGeometry&);  \
  template BasicTensor<T> serial::batch_norm<T>(const BasicTensor<T>&, std::span<const T>,    \
                                                std::span<const T>, std::span<const T>,       \
                                                std::span<const T>, double);

VIDEOKIT_INSTANTIATE(float)
VIDEOKIT_INSTANTIATE(double)

#undef VIDEOKIT_INSTANTIATE

}  // namespace videokit::kernels
