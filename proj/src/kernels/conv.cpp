#include "videokit/kernels/conv.hpp"

#include <algorithm>
#include <string>

namespace videokit::kernels {

ConvGeometry same_padded(std::array<int, 3> kernel, std::array<int, 3> stride,
                         std::array<int, 3> dilation, int groups) {
  ConvGeometry g;
  g.kernel = kernel;
  g.stride = stride;
  g.dilation = dilation;
  g.groups = groups;
  for (int a = 0; a < 3; ++a) g.padding[a] = dilation[a] * (kernel[a] / 2);
  return g;
}

std::int64_t conv_out_extent(std::int64_t in, int kernel, int stride, int padding,
                             int dilation) {
  const std::int64_t span = static_cast<std::int64_t>(dilation) * (kernel - 1) + 1;
  const std::int64_t out = (in + 2 * padding - span) / stride + 1;
  if (in + 2 * padding < span || out < 1) {
    throw ShapeError("convolution/pool window larger than padded input (in=" +
                     std::to_string(in) + ", kernel=" + std::to_string(kernel) + ")");
  }
  return out;
}

namespace {

void check_geometry(const ConvGeometry& g) {
  for (int a = 0; a < 3; ++a) {
    if (g.kernel[a] < 1 || g.stride[a] < 1 || g.dilation[a] < 1 || g.padding[a] < 0) {
      throw ConfigError("invalid convolution geometry");
    }
  }
  if (g.groups < 1) throw ConfigError("groups must be >= 1");
}

template <typename T>
void check_conv_operands(const BasicTensor<T>& x, const BasicTensor<T>& w,
                         std::span<const T> bias, std::size_t spatial_rank, int groups) {
  if (x.rank() != spatial_rank + 2) {
    throw ShapeError("conv input must have rank " + std::to_string(spatial_rank + 2) +
                     ", got " + shape_to_string(x.shape()));
  }
  if (w.rank() != spatial_rank + 2) {
    throw ShapeError("conv weight must have rank " + std::to_string(spatial_rank + 2));
  }
  const auto cin = x.dim(1);
  const auto cout = w.dim(0);
  if (cin % groups != 0 || cout % groups != 0) {
    throw ShapeError("channels not divisible by groups");
  }
  if (w.dim(1) != cin / groups) {
    throw ShapeError("conv weight expects " + std::to_string(w.dim(1) * groups) +
                     " input channels, input has " + std::to_string(cin));
  }
  if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != cout) {
    throw ShapeError("conv bias size mismatch");
  }
}

// First/last+1 output index whose input tap lies inside [0, in).
inline void valid_range(std::int64_t in, std::int64_t out, int stride, int pad, int offset,
                        std::int64_t& lo, std::int64_t& hi) {
  // input index = o * stride - pad + offset
  const std::int64_t base = pad - offset;
  lo = base <= 0 ? 0 : (base + stride - 1) / stride;
  const std::int64_t top = in - 1 + pad - offset;
  hi = top < 0 ? 0 : top / stride + 1;
  lo = std::min(lo, out);
  hi = std::min(hi, out);
  if (hi < lo) hi = lo;
}

}  // namespace

Shape conv3d_output_shape(const Shape& input, std::int64_t out_channels,
                          const ConvGeometry& g) {
  if (input.size() != 5) throw ShapeError("conv3d expects (N,C,T,H,W)");
  return {input[0], out_channels,
          conv_out_extent(input[2], g.kernel[0], g.stride[0], g.padding[0], g.dilation[0]),
          conv_out_extent(input[3], g.kernel[1], g.stride[1], g.padding[1], g.dilation[1]),
          conv_out_extent(input[4], g.kernel[2], g.stride[2], g.padding[2], g.dilation[2])};
}

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const ConvGeometry& g) {
  check_geometry(g);
  check_conv_operands(x, weight, bias, 3, g.groups);
  for (int a = 0; a < 3; ++a) {
    if (weight.dim(2 + a) != g.kernel[a]) throw ShapeError("conv3d kernel/weight mismatch");
  }
  const Shape out_shape = conv3d_output_shape(x.shape(), weight.dim(0), g);
  BasicTensor<T> out(out_shape);

  const std::int64_t N = x.dim(0), C = x.dim(1), Ti = x.dim(2), Hi = x.dim(3), Wi = x.dim(4);
  const std::int64_t Co = weight.dim(0), To = out_shape[2], Ho = out_shape[3],
                     Wo = out_shape[4];
  const std::int64_t Cg = C / g.groups, Cog = Co / g.groups;
  const int kT = g.kernel[0], kH = g.kernel[1], kW = g.kernel[2];
  const int sT = g.stride[0], sH = g.stride[1], sW = g.stride[2];
  const int pT = g.padding[0], pH = g.padding[1], pW = g.padding[2];
  const int dT = g.dilation[0], dH = g.dilation[1], dW = g.dilation[2];
  const std::int64_t in_plane = Ti * Hi * Wi, out_plane = To * Ho * Wo;
  const T* xin = x.data();
  const T* wt = weight.data();
  T* yo = out.data();
  const bool has_bias = !bias.empty();

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * Co; ++p) {
    const std::int64_t n = p / Co, co = p % Co, grp = co / Cog;
    T* o = yo + p * out_plane;
    std::fill(o, o + out_plane, has_bias ? bias[static_cast<std::size_t>(co)] : T{});
    for (std::int64_t cl = 0; cl < Cg; ++cl) {
      const T* in = xin + (n * C + grp * Cg + cl) * in_plane;
      const T* wk = wt + (co * Cg + cl) * kT * kH * kW;
      for (int kt = 0; kt < kT; ++kt) {
        std::int64_t t_lo, t_hi;
        valid_range(Ti, To, sT, pT, kt * dT, t_lo, t_hi);
        for (int kh = 0; kh < kH; ++kh) {
          std::int64_t h_lo, h_hi;
          valid_range(Hi, Ho, sH, pH, kh * dH, h_lo, h_hi);
          for (int kw = 0; kw < kW; ++kw) {
            std::int64_t w_lo, w_hi;
            valid_range(Wi, Wo, sW, pW, kw * dW, w_lo, w_hi);
            const T wv = wk[(kt * kH + kh) * kW + kw];
            for (std::int64_t to = t_lo; to < t_hi; ++to) {
              const std::int64_t ti = to * sT - pT + kt * dT;
              for (std::int64_t ho = h_lo; ho < h_hi; ++ho) {
                const std::int64_t hi = ho * sH - pH + kh * dH;
                const std::int64_t base = (ti * Hi + hi) * Wi - pW + kw * dW;
                T* orow = o + (to * Ho + ho) * Wo;
                if (sW == 1) {
                  const T* irow = in + base;
                  for (std::int64_t wo = w_lo; wo < w_hi; ++wo) orow[wo] += wv * irow[wo];
                } else {
                  for (std::int64_t wo = w_lo; wo < w_hi; ++wo) {
                    orow[wo] += wv * in[base + wo * sW];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const Conv2dGeometry& g) {
  if (g.groups < 1) throw ConfigError("groups must be >= 1");
  check_conv_operands(x, weight, bias, 2, g.groups);
  if (weight.dim(2) != g.kernel[0] || weight.dim(3) != g.kernel[1]) {
    throw ShapeError("conv2d kernel/weight mismatch");
  }
  const std::int64_t N = x.dim(0), C = x.dim(1), Hi = x.dim(2), Wi = x.dim(3);
  const std::int64_t Co = weight.dim(0);
  const std::int64_t Ho = conv_out_extent(Hi, g.kernel[0], g.stride[0], g.padding[0], g.dilation[0]);
  const std::int64_t Wo = conv_out_extent(Wi, g.kernel[1], g.stride[1], g.padding[1], g.dilation[1]);
  BasicTensor<T> out({N, Co, Ho, Wo});
  const std::int64_t Cg = C / g.groups, Cog = Co / g.groups;
  const int kH = g.kernel[0], kW = g.kernel[1];
  const int sH = g.stride[0], sW = g.stride[1], pH = g.padding[0], pW = g.padding[1];
  const int dH = g.dilation[0], dW = g.dilation[1];
  const T* xin = x.data();
  const T* wt = weight.data();
  T* yo = out.data();
  const bool has_bias = !bias.empty();

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * Co; ++p) {
    const std::int64_t n = p / Co, co = p % Co, grp = co / Cog;
    T* o = yo + p * Ho * Wo;
    std::fill(o, o + Ho * Wo, has_bias ? bias[static_cast<std::size_t>(co)] : T{});
    for (std::int64_t cl = 0; cl < Cg; ++cl) {
      const T* in = xin + (n * C + grp * Cg + cl) * Hi * Wi;
      const T* wk = wt + (co * Cg + cl) * kH * kW;
      for (int kh = 0; kh < kH; ++kh) {
        std::int64_t h_lo, h_hi;
        valid_range(Hi, Ho, sH, pH, kh * dH, h_lo, h_hi);
        for (int kw = 0; kw < kW; ++kw) {
          std::int64_t w_lo, w_hi;
          valid_range(Wi, Wo, sW, pW, kw * dW, w_lo, w_hi);
          const T wv = wk[kh * kW + kw];
          for (std::int64_t ho = h_lo; ho < h_hi; ++ho) {
            const std::int64_t base = (ho * sH - pH + kh * dH) * Wi - pW + kw * dW;
            T* orow = o + ho * Wo;
            for (std::int64_t wo = w_lo; wo < w_hi; ++wo) orow[wo] += wv * in[base + wo * sW];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const Conv1dGeometry& g) {
  if (g.groups < 1) throw ConfigError("groups must be >= 1");
  check_conv_operands(x, weight, bias, 1, g.groups);
  if (weight.dim(2) != g.kernel) throw ShapeError("conv1d kernel/weight mismatch");
  const std::int64_t N = x.dim(0), C = x.dim(1), Li = x.dim(2), Co = weight.dim(0);
  const std::int64_t Lo = conv_out_extent(Li, g.kernel, g.stride, g.padding, g.dilation);
  BasicTensor<T> out({N, Co, Lo});
  const std::int64_t Cg = C / g.groups, Cog = Co / g.groups;
  const T* xin = x.data();
  const T* wt = weight.data();
  T* yo = out.data();
  const bool has_bias = !bias.empty();

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < N * Co; ++p) {
    const std::int64_t n = p / Co, co = p % Co, grp = co / Cog;
    T* o = yo + p * Lo;
    for (std::int64_t lo = 0; lo < Lo; ++lo) {
      T acc = has_bias ? bias[static_cast<std::size_t>(co)] : T{};
      for (std::int64_t cl = 0; cl < Cg; ++cl) {
        const T* in = xin + (n * C + grp * Cg + cl) * Li;
        const T* wk = wt + (co * Cg + cl) * g.kernel;
        for (int k = 0; k < g.kernel; ++k) {
          const std::int64_t li = lo * g.stride - g.padding + k * g.dilation;
          if (li >= 0 && li < Li) acc += wk[k] * in[li];
        }
      }
      o[lo] = acc;
    }
  }
  return out;
}

namespace serial {

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      std::span<const T> bias, const ConvGeometry& g) {
  check_geometry(g);
  check_conv_operands(x, weight, bias, 3, g.groups);
  const Shape os = conv3d_output_shape(x.shape(), weight.dim(0), g);
  BasicTensor<T> out(os);
  const std::int64_t C = x.dim(1), Co = weight.dim(0);
  const std::int64_t Cg = C / g.groups, Cog = Co / g.groups;
  for (std::int64_t n = 0; n < os[0]; ++n)
    for (std::int64_t co = 0; co < Co; ++co)
      for (std::int64_t to = 0; to < os[2]; ++to)
        for (std::int64_t ho = 0; ho < os[3]; ++ho)
          for (std::int64_t wo = 0; wo < os[4]; ++wo) {
            T acc = bias.empty() ? T{} : bias[static_cast<std::size_t>(co)];
            const std::int64_t grp = co / Cog;
            for (std::int64_t cl = 0; cl < Cg; ++cl)
              for (int kt = 0; kt < g.kernel[0]; ++kt)
                for (int kh = 0; kh < g.kernel[1]; ++kh)
                  for (int kw = 0; kw < g.kernel[2]; ++kw) {
                    const std::int64_t ti = to * g.stride[0] - g.padding[0] + kt * g.dilation[0];
                    const std::int64_t hi = ho * g.stride[1] - g.padding[1] + kh * g.dilation[1];
                    const std::int64_t wi = wo * g.stride[2] - g.padding[2] + kw * g.dilation[2];
                    if (ti < 0 || hi < 0 || wi < 0 || ti >= x.dim(2) || hi >= x.dim(3) ||
                        wi >= x.dim(4)) {
                      continue;
                    }
                    acc += weight.at({co, cl, kt, kh, kw}) * x.at({n, grp * Cg + cl, ti, hi, wi});
                  }
            out.at({n, co, to, ho, wo}) = acc;
          }
  return out;
}

template <typename T>
Conv3dGrads<T> conv3d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out, const ConvGeometry& g,
                               bool with_bias) {
  check_geometry(g);
  const Shape os = conv3d_output_shape(x.shape(), weight.dim(0), g);
  if (grad_out.shape() != os) throw ShapeError("conv3d_backward grad shape mismatch");
  Conv3dGrads<T> grads{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                       with_bias ? BasicTensor<T>({weight.dim(0)}) : BasicTensor<T>()};
  const std::int64_t C = x.dim(1), Co = weight.dim(0);
  const std::int64_t Cg = C / g.groups, Cog = Co / g.groups;
  for (std::int64_t n = 0; n < os[0]; ++n)
    for (std::int64_t co = 0; co < Co; ++co)
      for (std::int64_t to = 0; to < os[2]; ++to)
        for (std::int64_t ho = 0; ho < os[3]; ++ho)
          for (std::int64_t wo = 0; wo < os[4]; ++wo) {
            const T go = grad_out.at({n, co, to, ho, wo});
            if (with_bias) grads.bias[static_cast<std::size_t>(co)] += go;
            const std::int64_t grp = co / Cog;
            for (std::int64_t cl = 0; cl < Cg; ++cl)
              for (int kt = 0; kt < g.kernel[0]; ++kt)
                for (int kh = 0; kh < g.kernel[1]; ++kh)
                  for (int kw = 0; kw < g.kernel[2]; ++kw) {
                    const std::int64_t ti = to * g.stride[0] - g.padding[0] + kt * g.dilation[0];
                    const std::int64_t hi = ho * g.stride[1] - g.padding[1] + kh * g.dilation[1];
                    const std::int64_t wi = wo * g.stride[2] - g.padding[2] + kw * g.dilation[2];
                    if (ti < 0 || hi < 0 || wi < 0 || ti >= x.dim(2) || hi >= x.dim(3) ||
                        wi >= x.dim(4)) {
                      continue;
                    }
                    const std::int64_t ci = grp * Cg + cl;
                    grads.weight.at({co, cl, kt, kh, kw}) += go * x.at({n, ci, ti, hi, wi});
                    grads.input.at({n, ci, ti, hi, wi}) += go * weight.at({co, cl, kt, kh, kw});
                  }
          }
  return grads;
}

template Tensor conv3d<float>(const Tensor&, const Tensor&, std::span<const float>,
                              const ConvGeometry&);
template TensorD conv3d<double>(const TensorD&, const TensorD&, std::span<const double>,
                                const ConvGeometry&);
template Conv3dGrads<float> conv3d_backward<float>(const Tensor&, const Tensor&, const Tensor&,
                                                   const ConvGeometry&, bool);
template Conv3dGrads<double> conv3d_backward<double>(const TensorD&, const TensorD&,
                                                     const TensorD&, const ConvGeometry&, bool);

}  // namespace serial

template Tensor conv3d<float>(const Tensor&, const Tensor&, std::span<const float>,
                              const ConvGeometry&);
template TensorD conv3d<double>(const TensorD&, const TensorD&, std::span<const double>,
                                const ConvGeometry&);
template Tensor conv2d<float>(const Tensor&, const Tensor&, std::span<const float>,
                              const Conv2dGeometry&);
template TensorD conv2d<double>(const TensorD&, const TensorD&, std::span<const double>,
                                const Conv2dGeometry&);
template Tensor conv1d<float>(const Tensor&, const Tensor&, std::span<const float>,
                              const Conv1dGeometry&);
template TensorD conv1d<double>(const TensorD&, const TensorD&, std::span<const double>,
                                const Conv1dGeometry&);

}  // namespace videokit::kernels
