#include "videokit/core/tensor.hpp"

#include <sstream>

namespace videokit {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const auto& first = parts.front().shape();
  const int r = static_cast<int>(first.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError("concat axis out of range");
  Shape out_shape = first;
  out_shape[a] = 0;
  for (const auto& p : parts) {
    if (static_cast<int>(p.rank()) != r) throw ShapeError("concat rank mismatch");
    for (int d = 0; d < r; ++d) {
      if (d != a && p.shape()[d] != first[d]) {
        throw ShapeError("concat dim mismatch: " + shape_to_string(p.shape()) +
                         " vs " + shape_to_string(first));
      }
    }
    out_shape[a] += p.shape()[a];
  }
  std::int64_t outer = 1;
  for (int d = 0; d < a; ++d) outer *= first[d];
  std::int64_t inner = 1;
  for (int d = a + 1; d < r; ++d) inner *= first[d];

  BasicTensor<T> out(out_shape);
  T* dst = out.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (const auto& p : parts) {
      const std::int64_t chunk = p.shape()[a] * inner;
      const T* src = p.data() + o * chunk;
      dst = std::copy(src, src + chunk, dst);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& x, std::span<const int> perm) {
  const std::size_t r = x.rank();
  if (perm.size() != r) throw ShapeError("permutation rank mismatch");
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    const int p = perm[i];
    if (p < 0 || static_cast<std::size_t>(p) >= r || seen[p]) {
      throw ShapeError("invalid permutation");
    }
    seen[p] = true;
    out_shape[i] = x.shape()[p];
  }
  std::vector<std::int64_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.shape()[i];
  std::vector<std::int64_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) src_stride[i] = in_strides[perm[i]];

  BasicTensor<T> out(out_shape);
  std::vector<std::int64_t> idx(r, 0);
  const std::int64_t n = out.numel();
  std::int64_t src = 0;
  for (std::int64_t flat = 0; flat < n; ++flat) {
    out[static_cast<std::size_t>(flat)] = x[static_cast<std::size_t>(src)];
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) {
        src += src_stride[d];
        break;
      }
      src -= src_stride[d] * (out_shape[d] - 1);
      idx[d] = 0;
    }
  }
  return out;
}

template Tensor concat<float>(std::span<const Tensor>, int);
template TensorD concat<double>(std::span<const TensorD>, int);
template Tensor permute<float>(const Tensor&, std::span<const int>);
template TensorD permute<double>(const TensorD&, std::span<const int>);

}  // namespace videokit
