#include "videokit/conventions/layout.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace videokit {

namespace {

void require_non_empty(const Tensor& x, const char* what) {
  if (x.empty()) throw LayoutError(std::string(what) + " tensor is empty");
}

void require_finite(const Tensor& x, const char* what) {
  for (float v : x.values()) {
    if (!std::isfinite(v)) throw LayoutError(std::string(what) + " contains non-finite values");
  }
}

void require_positive_dims(const Tensor& x, const char* what) {
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (x.shape()[i] < 1) {
      throw LayoutError(std::string(what) + " dimension " + std::to_string(i) + " is zero");
    }
  }
}

}  // namespace

LayoutTag parse_layout_tag(std::string_view tag) {
  if (tag == "CTHW") return LayoutTag::CTHW;
  if (tag == "THWC") return LayoutTag::THWC;
  throw LayoutError("unknown layout tag '" + std::string(tag) + "'");
}

std::string_view to_string(LayoutTag tag) {
  return tag == LayoutTag::CTHW ? "CTHW" : "THWC";
}

Shape VideoTensor::leading_dims() const {
  return Shape(data_.shape().begin(), data_.shape().end() - 4);
}

VideoTensor VideoTensor::validate(Tensor data, const LayoutOptions& opts) {
  require_non_empty(data, "video");
  if (data.rank() < 4) {
    throw LayoutError("video needs rank >= 4 [..., C, T, H, W], got " +
                      shape_to_string(data.shape()));
  }
  require_positive_dims(data, "video");
  const auto c = data.dim(-4);
  const bool ok = c == 1 || c == 3 || (opts.allow_flow_channels && c == 2);
  if (!ok) {
    throw LayoutError("video channel dimension (position -4) is " + std::to_string(c) +
                      "; expected 1 or 3" + (opts.allow_flow_channels ? " or 2" : "") +
                      " in layout [..., C, T, H, W]");
  }
  require_finite(data, "video");
  return VideoTensor(std::move(data));
}

AudioWaveform AudioWaveform::validate(Tensor data, double sample_rate) {
  require_non_empty(data, "audio");
  if (data.rank() < 1) throw LayoutError("audio needs a trailing time dimension");
  require_positive_dims(data, "audio");
  if (!(sample_rate > 0.0)) throw LayoutError("audio sample_rate must be > 0");
  return AudioWaveform(std::move(data), sample_rate);
}

Spectrogram Spectrogram::validate(Tensor data) {
  require_non_empty(data, "spectrogram");
  if (data.rank() < 2) {
    throw LayoutError("spectrogram needs rank >= 2 [..., T, F], got " +
                      shape_to_string(data.shape()));
  }
  require_positive_dims(data, "spectrogram");
  require_finite(data, "spectrogram");
  return Spectrogram(std::move(data));
}

ValidatedTensor validate_layout(Tensor x, Modality modality, const LayoutOptions& opts) {
  switch (modality) {
    case Modality::video:
      return VideoTensor::validate(std::move(x), opts);
    case Modality::audio:
      return AudioWaveform::validate(std::move(x), opts.sample_rate);
    case Modality::spectrogram:
      return Spectrogram::validate(std::move(x));
  }
  throw LayoutError("unknown modality");
}

Tensor convert_layout(const Tensor& x, LayoutTag from, LayoutTag to) {
  if (x.rank() < 4) throw LayoutError("layout conversion needs rank >= 4");
  if (from == to) return x;
  const int r = static_cast<int>(x.rank());
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  const int b = r - 4;
  if (from == LayoutTag::THWC) {
    // (T,H,W,C) -> (C,T,H,W)
    perm[b] = b + 3;
    perm[b + 1] = b;
    perm[b + 2] = b + 1;
    perm[b + 3] = b + 2;
  } else {
    // (C,T,H,W) -> (T,H,W,C)
    perm[b] = b + 1;
    perm[b + 1] = b + 2;
    perm[b + 2] = b + 3;
    perm[b + 3] = b;
  }
  return permute(x, std::span<const int>(perm));
}

Tensor convert_layout(const Tensor& x, std::string_view from, std::string_view to) {
  return convert_layout(x, parse_layout_tag(from), parse_layout_tag(to));
}

}  // namespace videokit
