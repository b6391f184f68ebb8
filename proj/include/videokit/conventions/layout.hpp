#pragma once

#include <string_view>
#include <variant>

#include "videokit/core/tensor.hpp"

namespace videokit {

enum class Modality { video, audio, spectrogram };

// Memory order of the trailing four axes of a video array.
enum class LayoutTag { CTHW, THWC };

LayoutTag parse_layout_tag(std::string_view tag);
std::string_view to_string(LayoutTag tag);

struct LayoutOptions {
  // Two-channel optical flow is only accepted when asked for explicitly.
  bool allow_flow_channels = false;
  // Required for Modality::audio.
  double sample_rate = 0.0;
};

// [..., C, T, H, W] with C in {1, 3} (or 2 when flow is allowed).
class VideoTensor {
 public:
  static VideoTensor validate(Tensor data, const LayoutOptions& opts = {});

  std::int64_t channels() const { return data_.dim(-4); }
  std::int64_t frames() const { return data_.dim(-3); }
  std::int64_t height() const { return data_.dim(-2); }
  std::int64_t width() const { return data_.dim(-1); }
  // Leading "..." dims (batch etc.); empty for a single clip.
  Shape leading_dims() const;

  const Tensor& tensor() const noexcept { return data_; }
  Tensor release() && noexcept { return std::move(data_); }

 private:
  explicit VideoTensor(Tensor data) : data_(std::move(data)) {}
  Tensor data_;
};

// [..., T] raw samples.
class AudioWaveform {
 public:
  static AudioWaveform validate(Tensor data, double sample_rate);

  std::int64_t samples() const { return data_.dim(-1); }
  double sample_rate() const noexcept { return sample_rate_; }
  double duration_sec() const { return static_cast<double>(samples()) / sample_rate_; }
  const Tensor& tensor() const noexcept { return data_; }
  Tensor release() && noexcept { return std::move(data_); }

 private:
  AudioWaveform(Tensor data, double rate) : data_(std::move(data)), sample_rate_(rate) {}
  Tensor data_;
  double sample_rate_;
};

// [..., T, F] time bins by frequency bins.
class Spectrogram {
 public:
  static Spectrogram validate(Tensor data);

  std::int64_t time_bins() const { return data_.dim(-2); }
  std::int64_t freq_bins() const { return data_.dim(-1); }
  const Tensor& tensor() const noexcept { return data_; }
  Tensor release() && noexcept { return std::move(data_); }

 private:
  explicit Spectrogram(Tensor data) : data_(std::move(data)) {}
  Tensor data_;
};

using ValidatedTensor = std::variant<VideoTensor, AudioWaveform, Spectrogram>;

// Wraps `x` as the typed value for `modality`; the storage is moved, never
// copied. Throws LayoutError naming the offending dimension.
ValidatedTensor validate_layout(Tensor x, Modality modality, const LayoutOptions& opts = {});

// Pure axis permutation between THWC and CTHW on the trailing four axes.
Tensor convert_layout(const Tensor& x, LayoutTag from, LayoutTag to);
Tensor convert_layout(const Tensor& x, std::string_view from, std::string_view to);

}  // namespace videokit
