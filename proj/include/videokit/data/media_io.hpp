#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "videokit/core/tensor.hpp"

namespace videokit::data {

// 8-bit interleaved pixels, row-major HWC.
struct Image {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;  // 1 or 3
  std::vector<std::uint8_t> pixels;
};

// PNG, JPEG, binary PGM (P5) and PPM (P6), chosen by extension. Alpha is
// dropped and 16-bit PNG is reduced to 8 bits. Throws ImageReadError.
Image read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& img);
void write_jpeg(const std::filesystem::path& path, const Image& img, int quality = 95);
void write_ppm(const std::filesystem::path& path, const Image& img);

bool is_image_file(const std::filesystem::path& path);

struct WavAudio {
  double sample_rate = 0.0;
  Tensor samples;  // (T,) in [-1, 1], channels averaged
};

// RIFF PCM 8/16/32-bit integer or 32-bit float. Throws DecodeError.
WavAudio read_wav(const std::filesystem::path& path);
// Mono 16-bit PCM.
void write_wav(const std::filesystem::path& path, const Tensor& samples, int sample_rate);

}  // namespace videokit::data
