#include "videokit/data/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "videokit/data/media_io.hpp"

namespace videokit::data {

namespace fs = std::filesystem;

namespace {

// Absorbs rounding when a boundary lands exactly on a frame time.
constexpr double kFrameEps = 1e-9;

Tensor stack_frames(const std::vector<fs::path>& files, const std::vector<std::int64_t>& idx,
                    std::int64_t channels) {
  if (idx.empty()) return Tensor({channels, 0, 0, 0});
  std::int64_t H = 0;
  std::int64_t W = 0;
  Tensor out;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    const auto& path = files[static_cast<std::size_t>(idx[t])];
    const Image img = read_image(path);
    if (t == 0) {
      H = img.height;
      W = img.width;
      out = Tensor({channels, static_cast<std::int64_t>(idx.size()), H, W});
    } else if (img.height != H || img.width != W) {
      throw ImageReadError(path.string() + ": frame is " + std::to_string(img.height) + "x" +
                           std::to_string(img.width) + ", expected " + std::to_string(H) + "x" + std::to_string(W));
    }
    const auto T = static_cast<std::int64_t>(idx.size());
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::int64_t src_c = img.channels == 1 ? 0 : std::min<std::int64_t>(c, img.channels - 1);
      float* dst = out.data() + (c * T + static_cast<std::int64_t>(t)) * H * W;
      for (std::int64_t p = 0; p < H * W; ++p) {
        dst[p] = static_cast<float>(img.pixels[static_cast<std::size_t>(p * img.channels + src_c)]) / 255.0f;
      }
    }
  }
  return out;
}

class FrameDirectoryStream : public MediaStream {
 public:
  FrameDirectoryStream(const fs::path& dir, double fps) : dir_(dir), fps_(fps) {
    frames_ = list_frames(dir);
    info_.fps = fps;
    info_.num_frames = static_cast<std::int64_t>(frames_.size());
    info_.duration_sec = static_cast<double>(frames_.size()) / fps;
    const auto wav = dir / "audio.wav";
    if (fs::exists(wav)) {
      audio_ = read_wav(wav);
      info_.has_audio = true;
      info_.audio_sample_rate = audio_->sample_rate;
    }
    if (fs::is_directory(dir / "flow_x") && fs::is_directory(dir / "flow_y")) {
      flow_x_ = list_frames(dir / "flow_x");
      flow_y_ = list_frames(dir / "flow_y");
      if (flow_x_.size() != flow_y_.size()) throw DecodeError(dir.string() + ": flow_x and flow_y differ in length");
      info_.has_flow = true;
    }
    info_.has_imu = fs::exists(dir / "imu.csv");
  }

  const StreamInfo& info() const override { return info_; }

  FrameClip read_video(double t0, double t1) override {
    FrameClip clip;
    clip.frame_indices = clip_frame_indices(info_.num_frames, fps_, t0, t1);
    clip.video = stack_frames(frames_, clip.frame_indices, 3);
    for (auto i : clip.frame_indices) clip.timestamps.push_back(static_cast<double>(i) / fps_);
    return clip;
  }

  Tensor read_audio(double t0, double t1) override {
    if (!audio_) throw DecodeError(dir_.string() + ": no audio.wav");
    const double sr = audio_->sample_rate;
    const auto begin = static_cast<std::int64_t>(std::floor(t0 * sr + kFrameEps));
    const auto count = std::max<std::int64_t>(0, std::llround((t1 - t0) * sr));
    Tensor out({count});
    for (std::int64_t i = 0; i < count; ++i) {
      const auto s = begin + i;
      if (s >= 0 && s < audio_->samples.numel()) out[static_cast<std::size_t>(i)] = audio_->samples[static_cast<std::size_t>(s)];
    }
    return out;
  }

  FrameClip read_flow(double t0, double t1) override {
    if (!info_.has_flow) throw DecodeError(dir_.string() + ": no flow_x/flow_y directories");
    FrameClip clip;
    clip.frame_indices = clip_frame_indices(static_cast<std::int64_t>(flow_x_.size()), fps_, t0, t1);
    Tensor x = stack_frames(flow_x_, clip.frame_indices, 1);
    Tensor y = stack_frames(flow_y_, clip.frame_indices, 1);
    if (x.shape() != y.shape()) throw ImageReadError(dir_.string() + ": flow_x and flow_y frame sizes differ");
    const std::vector<Tensor> parts{std::move(x), std::move(y)};
    clip.video = concat<float>(parts, 0);
    // Stored as 8-bit with 128 at zero motion; map to roughly [-1, 1].
    for (auto& v : clip.video.values()) v = (v * 255.0f - 128.0f) / 127.0f;
    for (auto i : clip.frame_indices) clip.timestamps.push_back(static_cast<double>(i) / fps_);
    return clip;
  }

  ImuSeries read_imu(double t0, double t1) override {
    if (!info_.has_imu) throw DecodeError(dir_.string() + ": no imu.csv");
    return load_imu_sidecar(dir_ / "imu.csv", t0, t1);
  }

 private:
  fs::path dir_;
  double fps_;
  StreamInfo info_;
  std::vector<fs::path> frames_;
  std::vector<fs::path> flow_x_;
  std::vector<fs::path> flow_y_;
  std::optional<WavAudio> audio_;
};

}  // namespace

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::exists(dir)) throw PathError("no such directory " + dir.string());
  if (!fs::is_directory(dir)) throw DecodeError(dir.string() + " is not a frame directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  }
  if (out.empty()) throw EmptyDirError(dir.string() + " holds no frames");
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

std::vector<std::int64_t> clip_frame_indices(std::int64_t num_frames, double fps, double t0, double t1) {
  if (!(fps > 0.0)) throw ConfigError("fps must be > 0");
  std::vector<std::int64_t> idx;
  if (num_frames < 1 || t1 <= t0) return idx;
  const auto first = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(t0 * fps - kFrameEps)));
  for (auto i = first; i < num_frames; ++i) {
    if (static_cast<double>(i) / fps >= t1 - kFrameEps / fps) break;
    idx.push_back(i);
  }
  // A window between two frames, or past the last one, holds the nearest
  // following frame (the last frame at the end of the video).
  if (idx.empty()) idx.push_back(std::min(first, num_frames - 1));
  const auto want = std::max<std::int64_t>(1, std::llround((t1 - t0) * fps));
  while (static_cast<std::int64_t>(idx.size()) < want) idx.push_back(idx.back());
  return idx;
}

FrameDirectoryDecoder::FrameDirectoryDecoder(double fps) : fps_(fps) {
  if (!(fps > 0.0)) throw ConfigError("fps must be > 0");
}

std::unique_ptr<MediaStream> FrameDirectoryDecoder::open(const fs::path& path) const {
  return std::make_unique<FrameDirectoryStream>(path, fps_);
}

}  // namespace videokit::data
