#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "videokit/core/tensor.hpp"
#include "videokit/data/records.hpp"

namespace videokit::data {

struct StreamInfo {
  double duration_sec = 0.0;
  double fps = 0.0;
  std::int64_t num_frames = 0;
  bool has_audio = false;
  double audio_sample_rate = 0.0;
  bool has_flow = false;
  bool has_imu = false;
};

// Frames of [t0, t1) plus the source frame index and timestamp of each.
struct FrameClip {
  Tensor video;  // (C, T, H, W) in [0, 1]
  std::vector<std::int64_t> frame_indices;
  std::vector<double> timestamps;
};

// One opened video. Reads are independent of each other; a stream is used
// by one worker at a time.
class MediaStream {
 public:
  virtual ~MediaStream() = default;
  virtual const StreamInfo& info() const = 0;
  virtual FrameClip read_video(double t0, double t1) = 0;
  // (T,) samples; the part past the end of the recording is zero.
  virtual Tensor read_audio(double t0, double t1) = 0;
  // (2, T, H, W) horizontal and vertical flow.
  virtual FrameClip read_flow(double t0, double t1) = 0;
  virtual ImuSeries read_imu(double t0, double t1) = 0;
};

class DecoderBackend {
 public:
  virtual ~DecoderBackend() = default;
  // Throws PathError when `path` is missing and DecodeError when unreadable.
  virtual std::unique_ptr<MediaStream> open(const std::filesystem::path& path) const = 0;
};

// Reads pre-decoded videos stored as a directory of images named so that
// lexicographic order is temporal order ({frame:06d}.png or .jpg). Optional
// siblings inside the directory:
//   audio.wav              the soundtrack
//   flow_x/, flow_y/       grayscale flow frames, 128 meaning zero motion
//   imu.csv                t,ax,ay,az,gx,gy,gz
// Frame i has timestamp i / fps. A clip selects frames with t0 <= i/fps < t1
// and, when the video ends early, repeats the last frame up to
// round((t1 - t0) * fps) frames. Frames of differing sizes raise
// ImageReadError; nothing is resized.
class FrameDirectoryDecoder : public DecoderBackend {
 public:
  explicit FrameDirectoryDecoder(double fps);
  std::unique_ptr<MediaStream> open(const std::filesystem::path& path) const override;
  double fps() const noexcept { return fps_; }

 private:
  double fps_;
};

// Sorted image files of a directory; throws EmptyDirError when none.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

// Indices of the frames in [t0, t1) at `fps`, padded with the last selected
// frame to round((t1 - t0) * fps) entries. Never empty for a non-empty video
// and a non-empty window.
std::vector<std::int64_t> clip_frame_indices(std::int64_t num_frames, double fps, double t0, double t1);

}  // namespace videokit::data
