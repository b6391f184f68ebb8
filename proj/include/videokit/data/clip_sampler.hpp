#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace videokit::data {

struct ClipInfo {
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::int64_t clip_index = 0;
  std::int64_t aug_index = 0;
  bool is_last_clip = false;
};

enum class SamplerStrategy { uniform, random, constant_clips_per_video };

SamplerStrategy parse_sampler_strategy(std::string_view name);

// Where the previous clip ended and how many clips came before it. Samplers
// hold no state of their own; the caller owns the cursor.
struct SamplerCursor {
  double last_clip_end_sec = 0.0;
  std::int64_t clip_index = 0;
};

// Maps (cursor, video duration) to the next clip.
//
// uniform:  back-to-back clips [k d, (k + 1) d) for k < max(1, ceil(D / d)).
//           The final clip may run past the end of the video; decoders pad it
//           by repeating the last frame.
// random:   one clip whose start is uniform in [0, max(0, D - d)].
// constant: n clips with starts spread evenly over [0, max(0, D - d)].
class ClipSampler {
 public:
  ClipSampler(SamplerStrategy strategy, double clip_duration,
              std::optional<std::int64_t> clips_per_video = std::nullopt);

  ClipInfo operator()(const SamplerCursor& cursor, double video_duration_sec,
                      std::mt19937_64& rng) const;
  // Deterministic strategies only; throws ConfigError for random.
  ClipInfo operator()(const SamplerCursor& cursor, double video_duration_sec) const;

  SamplerStrategy strategy() const noexcept { return strategy_; }
  double clip_duration() const noexcept { return clip_duration_; }
  std::optional<std::int64_t> clips_per_video() const noexcept { return clips_per_video_; }

 private:
  SamplerStrategy strategy_;
  double clip_duration_;
  std::optional<std::int64_t> clips_per_video_;
};

ClipSampler make_clip_sampler(std::string_view strategy, double clip_duration,
                              std::optional<std::int64_t> clips_per_video = std::nullopt);

// Runs the sampler from a fresh cursor until it reports the last clip.
std::vector<ClipInfo> enumerate_clips(const ClipSampler& sampler, double video_duration_sec,
                                      std::mt19937_64& rng);

// round(linspace(0, num_source_frames - 1, num_target)).
std::vector<std::int64_t> uniform_temporal_indices(std::int64_t num_source_frames,
                                                   std::int64_t num_target);

}  // namespace videokit::data
