#include "videokit/data/clip_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "videokit/core/errors.hpp"

namespace videokit::data {

namespace {

// Durations within this many seconds of a clip boundary count as reaching it.
constexpr double kTimeEps = 1e-9;

}  // namespace

SamplerStrategy parse_sampler_strategy(std::string_view name) {
  if (name == "uniform") return SamplerStrategy::uniform;
  if (name == "random") return SamplerStrategy::random;
  if (name == "constant_clips_per_video") return SamplerStrategy::constant_clips_per_video;
  throw ConfigError("unknown clip sampler '" + std::string(name) + "'");
}

ClipSampler::ClipSampler(SamplerStrategy strategy, double clip_duration,
                         std::optional<std::int64_t> clips_per_video)
    : strategy_(strategy), clip_duration_(clip_duration), clips_per_video_(clips_per_video) {
  if (!(clip_duration > 0.0) || !std::isfinite(clip_duration)) {
    throw ConfigError("clip_duration must be > 0");
  }
  const bool constant = strategy == SamplerStrategy::constant_clips_per_video;
  if (constant && !clips_per_video) throw ConfigError("constant_clips_per_video needs clips_per_video");
  if (!constant && clips_per_video) throw ConfigError("clips_per_video only applies to constant_clips_per_video");
  if (clips_per_video && *clips_per_video < 1) throw ConfigError("clips_per_video must be >= 1");
}

ClipInfo ClipSampler::operator()(const SamplerCursor& cursor, double duration,
                                 std::mt19937_64& rng) const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ConfigError("video duration must be >= 0");
  const double d = clip_duration_;
  ClipInfo c;
  c.clip_index = cursor.clip_index;
  switch (strategy_) {
    case SamplerStrategy::uniform: {
      c.start_sec = cursor.clip_index == 0 ? 0.0 : cursor.last_clip_end_sec;
      c.end_sec = c.start_sec + d;
      c.is_last_clip = c.end_sec >= duration - kTimeEps;
      break;
    }
    case SamplerStrategy::random: {
      const double span = std::max(0.0, duration - d);
      c.start_sec = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * span;
      c.end_sec = c.start_sec + d;
      c.is_last_clip = true;
      break;
    }
    case SamplerStrategy::constant_clips_per_video: {
      const auto n = *clips_per_video_;
      const double span = std::max(0.0, duration - d);
      const double step = n > 1 ? span / static_cast<double>(n - 1) : 0.0;
      c.start_sec = step * static_cast<double>(cursor.clip_index);
      c.end_sec = c.start_sec + d;
      c.is_last_clip = cursor.clip_index >= n - 1;
      break;
    }
  }
  return c;
}

ClipInfo ClipSampler::operator()(const SamplerCursor& cursor, double duration) const {
  if (strategy_ == SamplerStrategy::random) throw ConfigError("the random sampler needs a generator");
  std::mt19937_64 unused;
  return (*this)(cursor, duration, unused);
}

ClipSampler make_clip_sampler(std::string_view strategy, double clip_duration,
                              std::optional<std::int64_t> clips_per_video) {
  return ClipSampler(parse_sampler_strategy(strategy), clip_duration, clips_per_video);
}

std::vector<ClipInfo> enumerate_clips(const ClipSampler& sampler, double duration,
                                      std::mt19937_64& rng) {
  std::vector<ClipInfo> out;
  SamplerCursor cursor;
  for (;;) {
    auto c = sampler(cursor, duration, rng);
    out.push_back(c);
    if (c.is_last_clip) break;
    cursor.last_clip_end_sec = c.end_sec;
    cursor.clip_index = c.clip_index + 1;
  }
  return out;
}

std::vector<std::int64_t> uniform_temporal_indices(std::int64_t num_source_frames,
                                                   std::int64_t num_target) {
  if (num_source_frames < 1 || num_target < 1) {
    throw ConfigError("uniform_temporal_indices needs positive frame counts");
  }
  std::vector<std::int64_t> idx(static_cast<std::size_t>(num_target));
  const double last = static_cast<double>(num_source_frames - 1);
  for (std::int64_t i = 0; i < num_target; ++i) {
    const double t = num_target == 1 ? 0.0 : last * static_cast<double>(i) / static_cast<double>(num_target - 1);
    idx[static_cast<std::size_t>(i)] = std::clamp<std::int64_t>(std::llround(t), 0, num_source_frames - 1);
  }
  return idx;
}

}  // namespace videokit::data
