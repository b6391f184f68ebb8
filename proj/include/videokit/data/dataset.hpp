#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "videokit/data/clip_sampler.hpp"
#include "videokit/data/decoder.hpp"
#include "videokit/data/records.hpp"

namespace videokit::data {

struct DecodedSample {
  Tensor video;  // (C, T, H, W)
  // Filled by pathway packing: (slow, fast). Empty otherwise.
  std::vector<Tensor> pathways;
  std::vector<std::int64_t> frame_indices;
  std::vector<double> frame_timestamps;
  std::optional<Tensor> audio;  // (T,)
  std::optional<Tensor> flow;   // (2, T, H, W)
  std::optional<ImuSeries> imu;
  Label label;
  ClipInfo clip_info;
  std::string video_name;
};

using SampleTransform = std::function<DecodedSample(DecodedSample)>;

struct DatasetOptions {
  // Optional streams to decode when the video provides them.
  bool decode_audio = false;
  bool decode_flow = false;
  bool decode_imu = false;
  // Check that every data_path exists at construction (PathError).
  bool eager_path_check = false;
  // Seeds the random clip sampler; each iterator starts from this seed.
  std::uint64_t seed = 0;
};

// Walks records in order and, for each, samples clips until the sampler
// reports the last one. A record whose stream fails with a DecodeError is
// abandoned (clips already produced stay) and counted in skipped().
class LabeledVideoDataset {
 public:
  LabeledVideoDataset(std::vector<LabeledVideoRecord> records, ClipSampler sampler,
                      std::shared_ptr<const DecoderBackend> decoder, SampleTransform transform = {},
                      DatasetOptions options = {});

  // Per-iterator cursor; datasets themselves are immutable.
  class Iterator {
   public:
    std::optional<DecodedSample> next();
    std::int64_t skipped() const noexcept { return skipped_; }

   private:
    friend class LabeledVideoDataset;
    explicit Iterator(const LabeledVideoDataset& ds);
    bool open_next_record();

    const LabeledVideoDataset* ds_;
    std::mt19937_64 rng_;
    std::size_t record_ = 0;
    std::unique_ptr<MediaStream> stream_;
    double duration_ = 0.0;
    SamplerCursor cursor_;
    std::int64_t skipped_ = 0;
  };

  Iterator begin() const { return Iterator(*this); }
  // Drains one epoch; `skipped` receives the skip count when given.
  std::vector<DecodedSample> load_all(std::int64_t* skipped = nullptr) const;

  const std::vector<LabeledVideoRecord>& records() const noexcept { return records_; }
  const ClipSampler& sampler() const noexcept { return sampler_; }

 private:
  std::vector<LabeledVideoRecord> records_;
  ClipSampler sampler_;
  std::shared_ptr<const DecoderBackend> decoder_;
  SampleTransform transform_;
  DatasetOptions options_;
};

LabeledVideoDataset labeled_video_dataset(std::vector<LabeledVideoRecord> records, ClipSampler sampler,
                                          std::shared_ptr<const DecoderBackend> decoder,
                                          SampleTransform transform = {}, DatasetOptions options = {});

// Frame-directory records decoded at `fps`.
LabeledVideoDataset frame_video_dataset(std::vector<LabeledVideoRecord> records, double fps,
                                        ClipSampler sampler, SampleTransform transform = {},
                                        DatasetOptions options = {});

}  // namespace videokit::data
