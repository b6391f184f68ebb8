#include "videokit/data/dataset.hpp"

#include <filesystem>

namespace videokit::data {

LabeledVideoDataset::LabeledVideoDataset(std::vector<LabeledVideoRecord> records, ClipSampler sampler,
                                         std::shared_ptr<const DecoderBackend> decoder,
                                         SampleTransform transform, DatasetOptions options)
    : records_(std::move(records)),
      sampler_(sampler),
      decoder_(std::move(decoder)),
      transform_(std::move(transform)),
      options_(options) {
  if (records_.empty()) throw ConfigError("dataset needs at least one record");
  if (!decoder_) throw ConfigError("dataset needs a decoder");
  for (const auto& r : records_) {
    if (r.data_path.empty()) throw ConfigError("record with an empty data_path");
    if (options_.eager_path_check && !std::filesystem::exists(r.data_path)) {
      throw PathError("missing video " + r.data_path);
    }
  }
}

LabeledVideoDataset::Iterator::Iterator(const LabeledVideoDataset& ds) : ds_(&ds), rng_(ds.options_.seed) {}

bool LabeledVideoDataset::Iterator::open_next_record() {
  while (record_ < ds_->records_.size()) {
    const auto& r = ds_->records_[record_];
    try {
      stream_ = ds_->decoder_->open(r.data_path);
      duration_ = r.duration_sec.value_or(stream_->info().duration_sec);
      cursor_ = SamplerCursor{};
      return true;
    } catch (const DecodeError&) {
      ++skipped_;
      ++record_;
    }
  }
  return false;
}

std::optional<DecodedSample> LabeledVideoDataset::Iterator::next() {
  for (;;) {
    if (!stream_ && !open_next_record()) return std::nullopt;
    const auto& r = ds_->records_[record_];
    const ClipInfo clip = ds_->sampler_(cursor_, duration_, rng_);
    DecodedSample s;
    try {
      auto v = stream_->read_video(clip.start_sec, clip.end_sec);
      s.video = std::move(v.video);
      s.frame_indices = std::move(v.frame_indices);
      s.frame_timestamps = std::move(v.timestamps);
      const auto& info = stream_->info();
      if (ds_->options_.decode_audio && info.has_audio) s.audio = stream_->read_audio(clip.start_sec, clip.end_sec);
      if (ds_->options_.decode_flow && info.has_flow) s.flow = stream_->read_flow(clip.start_sec, clip.end_sec).video;
      if (ds_->options_.decode_imu && info.has_imu) s.imu = stream_->read_imu(clip.start_sec, clip.end_sec);
    } catch (const DecodeError&) {
      ++skipped_;
      stream_.reset();
      ++record_;
      continue;
    }
    s.label = r.label;
    s.clip_info = clip;
    s.video_name = std::filesystem::path(r.data_path).filename().string();
    if (clip.is_last_clip) {
      stream_.reset();
      ++record_;
    } else {
      cursor_.last_clip_end_sec = clip.end_sec;
      cursor_.clip_index = clip.clip_index + 1;
    }
    if (ds_->transform_) return ds_->transform_(std::move(s));
    return s;
  }
}

std::vector<DecodedSample> LabeledVideoDataset::load_all(std::int64_t* skipped) const {
  std::vector<DecodedSample> out;
  auto it = begin();
  while (auto s = it.next()) out.push_back(std::move(*s));
  if (skipped) *skipped = it.skipped();
  return out;
}

LabeledVideoDataset labeled_video_dataset(std::vector<LabeledVideoRecord> records, ClipSampler sampler,
                                          std::shared_ptr<const DecoderBackend> decoder,
                                          SampleTransform transform, DatasetOptions options) {
  return LabeledVideoDataset(std::move(records), sampler, std::move(decoder), std::move(transform), options);
}

LabeledVideoDataset frame_video_dataset(std::vector<LabeledVideoRecord> records, double fps,
                                        ClipSampler sampler, SampleTransform transform,
                                        DatasetOptions options) {
  return LabeledVideoDataset(std::move(records), sampler, std::make_shared<FrameDirectoryDecoder>(fps),
                             std::move(transform), options);
}

}  // namespace videokit::data
