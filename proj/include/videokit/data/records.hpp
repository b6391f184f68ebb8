#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "videokit/core/tensor.hpp"

namespace videokit::data {

// A class index or a multi-hot vector.
using Label = std::variant<std::int64_t, std::vector<float>>;

struct LabeledVideoRecord {
  std::string data_path;
  Label label = std::int64_t{0};
  std::optional<double> duration_sec;
};

// Reads `path,label[,duration_sec]` lines (comma- or whitespace-separated,
// no header). Relative data paths are resolved against `root` when given.
// Blank lines are skipped. Throws PathError when the file is missing and
// FormatError on a malformed line.
std::vector<LabeledVideoRecord> read_records(const std::filesystem::path& list_file,
                                             const std::filesystem::path& root = {});

// Throws ConfigError when a label is outside [0, num_classes) or a multi-hot
// vector has the wrong width.
void check_labels(const std::vector<LabeledVideoRecord>& records, std::int64_t num_classes);

// Contiguous partition: the first (n mod workers) shards hold one extra record.
std::vector<LabeledVideoRecord> shard_for_worker(const std::vector<LabeledVideoRecord>& records,
                                                 int worker_id, int num_workers);

struct ImuSeries {
  std::vector<double> timestamps;
  Tensor values;  // (T, 6): ax ay az gx gy gz
};

// Rows of a `t,ax,ay,az,gx,gy,gz` CSV with start_sec <= t < end_sec, sorted
// by time. An empty window yields a (0, 6) series.
ImuSeries load_imu_sidecar(const std::filesystem::path& path, double start_sec, double end_sec);

}  // namespace videokit::data
