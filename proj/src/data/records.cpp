#include "videokit/data/records.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace videokit::data {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(trim(f));
  } else {
    std::stringstream ss(line);
    std::string f;
    while (ss >> f) out.push_back(f);
  }
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<LabeledVideoRecord> read_records(const std::filesystem::path& list_file,
                                             const std::filesystem::path& root) {
  std::ifstream in(list_file);
  if (!in) throw PathError("cannot open record list " + list_file.string());
  std::vector<LabeledVideoRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() < 2 || f.size() > 3 || f[0].empty()) {
      throw FormatError(where(list_file, lineno) + ": expected path,label[,duration_sec]");
    }
    LabeledVideoRecord r;
    std::filesystem::path p(f[0]);
    r.data_path = (root.empty() || p.is_absolute()) ? p.string() : (root / p).string();
    std::int64_t label = 0;
    if (!parse_number(f[1], label)) throw FormatError(where(list_file, lineno) + ": bad label '" + f[1] + "'");
    r.label = label;
    if (f.size() == 3) {
      double d = 0.0;
      if (!parse_number(f[2], d) || d < 0.0) {
        throw FormatError(where(list_file, lineno) + ": bad duration '" + f[2] + "'");
      }
      r.duration_sec = d;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void check_labels(const std::vector<LabeledVideoRecord>& records, std::int64_t num_classes) {
  for (const auto& r : records) {
    if (r.data_path.empty()) throw ConfigError("record with an empty data_path");
    if (const auto* i = std::get_if<std::int64_t>(&r.label)) {
      if (*i < 0 || *i >= num_classes) {
        throw ConfigError("label " + std::to_string(*i) + " of " + r.data_path + " outside [0, " +
                          std::to_string(num_classes) + ")");
      }
    } else if (std::get<std::vector<float>>(r.label).size() != static_cast<std::size_t>(num_classes)) {
      throw ConfigError("multi-hot label of " + r.data_path + " has the wrong width");
    }
  }
}

std::vector<LabeledVideoRecord> shard_for_worker(const std::vector<LabeledVideoRecord>& records,
                                                 int worker_id, int num_workers) {
  if (num_workers < 1) throw ConfigError("num_workers must be >= 1");
  if (worker_id < 0 || worker_id >= num_workers) {
    throw ConfigError("worker_id " + std::to_string(worker_id) + " outside [0, " + std::to_string(num_workers) + ")");
  }
  const auto n = records.size();
  const auto w = static_cast<std::size_t>(num_workers);
  const auto id = static_cast<std::size_t>(worker_id);
  const auto base = n / w;
  const auto extra = n % w;
  const auto begin = id * base + std::min(id, extra);
  const auto size = base + (id < extra ? 1 : 0);
  return {records.begin() + static_cast<std::ptrdiff_t>(begin),
          records.begin() + static_cast<std::ptrdiff_t>(begin + size)};
}

ImuSeries load_imu_sidecar(const std::filesystem::path& path, double start_sec, double end_sec) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open IMU sidecar " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::pair<double, std::array<float, 6>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (!header) {
      static const std::vector<std::string> expected{"t", "ax", "ay", "az", "gx", "gy", "gz"};
      if (f != expected) throw FormatError(where(path, lineno) + ": expected header t,ax,ay,az,gx,gy,gz");
      header = true;
      continue;
    }
    if (f.size() != 7) throw FormatError(where(path, lineno) + ": expected 7 fields, got " + std::to_string(f.size()));
    double t = 0.0;
    if (!parse_number(f[0], t)) throw FormatError(where(path, lineno) + ": bad timestamp");
    std::array<float, 6> v{};
    for (std::size_t k = 0; k < 6; ++k) {
      if (!parse_number(f[k + 1], v[k])) throw FormatError(where(path, lineno) + ": bad value '" + f[k + 1] + "'");
    }
    if (t >= start_sec && t < end_sec) rows.emplace_back(t, v);
  }
  if (!header) throw FormatError(path.string() + ": missing header");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ImuSeries s;
  s.values = Tensor({static_cast<std::int64_t>(rows.size()), 6});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.timestamps.push_back(rows[i].first);
    std::copy(rows[i].second.begin(), rows[i].second.end(), s.values.data() + i * 6);
  }
  return s;
}

}  // namespace videokit::data
