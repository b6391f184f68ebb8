#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "videokit/conventions/layout.hpp"
#include "videokit/core/errors.hpp"
#include "videokit/data/clip_sampler.hpp"
#include "videokit/data/dataset.hpp"
#include "videokit/data/decoder.hpp"
#include "videokit/data/media_io.hpp"
#include "videokit/data/records.hpp"

using namespace videokit;
using namespace videokit::data;
namespace fs = std::filesystem;
using videokit::testing::TempDir;

namespace {

std::string frame_name(std::int64_t i, const char* ext = ".png") {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld%s", static_cast<long long>(i), ext);
  return buf;
}

// Frame i is a flat image whose red channel is i (mod 256), so decoded
// pixels identify their source frame.
void write_frames(const fs::path& dir, std::int64_t n, std::int64_t h = 6, std::int64_t w = 8) {
  fs::create_directories(dir);
  for (std::int64_t i = 0; i < n; ++i) {
    Image img{h, w, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w * 3))};
    for (std::int64_t p = 0; p < h * w; ++p) {
      img.pixels[static_cast<std::size_t>(p * 3)] = static_cast<std::uint8_t>(i % 256);
      img.pixels[static_cast<std::size_t>(p * 3 + 1)] = 100;
      img.pixels[static_cast<std::size_t>(p * 3 + 2)] = 200;
    }
    write_png(dir / frame_name(i), img);
  }
}

void write_imu(const fs::path& path, double rate, double seconds) {
  std::ofstream f(path);
  f << "t,ax,ay,az,gx,gy,gz\n";
  const auto n = static_cast<std::int64_t>(std::llround(rate * seconds));
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    f << t << "," << i << ",0,9.81,0,0," << -i << "\n";
  }
}

std::int64_t source_frame(const Tensor& video, std::int64_t t) {
  return std::llround(video.at({0, t, 0, 0}) * 255.0);
}

std::vector<LabeledVideoRecord> make_records(std::int64_t n) {
  std::vector<LabeledVideoRecord> r;
  for (std::int64_t i = 0; i < n; ++i) r.push_back({"v" + std::to_string(i), i % 3, std::nullopt});
  return r;
}

}  // namespace

TEST_CASE("uniform sampler partitions a 10 s video into 5 clips") {
  const auto s = make_clip_sampler("uniform", 2.0);
  std::mt19937_64 rng(0);
  const auto clips = enumerate_clips(s, 10.0, rng);
  REQUIRE(clips.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(clips[k].start_sec == doctest::Approx(2.0 * static_cast<double>(k)));
    CHECK(clips[k].end_sec == doctest::Approx(2.0 * static_cast<double>(k) + 2.0));
    CHECK(clips[k].clip_index == static_cast<std::int64_t>(k));
    CHECK(clips[k].is_last_clip == (k == 4));
  }
}

TEST_CASE("uniform sampler on a video shorter than a clip") {
  const auto s = make_clip_sampler("uniform", 2.0);
  const auto c = s(SamplerCursor{}, 1.0);
  CHECK(c.start_sec == 0.0);
  CHECK(c.end_sec == 2.0);
  CHECK(c.is_last_clip);
}

TEST_CASE("uniform clips tile the video for random durations") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ud(0.05, 30.0), uc(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double D = ud(rng), d = uc(rng);
    const auto clips = enumerate_clips(make_clip_sampler("uniform", d), D, rng);
    const auto expected = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(D / d - 1e-9)));
    REQUIRE(clips.size() == expected);
    CHECK(clips.front().start_sec == 0.0);
    int last = 0;
    for (std::size_t k = 0; k < clips.size(); ++k) {
      CHECK(std::abs(clips[k].end_sec - clips[k].start_sec - d) <= 1e-6);
      if (k > 0) CHECK(std::abs(clips[k].start_sec - clips[k - 1].end_sec) <= 1e-9);
      last += clips[k].is_last_clip ? 1 : 0;
    }
    CHECK(last == 1);
    CHECK(clips.back().is_last_clip);
    CHECK(clips.back().end_sec >= D - 1e-9);
    CHECK(clips.back().start_sec < D);
  }
}

TEST_CASE("random sampler start is uniform on [0, D - d]") {
  const auto s = make_clip_sampler("random", 2.0);
  std::mt19937_64 rng(123);
  std::vector<double> starts;
  for (int i = 0; i < 10000; ++i) {
    const auto c = s(SamplerCursor{}, 10.0, rng);
    CHECK(c.is_last_clip);
    CHECK(c.start_sec >= 0.0);
    CHECK(c.start_sec <= 8.0);
    starts.push_back(c.start_sec);
  }
  std::sort(starts.begin(), starts.end());
  double ks = 0;
  const double n = static_cast<double>(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double f = starts[i] / 8.0;
    ks = std::max({ks, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  CHECK(ks < 1.63 / std::sqrt(n));  // 1% critical value
  CHECK_THROWS_AS(s(SamplerCursor{}, 10.0), ConfigError);
}

TEST_CASE("constant clips per video") {
  const auto s = make_clip_sampler("constant_clips_per_video", 2.0, 3);
  std::mt19937_64 rng(0);
  const auto clips = enumerate_clips(s, 10.0, rng);
  REQUIRE(clips.size() == 3);
  CHECK(clips[0].start_sec == 0.0);
  CHECK(clips[1].start_sec == doctest::Approx(4.0));
  CHECK(clips[2].start_sec == doctest::Approx(8.0));
  CHECK(clips[2].is_last_clip);
}

TEST_CASE("sampler configuration errors") {
  CHECK_THROWS_AS(make_clip_sampler("bogus", 2.0), ConfigError);
  CHECK_THROWS_AS(make_clip_sampler("constant_clips_per_video", 2.0), ConfigError);
  CHECK_THROWS_AS(make_clip_sampler("uniform", 0.0), ConfigError);
}

TEST_CASE("uniform temporal indices") {
  CHECK(uniform_temporal_indices(8, 8) == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(uniform_temporal_indices(1, 4) == std::vector<std::int64_t>{0, 0, 0, 0});
  CHECK(uniform_temporal_indices(30, 4) == std::vector<std::int64_t>{0, 10, 19, 29});
  for (std::int64_t t = 1; t < 40; t += 3) {
    for (std::int64_t n = 1; n < 40; n += 5) {
      const auto idx = uniform_temporal_indices(t, n);
      CHECK(static_cast<std::int64_t>(idx.size()) == n);
      CHECK(std::is_sorted(idx.begin(), idx.end()));
      CHECK(idx.front() >= 0);
      CHECK(idx.back() <= t - 1);
    }
  }
}

TEST_CASE("record lists") {
  TempDir dir("records");
  {
    std::ofstream f(dir / "list.csv");
    f << "a/b.mp4,3\n\nc.mp4,1,4.5\n";
    std::ofstream g(dir / "list.txt");
    f.close();
    g << "x.avi 7\ny.avi 2 1.25\n";
  }
  const auto r = read_records(dir / "list.csv", "/data");
  REQUIRE(r.size() == 2);
  CHECK(r[0].data_path == "/data/a/b.mp4");
  CHECK(std::get<std::int64_t>(r[0].label) == 3);
  CHECK(!r[0].duration_sec);
  CHECK(*r[1].duration_sec == 4.5);
  const auto s = read_records(dir / "list.txt");
  REQUIRE(s.size() == 2);
  CHECK(s[1].data_path == "y.avi");
  CHECK(*s[1].duration_sec == 1.25);
  CHECK_THROWS_AS(read_records(dir / "missing.csv"), PathError);
  {
    std::ofstream f(dir / "bad.csv");
    f << "only_a_path\n";
  }
  CHECK_THROWS_AS(read_records(dir / "bad.csv"), FormatError);
  CHECK_NOTHROW(check_labels(s, 8));
  CHECK_THROWS_AS(check_labels(s, 5), ConfigError);
}

TEST_CASE("shard sizes") {
  auto sizes = [](std::int64_t n, int w) {
    std::vector<std::size_t> out;
    for (int i = 0; i < w; ++i) out.push_back(shard_for_worker(make_records(n), i, w).size());
    return out;
  };
  CHECK(sizes(10, 2) == std::vector<std::size_t>{5, 5});
  CHECK(sizes(10, 3) == std::vector<std::size_t>{4, 3, 3});
  const auto all = make_records(10);
  const auto one = shard_for_worker(all, 0, 1);
  REQUIRE(one.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(one[i].data_path == all[i].data_path);
  CHECK_THROWS_AS(shard_for_worker(all, 2, 2), ConfigError);
  CHECK_THROWS_AS(shard_for_worker(all, -1, 2), ConfigError);
  CHECK_THROWS_AS(shard_for_worker(all, 0, 0), ConfigError);
}

TEST_CASE("shards partition the records") {
  for (std::int64_t n : {1, 5, 10, 17}) {
    for (int w : {1, 2, 3, 4, 7}) {
      std::multiset<std::string> seen;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (int i = 0; i < w; ++i) {
        const auto s = shard_for_worker(make_records(n), i, w);
        lo = std::min(lo, s.size());
        hi = std::max(hi, s.size());
        for (const auto& r : s) seen.insert(r.data_path);
      }
      std::multiset<std::string> all;
      for (const auto& r : make_records(n)) all.insert(r.data_path);
      CHECK(seen == all);
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("imu sidecar windows") {
  TempDir dir("imu");
  write_imu(dir / "imu.csv", 100.0, 3.0);
  CHECK(load_imu_sidecar(dir / "imu.csv", 0.0, 10.0).values.shape() == Shape{300, 6});
  CHECK(load_imu_sidecar(dir / "imu.csv", 5.0, 6.0).values.shape() == Shape{0, 6});
  const auto w = load_imu_sidecar(dir / "imu.csv", 1.0, 2.0);
  CHECK(w.values.shape() == Shape{100, 6});
  CHECK(w.timestamps.front() == doctest::Approx(1.0));
  CHECK(std::is_sorted(w.timestamps.begin(), w.timestamps.end()));
  CHECK(w.values.at({0, 0}) == 100.0f);
  CHECK(w.values.at({0, 2}) == doctest::Approx(9.81));
  {
    std::ofstream f(dir / "bad.csv");
    f << "t,ax,ay\n0,1,2\n";
  }
  CHECK_THROWS_AS(load_imu_sidecar(dir / "bad.csv", 0, 1), FormatError);
  {
    std::ofstream f(dir / "short.csv");
    f << "t,ax,ay,az,gx,gy,gz\n0,1,2\n";
  }
  CHECK_THROWS_AS(load_imu_sidecar(dir / "short.csv", 0, 1), FormatError);
}

TEST_CASE("image and wav codecs round trip") {
  TempDir dir("media");
  Image img{5, 7, 3, {}};
  for (std::int64_t i = 0; i < 5 * 7 * 3; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 3));
  write_png(dir / "a.png", img);
  write_ppm(dir / "a.ppm", img);
  const auto p = read_image(dir / "a.png");
  CHECK(p.pixels == img.pixels);
  CHECK(read_image(dir / "a.ppm").pixels == img.pixels);
  Image flat{8, 8, 3, std::vector<std::uint8_t>(8 * 8 * 3, 90)};
  write_jpeg(dir / "a.jpg", flat);
  for (auto v : read_image(dir / "a.jpg").pixels) CHECK(std::abs(int(v) - 90) <= 2);
  {
    std::ofstream f(dir / "junk.png");
    f << "not a png";
  }
  CHECK_THROWS_AS(read_image(dir / "junk.png"), ImageReadError);

  Tensor s({100});
  for (std::int64_t i = 0; i < 100; ++i) s[static_cast<std::size_t>(i)] = std::sin(0.1f * static_cast<float>(i)) * 0.5f;
  write_wav(dir / "a.wav", s, 8000);
  const auto w = read_wav(dir / "a.wav");
  CHECK(w.sample_rate == 8000);
  CHECK(max_abs_diff(w.samples, s) <= 1.0 / 32767);
}

TEST_CASE("clip frame indices") {
  CHECK(clip_frame_indices(40, 10, 0, 2).size() == 20);
  CHECK(clip_frame_indices(40, 10, 2, 4).front() == 20);
  CHECK(clip_frame_indices(1, 30, 0, 1) == std::vector<std::int64_t>(30, 0));
  const auto tail = clip_frame_indices(25, 10, 2, 4);
  CHECK(tail.size() == 20);
  CHECK(tail.front() == 20);
  CHECK(tail.back() == 24);
  // Frame counts stay within one of round(d * f) before padding.
  for (double fps : {7.0, 10.0, 24.0, 29.97}) {
    for (double t0 : {0.0, 0.31, 1.7}) {
      for (double d : {0.5, 1.0, 2.3}) {
        const auto n = static_cast<std::int64_t>(fps * 100);
        const auto idx = clip_frame_indices(n, fps, t0, t0 + d);
        std::int64_t inside = 0;
        for (auto i : idx) inside += (static_cast<double>(i) / fps >= t0 && static_cast<double>(i) / fps < t0 + d);
        CHECK(std::abs(inside - std::llround(d * fps)) <= 1);
      }
    }
  }
}

TEST_CASE("frame dataset: 40 frames at 10 fps in 2 s clips") {
  TempDir dir("frames");
  write_frames(dir / "vid", 40);
  auto ds = frame_video_dataset({{(dir / "vid").string(), std::int64_t{1}, std::nullopt}}, 10.0,
                                make_clip_sampler("uniform", 2.0));
  const auto samples = ds.load_all();
  REQUIRE(samples.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& s = samples[k];
    CHECK(s.video.shape() == Shape{3, 20, 6, 8});
    CHECK(s.video_name == "vid");
    CHECK(s.clip_info.clip_index == static_cast<std::int64_t>(k));
    for (std::int64_t t = 0; t < 20; ++t) {
      const auto i = s.frame_indices[static_cast<std::size_t>(t)];
      CHECK(i == static_cast<std::int64_t>(k) * 20 + t);
      CHECK(source_frame(s.video, t) == i);
      CHECK(s.frame_timestamps[static_cast<std::size_t>(t)] == doctest::Approx(static_cast<double>(i) / 10.0));
      CHECK(s.frame_timestamps[static_cast<std::size_t>(t)] >= s.clip_info.start_sec);
      CHECK(s.frame_timestamps[static_cast<std::size_t>(t)] <= s.clip_info.end_sec);
    }
    CHECK_NOTHROW(validate_layout(s.video, Modality::video));
  }
}

TEST_CASE("frame dataset: a single frame is repeated to fill the clip") {
  TempDir dir("single");
  write_frames(dir / "one", 1);
  auto ds = frame_video_dataset({{(dir / "one").string(), std::int64_t{0}, std::nullopt}}, 30.0,
                                make_clip_sampler("uniform", 1.0));
  const auto samples = ds.load_all();
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].video.shape() == Shape{3, 30, 6, 8});
  CHECK(samples[0].frame_indices == std::vector<std::int64_t>(30, 0));
  CHECK(samples[0].clip_info.is_last_clip);
}

TEST_CASE("mixed frame sizes are an error, not a resize") {
  TempDir dir("mixed");
  write_frames(dir / "m", 3);
  Image big{10, 10, 3, std::vector<std::uint8_t>(300, 0)};
  write_png(dir / "m" / frame_name(3), big);
  const FrameDirectoryDecoder dec(10.0);
  auto stream = dec.open(dir / "m");
  CHECK_THROWS_AS(stream->read_video(0.0, 0.4), ImageReadError);
}

TEST_CASE("empty or missing frame directories") {
  TempDir dir("empty");
  fs::create_directories(dir / "e");
  CHECK_THROWS_AS(list_frames(dir / "e"), EmptyDirError);
  CHECK_THROWS_AS(list_frames(dir / "nope"), PathError);
  DatasetOptions eager;
  eager.eager_path_check = true;
  CHECK_THROWS_AS(frame_video_dataset({{(dir / "nope").string(), std::int64_t{0}, std::nullopt}}, 10.0,
                                      make_clip_sampler("uniform", 1.0), {}, eager),
                  PathError);
}

TEST_CASE("labeled dataset over two 4 s videos") {
  TempDir dir("two");
  write_frames(dir / "a", 40);
  write_frames(dir / "b", 40);
  const std::vector<LabeledVideoRecord> recs{{(dir / "a").string(), std::int64_t{0}, std::nullopt},
                                             {(dir / "b").string(), std::int64_t{2}, std::nullopt}};
  auto ds = labeled_video_dataset(recs, make_clip_sampler("uniform", 2.0), std::make_shared<FrameDirectoryDecoder>(10.0));
  const auto samples = ds.load_all();
  REQUIRE(samples.size() == 4);
  std::vector<std::int64_t> idx;
  for (const auto& s : samples) idx.push_back(s.clip_info.clip_index);
  CHECK(idx == std::vector<std::int64_t>{0, 1, 0, 1});
  CHECK(std::get<std::int64_t>(samples[3].label) == 2);
  CHECK(samples[3].video_name == "b");

  // Identity transform keeps every invariant.
  auto same = labeled_video_dataset(recs, make_clip_sampler("uniform", 2.0), std::make_shared<FrameDirectoryDecoder>(10.0),
                                    [](DecodedSample s) { return s; });
  const auto again = same.load_all();
  REQUIRE(again.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again[i].video == samples[i].video);
}

TEST_CASE("a corrupt video is skipped and counted") {
  TempDir dir("corrupt");
  write_frames(dir / "a", 20);
  write_frames(dir / "b", 20);
  write_frames(dir / "c", 20);
  {
    std::ofstream f(dir / "b" / frame_name(5), std::ios::trunc);
    f << "garbage";
  }
  std::vector<LabeledVideoRecord> recs;
  for (const char* n : {"a", "b", "c"}) recs.push_back({(dir / n).string(), std::int64_t{0}, std::nullopt});
  auto ds = frame_video_dataset(recs, 10.0, make_clip_sampler("uniform", 2.0));
  std::int64_t skipped = -1;
  const auto samples = ds.load_all(&skipped);
  CHECK(skipped == 1);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].video_name == "a");
  CHECK(samples[1].video_name == "c");
}

TEST_CASE("sharded iteration yields the same samples as unsharded") {
  TempDir dir("shards");
  std::vector<LabeledVideoRecord> recs;
  const std::int64_t lengths[] = {10, 25, 31, 7, 40};
  for (int i = 0; i < 5; ++i) {
    write_frames(dir / ("v" + std::to_string(i)), lengths[i], 2, 2);
    recs.push_back({(dir / ("v" + std::to_string(i))).string(), std::int64_t{i}, std::nullopt});
  }
  auto key = [](const DecodedSample& s) { return std::make_pair(s.video_name, s.clip_info.clip_index); };
  std::multiset<std::pair<std::string, std::int64_t>> full, merged;
  for (const auto& s : frame_video_dataset(recs, 10.0, make_clip_sampler("uniform", 1.0)).load_all()) full.insert(key(s));
  for (int w = 0; w < 3; ++w) {
    const auto ds = frame_video_dataset(shard_for_worker(recs, w, 3), 10.0, make_clip_sampler("uniform", 1.0));
    for (const auto& s : ds.load_all()) merged.insert(key(s));
  }
  CHECK(full.size() == 1 + 3 + 4 + 1 + 4);
  CHECK(merged == full);
}

TEST_CASE("optional streams: audio, flow, imu") {
  TempDir dir("streams");
  const auto v = dir / "v";
  write_frames(v, 20, 4, 4);
  Tensor audio({16000});
  for (std::int64_t i = 0; i < 16000; ++i) audio[static_cast<std::size_t>(i)] = (i % 100) / 200.0f;
  write_wav(v / "audio.wav", audio, 8000);
  for (const char* axis : {"flow_x", "flow_y"}) {
    fs::create_directories(v / axis);
    for (std::int64_t i = 0; i < 20; ++i) {
      Image g{4, 4, 1, std::vector<std::uint8_t>(16, axis[5] == 'x' ? 128 : 255)};
      write_png(v / axis / frame_name(i), g);
    }
  }
  write_imu(v / "imu.csv", 50.0, 2.0);
  DatasetOptions opts;
  opts.decode_audio = opts.decode_flow = opts.decode_imu = true;
  auto ds = frame_video_dataset({{v.string(), std::int64_t{0}, std::nullopt}}, 10.0, make_clip_sampler("uniform", 1.0), {}, opts);
  const auto samples = ds.load_all();
  REQUIRE(samples.size() == 2);
  const auto& s = samples[1];
  REQUIRE(s.audio);
  CHECK(s.audio->shape() == Shape{8000});
  CHECK((*s.audio)[0] == doctest::Approx(0.0).epsilon(1e-3));
  REQUIRE(s.flow);
  CHECK(s.flow->shape() == Shape{2, 10, 4, 4});
  CHECK(s.flow->at({0, 0, 0, 0}) == doctest::Approx(0.0));
  CHECK(s.flow->at({1, 0, 0, 0}) == doctest::Approx(1.0));
  LayoutOptions flow_ok;
  flow_ok.allow_flow_channels = true;
  CHECK_NOTHROW(validate_layout(*s.flow, Modality::video, flow_ok));
  REQUIRE(s.imu);
  CHECK(s.imu->values.shape() == Shape{50, 6});
  CHECK(s.imu->timestamps.front() >= s.clip_info.start_sec);
  CHECK(s.imu->timestamps.back() < s.clip_info.end_sec);
}
