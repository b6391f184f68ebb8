#include "videokit/accelerator/benchmark.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace videokit::accelerator {

namespace {

// Restores the OpenMP thread count on scope exit.
class SingleThreaded {
 public:
  SingleThreaded() : saved_(omp_get_max_threads()) { omp_set_num_threads(1); }
  ~SingleThreaded() { omp_set_num_threads(saved_); }
  SingleThreaded(const SingleThreaded&) = delete;
  SingleThreaded& operator=(const SingleThreaded&) = delete;

 private:
  int saved_;
};

std::vector<double> time_model(const models::Module& m, const std::vector<Tensor>& inputs,
                               int iters, int warmup) {
  for (int i = 0; i < warmup; ++i) m.forward(inputs);
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(iters));
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto out = m.forward(inputs);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return ms;
}

}  // namespace

LatencyStats summarize_latencies(std::vector<double> s) {
  if (s.empty()) throw ConfigError("no latency samples");
  std::sort(s.begin(), s.end());
  LatencyStats st;
  const std::size_t n = s.size();
  st.median_ms = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  st.mean_ms = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n)));
  st.p90_ms = s[std::max<std::size_t>(rank, 1) - 1];
  return st;
}

LatencyReport benchmark_latency(const models::Module& model, const std::vector<Shape>& input_shape,
                                int iters, int warmup, const models::Module* baseline,
                                std::string name, std::uint64_t seed) {
  if (iters < 1) throw ConfigError("iterations must be >= 1");
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<Tensor> inputs;
  for (const auto& s : input_shape) {
    Tensor t(s);
    for (auto& v : t.values()) v = u(rng);
    inputs.push_back(std::move(t));
  }
  return benchmark_latency(model, inputs, iters, warmup, baseline, std::move(name));
}

LatencyReport benchmark_latency(const models::Module& model, const std::vector<Tensor>& inputs,
                                int iters, int warmup, const models::Module* baseline,
                                std::string name) {
  if (iters < 1) throw ConfigError("iterations must be >= 1");
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  SingleThreaded guard;
  LatencyReport r;
  r.model = std::move(name);
  for (const auto& t : inputs) r.input_shape.push_back(t.shape());
  r.iters = iters;
  r.warmup = warmup;
  const auto st = summarize_latencies(time_model(model, inputs, iters, warmup));
  r.median_ms = st.median_ms;
  r.mean_ms = st.mean_ms;
  r.p90_ms = st.p90_ms;
  r.baseline_median_ms =
      baseline ? summarize_latencies(time_model(*baseline, inputs, iters, warmup)).median_ms
               : st.median_ms;
  r.speedup = r.median_ms > 0 ? r.baseline_median_ms / r.median_ms : 1.0;
  return r;
}

nlohmann::json to_json(const LatencyReport& r) {
  nlohmann::json shape;
  if (r.input_shape.size() == 1) {
    shape = r.input_shape.front();
  } else {
    shape = r.input_shape;
  }
  return {{"model", r.model},
          {"input_shape", shape},
          {"iters", r.iters},
          {"warmup", r.warmup},
          {"median_ms", r.median_ms},
          {"mean_ms", r.mean_ms},
          {"p90_ms", r.p90_ms},
          {"baseline_median_ms", r.baseline_median_ms},
          {"speedup", r.speedup},
          {"rule_log", r.rule_log}};
}

LatencyReport latency_report_from_json(const nlohmann::json& j) {
  try {
    LatencyReport r;
    r.model = j.at("model").get<std::string>();
    const auto& s = j.at("input_shape");
    if (!s.empty() && s.front().is_array()) {
      r.input_shape = s.get<std::vector<Shape>>();
    } else {
      r.input_shape = {s.get<Shape>()};
    }
    r.iters = j.at("iters").get<int>();
    r.warmup = j.at("warmup").get<int>();
    r.median_ms = j.at("median_ms").get<double>();
    r.mean_ms = j.at("mean_ms").get<double>();
    r.p90_ms = j.at("p90_ms").get<double>();
    r.baseline_median_ms = j.at("baseline_median_ms").get<double>();
    r.speedup = j.at("speedup").get<double>();
    r.rule_log = j.at("rule_log").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad latency report: ") + e.what());
  }
}

}  // namespace videokit::accelerator
