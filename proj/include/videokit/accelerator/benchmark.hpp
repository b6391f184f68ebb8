#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "videokit/models/module.hpp"

namespace videokit::accelerator {

struct LatencyReport {
  std::string model;
  std::vector<Shape> input_shape;  // one shape per network input
  int iters = 1;
  int warmup = 0;
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double p90_ms = 0.0;
  double baseline_median_ms = 0.0;
  double speedup = 1.0;  // baseline_median_ms / median_ms
  std::vector<std::string> rule_log;
};

// A single-input report serializes "input_shape" as a flat list of ints;
// multi-input reports use a list of lists.
nlohmann::json to_json(const LatencyReport& r);
LatencyReport latency_report_from_json(const nlohmann::json& j);

struct LatencyStats {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double p90_ms = 0.0;
};

// Nearest-rank p90; throws ConfigError on an empty sample.
LatencyStats summarize_latencies(std::vector<double> samples_ms);

// Times `iters` forward passes after `warmup` untimed ones, with OpenMP
// pinned to one thread for the duration. Inputs are uniform random in
// [-1, 1) from `seed`. When `baseline` is given it is timed the same way and
// the report carries the speedup; otherwise the model is its own baseline.
LatencyReport benchmark_latency(const models::Module& model, const std::vector<Shape>& input_shape,
                                int iters, int warmup, const models::Module* baseline = nullptr,
                                std::string name = {}, std::uint64_t seed = 0);

// Same, timed on caller-supplied inputs (needed when an input such as a box
// list must satisfy constraints that uniform noise does not).
LatencyReport benchmark_latency(const models::Module& model, const std::vector<Tensor>& inputs,
                                int iters, int warmup, const models::Module* baseline = nullptr,
                                std::string name = {});

}  // namespace videokit::accelerator
