#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "videokit/zoo/zoo.hpp"

namespace videokit::zoo {

// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

// Subcommands (global flags: --json, --manifest PATH):
//   verify  --model NAME | --all   table of measured vs expected counts
//   flops   --model NAME           per-clip GFLOPs and the views factor
//   params  --model NAME           learnable parameter count
//   bench   --model NAME [--iters N] [--warmup W] [--seed S]
//                                  LatencyReport JSON, converted vs original
//   convert --model NAME --out PATH [--seed S]
//                                  deployment pass, then save a checkpoint
// `args` excludes the program name. Returns 0 on success, 1 when a
// verification or equivalence check fails, 2 on usage or config errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const FactoryRegistry& registry = default_registry());

// Random example inputs for `shapes`: uniform [-1, 1) clips, and for (K, 5)
// shapes valid boxes (batch index 0) inside the frame of the first input.
std::vector<Tensor> example_inputs(const std::vector<Shape>& shapes, std::uint64_t seed);

}  // namespace videokit::zoo
