#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "videokit/transforms/video_ops.hpp"

// Photometric and geometric augmentation for clips with pixel values in
// [0, 1]. Parameters are drawn once per clip and applied to every frame.
namespace videokit::transforms {

enum class AugOp {
  rotate,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
  posterize,
  solarize,
  contrast,
  brightness,
  sharpness,
  auto_contrast,
  equalize,
};

std::string_view to_string(AugOp op);
AugOp parse_aug_op(std::string_view name);

// The full RandAugment op set.
std::vector<AugOp> rand_augment_ops();
// Without contrast, brightness and sharpness, whose blends can collapse the
// dynamic range of a chain.
std::vector<AugOp> augmix_ops();

// One op with its drawn argument: degrees for rotate, shear factor,
// translation as a fraction of the frame, bits kept for posterize, threshold
// for solarize, blend factor for the enhancers; unused otherwise.
struct OpCall {
  AugOp op = AugOp::rotate;
  double arg = 0.0;
};

// Linear magnitude scaling up to level 10; the sign of signed ops is a
// fair coin.
OpCall sample_op_call(AugOp op, int magnitude, Rng& rng);

// What an op actually used on each frame, clip statistics included.
struct OpRecord {
  std::string op;
  std::vector<std::vector<double>> frame_params;
};
using OpLog = std::vector<OpRecord>;

// Largest spread (max - min) of any logged parameter across the frames of
// one op application. Zero means every frame saw the same parameters.
double max_frame_param_spread(const OpLog& log);

// Applies one op to every frame of a [..., C, T, H, W] clip; geometric ops
// fill uncovered pixels with 0.5. Outputs stay in [0, 1].
Tensor apply_op(const Tensor& v, const OpCall& call, OpLog* log = nullptr);

struct RandAugmentConfig {
  int num_layers = 2;
  int magnitude = 9;
  std::vector<AugOp> ops = rand_augment_ops();
};

// ConfigError when magnitude is outside [0, 10], num_layers < 1 or the op
// set is empty.
Tensor rand_augment(const Tensor& v, const RandAugmentConfig& cfg, Rng& rng, OpLog* log = nullptr);

struct AugMixConfig {
  int width = 3;
  int depth = -1;  // -1 draws a depth in [1, 3] per chain
  double alpha = 1.0;
  int magnitude = 3;
  std::vector<AugOp> ops = augmix_ops();
};

struct AugMixDraw {
  double m = 1.0;               // weight of the clean clip, Beta(alpha, alpha)
  std::vector<double> weights;  // chain weights, Dirichlet(alpha)
  std::vector<std::vector<OpCall>> chains;
};

AugMixDraw sample_augmix(const AugMixConfig& cfg, Rng& rng);
// m v + (1 - m) sum_i w_i chain_i(v).
Tensor augmix_with(const Tensor& v, const AugMixDraw& draw, OpLog* log = nullptr);
Tensor augmix(const Tensor& v, const AugMixConfig& cfg, Rng& rng, OpLog* log = nullptr);

}  // namespace videokit::transforms
