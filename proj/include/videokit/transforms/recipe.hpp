#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "videokit/data/dataset.hpp"
#include "videokit/transforms/augment.hpp"
#include "videokit/transforms/mix.hpp"

namespace videokit::transforms {

enum class RecipeMode { train, val };
enum class AugPolicy { none, randaug, augmix };
enum class MixPolicy { none, mixup, cutmix, both };

struct TransformRecipe {
  RecipeMode mode = RecipeMode::val;
  std::int64_t crop_size = 224;
  std::int64_t num_frames = 8;
  std::vector<float> mean{0.45f, 0.45f, 0.45f};
  std::vector<float> std{0.225f, 0.225f, 0.225f};
  AugPolicy aug_policy = AugPolicy::none;
  MixPolicy mix_policy = MixPolicy::none;
  std::optional<std::int64_t> pathway_alpha;
};

// ConfigError when an invariant fails.
void validate(const TransformRecipe& r);

// Keys are exactly the recipe fields; unknown keys are rejected with
// FormatError.
nlohmann::json to_json(const TransformRecipe& r);
TransformRecipe recipe_from_json(const nlohmann::json& j);

// Named starting points: "slowfast_train", "slowfast_val", "x3d_train",
// "x3d_val", "i3d_train", "i3d_val". These are conventional settings, not
// values tied to any reported result.
TransformRecipe recipe_preset(const std::string& name);
std::vector<std::string> recipe_preset_names();

// Short-side range of the train-time scale jitter and the fixed val-time
// short side, both proportional to the crop (256 and [256, 320] at 224).
std::int64_t val_short_side(std::int64_t crop_size);
std::pair<std::int64_t, std::int64_t> train_short_side_range(std::int64_t crop_size);

// Clip pipeline built from a recipe.
//   train: subsample, jittered short-side scale, random crop, random flip,
//          aug policy, normalize
//   val:   subsample, short-side scale, center crop, normalize
// then pathway packing when pathway_alpha is set.
class VideoTransform {
 public:
  explicit VideoTransform(TransformRecipe recipe);

  // One tensor, or (slow, fast) when packing.
  std::vector<Tensor> apply(const Tensor& video, Rng& rng, OpLog* log = nullptr) const;
  // Replaces sample.video (the fast pathway when packing) and fills
  // sample.pathways.
  data::DecodedSample operator()(data::DecodedSample sample, Rng& rng) const;
  // Adapter owning a generator seeded with `seed`, for dataset use. Each
  // worker should pass base_seed + worker_id.
  data::SampleTransform bind(std::uint64_t seed) const;

  const TransformRecipe& recipe() const noexcept { return recipe_; }

 private:
  TransformRecipe recipe_;
};

VideoTransform create_video_transform(const TransformRecipe& recipe);

inline constexpr double kMixupAlpha = 0.8;
inline constexpr double kCutmixAlpha = 1.0;

// Applies the recipe's mix policy to a collated batch; "both" picks mixup or
// cutmix with equal probability. With policy none the batch passes through
// with lambda 1 and the identity permutation.
MixResult mix_batch(const TransformRecipe& recipe, const Tensor& batch, const Tensor& labels, Rng& rng);

}  // namespace videokit::transforms
