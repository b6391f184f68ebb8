#include "videokit/transforms/recipe.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <set>

namespace videokit::transforms {

namespace {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<RecipeMode> kModes[] = {{RecipeMode::train, "train"}, {RecipeMode::val, "val"}};
constexpr EnumName<AugPolicy> kAugs[] = {
    {AugPolicy::none, "none"}, {AugPolicy::randaug, "randaug"}, {AugPolicy::augmix, "augmix"}};
constexpr EnumName<MixPolicy> kMixes[] = {
    {MixPolicy::none, "none"}, {MixPolicy::mixup, "mixup"}, {MixPolicy::cutmix, "cutmix"}, {MixPolicy::both, "both"}};

template <typename E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "none";
}

template <typename E, std::size_t N>
E enum_value(const EnumName<E> (&table)[N], const std::string& s, const char* field) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  throw FormatError(std::string("bad ") + field + " '" + s + "'");
}

const std::set<std::string> kRecipeKeys{"mode", "crop_size", "num_frames", "mean", "std",
                                         "aug_policy", "mix_policy", "pathway_alpha"};

}  // namespace

void validate(const TransformRecipe& r) {
  if (r.crop_size < 1) throw ConfigError("crop_size must be > 0");
  if (r.num_frames < 1) throw ConfigError("num_frames must be >= 1");
  if (r.mean.empty() || r.mean.size() != r.std.size()) throw ConfigError("mean and std need one entry per channel");
  for (auto s : r.std) {
    if (!(s > 0.0f)) throw ConfigError("std must be > 0");
  }
  if (r.pathway_alpha) {
    if (*r.pathway_alpha < 1) throw ConfigError("pathway_alpha must be >= 1");
    if (r.num_frames % *r.pathway_alpha != 0) throw ConfigError("num_frames must be divisible by pathway_alpha");
  }
}

nlohmann::json to_json(const TransformRecipe& r) {
  nlohmann::json j{{"mode", enum_name(kModes, r.mode)},
                   {"crop_size", r.crop_size},
                   {"num_frames", r.num_frames},
                   {"mean", r.mean},
                   {"std", r.std},
                   {"aug_policy", enum_name(kAugs, r.aug_policy)},
                   {"mix_policy", enum_name(kMixes, r.mix_policy)},
                   {"pathway_alpha", nullptr}};
  if (r.pathway_alpha) j["pathway_alpha"] = *r.pathway_alpha;
  return j;
}

TransformRecipe recipe_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("recipe must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kRecipeKeys.count(k)) throw FormatError("unknown recipe key '" + k + "'");
  }
  try {
    TransformRecipe r;
    r.mode = enum_value(kModes, j.at("mode").get<std::string>(), "mode");
    r.crop_size = j.at("crop_size").get<std::int64_t>();
    r.num_frames = j.at("num_frames").get<std::int64_t>();
    r.mean = j.at("mean").get<std::vector<float>>();
    r.std = j.at("std").get<std::vector<float>>();
    r.aug_policy = enum_value(kAugs, j.value("aug_policy", std::string("none")), "aug_policy");
    r.mix_policy = enum_value(kMixes, j.value("mix_policy", std::string("none")), "mix_policy");
    if (j.contains("pathway_alpha") && !j["pathway_alpha"].is_null()) {
      r.pathway_alpha = j["pathway_alpha"].get<std::int64_t>();
    }
    validate(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad recipe: ") + e.what());
  }
}

std::vector<std::string> recipe_preset_names() {
  return {"i3d_train", "i3d_val", "slowfast_train", "slowfast_val", "x3d_train", "x3d_val"};
}

TransformRecipe recipe_preset(const std::string& name) {
  TransformRecipe r;
  const auto us = name.rfind('_');
  if (us == std::string::npos) throw ConfigError("unknown recipe preset '" + name + "'");
  const auto family = name.substr(0, us);
  const auto mode = name.substr(us + 1);
  if (mode == "train") {
    r.mode = RecipeMode::train;
  } else if (mode == "val") {
    r.mode = RecipeMode::val;
  } else {
    throw ConfigError("unknown recipe preset '" + name + "'");
  }
  if (family == "i3d") {
    r.num_frames = 8;
  } else if (family == "slowfast") {
    r.num_frames = 32;
    r.pathway_alpha = 4;
  } else if (family == "x3d") {
    r.num_frames = 16;
    r.crop_size = 312;
  } else {
    throw ConfigError("unknown recipe preset '" + name + "'");
  }
  if (r.mode == RecipeMode::train) {
    r.aug_policy = AugPolicy::randaug;
    r.mix_policy = MixPolicy::both;
  }
  return r;
}

std::int64_t val_short_side(std::int64_t crop_size) { return crop_size * 8 / 7; }

std::pair<std::int64_t, std::int64_t> train_short_side_range(std::int64_t crop_size) {
  return {crop_size * 8 / 7, crop_size * 10 / 7};
}

VideoTransform::VideoTransform(TransformRecipe recipe) : recipe_(std::move(recipe)) { validate(recipe_); }

std::vector<Tensor> VideoTransform::apply(const Tensor& video, Rng& rng, OpLog* log) const {
  const auto& r = recipe_;
  const auto d = clip_dims(video);
  if (static_cast<std::int64_t>(r.mean.size()) != d.c) {
    throw ConfigError("recipe has " + std::to_string(r.mean.size()) + " channel stats, clip has " + std::to_string(d.c));
  }
  Tensor v = uniform_temporal_subsample(video, r.num_frames);
  if (r.mode == RecipeMode::train) {
    const auto [lo, hi] = train_short_side_range(r.crop_size);
    v = random_short_side_scale(v, std::max(lo, r.crop_size), std::max(hi, r.crop_size), rng);
    v = random_crop(v, r.crop_size, rng);
    v = random_horizontal_flip(v, 0.5, rng);
    if (r.aug_policy == AugPolicy::randaug) v = rand_augment(v, RandAugmentConfig{}, rng, log);
    if (r.aug_policy == AugPolicy::augmix) v = augmix(v, AugMixConfig{}, rng, log);
  } else {
    v = short_side_scale(v, std::max(val_short_side(r.crop_size), r.crop_size));
    v = center_crop(v, r.crop_size);
  }
  v = normalize(v, r.mean, r.std);
  if (r.pathway_alpha) return pack_pathways(v, *r.pathway_alpha);
  return {std::move(v)};
}

data::DecodedSample VideoTransform::operator()(data::DecodedSample sample, Rng& rng) const {
  auto out = apply(sample.video, rng);
  sample.video = out.back();
  sample.pathways = std::move(out);
  return sample;
}

data::SampleTransform VideoTransform::bind(std::uint64_t seed) const {
  auto rng = std::make_shared<Rng>(seed);
  auto self = *this;
  return [self, rng](data::DecodedSample s) { return self(std::move(s), *rng); };
}

VideoTransform create_video_transform(const TransformRecipe& recipe) { return VideoTransform(recipe); }

MixResult mix_batch(const TransformRecipe& recipe, const Tensor& batch, const Tensor& labels, Rng& rng) {
  auto policy = recipe.mix_policy;
  if (policy == MixPolicy::both) policy = std::bernoulli_distribution(0.5)(rng) ? MixPolicy::mixup : MixPolicy::cutmix;
  switch (policy) {
    case MixPolicy::mixup: return mixup(batch, labels, kMixupAlpha, rng);
    case MixPolicy::cutmix: return cutmix(batch, labels, kCutmixAlpha, rng);
    default: break;
  }
  MixResult r;
  r.batch = batch;
  r.labels = labels;
  r.permutation.resize(static_cast<std::size_t>(batch.rank() > 0 ? batch.dim(0) : 0));
  std::iota(r.permutation.begin(), r.permutation.end(), 0);
  return r;
}

}  // namespace videokit::transforms
