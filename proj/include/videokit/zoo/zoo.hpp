#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "videokit/models/module.hpp"

namespace videokit::zoo {

enum class EntryStatus { verified, unverified };

struct ZooManifestEntry {
  std::string name;
  std::string factory;
  nlohmann::json args = nlohmann::json::object();
  std::vector<Shape> input_shape;  // one shape per network input
  std::optional<std::int64_t> expected_params;
  std::optional<double> expected_flops_g;  // per clip
  std::pair<int, int> report_factors{1, 1};  // (spatial crops, temporal clips)
  std::string reference;
  EntryStatus status = EntryStatus::unverified;
  nlohmann::json info = nlohmann::json::object();  // reported metrics, never checked
};

// Entries of a manifest document. Verified entries must carry
// expected_params and an expected_flops_g key (null when the source table
// reports no FLOPs); every expected value needs a reference citing its
// table. Throws SchemaError whose message starts with the JSON pointer of
// the offending field, e.g. "/models/3/expected_params: ...".
std::vector<ZooManifestEntry> parse_manifest(const nlohmann::json& doc);
// PathError when missing, FormatError on invalid JSON, SchemaError as above.
std::vector<ZooManifestEntry> load_manifest(const std::filesystem::path& path);

// $VIDEOKIT_MANIFEST when set, else the manifest bundled with the source tree.
std::filesystem::path default_manifest_path();

const ZooManifestEntry* find_entry(const std::vector<ZooManifestEntry>& entries, const std::string& name);

struct FactoryOptions {
  bool initialize_weights = true;
  std::uint64_t seed = 0;
};

using ModelFactory = std::function<models::ModulePtr(const nlohmann::json& args, const FactoryOptions& opts)>;

// Factory id -> builder. Builders reject unknown or ill-typed args with
// FactoryError.
class FactoryRegistry {
 public:
  // Throws FactoryError when `id` exists and `override_existing` is false.
  void add(const std::string& id, ModelFactory factory, bool override_existing = false);
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
  // FactoryError when `id` is not registered.
  models::ModulePtr build(const std::string& id, const nlohmann::json& args, const FactoryOptions& opts = {}) const;

 private:
  std::map<std::string, ModelFactory> factories_;
};

// resnet {variant, depth, num_classes}, slowfast {depth, num_classes},
// x3d {variant, num_classes}, acoustic_resnet {depth, num_classes},
// slow_r50_detection {num_classes}, slowfast_r50_detection {num_classes}.
FactoryRegistry default_registry();

inline constexpr double kParamTolerance = 0.005;
inline constexpr double kFlopTolerance = 0.02;

struct VerificationResult {
  std::string name;
  std::int64_t measured_params = 0;
  double measured_flops_g = 0.0;
  models::FlopTally tally;
  bool param_ok = false;
  std::optional<bool> flops_ok;  // empty when no FLOPs are expected
  double param_rel_error = 0.0;
  std::optional<double> flops_rel_error;
  bool ok() const { return param_ok && flops_ok.value_or(true); }
};

// Builds the model without weight initialization and counts learnable
// params and FLOPs at the entry's input shape. FactoryError, TraceError.
VerificationResult verify_entry(const ZooManifestEntry& entry, const FactoryRegistry& registry = default_registry());

}  // namespace videokit::zoo
