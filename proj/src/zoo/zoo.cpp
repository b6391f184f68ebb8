#include "videokit/zoo/zoo.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "videokit/models/counting.hpp"
#include "videokit/models/detection.hpp"
#include "videokit/models/resnet.hpp"
#include "videokit/models/slowfast.hpp"
#include "videokit/models/x3d.hpp"

#ifndef VIDEOKIT_DEFAULT_MANIFEST
#define VIDEOKIT_DEFAULT_MANIFEST "zoo/manifest.json"
#endif

namespace videokit::zoo {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& pointer, const std::string& what) {
  throw SchemaError(pointer + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& ptr) {
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) schema_fail(ptr + "/" + k, "unknown key");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.contains(key)) schema_fail(ptr + "/" + key, "required field missing");
  return obj.at(key);
}

std::string require_string(const json& obj, const std::string& key, const std::string& ptr) {
  const auto& v = require(obj, key, ptr);
  if (!v.is_string() || v.get<std::string>().empty()) schema_fail(ptr + "/" + key, "expected a non-empty string");
  return v.get<std::string>();
}

Shape parse_shape(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.empty()) schema_fail(ptr, "expected a non-empty list of ints");
  Shape s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1) {
      schema_fail(ptr + "/" + std::to_string(i), "expected a positive integer");
    }
    s.push_back(v[i].get<std::int64_t>());
  }
  return s;
}

ZooManifestEntry parse_entry(const json& e, const std::string& ptr) {
  if (!e.is_object()) schema_fail(ptr, "expected an object");
  reject_unknown_keys(e, {"name", "factory", "args", "input_shape", "expected_params", "expected_flops_g",
                          "report_factors", "reference", "status", "info"},
                      ptr);
  ZooManifestEntry out;
  out.name = require_string(e, "name", ptr);
  out.factory = require_string(e, "factory", ptr);
  out.reference = require_string(e, "reference", ptr);
  const auto status = require_string(e, "status", ptr);
  if (status == "verified") {
    out.status = EntryStatus::verified;
  } else if (status == "unverified") {
    out.status = EntryStatus::unverified;
  } else {
    schema_fail(ptr + "/status", "expected \"verified\" or \"unverified\"");
  }
  if (e.contains("args")) {
    if (!e["args"].is_object()) schema_fail(ptr + "/args", "expected an object");
    out.args = e["args"];
  }
  const auto& shape = require(e, "input_shape", ptr);
  if (!shape.is_array() || shape.empty()) schema_fail(ptr + "/input_shape", "expected a list of shapes");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out.input_shape.push_back(parse_shape(shape[i], ptr + "/input_shape/" + std::to_string(i)));
  }
  if (e.contains("expected_params") && !e["expected_params"].is_null()) {
    const auto& v = e["expected_params"];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) schema_fail(ptr + "/expected_params", "expected a positive count");
    out.expected_params = v.get<std::int64_t>();
  }
  if (e.contains("expected_flops_g") && !e["expected_flops_g"].is_null()) {
    const auto& v = e["expected_flops_g"];
    if (!v.is_number() || !(v.get<double>() > 0.0)) schema_fail(ptr + "/expected_flops_g", "expected a positive number");
    out.expected_flops_g = v.get<double>();
  }
  if (out.status == EntryStatus::verified) {
    if (!out.expected_params) schema_fail(ptr + "/expected_params", "required for verified entries");
    if (!e.contains("expected_flops_g")) {
      schema_fail(ptr + "/expected_flops_g", "required for verified entries (null when not reported)");
    }
  }
  if ((out.expected_params || out.expected_flops_g) && out.reference.find("Table ") == std::string::npos) {
    schema_fail(ptr + "/reference", "expected values must cite their table");
  }
  if (e.contains("report_factors")) {
    const auto& rf = e["report_factors"];
    if (!rf.is_array() || rf.size() != 2 || !rf[0].is_number_integer() || !rf[1].is_number_integer() ||
        rf[0].get<int>() < 1 || rf[1].get<int>() < 1) {
      schema_fail(ptr + "/report_factors", "expected [spatial_crops >= 1, temporal_clips >= 1]");
    }
    out.report_factors = {rf[0].get<int>(), rf[1].get<int>()};
  }
  if (e.contains("info")) {
    if (!e["info"].is_object()) schema_fail(ptr + "/info", "expected an object");
    out.info = e["info"];
  }
  return out;
}

// Typed access to factory args with FactoryError on misuse.
class Args {
 public:
  Args(const json& args, std::string factory, std::set<std::string> allowed) : args_(args), factory_(std::move(factory)) {
    if (!args.is_object()) throw FactoryError(factory_ + ": args must be an object");
    for (const auto& [k, v] : args.items()) {
      if (!allowed.count(k)) throw FactoryError(factory_ + ": unknown argument '" + k + "'");
    }
  }
  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!args_.contains(key)) return fallback;
    try {
      return args_.at(key).get<T>();
    } catch (const json::exception&) {
      throw FactoryError(factory_ + ": argument '" + key + "' has the wrong type");
    }
  }

 private:
  const json& args_;
  std::string factory_;
};

template <typename Fn>
models::ModulePtr guarded(const std::string& factory, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw FactoryError(factory + ": " + e.what());
  }
}

}  // namespace

std::vector<ZooManifestEntry> parse_manifest(const json& doc) {
  if (!doc.is_object()) schema_fail("", "manifest must be an object");
  reject_unknown_keys(doc, {"version", "models", "informational"}, "");
  const auto& ver = require(doc, "version", "");
  if (!ver.is_number_integer() || ver.get<int>() != 1) schema_fail("/version", "unsupported manifest version");
  const auto& models = require(doc, "models", "");
  if (!models.is_array()) schema_fail("/models", "expected a list");
  std::vector<ZooManifestEntry> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto ptr = "/models/" + std::to_string(i);
    auto e = parse_entry(models[i], ptr);
    if (!names.insert(e.name).second) schema_fail(ptr + "/name", "duplicate model name '" + e.name + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ZooManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open manifest " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return parse_manifest(doc);
}

std::filesystem::path default_manifest_path() {
  if (const char* env = std::getenv("VIDEOKIT_MANIFEST"); env && *env) return env;
  return VIDEOKIT_DEFAULT_MANIFEST;
}

const ZooManifestEntry* find_entry(const std::vector<ZooManifestEntry>& entries, const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void FactoryRegistry::add(const std::string& id, ModelFactory factory, bool override_existing) {
  if (!factory) throw FactoryError("null factory for '" + id + "'");
  if (!override_existing && factories_.count(id)) throw FactoryError("factory '" + id + "' already registered");
  factories_[id] = std::move(factory);
}

bool FactoryRegistry::contains(const std::string& id) const { return factories_.count(id) > 0; }

std::vector<std::string> FactoryRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : factories_) out.push_back(k);
  return out;
}

models::ModulePtr FactoryRegistry::build(const std::string& id, const json& args, const FactoryOptions& opts) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) throw FactoryError("unknown factory '" + id + "'");
  return it->second(args, opts);
}

FactoryRegistry default_registry() {
  FactoryRegistry r;
  r.add("resnet", [](const json& args, const FactoryOptions& o) {
    return guarded("resnet", [&] {
      Args a(args, "resnet", {"variant", "depth", "num_classes"});
      auto cfg = models::resnet_config(models::parse_resnet_variant(a.get<std::string>("variant", "slow")),
                                       a.get<int>("depth", 50), a.get<std::int64_t>("num_classes", 400));
      cfg.initialize_weights = o.initialize_weights;
      cfg.init.seed = o.seed;
      return models::create_resnet(cfg);
    });
  });
  r.add("slowfast", [](const json& args, const FactoryOptions& o) {
    return guarded("slowfast", [&] {
      Args a(args, "slowfast", {"depth", "num_classes"});
      auto cfg = models::slowfast_config(a.get<int>("depth", 50), a.get<std::int64_t>("num_classes", 400));
      cfg.initialize_weights = o.initialize_weights;
      cfg.init.seed = o.seed;
      return models::create_slowfast(cfg);
    });
  });
  r.add("x3d", [](const json& args, const FactoryOptions& o) {
    return guarded("x3d", [&] {
      Args a(args, "x3d", {"variant", "num_classes"});
      auto cfg = models::x3d_config(models::parse_x3d_variant(a.get<std::string>("variant", "xs")),
                                    a.get<std::int64_t>("num_classes", 400));
      cfg.initialize_weights = o.initialize_weights;
      cfg.init.seed = o.seed;
      return models::create_x3d(cfg);
    });
  });
  r.add("acoustic_resnet", [](const json& args, const FactoryOptions& o) {
    return guarded("acoustic_resnet", [&] {
      Args a(args, "acoustic_resnet", {"depth", "num_classes"});
      models::AcousticConfig cfg;
      cfg.depth = a.get<int>("depth", 50);
      cfg.model_num_class = a.get<std::int64_t>("num_classes", 400);
      cfg.initialize_weights = o.initialize_weights;
      cfg.init.seed = o.seed;
      return models::create_acoustic_resnet(cfg);
    });
  });
  r.add("slow_r50_detection", [](const json& args, const FactoryOptions& o) {
    return guarded("slow_r50_detection", [&] {
      Args a(args, "slow_r50_detection", {"num_classes"});
      return models::create_slow_r50_detection(a.get<std::int64_t>("num_classes", 80), o.initialize_weights);
    });
  });
  r.add("slowfast_r50_detection", [](const json& args, const FactoryOptions& o) {
    return guarded("slowfast_r50_detection", [&] {
      Args a(args, "slowfast_r50_detection", {"num_classes"});
      return models::create_slowfast_r50_detection(a.get<std::int64_t>("num_classes", 80), o.initialize_weights);
    });
  });
  return r;
}

VerificationResult verify_entry(const ZooManifestEntry& entry, const FactoryRegistry& registry) {
  FactoryOptions opts;
  opts.initialize_weights = false;
  const auto model = registry.build(entry.factory, entry.args, opts);
  VerificationResult r;
  r.name = entry.name;
  r.measured_params = models::count_params(*model);
  r.tally = models::count_flops(*model, entry.input_shape);
  r.measured_flops_g = static_cast<double>(r.tally.total()) / 1e9;
  if (entry.expected_params) {
    r.param_rel_error = static_cast<double>(r.measured_params - *entry.expected_params) /
                        static_cast<double>(*entry.expected_params);
    r.param_ok = std::abs(r.param_rel_error) <= kParamTolerance;
  }
  if (entry.expected_flops_g) {
    r.flops_rel_error = (r.measured_flops_g - *entry.expected_flops_g) / *entry.expected_flops_g;
    r.flops_ok = std::abs(*r.flops_rel_error) <= kFlopTolerance;
  }
  return r;
}

}  // namespace videokit::zoo
