#include "videokit/models/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace videokit::models {

namespace {

constexpr char kMagic[8] = {'V', 'K', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError("truncated checkpoint " + path.string());
  }
  return v;
}

}  // namespace

StateDict state_dict(const Module& m) {
  StateDict out;
  for (const auto& [name, p] : named_parameters(m)) out.emplace(name, p->value);
  return out;
}

void load_state_dict(Module& m, const StateDict& state) {
  auto params = named_parameters_mut(m);
  if (params.size() != state.size()) {
    for (const auto& [name, p] : params) {
      if (!state.count(name)) throw KeyError("checkpoint lacks '" + name + "'");
    }
    for (const auto& [name, t] : state) {
      bool found = false;
      for (const auto& [n, p] : params) found = found || n == name;
      if (!found) throw KeyError("model has no parameter '" + name + "'");
    }
  }
  for (auto& [name, p] : params) {
    auto it = state.find(name);
    if (it == state.end()) throw KeyError("checkpoint lacks '" + name + "'");
    if (it->second.shape() != p->value.shape()) {
      throw ShapeError("'" + name + "' has shape " + shape_to_string(it->second.shape()) +
                       " in the checkpoint but " + shape_to_string(p->value.shape()) +
                       " in the model");
    }
    p->value = it->second;
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void save_checkpoint(const Module& m, const std::filesystem::path& path,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PathError("cannot write checkpoint " + path.string());
  const auto params = named_parameters(m);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, params.size());
  for (const auto& [name, p] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) put<std::int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.numel() * sizeof(float)));
  }
  if (!out) throw PathError("failed writing checkpoint " + path.string());

  nlohmann::json side = {{"factory", meta.factory},
                         {"args", meta.args},
                         {"param_count", meta.param_count}};
  std::ofstream js(sidecar_path(path));
  if (!js) throw PathError("cannot write " + sidecar_path(path).string());
  js << side.dump(2) << "\n";
}

StateDict read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + " is not a videokit checkpoint");
  }
  StateDict out;
  const auto n = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 4096) throw FormatError("implausible name length in " + path.string());
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("truncated checkpoint " + path.string());
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw FormatError("implausible rank in " + path.string());
    Shape shape(rank);
    for (auto& d : shape) d = get<std::int64_t>(in, path);
    Tensor t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(float)))) {
      throw FormatError("truncated checkpoint " + path.string());
    }
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw PathError("missing sidecar " + sidecar_path(path).string());
  nlohmann::json j;
  try {
    in >> j;
    CheckpointMeta meta;
    meta.factory = j.at("factory").get<std::string>();
    meta.args = j.at("args");
    meta.param_count = j.at("param_count").get<std::int64_t>();
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
}

}  // namespace videokit::models
