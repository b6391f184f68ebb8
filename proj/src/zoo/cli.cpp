#include "videokit/zoo/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>

#include "videokit/accelerator/benchmark.hpp"
#include "videokit/accelerator/deploy.hpp"
#include "videokit/models/checkpoint.hpp"
#include "videokit/models/counting.hpp"

namespace videokit::zoo {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string with_commas(std::int64_t v) {
  auto s = std::to_string(v < 0 ? -v : v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return v < 0 ? "-" + s : s;
}

std::string percent(double rel) { return fmt("%+.2f%%", 100.0 * rel); }

std::string views(const ZooManifestEntry& e) {
  return "×" + std::to_string(e.report_factors.first) + "×" + std::to_string(e.report_factors.second);
}

json shapes_json(const std::vector<Shape>& s) { return s; }

// Signals an error already reported to the user.
struct CliExit {
  int code;
};

const ZooManifestEntry& lookup(const std::vector<ZooManifestEntry>& entries, const std::string& name,
                               std::ostream& err) {
  const auto* e = find_entry(entries, name);
  if (!e) {
    err << "unknown model '" << name << "'\n";
    throw CliExit{kExitUsage};
  }
  return *e;
}

json result_json(const ZooManifestEntry& e, const VerificationResult& r) {
  json j{{"name", e.name},
         {"status", "verified"},
         {"measured_params", r.measured_params},
         {"expected_params", e.expected_params ? json(*e.expected_params) : json(nullptr)},
         {"param_rel_error", r.param_rel_error},
         {"param_ok", r.param_ok},
         {"measured_flops_g", r.measured_flops_g},
         {"expected_flops_g", e.expected_flops_g ? json(*e.expected_flops_g) : json(nullptr)},
         {"flops_rel_error", r.flops_rel_error ? json(*r.flops_rel_error) : json(nullptr)},
         {"flops_ok", r.flops_ok ? json(*r.flops_ok) : json(nullptr)},
         {"report_factors", {e.report_factors.first, e.report_factors.second}},
         {"input_shape", shapes_json(e.input_shape)},
         {"reference", e.reference},
         {"ok", r.ok()}};
  return j;
}

int cmd_verify(const std::vector<ZooManifestEntry>& entries, const std::string& model, bool all, bool as_json,
               const FactoryRegistry& registry, std::ostream& out, std::ostream& err) {
  std::vector<const ZooManifestEntry*> todo;
  if (all) {
    for (const auto& e : entries) todo.push_back(&e);
  } else {
    todo.push_back(&lookup(entries, model, err));
  }
  bool ok = true;
  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(24) << "model" << std::right << std::setw(13) << "params" << std::setw(13)
        << "expected" << std::setw(9) << "err" << std::setw(11) << "GFLOPs" << std::setw(10) << "expected"
        << std::setw(9) << "err" << "  result\n";
  for (const auto* e : todo) {
    if (e->status == EntryStatus::unverified) {
      if (!all) {
        err << "model '" << e->name << "' is unverified and has no registered factory to check\n";
        throw CliExit{kExitUsage};
      }
      rows.push_back({{"name", e->name}, {"status", "unverified"}, {"ok", nullptr}});
      table << std::left << std::setw(24) << e->name << std::right << std::setw(13) << "-" << std::setw(13)
            << (e->expected_params ? with_commas(*e->expected_params) : "-") << std::setw(9) << "-" << std::setw(11)
            << "-" << std::setw(10) << (e->expected_flops_g ? fmt("%.1f", *e->expected_flops_g) : "-")
            << std::setw(9) << "-" << "  SKIP (unverified)\n";
      continue;
    }
    const auto r = verify_entry(*e, registry);
    ok = ok && r.ok();
    rows.push_back(result_json(*e, r));
    table << std::left << std::setw(24) << e->name << std::right << std::setw(13) << with_commas(r.measured_params)
          << std::setw(13) << with_commas(*e->expected_params) << std::setw(9) << percent(r.param_rel_error)
          << std::setw(11) << fmt("%.3f", r.measured_flops_g) << std::setw(10)
          << (e->expected_flops_g ? fmt("%.4g", *e->expected_flops_g) : "-") << std::setw(9)
          << (r.flops_rel_error ? percent(*r.flops_rel_error) : "-") << "  " << (r.ok() ? "PASS" : "FAIL");
    if (!r.param_ok) table << " params";
    if (r.flops_ok && !*r.flops_ok) table << " flops";
    table << "\n";
  }
  if (as_json) {
    out << json{{"results", rows}, {"ok", ok}}.dump(2) << "\n";
  } else {
    out << table.str();
    out << (ok ? "all checked entries pass" : "verification FAILED")
        << " (params within " << fmt("%.1f", 100 * kParamTolerance) << "%, FLOPs within "
        << fmt("%.0f", 100 * kFlopTolerance) << "%)\n";
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

models::ModulePtr build_for(const ZooManifestEntry& e, const FactoryRegistry& registry, bool init,
                            std::uint64_t seed, std::ostream& err) {
  if (!registry.contains(e.factory)) {
    err << "model '" << e.name << "' uses unregistered factory '" << e.factory << "'\n";
    throw CliExit{kExitUsage};
  }
  return registry.build(e.factory, e.args, FactoryOptions{init, seed});
}

int cmd_flops(const ZooManifestEntry& e, bool as_json, const FactoryRegistry& registry, std::ostream& out,
              std::ostream& err) {
  const auto m = build_for(e, registry, false, 0, err);
  const auto t = models::count_flops(*m, e.input_shape);
  const double g = static_cast<double>(t.total()) / 1e9;
  if (as_json) {
    out << json{{"name", e.name},
                {"input_shape", shapes_json(e.input_shape)},
                {"flops_g", g},
                {"conv_macs", t.conv_macs},
                {"linear_macs", t.linear_macs},
                {"norm_elements", t.norm_elements},
                {"report_factors", {e.report_factors.first, e.report_factors.second}},
                {"expected_flops_g", e.expected_flops_g ? json(*e.expected_flops_g) : json(nullptr)}}
               .dump(2)
        << "\n";
    return kExitOk;
  }
  out << e.name << ": " << fmt("%.3f", g) << " GFLOPs per clip at " << shapes_json(e.input_shape).dump() << "\n";
  out << "  conv " << fmt("%.3f", static_cast<double>(t.conv_macs) / 1e9) << " + linear "
      << fmt("%.3f", static_cast<double>(t.linear_macs) / 1e9) << " + norm 4x"
      << fmt("%.3f", static_cast<double>(t.norm_elements) / 1e9) << "\n";
  out << "  reported as " << fmt("%.1f", g) << " " << views(e);
  if (e.expected_flops_g) out << " (expected " << fmt("%.4g", *e.expected_flops_g) << " " << views(e) << ")";
  out << "\n";
  return kExitOk;
}

int cmd_params(const ZooManifestEntry& e, bool as_json, const FactoryRegistry& registry, std::ostream& out,
               std::ostream& err) {
  const auto m = build_for(e, registry, false, 0, err);
  const auto n = models::count_params(*m);
  if (as_json) {
    out << json{{"name", e.name},
                {"params", n},
                {"expected_params", e.expected_params ? json(*e.expected_params) : json(nullptr)}}
               .dump(2)
        << "\n";
    return kExitOk;
  }
  out << e.name << ": " << with_commas(n) << " params (" << fmt("%.2f", static_cast<double>(n) / 1e6) << " M)";
  if (e.expected_params) {
    const double rel = static_cast<double>(n - *e.expected_params) / static_cast<double>(*e.expected_params);
    out << ", expected " << fmt("%.2f", static_cast<double>(*e.expected_params) / 1e6) << " M (" << percent(rel) << ")";
  }
  out << "\n";
  return kExitOk;
}

int cmd_bench(const ZooManifestEntry& e, int iters, int warmup, std::uint64_t seed, const FactoryRegistry& registry,
              std::ostream& out, std::ostream& err) {
  if (iters < 1) {
    err << "--iters must be >= 1\n";
    return kExitUsage;
  }
  const auto m = build_for(e, registry, true, seed, err);
  const auto inputs = example_inputs(e.input_shape, seed);
  const auto conv = accelerator::convert_to_deployable_form(m, inputs);
  auto report = accelerator::benchmark_latency(*conv.model, inputs, iters, warmup, m.get(), e.name);
  report.rule_log = conv.rule_log;
  out << accelerator::to_json(report).dump(2) << "\n";
  return kExitOk;
}

int cmd_convert(const ZooManifestEntry& e, const std::string& path, std::uint64_t seed, bool as_json,
                const FactoryRegistry& registry, std::ostream& out, std::ostream& err) {
  const auto m = build_for(e, registry, true, seed, err);
  const auto conv = accelerator::convert_to_deployable_form(m, example_inputs(e.input_shape, seed));
  models::CheckpointMeta meta;
  meta.factory = e.factory;
  meta.args = e.args;
  meta.param_count = models::count_params(*conv.model);
  models::save_checkpoint(*conv.model, path, meta);
  if (as_json) {
    out << json{{"name", e.name},
                {"out", path},
                {"rule_log", conv.rule_log},
                {"max_abs_error", conv.max_abs_error},
                {"params_before", models::count_params(*m)},
                {"params_after", meta.param_count}}
               .dump(2)
        << "\n";
  } else {
    out << e.name << ": applied " << conv.rule_log.size() << " rewrites, max |converted - original| = "
        << fmt("%.3g", conv.max_abs_error) << ", params " << with_commas(models::count_params(*m)) << " -> "
        << with_commas(meta.param_count) << "\n";
    out << "saved " << path << " and " << models::sidecar_path(path).string() << "\n";
  }
  return kExitOk;
}

}  // namespace

std::vector<Tensor> example_inputs(const std::vector<Shape>& shapes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<Tensor> out;
  for (const auto& s : shapes) {
    Tensor t(s);
    if (s.size() == 2 && s[1] == 5 && !out.empty() && out.front().rank() == 5) {
      const auto H = static_cast<float>(out.front().dim(-2));
      const auto W = static_cast<float>(out.front().dim(-1));
      std::uniform_real_distribution<float> fx(0.0f, W - 1.0f);
      std::uniform_real_distribution<float> fy(0.0f, H - 1.0f);
      for (std::int64_t k = 0; k < s[0]; ++k) {
        const float x0 = fx(rng), x1 = fx(rng), y0 = fy(rng), y1 = fy(rng);
        float* b = t.data() + k * 5;
        b[0] = 0.0f;
        b[1] = std::min(x0, x1);
        b[2] = std::min(y0, y1);
        b[3] = std::max(x0, x1) + 1.0f;
        b[4] = std::max(y0, y1) + 1.0f;
      }
    } else {
      for (auto& v : t.values()) v = u(rng);
    }
    out.push_back(std::move(t));
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const FactoryRegistry& registry) {
  CLI::App app{"Model zoo verification and benchmarking", "videokit-zoo"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  bool as_json = false;
  std::string manifest_path;
  app.add_flag("--json", as_json, "machine-readable output");
  app.add_option("--manifest", manifest_path, "manifest path (default: $VIDEOKIT_MANIFEST or the bundled one)");

  std::string model;
  bool all = false;
  int iters = 10;
  int warmup = 2;
  std::uint64_t seed = 0;
  std::string out_path;

  auto* verify = app.add_subcommand("verify", "check params and FLOPs against the manifest");
  auto* v_model = verify->add_option("--model", model, "entry name");
  auto* v_all = verify->add_flag("--all", all, "every entry");
  v_model->excludes(v_all);
  verify->add_flag("--json", as_json);

  auto* flops = app.add_subcommand("flops", "per-clip GFLOPs of an entry");
  flops->add_option("--model", model)->required();
  flops->add_flag("--json", as_json);

  auto* params = app.add_subcommand("params", "learnable parameter count of an entry");
  params->add_option("--model", model)->required();
  params->add_flag("--json", as_json);

  auto* bench = app.add_subcommand("bench", "single-threaded latency, converted vs original");
  bench->add_option("--model", model)->required();
  bench->add_option("--iters", iters, "timed iterations");
  bench->add_option("--warmup", warmup, "untimed iterations");
  bench->add_option("--seed", seed, "weights and input seed");
  bench->add_flag("--json", as_json);

  auto* convert = app.add_subcommand("convert", "run the deployment pass and save a checkpoint");
  convert->add_option("--model", model)->required();
  convert->add_option("--out", out_path)->required();
  convert->add_option("--seed", seed, "weights and input seed");
  convert->add_flag("--json", as_json);

  std::vector<std::string> argv_store{"videokit-zoo"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const auto entries = load_manifest(manifest_path.empty() ? default_manifest_path() : std::filesystem::path(manifest_path));
    if (verify->parsed() && model.empty() && !all) {
      err << "verify: one of --model or --all is required\n";
      return kExitUsage;
    }
    if (verify->parsed()) return cmd_verify(entries, model, all, as_json, registry, out, err);
    const auto& e = lookup(entries, model, err);
    if (flops->parsed()) return cmd_flops(e, as_json, registry, out, err);
    if (params->parsed()) return cmd_params(e, as_json, registry, out, err);
    if (bench->parsed()) return cmd_bench(e, iters, warmup, seed, registry, out, err);
    if (convert->parsed()) return cmd_convert(e, out_path, seed, as_json, registry, out, err);
  } catch (const CliExit& x) {
    return x.code;
  } catch (const EquivalenceError& x) {
    err << "equivalence check failed: " << x.what() << "\n";
    return kExitVerifyFailed;
  } catch (const Error& x) {
    err << "error: " << x.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace videokit::zoo
