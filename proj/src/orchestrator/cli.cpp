#include <CLI11.hpp>

#include <iostream>
#include <set>

#include "polyeval/error.hpp"
#include "polyeval/orchestrator.hpp"

namespace polyeval::cli {
namespace {

namespace fs = std::filesystem;
using langid::LanguageTag;
using orchestrator::RunConfig;

struct RunFlags {
  std::string config;
  std::string benchmarks, langs, prompt_strategy, prompt_lang, pivot, direction_mode, backend_url, out;
  std::optional<size_t> n_shot, sample_limit, parallelism;
  std::optional<uint64_t> seed;
  bool store_details = false;
};

LanguageTag tag_arg(const std::string& s, const std::string& flag) {
  if (!langid::LanguageTag::is_canonical(s)) throw Error(Errc::ConfigError, flag + ": '" + s + "' is not a tag");
  return langid::LanguageTag::parse(s);
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c = orchestrator::load_config(f.config);
  nlohmann::json overrides = nlohmann::json::object();
  if (!f.benchmarks.empty()) overrides["benchmarks"] = f.benchmarks;
  if (!f.langs.empty()) overrides["langs"] = f.langs;
  if (!f.prompt_strategy.empty()) overrides["prompt_strategy"] = f.prompt_strategy;
  if (!f.direction_mode.empty()) overrides["direction_mode"] = f.direction_mode;
  if (!overrides.empty()) {
    const auto o = orchestrator::parse_config(overrides, {});
    if (overrides.contains("benchmarks")) c.benchmarks = o.benchmarks;
    if (overrides.contains("langs")) c.langs = o.langs;
    if (overrides.contains("prompt_strategy")) c.prompt_strategy = o.prompt_strategy;
    if (overrides.contains("direction_mode")) c.direction_mode = o.direction_mode;
  }
  if (!f.prompt_lang.empty()) c.prompt_lang = tag_arg(f.prompt_lang, "--prompt-lang");
  if (!f.pivot.empty()) c.pivot = tag_arg(f.pivot, "--pivot");
  if (!f.backend_url.empty()) c.backend_url = f.backend_url;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.n_shot) c.n_shot = *f.n_shot;
  if (f.sample_limit) c.sample_limit = *f.sample_limit;
  if (f.parallelism) c.parallelism = std::max<size_t>(1, *f.parallelism);
  if (f.seed) c.seed = *f.seed;
  if (f.store_details) c.store_details = true;
  return c;
}

int do_run(const RunFlags& f) {
  const auto cfg = resolve(f);
  const auto summary = orchestrator::run(cfg);
  orchestrator::emit_reports(summary, cfg);
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  size_t subsets = 0;
  for (const auto& b : summary.benchmarks) {
    subsets += b.subsets.size();
    if (b.error) std::cerr << "benchmark " << b.benchmark_id << " aborted: " << *b.error << "\n";
  }
  std::cout << "evaluated " << summary.benchmarks.size() << " benchmarks, " << subsets << " subsets, "
            << summary.records.size() << " samples; results in " << cfg.output_dir.string() << "\n";
  return summary.ok() ? 0 : 1;
}

fs::path registry_dir(const std::string& config, const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!config.empty()) return orchestrator::load_config(config).registry_dir;
  throw Error(Errc::ConfigError, "give --config or --registry");
}

int do_align(const std::string& config, const std::string& registry_flag, const std::string& id, uint64_t seed) {
  auto reg = registry::load_registry(registry_dir(config, registry_flag));
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& d) { return d.id == id; });
  if (it == reg.end()) throw Error(Errc::UnknownBenchmark, id);
  langid::AlignOptions opts;
  opts.seed = seed;
  const auto alignment = registry::align_benchmark(*it, langid::IsoTable::bundled(), opts);
  nlohmann::json out;
  out["benchmark"] = id;
  out["lang_dict"] = nlohmann::json::object();
  for (const auto& [label, tag] : alignment.lang_dict) out["lang_dict"][label] = tag.str();
  out["report"] = nlohmann::json::array();
  for (const auto& rec : alignment.report) out["report"].push_back(langid::to_json(rec));
  std::cout << out.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
  return 0;
}

struct PropagateFlags {
  std::string config, registry, prompt_dir, task, from, to, translator_url, out;
  bool identity = false;
  bool overwrite = false;
};

int do_propagate(const PropagateFlags& f) {
  std::optional<RunConfig> cfg;
  if (!f.config.empty()) cfg = orchestrator::load_config(f.config);
  const fs::path prompt_dir = !f.prompt_dir.empty() ? fs::path(f.prompt_dir)
                              : cfg                  ? cfg->prompt_dir
                                                     : throw Error(Errc::ConfigError, "give --config or --prompt-dir");
  const auto kind = registry::parse_task_kind(f.task);
  if (!kind) throw Error(Errc::ConfigError, "--task: unknown task kind '" + f.task + "'");
  const auto from = tag_arg(f.from, "--from");

  auto lib = promptlib::PromptLibrary::load(prompt_dir);
  const auto* source = lib.find(*kind, from);
  if (!source) throw Error(Errc::ConfigError, "no " + f.task + " template for " + from.str());

  std::vector<LanguageTag> targets;
  if (f.to == "all") {
    std::set<LanguageTag> all;
    for (const auto& d : registry::load_registry(registry_dir(f.config, f.registry))) {
      auto copy = d;
      registry::align_benchmark(copy);
      for (const auto& [label, tag] : copy.lang_dict) all.insert(tag);
    }
    all.erase(from);
    targets.assign(all.begin(), all.end());
  } else {
    // The config parser's comma splitter.
    for (const auto& t : orchestrator::parse_config({{"langs", f.to}}, {}).langs) targets.push_back(tag_arg(t, "--to"));
  }
  if (!f.overwrite) {
    std::erase_if(targets, [&](const LanguageTag& t) {
      const auto* existing = lib.find(*kind, t);
      if (existing) std::cerr << "keeping existing " << t.str() << " template (--overwrite replaces it)\n";
      return existing != nullptr;
    });
  }
  if (targets.empty()) {
    std::cout << "nothing to propagate\n";
    return 0;
  }

  std::unique_ptr<promptlib::TranslationClient> translator;
  std::string url = f.translator_url;
  if (url.empty() && cfg && cfg->translator_url) url = *cfg->translator_url;
  if (f.identity) {
    translator = std::make_unique<promptlib::IdentityTranslator>();
  } else if (!url.empty()) {
    translator = std::make_unique<promptlib::HttpTranslationClient>(url);
  } else {
    throw Error(Errc::ConfigError, "give --translator-url, translator_url in the config, or --identity");
  }

  const auto result = promptlib::propagate_template(*source, targets, *translator);
  for (const auto& t : result.templates) lib.add(t);
  const fs::path out = f.out.empty() ? prompt_dir : fs::path(f.out);
  lib.save(out, *kind);
  for (const auto& fail : result.failures) {
    std::cerr << fail.target.str() << ": " << errc_name(fail.code) << ": " << fail.detail << "\n";
  }
  std::cout << "propagated " << result.templates.size() << " of " << targets.size() << " templates into "
            << (out / (f.task + ".json")).string() << "\n";
  return result.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual evaluation runner", "polyeval"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Evaluate benchmarks against a model server");
  run->add_option("--config", rf.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--benchmarks", rf.benchmarks, "Comma-separated benchmark ids, or all");
  run->add_option("--langs", rf.langs, "Comma-separated ISO 639-3 codes or tags");
  run->add_option("--prompt-strategy", rf.prompt_strategy, "single or multi")->check(CLI::IsMember({"single", "multi"}));
  run->add_option("--prompt-lang", rf.prompt_lang, "Prompt language for the single strategy");
  run->add_option("--pivot", rf.pivot, "Pivot tag for multi-aligned translation");
  run->add_option("--direction-mode", rf.direction_mode, "any-to-pivot, pivot-to-any or both");
  run->add_option("--n-shot", rf.n_shot, "Demonstrations per prompt");
  run->add_option("--sample-limit", rf.sample_limit, "Samples read per subset");
  run->add_option("--parallelism", rf.parallelism, "Concurrent requests");
  run->add_flag("--store-details", rf.store_details, "Write details.jsonl");
  run->add_option("--backend-url", rf.backend_url, "Model server URL");
  run->add_option("--seed", rf.seed, "Seed for script-detection sampling");
  run->add_option("--out", rf.out, "Output directory");

  std::string align_config, align_registry, align_id;
  uint64_t align_seed = 42;
  auto* align = app.add_subcommand("align", "Print the language alignment report of one benchmark");
  align->add_option("--benchmark", align_id, "Benchmark id")->required();
  align->add_option("--config", align_config, "Run config supplying registry_dir");
  align->add_option("--registry", align_registry, "Benchmark descriptor directory");
  align->add_option("--seed", align_seed, "Seed for script-detection sampling");

  PropagateFlags pf;
  auto* prompts = app.add_subcommand("prompts", "Prompt library tools");
  prompts->require_subcommand(1);
  auto* prop = prompts->add_subcommand("propagate", "Machine-translate a template into other languages");
  prop->add_option("--task", pf.task, "Task kind")->required();
  prop->add_option("--from", pf.from, "Source template tag")->required();
  prop->add_option("--to", pf.to, "Comma-separated target tags, or all")->required();
  prop->add_option("--config", pf.config, "Run config supplying prompt_dir, registry_dir, translator_url");
  prop->add_option("--prompt-dir", pf.prompt_dir, "Prompt library directory");
  prop->add_option("--registry", pf.registry, "Benchmark descriptor directory (for --to all)");
  prop->add_option("--translator-url", pf.translator_url, "Translation service URL");
  prop->add_option("--out", pf.out, "Directory to write the updated library file to");
  prop->add_flag("--identity", pf.identity, "Use the identity translator (offline check)");
  prop->add_flag("--overwrite", pf.overwrite, "Replace existing templates for the targets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return do_run(rf);
    if (*align) return do_align(align_config, align_registry, align_id, align_seed);
    if (*prop) return do_propagate(pf);
  } catch (const Error& e) {
    std::cerr << "polyeval: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace polyeval::cli
