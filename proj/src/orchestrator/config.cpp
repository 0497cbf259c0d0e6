#include <fstream>

#include "polyeval/error.hpp"
#include "polyeval/orchestrator.hpp"

namespace polyeval::orchestrator {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(Errc::ConfigError, field + ": " + why);
}

std::vector<std::string> string_list(const json& v, const std::string& field) {
  std::vector<std::string> out;
  if (v.is_string()) {
    // Comma-separated, as on the command line.
    std::string item;
    for (char c : v.get<std::string>() + ",") {
      if (c == ',') {
        if (!item.empty()) out.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
    return out;
  }
  if (!v.is_array()) bad(field, "expected a list or a comma-separated string");
  for (const auto& e : v) {
    if (!e.is_string()) bad(field, "expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

LanguageTag tag_field(const json& v, const std::string& field) {
  if (!v.is_string() || !LanguageTag::is_canonical(v.get<std::string>())) bad(field, "expected a <iso639-3>_<Script> tag");
  return LanguageTag::parse(v.get<std::string>());
}

size_t count_field(const json& v, const std::string& field, size_t min) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
    bad(field, "expected an integer >= " + std::to_string(min));
  }
  return v.get<size_t>();
}

double seconds_field(const json& v, const std::string& field) {
  if (!v.is_number() || v.get<double>() < 0.0) bad(field, "expected a non-negative number");
  return v.get<double>();
}

std::string string_field(const json& v, const std::string& field) {
  if (!v.is_string()) bad(field, "expected a string");
  return v.get<std::string>();
}

fs::path path_field(const json& v, const std::string& field, const fs::path& base) {
  fs::path p = string_field(v, field);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

promptlib::PromptStrategy RunConfig::strategy() const {
  if (prompt_strategy == promptlib::StrategyMode::Multi) return promptlib::PromptStrategy::multi();
  if (!prompt_lang) throw Error(Errc::ConfigError, "prompt_strategy single needs prompt_lang");
  return promptlib::PromptStrategy::single(*prompt_lang);
}

RunConfig parse_config(const json& doc, const fs::path& base) {
  if (!doc.is_object()) bad("<document>", "expected an object");
  RunConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "registry_dir") {
      c.registry_dir = path_field(v, key, base);
    } else if (key == "prompt_dir") {
      c.prompt_dir = path_field(v, key, base);
    } else if (key == "benchmarks") {
      c.benchmarks = string_list(v, key);
    } else if (key == "langs") {
      c.langs = string_list(v, key);
    } else if (key == "prompt_strategy") {
      const auto s = string_field(v, key);
      if (s == "single") c.prompt_strategy = promptlib::StrategyMode::Single;
      else if (s == "multi") c.prompt_strategy = promptlib::StrategyMode::Multi;
      else bad(key, "expected single or multi");
    } else if (key == "prompt_lang") {
      if (!v.is_null()) c.prompt_lang = tag_field(v, key);
    } else if (key == "pivot") {
      if (!v.is_null()) c.pivot = tag_field(v, key);
    } else if (key == "direction_mode") {
      const auto m = registry::parse_direction_mode(string_field(v, key));
      if (!m) bad(key, "expected any-to-pivot, pivot-to-any or both");
      c.direction_mode = *m;
    } else if (key == "n_shot") {
      c.n_shot = count_field(v, key, 0);
    } else if (key == "sample_limit") {
      if (!v.is_null()) c.sample_limit = count_field(v, key, 1);
    } else if (key == "parallelism") {
      c.parallelism = count_field(v, key, 1);
    } else if (key == "store_details") {
      if (!v.is_boolean()) bad(key, "expected true or false");
      c.store_details = v.get<bool>();
    } else if (key == "backend_url") {
      c.backend_url = string_field(v, key);
    } else if (key == "translator_url") {
      if (!v.is_null()) c.translator_url = string_field(v, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) bad(key, "expected a non-negative integer");
      c.seed = v.get<uint64_t>();
    } else if (key == "output_dir") {
      c.output_dir = path_field(v, key, base);
    } else if (key == "timing") {
      if (!v.is_object()) bad(key, "expected an object");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "mode") {
          const auto m = string_field(tv, "timing.mode");
          if (m == "wall") c.timing.mode = Timing::Mode::Wall;
          else if (m == "modeled") c.timing.mode = Timing::Mode::Modeled;
          else bad("timing.mode", "expected wall or modeled");
        } else if (tk == "per_request_s") {
          c.timing.per_request_s = seconds_field(tv, "timing.per_request_s");
        } else if (tk == "per_token_s") {
          c.timing.per_token_s = seconds_field(tv, "timing.per_token_s");
        } else {
          bad("timing." + tk, "unknown key");
        }
      }
    } else if (key == "window") {
      c.window = count_field(v, key, 1);
    } else if (key == "stride") {
      c.stride = count_field(v, key, 1);
    } else if (key == "tokenizer") {
      c.tokenizer = string_field(v, key);
    } else if (key == "tokenizer_model") {
      c.tokenizer_model = path_field(v, key, base);
    } else if (key == "timeout_s") {
      c.timeout_s = seconds_field(v, key);
    } else if (key == "retries") {
      c.retries = static_cast<int>(count_field(v, key, 0));
    } else {
      bad(key, "unknown key");
    }
  }
  if (c.stride > c.window) bad("stride", "must not exceed window");
  return c;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::ConfigError, file.string() + ": cannot read");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, file.string() + ": " + e.what());
  }
  return parse_config(doc, file.parent_path());
}

json config_echo(const RunConfig& c) {
  json j;
  j["benchmarks"] = c.benchmarks;
  j["langs"] = c.langs;
  j["prompt_strategy"] = c.prompt_strategy == promptlib::StrategyMode::Single ? "single" : "multi";
  j["prompt_lang"] = c.prompt_lang ? json(c.prompt_lang->str()) : json(nullptr);
  j["pivot"] = c.pivot ? json(c.pivot->str()) : json(nullptr);
  j["direction_mode"] = registry::to_string(c.direction_mode);
  j["n_shot"] = c.n_shot;
  j["sample_limit"] = c.sample_limit ? json(*c.sample_limit) : json(nullptr);
  j["store_details"] = c.store_details;
  j["seed"] = c.seed;
  j["window"] = c.window;
  j["stride"] = c.stride;
  j["tokenizer"] = c.tokenizer;
  if (!c.tokenizer_model.empty()) j["tokenizer_model"] = c.tokenizer_model.filename().string();
  j["timing"] = {{"mode", c.timing.mode == Timing::Mode::Modeled ? "modeled" : "wall"}};
  if (c.timing.mode == Timing::Mode::Modeled) {
    j["timing"]["per_request_s"] = c.timing.per_request_s;
    j["timing"]["per_token_s"] = c.timing.per_token_s;
  }
  return j;
}

}  // namespace polyeval::orchestrator
