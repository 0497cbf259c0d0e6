#include <httplib.h>

#include "polyeval/prompts.hpp"

namespace polyeval::promptlib {
namespace {

// Targets per request; keeps request bodies small for long target lists.
constexpr size_t kTargetsPerRequest = 25;

std::string mask(std::string_view text, size_t& next, std::vector<std::string>& names) {
  std::string out;
  size_t pos = 0;
  for (const auto& tok : scan_placeholders(text)) {
    out.append(text.substr(pos, tok.offset - pos));
    out += sentinel(next++);
    names.push_back(tok.name);
    pos = tok.offset + tok.length;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace

std::string sentinel(size_t k) { return "⟦P" + std::to_string(k) + "⟧"; }

Masked mask_placeholders(const PromptTemplate& t) {
  Masked m;
  size_t next = 0;
  m.texts.push_back(mask(t.instruction, next, m.names));
  if (t.fewshot_item) m.texts.push_back(mask(*t.fewshot_item, next, m.names));
  return m;
}

std::string unmask(std::string_view text, const std::vector<std::string>& names) {
  static const std::string_view open = "⟦P", close = "⟧";
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t at = text.find(open, pos);
    if (at == std::string_view::npos) break;
    size_t digits = at + open.size();
    size_t end = digits;
    while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
    if (end == digits || text.substr(end, close.size()) != close) {
      out.append(text.substr(pos, digits - pos));
      pos = digits;
      continue;
    }
    const size_t k = std::stoul(std::string(text.substr(digits, end - digits)));
    out.append(text.substr(pos, at - pos));
    if (k < names.size()) out += "{" + names[k] + "}";
    else out.append(text.substr(at, end + close.size() - at));
    pos = end + close.size();
  }
  out.append(text.substr(pos));
  return out;
}

PropagationResult propagate_template(const PromptTemplate& source, const std::vector<LanguageTag>& targets,
                                     TranslationClient& translator) {
  if (targets.empty()) throw Error(Errc::ConfigError, "propagation needs at least one target");
  const Masked masked = mask_placeholders(source);
  const auto expected = placeholder_multiset(source);

  PropagationResult out;
  for (size_t first = 0; first < targets.size(); first += kTargetsPerRequest) {
    const std::vector<LanguageTag> batch(targets.begin() + first,
                                         targets.begin() + std::min(targets.size(), first + kTargetsPerRequest));
    const auto translated = translator.translate(masked.texts, source.tag, batch);
    for (const auto& target : batch) {
      const auto it = translated.find(target);
      if (it == translated.end()) {
        out.failures.push_back({target, Errc::TargetUnsupported, "translator returned nothing for " + target.str()});
        continue;
      }
      if (it->second.size() != masked.texts.size()) {
        out.failures.push_back({target, Errc::TargetUnsupported,
                                "expected " + std::to_string(masked.texts.size()) + " texts, got " +
                                    std::to_string(it->second.size())});
        continue;
      }
      PromptTemplate t;
      t.task_kind = source.task_kind;
      t.tag = target;
      t.instruction = unmask(it->second[0], masked.names);
      if (source.fewshot_item) t.fewshot_item = unmask(it->second[1], masked.names);
      t.provenance = "machine-translated";
      const auto got = placeholder_multiset(t);
      if (got != expected) {
        out.failures.push_back({target, Errc::PlaceholderLost,
                                "placeholders changed in translation to " + target.str()});
        continue;
      }
      out.templates.push_back(std::move(t));
    }
  }
  return out;
}

std::map<LanguageTag, std::vector<std::string>> IdentityTranslator::translate(const std::vector<std::string>& texts,
                                                                              const LanguageTag&,
                                                                              const std::vector<LanguageTag>& to) {
  std::map<LanguageTag, std::vector<std::string>> out;
  for (const auto& t : to) out.emplace(t, texts);
  return out;
}

HttpTranslationClient::HttpTranslationClient(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {}

std::map<LanguageTag, std::vector<std::string>> HttpTranslationClient::translate(
    const std::vector<std::string>& texts, const LanguageTag& from, const std::vector<LanguageTag>& to) {
  nlohmann::json req;
  req["texts"] = texts;
  req["from"] = from.str();
  req["to"] = nlohmann::json::array();
  for (const auto& t : to) req["to"].push_back(t.str());

  httplib::Client cli(base_url_);
  const auto secs = static_cast<time_t>(timeout_s_);
  const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  const auto res = cli.Post("/translate", req.dump(), "application/json");
  if (!res) throw Error(Errc::TranslatorUnavailable, base_url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(Errc::TranslatorUnavailable, base_url_ + ": HTTP " + std::to_string(res->status));

  std::map<LanguageTag, std::vector<std::string>> out;
  try {
    const auto body = nlohmann::json::parse(res->body);
    for (const auto& entry : body.at("translations")) {
      const auto tag = LanguageTag::parse(entry.at("to").get<std::string>());
      out[tag] = entry.at("texts").get<std::vector<std::string>>();
    }
  } catch (const std::exception& e) {
    throw Error(Errc::TranslatorUnavailable, base_url_ + ": malformed response: " + e.what());
  }
  return out;
}

}  // namespace polyeval::promptlib
