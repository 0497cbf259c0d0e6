#include <algorithm>

#include "polyeval/error.hpp"
#include "polyeval/langid.hpp"

namespace polyeval::langid {

nlohmann::json to_json(const AlignmentRecord& rec) {
  using nlohmann::json;
  const auto& res = rec.resolution;
  json candidates = json::array();
  for (const auto& c : res.candidates) {
    std::string shown = c.language;
    if (rec.resolved) shown += "_" + rec.resolved->script();
    candidates.push_back(json::array({shown, c.confidence}));
  }
  json j;
  j["source_label"] = res.source_label;
  j["resolved"] = rec.resolved ? json(rec.resolved->str()) : json(nullptr);
  j["match_kind"] = to_string(res.match_kind);
  j["scope"] = to_string(res.scope);
  j["confidence"] = res.confidence;
  j["candidates"] = std::move(candidates);
  j["stripped_suffixes"] = res.stripped_suffixes;
  j["advertised_script"] = res.advertised_script ? json(*res.advertised_script) : json(nullptr);
  j["detected_script"] = rec.detected_script ? json(*rec.detected_script) : json(nullptr);
  j["script_confidence"] = rec.script_confidence;
  j["script_source"] = rec.script_source;
  if (!rec.note.empty()) j["note"] = rec.note;
  return j;
}

Alignment align_labels(std::span<const std::string> labels,
                       const std::map<std::string, std::string>& script_overrides,
                       const CorpusSampler& sampler, const IsoTable& table, const AlignOptions& opts) {
  Alignment out;
  for (const auto& label : labels) {
    AlignmentRecord rec;
    try {
      rec.resolution = resolve_language(label, table, opts.resolve);
    } catch (const Error& e) {
      rec.resolution.source_label = label;
      rec.note = e.what();
      out.report.push_back(std::move(rec));
      continue;
    }

    std::string detect_error;
    if (sampler) {
      try {
        const auto lines = sampler(label);
        const auto det = detect_script(lines, opts.sample_size, opts.seed);
        rec.detected_script = det.script;
        rec.script_confidence = det.confidence;
      } catch (const Error& e) {
        detect_error = e.what();
      }
    }

    std::optional<std::string> script;
    if (auto it = script_overrides.find(label); it != script_overrides.end()) {
      script = it->second;
      rec.script_source = "override";
    } else if (rec.detected_script && !(*rec.detected_script == "Hani" && rec.resolution.advertised_script &&
                                        (*rec.resolution.advertised_script == "Hans" ||
                                         *rec.resolution.advertised_script == "Hant"))) {
      script = rec.detected_script;
      rec.script_source = "detected";
    } else if (rec.resolution.advertised_script) {
      script = rec.resolution.advertised_script;
      rec.script_source = "label";
    }

    const auto& advertised = rec.resolution.advertised_script;
    if (advertised && rec.detected_script && *advertised != *rec.detected_script &&
        rec.script_source != "label") {
      rec.note = "label advertises " + *advertised + " but detected " + *rec.detected_script;
    }

    if (rec.resolution.language && script) {
      rec.resolved = LanguageTag(*rec.resolution.language, *script);
      out.lang_dict.emplace(label, *rec.resolved);
    } else if (rec.resolution.language) {
      rec.note = detect_error.empty() ? "no script evidence" : detect_error;
    }
    out.report.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, std::vector<std::string>> match_query(const std::set<std::string>& query,
                                                            std::span<const BenchmarkLanguages> registry,
                                                            const IsoTable& table) {
  struct Want {
    std::string language;
    std::optional<std::string> script;
  };
  std::vector<Want> wants;
  for (const auto& q : query) {
    Want w;
    if (LanguageTag::is_canonical(q)) {
      w.language = q.substr(0, 3);
      w.script = q.substr(4);
    } else if (is_language_code(q)) {
      w.language = q;
    } else {
      throw Error(Errc::UnknownQueryCode, "'" + q + "' is neither an ISO 639-3 code nor a tag");
    }
    const IsoRow* row = table.find(w.language);
    if (!row) throw Error(Errc::UnknownQueryCode, "'" + w.language + "' is not in the ISO 639-3 table");
    wants.push_back(w);
    if (row->scope == Scope::Macrolanguage) {
      for (const auto& member : table.members(row->iso639_3)) wants.push_back({member, w.script});
    }
  }

  std::map<std::string, std::vector<std::string>> out;
  for (const auto& bench : registry) {
    std::vector<std::string> labels;
    for (const auto& [label, tag] : bench.lang_dict) {
      const bool hit = std::any_of(wants.begin(), wants.end(), [&](const Want& w) {
        return w.language == tag.language() && (!w.script || *w.script == tag.script());
      });
      if (hit) labels.push_back(label);
    }
    if (!labels.empty()) out.emplace(bench.benchmark_id, std::move(labels));
  }
  return out;
}

}  // namespace polyeval::langid
