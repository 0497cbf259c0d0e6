#include <fstream>

#include "polyeval/prompts.hpp"

namespace polyeval::promptlib {
namespace {

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

const std::vector<TaskKind> kAllKinds{TaskKind::Translation,   TaskKind::Classification, TaskKind::TokenClassification,
                                      TaskKind::Summarization, TaskKind::OpenGeneration, TaskKind::Comprehension,
                                      TaskKind::Intrinsic};

std::string fill(std::string_view text, const Bindings& bindings) {
  std::string out;
  size_t pos = 0;
  for (const auto& tok : scan_placeholders(text)) {
    out.append(text.substr(pos, tok.offset - pos));
    const auto it = bindings.find(tok.name);
    if (it == bindings.end()) throw Error(Errc::MissingBinding, tok.name);
    out += it->second;
    pos = tok.offset + tok.length;
  }
  out.append(text.substr(pos));
  return out;
}

void check_vocabulary(const PromptTemplate& t) {
  const auto& vocab = placeholder_vocabulary(t.task_kind);
  for (const auto& name : placeholders(t)) {
    if (!vocab.count(name)) {
      throw Error(Errc::UnknownPlaceholder,
                  "{" + name + "} in " + std::string(registry::to_string(t.task_kind)) + " template " + t.tag.str());
    }
  }
}

}  // namespace

std::vector<PlaceholderToken> scan_placeholders(std::string_view text) {
  std::vector<PlaceholderToken> out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' || i + 1 >= text.size() || !ident_start(text[i + 1])) continue;
    size_t j = i + 2;
    while (j < text.size() && ident_char(text[j])) ++j;
    if (j < text.size() && text[j] == '}') {
      out.push_back({i, j + 1 - i, std::string(text.substr(i + 1, j - i - 1))});
      i = j;
    }
  }
  return out;
}

std::multiset<std::string> placeholder_multiset(const PromptTemplate& t) {
  std::multiset<std::string> out;
  for (const auto& tok : scan_placeholders(t.instruction)) out.insert(tok.name);
  if (t.fewshot_item) {
    for (const auto& tok : scan_placeholders(*t.fewshot_item)) out.insert(tok.name);
  }
  return out;
}

std::set<std::string> placeholders(const PromptTemplate& t) {
  const auto m = placeholder_multiset(t);
  return {m.begin(), m.end()};
}

const std::set<std::string>& placeholder_vocabulary(TaskKind kind) {
  static const std::map<TaskKind, std::set<std::string>> vocab{
      {TaskKind::Translation, {"src_text", "src_lang", "tgt_lang", "tgt_text", "src_code", "tgt_code"}},
      {TaskKind::Classification, {"text", "labels", "label"}},
      {TaskKind::TokenClassification, {"sentence", "token", "tags", "tag"}},
      {TaskKind::Summarization, {"text", "summary"}},
      {TaskKind::OpenGeneration, {"prompt", "response"}},
      {TaskKind::Comprehension, {"question", "choices", "answer"}},
      {TaskKind::Intrinsic, {"text"}},
  };
  return vocab.at(kind);
}

void validate(const PromptTemplate& t) {
  check_vocabulary(t);
  if (t.task_kind == TaskKind::Translation && !placeholders(t).count("src_text")) {
    throw Error(Errc::SchemaViolation, "translation template " + t.tag.str() + ": instruction lacks {src_text}");
  }
}

std::vector<PromptTemplate> PromptLibrary::parse_file(TaskKind kind, const nlohmann::json& doc,
                                                      const std::string& origin) {
  const auto fail = [&](const std::string& field, const std::string& why) {
    throw Error(Errc::SchemaViolation, origin + ": " + field + ": " + why);
  };
  if (!doc.is_object()) fail("<document>", "expected an object keyed by language tag");
  std::vector<PromptTemplate> out;
  for (const auto& [key, entry] : doc.items()) {
    if (!LanguageTag::is_canonical(key)) fail(key, "not a <iso639-3>_<Script> tag");
    if (!entry.is_object()) fail(key, "expected an object");
    PromptTemplate t;
    t.task_kind = kind;
    t.tag = LanguageTag::parse(key);
    for (const auto& [field, value] : entry.items()) {
      if (field == "instruction" || field == "fewshot_item" || field == "provenance") {
        if (!value.is_string()) fail(key + "." + field, "expected a string");
      } else if (field == "language_names") {
        if (!value.is_object()) fail(key + "." + field, "expected an object");
        for (const auto& [tag, name] : value.items()) {
          if (!LanguageTag::is_canonical(tag) || !name.is_string()) fail(key + "." + field, "bad entry '" + tag + "'");
          t.language_names[tag] = name.get<std::string>();
        }
      } else {
        fail(key + "." + field, "unknown field");
      }
    }
    if (!entry.contains("instruction")) fail(key + ".instruction", "missing");
    t.instruction = entry.at("instruction").get<std::string>();
    if (entry.contains("fewshot_item")) t.fewshot_item = entry.at("fewshot_item").get<std::string>();
    if (entry.contains("provenance")) t.provenance = entry.at("provenance").get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::MissingFile, dir.string() + " is not a directory");
  PromptLibrary lib;
  for (TaskKind kind : kAllKinds) {
    const auto p = dir / (std::string(registry::to_string(kind)) + ".json");
    if (!std::filesystem::exists(p)) continue;
    std::ifstream in(p);
    if (!in) throw Error(Errc::MissingFile, p.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaViolation, p.string() + ": <document>: " + e.what());
    }
    for (auto& t : parse_file(kind, doc, p.string())) lib.add(std::move(t));
  }
  return lib;
}

void PromptLibrary::add(PromptTemplate t) {
  validate(t);
  auto key = std::make_pair(t.task_kind, t.tag);
  entries_.insert_or_assign(std::move(key), std::move(t));
}

const PromptTemplate* PromptLibrary::find(TaskKind kind, const LanguageTag& tag) const {
  const auto it = entries_.find({kind, tag});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<PromptTemplate> PromptLibrary::templates(TaskKind kind) const {
  std::vector<PromptTemplate> out;
  for (const auto& [key, t] : entries_) {
    if (key.first == kind) out.push_back(t);
  }
  return out;
}

nlohmann::json PromptLibrary::to_json(TaskKind kind) const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& t : templates(kind)) {
    nlohmann::json e;
    e["instruction"] = t.instruction;
    if (t.fewshot_item) e["fewshot_item"] = *t.fewshot_item;
    e["provenance"] = t.provenance;
    if (!t.language_names.empty()) e["language_names"] = t.language_names;
    doc[t.tag.str()] = std::move(e);
  }
  return doc;
}

void PromptLibrary::save(const std::filesystem::path& dir, TaskKind kind) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto p = dir / (std::string(registry::to_string(kind)) + ".json");
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::OutputDirNotWritable, p.string());
  out << to_json(kind).dump(2, ' ', false) << "\n";
}

Selection select_template(const PromptLibrary& lib, const PromptStrategy& strategy, TaskKind kind,
                          const LanguageTag& test_tag, const langid::IsoTable& table) {
  const LanguageTag& wanted =
      strategy.mode() == StrategyMode::Single ? *strategy.single_language() : test_tag;
  if (const auto* t = lib.find(kind, wanted)) return {*t, false};
  if (const auto* row = table.find(wanted.language()); row && !row->macro_parent.empty()) {
    if (const auto* t = lib.find(kind, LanguageTag(row->macro_parent, wanted.script()))) return {*t, false};
  }
  if (const auto* en = lib.find(kind, kEnglish)) return {*en, true};
  throw Error(Errc::NoEnglishBaseline, std::string(registry::to_string(kind)) + " has no eng_Latn template");
}

std::string render_prompt(const PromptTemplate& t, const Bindings& bindings, const std::vector<Bindings>& fewshot) {
  check_vocabulary(t);
  std::string out;
  if (!fewshot.empty()) {
    if (!t.fewshot_item) {
      throw Error(Errc::MissingBinding, "fewshot_item (template " + t.tag.str() + " has no few-shot form)");
    }
    for (const auto& b : fewshot) {
      out += fill(*t.fewshot_item, b);
      out += "\n";
    }
  }
  out += fill(t.instruction, bindings);
  return out;
}

std::string language_name(const PromptTemplate& t, const LanguageTag& lang, const langid::IsoTable& table) {
  if (auto it = t.language_names.find(lang.str()); it != t.language_names.end()) return it->second;
  if (const auto* row = table.find(lang.language())) return row->reference_name;
  return lang.str();
}

}  // namespace polyeval::promptlib
