#include <algorithm>
#include <fstream>
#include <set>

#include "polyeval/error.hpp"
#include "polyeval/registry.hpp"
#include "polyeval/text.hpp"

namespace polyeval::registry {
namespace {

template <class E, size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<TaskKind, 7> kTaskKinds{{{TaskKind::Translation, "translation"},
                                         {TaskKind::Classification, "classification"},
                                         {TaskKind::TokenClassification, "token_classification"},
                                         {TaskKind::Summarization, "summarization"},
                                         {TaskKind::OpenGeneration, "open_generation"},
                                         {TaskKind::Comprehension, "comprehension"},
                                         {TaskKind::Intrinsic, "intrinsic"}}};
constexpr Names<AlignmentMode, 3> kAlignmentModes{{{AlignmentMode::MultiAligned, "multi_aligned"},
                                                   {AlignmentMode::Pairwise, "pairwise"},
                                                   {AlignmentMode::Monolingual, "monolingual"}}};
constexpr Names<DataFormat, 3> kDataFormats{{{DataFormat::ParallelPerLanguageFiles, "parallel_per_language_files"},
                                             {DataFormat::JsonlRecords, "jsonl_records"},
                                             {DataFormat::TokenTag2Col, "token_tag_2col"}}};
constexpr Names<DirectionMode, 3> kDirectionModes{{{DirectionMode::AnyToPivot, "any-to-pivot"},
                                                   {DirectionMode::PivotToAny, "pivot-to-any"},
                                                   {DirectionMode::Both, "both"}}};

template <class E, size_t N>
std::string_view name_of(const Names<E, N>& names, E v) {
  for (const auto& [e, n] : names) {
    if (e == v) return n;
  }
  return "";
}

template <class E, size_t N>
std::optional<E> value_of(const Names<E, N>& names, std::string_view s) {
  for (const auto& [e, n] : names) {
    if (n == s) return e;
  }
  return std::nullopt;
}

// Metrics that make sense for each task kind.
const std::map<TaskKind, std::set<std::string, std::less<>>>& allowed_metrics() {
  static const std::map<TaskKind, std::set<std::string, std::less<>>> m{
      {TaskKind::Translation, {"bleu", "chrf", "chrf++", "chrf_gender", "comet"}},
      {TaskKind::Classification, {"accuracy", "macro_f1"}},
      {TaskKind::TokenClassification, {"span_f1", "token_accuracy"}},
      {TaskKind::Summarization, {"rouge1", "rouge2", "rougeL", "bleu", "chrf", "chrf++", "comet"}},
      {TaskKind::OpenGeneration, {"self_bleu", "bleu", "chrf", "chrf++"}},
      {TaskKind::Comprehension, {"accuracy", "macro_f1"}},
      {TaskKind::Intrinsic, {"nll"}},
  };
  return m;
}

const std::set<std::string, std::less<>> kFieldNames{"input", "reference", "label", "gender", "choices"};
const std::set<std::string, std::less<>> kKeys{"id",     "task_kind",     "alignment_mode", "data_format",
                                               "root_path", "labels",     "metrics",        "script_overrides",
                                               "field_map", "pairs",      "label_set",      "stop",
                                               "max_new_tokens", "description"};

class Checker {
 public:
  explicit Checker(const std::filesystem::path& file) : file_(file.string()) {}

  [[noreturn]] void fail(std::string_view field, std::string_view why) const {
    throw Error(Errc::SchemaViolation, file_ + ": " + std::string(field) + ": " + std::string(why));
  }

  const nlohmann::json& required(const nlohmann::json& doc, const char* key) const {
    if (!doc.contains(key)) fail(key, "missing");
    return doc.at(key);
  }

  std::string string(const nlohmann::json& v, std::string_view field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const nlohmann::json& v, std::string_view field) const {
    if (!v.is_array()) fail(field, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(string(x, field));
    return out;
  }

  std::map<std::string, std::string> string_map(const nlohmann::json& v, std::string_view field) const {
    if (!v.is_object()) fail(field, "expected an object of strings");
    std::map<std::string, std::string> out;
    for (const auto& [k, x] : v.items()) out[k] = string(x, std::string(field) + "." + k);
    return out;
  }

  template <class E, size_t N>
  E enumerated(const nlohmann::json& doc, const char* key, const Names<E, N>& names) const {
    const auto s = string(required(doc, key), key);
    if (auto v = value_of(names, s)) return *v;
    fail(key, "unknown value '" + s + "'");
  }

 private:
  std::string file_;
};

}  // namespace

std::string_view to_string(TaskKind v) noexcept { return name_of(kTaskKinds, v); }
std::string_view to_string(AlignmentMode v) noexcept { return name_of(kAlignmentModes, v); }
std::string_view to_string(DataFormat v) noexcept { return name_of(kDataFormats, v); }
std::string_view to_string(DirectionMode v) noexcept { return name_of(kDirectionModes, v); }
std::string_view to_string(Gender v) noexcept { return v == Gender::Masculine ? "masculine" : "feminine"; }

std::optional<TaskKind> parse_task_kind(std::string_view s) noexcept { return value_of(kTaskKinds, s); }
std::optional<AlignmentMode> parse_alignment_mode(std::string_view s) noexcept {
  return value_of(kAlignmentModes, s);
}
std::optional<DataFormat> parse_data_format(std::string_view s) noexcept { return value_of(kDataFormats, s); }

std::optional<DirectionMode> parse_direction_mode(std::string_view s) noexcept {
  std::string dashed(s);
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  return value_of(kDirectionModes, dashed);
}

std::optional<Gender> parse_gender(std::string_view s) noexcept {
  const auto f = text::fold_case(text::trim(s));
  if (f == "masculine" || f == "m") return Gender::Masculine;
  if (f == "feminine" || f == "f") return Gender::Feminine;
  return std::nullopt;
}

std::vector<std::string> BenchmarkDescriptor::labels_for(const LanguageTag& tag) const {
  std::vector<std::string> out;
  for (const auto& label : labels) {
    if (auto it = lang_dict.find(label); it != lang_dict.end() && it->second == tag) out.push_back(label);
  }
  return out;
}

std::vector<LanguageTag> BenchmarkDescriptor::tags() const {
  std::set<LanguageTag> s;
  for (const auto& [label, tag] : lang_dict) s.insert(tag);
  return {s.begin(), s.end()};
}

BenchmarkDescriptor parse_descriptor(const nlohmann::json& doc, const std::filesystem::path& file) {
  const Checker c(file);
  if (!doc.is_object()) c.fail("<document>", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) c.fail(key, "unknown key");
  }

  BenchmarkDescriptor d;
  d.source_file = file;
  d.id = c.string(c.required(doc, "id"), "id");
  if (d.id.empty()) c.fail("id", "must not be empty");
  d.task_kind = c.enumerated(doc, "task_kind", kTaskKinds);
  d.alignment_mode = c.enumerated(doc, "alignment_mode", kAlignmentModes);
  d.data_format = c.enumerated(doc, "data_format", kDataFormats);

  std::filesystem::path root = c.string(c.required(doc, "root_path"), "root_path");
  d.root_path = root.is_absolute() ? root : file.parent_path() / root;
  d.root_path = d.root_path.lexically_normal();

  d.labels = c.strings(c.required(doc, "labels"), "labels");
  if (d.labels.empty()) c.fail("labels", "at least one label is required");
  const std::set<std::string> label_set(d.labels.begin(), d.labels.end());
  if (label_set.size() != d.labels.size()) c.fail("labels", "duplicate label");

  d.metrics = c.strings(c.required(doc, "metrics"), "metrics");
  if (d.metrics.empty()) c.fail("metrics", "at least one metric is required");
  for (const auto& m : d.metrics) {
    if (!metrics::is_known_metric(m)) c.fail("metrics", "unknown metric id '" + m + "'");
    if (!allowed_metrics().at(d.task_kind).count(m)) {
      c.fail("metrics", "'" + m + "' does not apply to task kind " + std::string(to_string(d.task_kind)));
    }
  }

  if (doc.contains("script_overrides")) {
    d.script_overrides = c.string_map(doc.at("script_overrides"), "script_overrides");
    for (const auto& [label, script] : d.script_overrides) {
      if (!label_set.count(label)) c.fail("script_overrides", "'" + label + "' is not a listed label");
      if (!langid::is_script_code(script)) c.fail("script_overrides", "'" + script + "' is not an ISO 15924 code");
    }
  }
  if (doc.contains("field_map")) {
    d.field_map = c.string_map(doc.at("field_map"), "field_map");
    for (const auto& [field, key] : d.field_map) {
      if (!kFieldNames.count(field)) c.fail("field_map", "unknown field '" + field + "'");
    }
  }
  if (doc.contains("pairs")) {
    const auto& pairs = doc.at("pairs");
    if (!pairs.is_array()) c.fail("pairs", "expected an array of [source, target] pairs");
    for (const auto& p : pairs) {
      const auto two = c.strings(p, "pairs");
      if (two.size() != 2) c.fail("pairs", "each pair needs exactly two labels");
      for (const auto& l : two) {
        if (!label_set.count(l)) c.fail("pairs", "'" + l + "' is not a listed label");
      }
      if (two[0] == two[1]) c.fail("pairs", "source and target are the same label");
      d.pairs.emplace_back(two[0], two[1]);
    }
  }
  if (doc.contains("label_set")) d.label_set = c.strings(doc.at("label_set"), "label_set");
  if (doc.contains("stop")) d.stop = c.strings(doc.at("stop"), "stop");
  if (doc.contains("max_new_tokens")) {
    const auto& v = doc.at("max_new_tokens");
    if (!v.is_number_integer() || v.get<long>() < 0) c.fail("max_new_tokens", "expected a non-negative integer");
    d.max_new_tokens = v.get<int>();
  }
  if (doc.contains("description")) c.string(doc.at("description"), "description");

  // Cross-field rules.
  const bool translation = d.task_kind == TaskKind::Translation;
  if (translation && d.alignment_mode == AlignmentMode::Monolingual) {
    c.fail("alignment_mode", "a translation benchmark cannot be monolingual");
  }
  if (!translation && d.alignment_mode != AlignmentMode::Monolingual) {
    c.fail("alignment_mode", "only translation benchmarks are multi-aligned or pairwise");
  }
  if (d.alignment_mode == AlignmentMode::Pairwise && d.pairs.empty()) c.fail("pairs", "pairwise benchmarks declare pairs");
  if (d.alignment_mode != AlignmentMode::Pairwise && !d.pairs.empty()) c.fail("pairs", "only pairwise benchmarks declare pairs");
  if (d.alignment_mode == AlignmentMode::MultiAligned && d.data_format != DataFormat::ParallelPerLanguageFiles) {
    c.fail("data_format", "multi-aligned benchmarks use parallel per-language files");
  }
  if ((d.task_kind == TaskKind::TokenClassification) != (d.data_format == DataFormat::TokenTag2Col)) {
    c.fail("data_format", "token_tag_2col is exactly the token classification format");
  }
  if ((d.task_kind == TaskKind::Classification || d.task_kind == TaskKind::TokenClassification) &&
      d.label_set.empty()) {
    c.fail("label_set", "required for classification tasks");
  }
  const bool needs_records = d.task_kind == TaskKind::Classification || d.task_kind == TaskKind::Comprehension ||
                             d.task_kind == TaskKind::Summarization;
  if (needs_records && d.data_format != DataFormat::JsonlRecords) {
    c.fail("data_format", std::string(to_string(d.task_kind)) + " needs jsonl_records");
  }
  const bool gendered = std::find(d.metrics.begin(), d.metrics.end(), "chrf_gender") != d.metrics.end();
  if (gendered && d.data_format != DataFormat::JsonlRecords) {
    c.fail("metrics", "chrf_gender needs jsonl_records carrying a gender field");
  }
  return d;
}

nlohmann::json to_json(const BenchmarkDescriptor& d) {
  nlohmann::json j;
  j["id"] = d.id;
  j["task_kind"] = to_string(d.task_kind);
  j["alignment_mode"] = to_string(d.alignment_mode);
  j["data_format"] = to_string(d.data_format);
  j["root_path"] = d.root_path.string();
  j["labels"] = d.labels;
  j["metrics"] = d.metrics;
  j["script_overrides"] = d.script_overrides;
  j["field_map"] = d.field_map;
  j["pairs"] = nlohmann::json::array();
  for (const auto& [s, t] : d.pairs) j["pairs"].push_back({s, t});
  if (!d.label_set.empty()) j["label_set"] = d.label_set;
  j["stop"] = d.stop;
  j["max_new_tokens"] = d.max_new_tokens;
  nlohmann::json dict = nlohmann::json::object();
  for (const auto& [label, tag] : d.lang_dict) dict[label] = tag.str();
  j["lang_dict"] = dict;
  return j;
}

std::vector<BenchmarkDescriptor> load_registry(const std::filesystem::path& config_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(config_dir)) throw Error(Errc::MissingFile, config_dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 15 && name.ends_with(".benchmark.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<BenchmarkDescriptor> out;
  std::map<std::string, fs::path> seen;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error(Errc::MissingFile, f.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaViolation, f.string() + ": <document>: " + e.what());
    }
    auto d = parse_descriptor(doc, f);
    if (auto [it, fresh] = seen.emplace(d.id, f); !fresh) {
      throw Error(Errc::DuplicateId, "'" + d.id + "' in " + it->second.string() + " and " + f.string());
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<langid::BenchmarkLanguages> language_view(const std::vector<BenchmarkDescriptor>& registry) {
  std::vector<langid::BenchmarkLanguages> out;
  for (const auto& d : registry) out.push_back({d.id, d.lang_dict});
  return out;
}

}  // namespace polyeval::registry
