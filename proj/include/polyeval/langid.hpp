#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

// Language identity: ISO 639-3 table lookups, label resolution, script
// detection and cross-benchmark subset queries.
namespace polyeval::langid {

enum class Scope { Individual, Macrolanguage, Unknown };
enum class MatchKind { Exact, Fuzzy, NoMatch };

std::string_view to_string(Scope s) noexcept;
std::string_view to_string(MatchKind k) noexcept;

/// `<iso639-3>_<iso15924>`, e.g. `eng_Latn`. Construction checks the shape
/// only; table membership is the caller's concern (see IsoTable::find).
class LanguageTag {
 public:
  LanguageTag(std::string language, std::string script);

  /// Parses the canonical rendering; throws InvalidTag otherwise.
  static LanguageTag parse(std::string_view canonical);
  static bool is_canonical(std::string_view s) noexcept;

  const std::string& language() const noexcept { return language_; }
  const std::string& script() const noexcept { return script_; }
  std::string str() const { return language_ + "_" + script_; }

  friend auto operator<=>(const LanguageTag&, const LanguageTag&) = default;
  friend bool operator==(const LanguageTag&, const LanguageTag&) = default;

 private:
  std::string language_;
  std::string script_;
};

std::ostream& operator<<(std::ostream& os, const LanguageTag& tag);

bool is_language_code(std::string_view s) noexcept;  // [a-z]{3}
bool is_script_code(std::string_view s) noexcept;    // [A-Z][a-z]{3}

struct IsoRow {
  std::string iso639_3;
  std::string iso639_2b;
  std::string iso639_2t;
  std::string iso639_1;
  Scope scope = Scope::Individual;
  std::string macro_parent;
  std::string reference_name;
  std::vector<std::string> alternate_names;
};

class IsoTable {
 public:
  /// TSV with header `iso639_3 iso639_2B iso639_2T iso639_1 scope
  /// macro_parent reference_name alt_names`; `#` lines are comments.
  static IsoTable parse(std::istream& in);
  static IsoTable load(const std::filesystem::path& path);

  /// The table bundled under data/ at build time.
  static const IsoTable& bundled();
  static std::filesystem::path bundled_path();

  std::span<const IsoRow> rows() const noexcept { return rows_; }
  const IsoRow* find(std::string_view iso639_3) const noexcept;
  const IsoRow& at(std::string_view iso639_3) const;

  /// Row whose 639-1/2B/2T/3 code equals `code` (lowercase), if any.
  const IsoRow* find_code(std::string_view code) const noexcept;

  /// Individual languages listed under a macrolanguage.
  const std::vector<std::string>& members(std::string_view macro) const;

  /// One reference or alternate name, normalized with normalize_name.
  struct NameEntry {
    size_t row = 0;
    std::u32string normalized;
    std::vector<std::u32string> words;
  };
  std::span<const NameEntry> names() const noexcept { return names_; }
  /// Row indices whose reference/alternate name normalizes to `normalized`.
  std::vector<size_t> rows_named(std::string_view normalized) const;
  const IsoRow& row(size_t index) const { return rows_.at(index); }

 private:
  void index();

  std::vector<IsoRow> rows_;
  std::unordered_map<std::string, size_t> by_code3_;
  std::unordered_map<std::string, size_t> by_any_code_;
  std::unordered_map<std::string, std::vector<std::string>> members_;
  std::vector<NameEntry> names_;
  std::unordered_multimap<std::string, size_t> by_name_;
};

/// Case-folds and maps `-`, `_` and whitespace runs to one space.
std::string normalize_name(std::string_view s);

struct Candidate {
  std::string language;
  double confidence = 0.0;
};

/// Outcome of matching one label against the ISO table.
struct Resolution {
  std::string source_label;
  std::optional<std::string> language;
  MatchKind match_kind = MatchKind::NoMatch;
  Scope scope = Scope::Unknown;
  double confidence = 0.0;
  std::vector<Candidate> candidates;
  std::vector<std::string> stripped_suffixes;  // in label order, e.g. {"-CN"}
  std::optional<std::string> advertised_script;
  std::string matched_form;                    // code or name that matched
};

struct ResolveOptions {
  double fuzzy_threshold = 0.8;
  size_t max_candidates = 3;
};

/// 1 - levenshtein / max_len over code points; 1 for two empty strings.
double name_similarity(std::u32string_view a, std::u32string_view b);

Resolution resolve_language(std::string_view label, const IsoTable& table = IsoTable::bundled(),
                            const ResolveOptions& opts = {});

struct ScriptDetection {
  std::string script;
  double confidence = 0.0;
  size_t sampled_lines = 0;
  size_t counted_chars = 0;
};

/// Majority Unicode script over a seeded sample of at most `sample_size`
/// non-empty lines. Common/Inherited/Unknown characters do not vote.
/// Han reports `Hani`; kana with Han reports `Jpan`, Hangul with Han `Kore`.
ScriptDetection detect_script(std::span<const std::string> lines, size_t sample_size = 100,
                              uint64_t seed = 42);

/// ISO 15924 short code of one code point (`Zyyy`, `Zinh`, `Zzzz` for the
/// non-voting classes).
std::string script_of(char32_t cp);

struct AlignmentRecord {
  Resolution resolution;
  std::optional<LanguageTag> resolved;
  std::optional<std::string> detected_script;
  double script_confidence = 0.0;
  std::string script_source;  // "override" | "detected" | "label" | ""
  std::string note;

  const std::string& source_label() const noexcept { return resolution.source_label; }
  MatchKind match_kind() const noexcept { return resolution.match_kind; }
};

nlohmann::json to_json(const AlignmentRecord& rec);

using CorpusSampler = std::function<std::vector<std::string>(const std::string& label)>;

struct AlignOptions {
  ResolveOptions resolve;
  size_t sample_size = 100;
  uint64_t seed = 42;
};

struct Alignment {
  std::map<std::string, LanguageTag> lang_dict;
  std::vector<AlignmentRecord> report;  // one per input label, input order
};

/// Resolves every label and attaches a script (override, else detected,
/// else the label's own script suffix). Unresolved labels stay in the
/// report only.
Alignment align_labels(std::span<const std::string> labels,
                       const std::map<std::string, std::string>& script_overrides,
                       const CorpusSampler& sampler, const IsoTable& table = IsoTable::bundled(),
                       const AlignOptions& opts = {});

/// Aligned language view of one benchmark, as consumed by match_query.
struct BenchmarkLanguages {
  std::string benchmark_id;
  std::map<std::string, LanguageTag> lang_dict;
};

/// Query entries are bare ISO 639-3 codes (any script) or canonical tags
/// (exact script). Macrolanguage entries also select their members.
std::map<std::string, std::vector<std::string>> match_query(
    const std::set<std::string>& query, std::span<const BenchmarkLanguages> registry,
    const IsoTable& table = IsoTable::bundled());

}  // namespace polyeval::langid
