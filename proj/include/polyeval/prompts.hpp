#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyeval/error.hpp"
#include "polyeval/langid.hpp"
#include "polyeval/registry.hpp"

// Prompt templates: storage, selection, rendering and machine propagation.
namespace polyeval::promptlib {

using langid::LanguageTag;
using registry::TaskKind;

struct PromptTemplate {
  TaskKind task_kind = TaskKind::Translation;
  LanguageTag tag{"eng", "Latn"};
  std::string instruction;
  std::optional<std::string> fewshot_item;
  std::string provenance = "manual";
  /// Display names of languages in this template's language, by canonical
  /// tag. Languages not listed fall back to the ISO reference name.
  std::map<std::string, std::string> language_names;
};

/// One `{name}` occurrence; `name` is `[A-Za-z_][A-Za-z0-9_]*`. Other braces
/// are literal text.
struct PlaceholderToken {
  size_t offset = 0;
  size_t length = 0;
  std::string name;
};

std::vector<PlaceholderToken> scan_placeholders(std::string_view text);

/// Names over instruction then fewshot_item, with repeats.
std::multiset<std::string> placeholder_multiset(const PromptTemplate& t);
std::set<std::string> placeholders(const PromptTemplate& t);

/// Placeholder names a template of this task kind may use.
const std::set<std::string>& placeholder_vocabulary(TaskKind kind);

/// Throws UnknownPlaceholder, or SchemaViolation for a translation template
/// without `{src_text}`.
void validate(const PromptTemplate& t);

enum class StrategyMode { Single, Multi };

class PromptStrategy {
 public:
  static PromptStrategy multi() { return PromptStrategy(StrategyMode::Multi, std::nullopt); }
  static PromptStrategy single(LanguageTag lang) { return PromptStrategy(StrategyMode::Single, std::move(lang)); }

  StrategyMode mode() const noexcept { return mode_; }
  const std::optional<LanguageTag>& single_language() const noexcept { return single_; }

 private:
  PromptStrategy(StrategyMode m, std::optional<LanguageTag> lang) : mode_(m), single_(std::move(lang)) {}
  StrategyMode mode_;
  std::optional<LanguageTag> single_;
};

/// In-memory library keyed by (task kind, tag).
class PromptLibrary {
 public:
  /// Reads `<dir>/<task_kind>.json` for every task kind that has a file.
  static PromptLibrary load(const std::filesystem::path& dir);
  /// Parses one library file body for `kind`; `origin` names it in errors.
  static std::vector<PromptTemplate> parse_file(TaskKind kind, const nlohmann::json& doc, const std::string& origin);

  /// Validates and inserts, replacing an existing entry.
  void add(PromptTemplate t);
  const PromptTemplate* find(TaskKind kind, const LanguageTag& tag) const;
  std::vector<PromptTemplate> templates(TaskKind kind) const;

  nlohmann::json to_json(TaskKind kind) const;
  /// Writes `<dir>/<task_kind>.json`.
  void save(const std::filesystem::path& dir, TaskKind kind) const;

 private:
  std::map<std::pair<TaskKind, LanguageTag>, PromptTemplate> entries_;
};

struct Selection {
  PromptTemplate tmpl;
  bool used_fallback = false;
};

inline const LanguageTag kEnglish{"eng", "Latn"};

/// Single uses the strategy language, Multi the test tag (for translation,
/// the direction's source). A missing individual language may use its
/// macrolanguage's template in the same script (cmn_Hans -> zho_Hans); any
/// other miss falls back to eng_Latn with the flag set. Throws
/// NoEnglishBaseline when the fallback is missing too.
Selection select_template(const PromptLibrary& lib, const PromptStrategy& strategy, TaskKind kind,
                          const LanguageTag& test_tag, const langid::IsoTable& table = langid::IsoTable::bundled());

using Bindings = std::map<std::string, std::string>;

/// Rendered few-shot blocks, then the rendered instruction, joined by "\n".
std::string render_prompt(const PromptTemplate& t, const Bindings& bindings, const std::vector<Bindings>& fewshot = {});

/// Name used for `{src_lang}`/`{tgt_lang}`.
std::string language_name(const PromptTemplate& t, const LanguageTag& lang,
                          const langid::IsoTable& table = langid::IsoTable::bundled());

// ---- propagation -------------------------------------------------------------

/// Machine translation of short texts into several targets at once.
class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  /// Result per target, in request order. A target absent from the result
  /// is unsupported. Throws TranslatorUnavailable when the service fails.
  virtual std::map<LanguageTag, std::vector<std::string>> translate(const std::vector<std::string>& texts,
                                                                    const LanguageTag& from,
                                                                    const std::vector<LanguageTag>& to) = 0;
};

/// POST `<base_url>/translate` driver.
class HttpTranslationClient final : public TranslationClient {
 public:
  explicit HttpTranslationClient(std::string base_url, double timeout_s = 30.0);
  std::map<LanguageTag, std::vector<std::string>> translate(const std::vector<std::string>& texts,
                                                            const LanguageTag& from,
                                                            const std::vector<LanguageTag>& to) override;

 private:
  std::string base_url_;
  double timeout_s_;
};

/// Returns every text unchanged for every target.
class IdentityTranslator final : public TranslationClient {
 public:
  std::map<LanguageTag, std::vector<std::string>> translate(const std::vector<std::string>& texts,
                                                            const LanguageTag& from,
                                                            const std::vector<LanguageTag>& to) override;
};

/// `⟦Pk⟧` for placeholder occurrence k.
std::string sentinel(size_t k);

struct Masked {
  std::vector<std::string> texts;  // instruction, then fewshot_item if present
  std::vector<std::string> names;  // names[k] is the placeholder behind sentinel k
};

Masked mask_placeholders(const PromptTemplate& t);
/// Restores sentinels by ordinal; unknown or missing sentinels are left for
/// the multiset check to reject.
std::string unmask(std::string_view text, const std::vector<std::string>& names);

struct PropagationFailure {
  LanguageTag target;
  Errc code;
  std::string detail;
};

struct PropagationResult {
  std::vector<PromptTemplate> templates;  // accepted, in target order
  std::vector<PropagationFailure> failures;
};

PropagationResult propagate_template(const PromptTemplate& source, const std::vector<LanguageTag>& targets,
                                     TranslationClient& translator);

}  // namespace polyeval::promptlib
