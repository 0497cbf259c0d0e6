#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polyeval/langid.hpp"
#include "polyeval/metrics.hpp"

namespace polyeval::registry {

using langid::LanguageTag;

enum class TaskKind {
  Translation,
  Classification,
  TokenClassification,
  Summarization,
  OpenGeneration,
  Comprehension,
  Intrinsic,
};
enum class AlignmentMode { MultiAligned, Pairwise, Monolingual };
enum class DataFormat { ParallelPerLanguageFiles, JsonlRecords, TokenTag2Col };
using Gender = metrics::Gender;
enum class DirectionMode { AnyToPivot, PivotToAny, Both };

// snake_case spellings used in descriptor and config files.
std::string_view to_string(TaskKind v) noexcept;
std::string_view to_string(AlignmentMode v) noexcept;
std::string_view to_string(DataFormat v) noexcept;
std::string_view to_string(Gender v) noexcept;
std::string_view to_string(DirectionMode v) noexcept;
std::optional<TaskKind> parse_task_kind(std::string_view s) noexcept;
std::optional<AlignmentMode> parse_alignment_mode(std::string_view s) noexcept;
std::optional<DataFormat> parse_data_format(std::string_view s) noexcept;
/// `masculine`/`feminine`, or `m`/`f`, any case.
std::optional<Gender> parse_gender(std::string_view s) noexcept;
/// Accepts `any-to-pivot`, `pivot-to-any`, `both` (and underscore forms).
std::optional<DirectionMode> parse_direction_mode(std::string_view s) noexcept;

struct BenchmarkDescriptor {
  std::string id;
  TaskKind task_kind = TaskKind::Translation;
  AlignmentMode alignment_mode = AlignmentMode::MultiAligned;
  DataFormat data_format = DataFormat::ParallelPerLanguageFiles;
  std::filesystem::path root_path;  // resolved against the descriptor file
  std::vector<std::string> labels;
  std::map<std::string, LanguageTag> lang_dict;
  std::vector<std::string> metrics;
  std::map<std::string, std::string> script_overrides;
  std::map<std::string, std::string> field_map;
  std::vector<std::pair<std::string, std::string>> pairs;
  /// Class names (Classification) or tag inventory (TokenClassification).
  std::vector<std::string> label_set;
  std::vector<std::string> stop{"\n\n"};
  int max_new_tokens = 128;
  std::filesystem::path source_file;

  /// Original label(s) aligned to `tag`, in descriptor order.
  std::vector<std::string> labels_for(const LanguageTag& tag) const;
  /// Distinct aligned tags, sorted.
  std::vector<LanguageTag> tags() const;
};

/// Parses one `*.benchmark.json` document. `file` is used for error
/// messages and to resolve a relative root_path.
BenchmarkDescriptor parse_descriptor(const nlohmann::json& doc, const std::filesystem::path& file);
nlohmann::json to_json(const BenchmarkDescriptor& d);

/// Loads every `*.benchmark.json` under `config_dir` (sorted by file name).
std::vector<BenchmarkDescriptor> load_registry(const std::filesystem::path& config_dir);

struct Sample {
  std::string benchmark_id;
  size_t index = 0;
  std::string input_text;
  std::vector<std::string> references;
  std::optional<std::string> label;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<std::string> choices;
  std::optional<Gender> gender;
  std::optional<LanguageTag> source_tag;
  std::optional<LanguageTag> target_tag;
};

struct Direction {
  LanguageTag source;
  LanguageTag target;

  Direction(LanguageTag src, LanguageTag tgt);
  std::string str() const { return source.str() + "-" + target.str(); }
  friend bool operator==(const Direction&, const Direction&) = default;
};

/// JSONL key of a logical field (`input`, `reference`, `label`, `gender`,
/// `choices`), after the descriptor's field_map.
std::string field_key(const BenchmarkDescriptor& d, std::string_view field);

/// Per-label data file (`<root>/<label>.txt|.jsonl|.conll`).
std::filesystem::path label_file(const BenchmarkDescriptor& d, const std::string& label);
/// Pairwise data file for one declared pair: `<root>/<src>-<tgt>/<side>.txt`
/// for parallel text, `<root>/<src>-<tgt>.jsonl` for records.
std::filesystem::path pair_file(const BenchmarkDescriptor& d, const std::string& src_label,
                                const std::string& tgt_label, const std::string& side_label);

/// Samples of one original label, head-truncated to `limit`.
std::vector<Sample> load_label_samples(const BenchmarkDescriptor& d, const std::string& label,
                                       std::optional<size_t> limit = std::nullopt);

/// Samples of the subset aligned to `tag`. MultiAligned benchmarks are
/// checked for equal line counts across all language files first.
std::vector<Sample> load_samples(const BenchmarkDescriptor& d, const LanguageTag& tag,
                                 std::optional<size_t> limit = std::nullopt);

/// Source/target-paired translation samples for one direction.
std::vector<Sample> load_direction_samples(const BenchmarkDescriptor& d, const Direction& dir,
                                           std::optional<size_t> limit = std::nullopt);

std::vector<Direction> enumerate_directions(const BenchmarkDescriptor& d, const LanguageTag& pivot,
                                            DirectionMode mode);

/// Declared pairs of a Pairwise benchmark, as aligned directions.
std::vector<Direction> declared_directions(const BenchmarkDescriptor& d);

/// Text lines for script detection of one label.
std::vector<std::string> sample_text(const BenchmarkDescriptor& d, const std::string& label);

/// Runs label alignment and stores the dictionary into `d.lang_dict`.
langid::Alignment align_benchmark(BenchmarkDescriptor& d,
                                  const langid::IsoTable& table = langid::IsoTable::bundled(),
                                  const langid::AlignOptions& opts = {});

std::vector<langid::BenchmarkLanguages> language_view(const std::vector<BenchmarkDescriptor>& registry);

}  // namespace polyeval::registry
