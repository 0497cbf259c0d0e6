#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyeval/inference.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/prompts.hpp"
#include "polyeval/registry.hpp"

// Config resolution, run execution, post-processing and report export.
namespace polyeval::orchestrator {

using langid::LanguageTag;
using registry::TaskKind;

/// `wall` records measured request times. `modeled` charges every request
/// per_request_s + per_token_s * generated tokens, so reports are
/// reproducible byte for byte.
struct Timing {
  enum class Mode { Wall, Modeled } mode = Mode::Wall;
  double per_request_s = 0.05;
  double per_token_s = 0.001;
};

struct RunConfig {
  std::filesystem::path registry_dir = "benchmarks";
  std::filesystem::path prompt_dir = "prompts";
  std::vector<std::string> benchmarks{"all"};
  std::vector<std::string> langs;  // empty: every subset
  promptlib::StrategyMode prompt_strategy = promptlib::StrategyMode::Multi;
  std::optional<LanguageTag> prompt_lang;  // required for Single
  std::optional<LanguageTag> pivot;
  registry::DirectionMode direction_mode = registry::DirectionMode::Both;
  size_t n_shot = 0;
  std::optional<size_t> sample_limit;
  size_t parallelism = 1;
  bool store_details = false;
  std::string backend_url = "http://127.0.0.1:8000";
  std::optional<std::string> translator_url;
  uint64_t seed = 42;
  std::filesystem::path output_dir = "results";
  Timing timing;
  size_t window = 1024;
  size_t stride = 512;
  std::string tokenizer = "test-ws";
  std::filesystem::path tokenizer_model;
  double timeout_s = 120.0;
  int retries = 2;

  promptlib::PromptStrategy strategy() const;
};

/// Reads a JSON config; relative paths resolve against the file's
/// directory. Unknown keys are ConfigError.
RunConfig load_config(const std::filesystem::path& file);
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Fields that affect results (no output_dir, backend_url, translator_url
/// and no transport settings such as parallelism, timeout_s, retries).
nlohmann::json config_echo(const RunConfig& c);

struct Postprocessed {
  std::string text;
  bool unparsed = false;
};

/// Generation tasks: cut at the first stop marker and the first blank line,
/// then trim. Comprehension: the first standalone option letter A-D, bare
/// or as `(A)`, `A.`, `A)`, uppercased; `unparsed` when there is none.
Postprocessed postprocess(const std::string& raw, TaskKind kind, const std::vector<std::string>& stop = {"\n\n"});

struct EvalRecord {
  std::string benchmark_id;
  size_t sample_index = 0;
  std::string subset;  // tag or `src-tgt` direction
  std::string prompt;
  std::string raw_output;
  std::string postprocessed_output;
  std::vector<std::string> references;
  std::map<std::string, double> per_metric_scores;
  bool used_fallback_prompt = false;
  bool unparsed = false;
  double wall_time = 0.0;
};

nlohmann::json to_json(const EvalRecord& r);

struct Throughput {
  size_t tokens = 0;
  double seconds = 0.0;
  std::string cell;  // `tokens / seconds = tokens/s`
};

struct SubsetResult {
  std::string subset;
  std::optional<LanguageTag> source;
  std::optional<LanguageTag> target;
  std::string prompt_language;  // tag of the template used
  size_t n_scored = 0;
  size_t n_fewshot = 0;
  size_t fallback_count = 0;
  std::vector<metrics::ScoreReport> reports;
  std::optional<Throughput> throughput;  // generation tasks only
  std::vector<std::string> notes;
};

struct BenchmarkResult {
  std::string benchmark_id;
  TaskKind task_kind = TaskKind::Translation;
  std::map<std::string, LanguageTag> lang_dict;
  std::vector<SubsetResult> subsets;
  std::optional<std::string> error;  // set when the benchmark aborted
};

struct RunSummary {
  nlohmann::json config;
  std::vector<BenchmarkResult> benchmarks;
  std::vector<EvalRecord> records;
  std::vector<std::string> warnings;

  bool ok() const;
};

/// Runs every selected benchmark. Throws BackendUnavailable before any work
/// when the health check fails, NoBenchmarkMatched when the selection is
/// empty; errors inside a benchmark are recorded on it instead.
RunSummary run(const RunConfig& config);

nlohmann::json summary_json(const RunSummary& s);
/// `benchmark,subset,metric,value` rows, one per corpus score.
std::string scores_csv(const RunSummary& s);
/// Writes summary.json, scores.csv and (store_details) details.jsonl.
void emit_reports(const RunSummary& s, const RunConfig& config);

}  // namespace polyeval::orchestrator

namespace polyeval::cli {

/// `polyeval run|align|prompts propagate`; returns the process exit code.
int main(int argc, char** argv);

}  // namespace polyeval::cli
