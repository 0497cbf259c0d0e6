#include <fstream>

#include "polyeval/error.hpp"
#include "polyeval/orchestrator.hpp"

namespace polyeval::orchestrator {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string dump(const json& j, int indent) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::OutputDirNotWritable, p.string());
  out << content;
  if (!out) throw Error(Errc::OutputDirNotWritable, p.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

json subset_json(const SubsetResult& s) {
  json j;
  j["subset"] = s.subset;
  if (s.source) j["source"] = s.source->str();
  if (s.target) j["target"] = s.target->str();
  j["prompt_language"] = s.prompt_language;
  j["n_scored"] = s.n_scored;
  j["n_fewshot"] = s.n_fewshot;
  j["fallback_count"] = s.fallback_count;
  j["reports"] = json::array();
  for (const auto& r : s.reports) {
    auto rj = metrics::to_json(r);
    rj.erase("per_sample");  // per-sample values live in details.jsonl
    j["reports"].push_back(std::move(rj));
  }
  if (s.throughput) {
    j["throughput"] = {{"tokens", s.throughput->tokens},
                       {"seconds", s.throughput->seconds},
                       {"tokens_per_second", inference::measure_throughput(s.throughput->tokens, s.throughput->seconds)},
                       {"cell", s.throughput->cell}};
  }
  j["notes"] = s.notes;
  return j;
}

}  // namespace

json to_json(const EvalRecord& r) {
  return {{"benchmark_id", r.benchmark_id},
          {"sample_index", r.sample_index},
          {"subset", r.subset},
          {"prompt", r.prompt},
          {"raw_output", r.raw_output},
          {"postprocessed_output", r.postprocessed_output},
          {"references", r.references},
          {"per_metric_scores", r.per_metric_scores},
          {"used_fallback_prompt", r.used_fallback_prompt},
          {"unparsed", r.unparsed},
          {"wall_time", r.wall_time}};
}

json summary_json(const RunSummary& s) {
  json j;
  j["version"] = std::string(kVersion);
  j["config"] = s.config;
  j["benchmarks"] = json::array();
  size_t fallbacks = 0;
  json by_benchmark = json::object();
  for (const auto& b : s.benchmarks) {
    json bj;
    bj["id"] = b.benchmark_id;
    bj["task_kind"] = registry::to_string(b.task_kind);
    bj["status"] = b.error ? "error" : "ok";
    if (b.error) bj["error"] = *b.error;
    bj["lang_dict"] = json::object();
    for (const auto& [label, tag] : b.lang_dict) bj["lang_dict"][label] = tag.str();
    bj["subsets"] = json::array();
    size_t n = 0;
    for (const auto& sub : b.subsets) {
      bj["subsets"].push_back(subset_json(sub));
      n += sub.fallback_count;
    }
    by_benchmark[b.benchmark_id] = n;
    fallbacks += n;
    j["benchmarks"].push_back(std::move(bj));
  }
  j["prompt_fallbacks"] = {{"total", fallbacks}, {"by_benchmark", by_benchmark}};
  j["warnings"] = s.warnings;
  j["ok"] = s.ok();
  return j;
}

std::string scores_csv(const RunSummary& s) {
  std::string out = "benchmark,subset,metric,value\n";
  char buf[64];
  for (const auto& b : s.benchmarks) {
    for (const auto& sub : b.subsets) {
      for (const auto& r : sub.reports) {
        std::snprintf(buf, sizeof buf, "%.17g", r.corpus_score);
        out += csv_field(b.benchmark_id) + "," + csv_field(sub.subset) + "," + csv_field(r.metric_id) + "," + buf + "\n";
      }
    }
  }
  return out;
}

void emit_reports(const RunSummary& s, const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw Error(Errc::OutputDirNotWritable, config.output_dir.string() + (ec ? ": " + ec.message() : ""));
  }
  const auto summary = summary_json(s);
  write_file(config.output_dir / "summary.json", dump(summary, 2) + "\n");
  write_file(config.output_dir / "scores.csv", scores_csv(s));
  const auto details = config.output_dir / "details.jsonl";
  if (config.store_details) {
    std::string body;
    for (const auto& r : s.records) body += dump(to_json(r), -1) + "\n";
    write_file(details, body);
  } else {
    fs::remove(details, ec);  // never leave a previous run's records behind
  }
}

}  // namespace polyeval::orchestrator
