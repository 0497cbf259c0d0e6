#include <algorithm>
#include <limits>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"

namespace polyeval::metrics {

nlohmann::json to_json(const BleuConfig& c) {
  return {{"max_ngram", c.max_ngram},
          {"smoothing", c.smoothing == Smoothing::Exp ? "exp" : "none"},
          {"case_sensitive", c.case_sensitive},
          {"effective_order", c.effective_order},
          {"tokenizer_id", c.tokenizer_id}};
}

nlohmann::json to_json(const ChrfConfig& c) {
  return {{"char_order", c.char_order},
          {"word_order", c.word_order},
          {"beta", c.beta},
          {"whitespace_ignored_in_char_ngrams", c.whitespace_ignored}};
}

nlohmann::json to_json(const RougeConfig& c) {
  nlohmann::json variants = nlohmann::json::array();
  for (auto v : c.variants) variants.push_back(v == RougeVariant::R1 ? "R1" : v == RougeVariant::R2 ? "R2" : "RL");
  return {{"variants", variants}, {"use_stemmer", c.use_stemmer}};
}

std::string bleu_signature(const BleuConfig& c, size_t nrefs) {
  return "nrefs:" + std::to_string(nrefs) + "|case:" + (c.case_sensitive ? "mixed" : "lc") +
         "|eff:" + (c.effective_order ? "yes" : "no") + "|tok:" + c.tokenizer_id +
         "|smooth:" + (c.smoothing == Smoothing::Exp ? "exp" : "none") + "|version:" + std::string(kVersion);
}

std::string chrf_signature(const ChrfConfig& c) {
  return "nrefs:1|case:mixed|eff:yes|nc:" + std::to_string(c.char_order) + "|nw:" + std::to_string(c.word_order) +
         "|space:" + (c.whitespace_ignored ? "no" : "yes") + "|version:" + std::string(kVersion);
}

nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json j;
  j["metric_id"] = r.metric_id;
  j["corpus_score"] = r.corpus_score;
  if (!r.per_sample.empty()) j["per_sample"] = r.per_sample;
  if (!r.subgroup_scores.empty()) j["subgroup_scores"] = r.subgroup_scores;
  if (!r.components.empty()) j["components"] = r.components;
  if (!r.config_echo.is_null()) j["config_echo"] = r.config_echo;
  if (!r.signature.empty()) j["signature"] = r.signature;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

const std::vector<std::string>& metric_ids() {
  static const std::vector<std::string> ids{
      "bleu",     "chrf",    "chrf++",    "chrf_gender", "rouge1",         "rouge2", "rougeL",
      "accuracy", "macro_f1", "span_f1", "token_accuracy", "self_bleu", "nll",    "comet",
  };
  return ids;
}

bool is_known_metric(std::string_view id) {
  const auto& ids = metric_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

bool is_external_metric(std::string_view id) { return id == "comet"; }

std::pair<double, double> score_range(std::string_view id) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (id == "bleu" || id == "chrf" || id == "chrf++" || id == "chrf_gender" || id == "self_bleu") return {0.0, 100.0};
  if (id == "nll") return {0.0, kInf};
  if (id == "comet") return {-kInf, kInf};
  return {0.0, 1.0};
}

std::map<size_t, double> read_external_scores(std::istream& in) {
  std::map<size_t, double> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("sample_index").get<size_t>()] = j.at("score").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::MalformedRow, "external scores line " + std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace polyeval::metrics
