#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/text.hpp"

namespace polyeval::metrics {
namespace {

using NgramCounts = std::unordered_map<std::string, long>;

// n-gram keys joined by U+001F, which tokenizers never emit.
NgramCounts count_ngrams(const std::vector<std::string>& tokens, int max_n) {
  NgramCounts counts;
  for (int n = 1; n <= max_n; ++n) {
    if (tokens.size() < static_cast<size_t>(n)) break;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = std::to_string(n);
      for (int k = 0; k < n; ++k) {
        key.push_back('\x1f');
        key += tokens[i + k];
      }
      ++counts[key];
    }
  }
  return counts;
}

int order_of(const std::string& key) { return std::atoi(key.c_str()); }

std::vector<std::string> prepare(const std::string& s, const BleuConfig& cfg, const Tokenizer& tok) {
  return cfg.case_sensitive ? tok.tokenize(s) : tok.tokenize(text::fold_case(s));
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  if (correct.size() < o.correct.size()) {
    correct.resize(o.correct.size());
    total.resize(o.total.size());
  }
  for (size_t i = 0; i < o.correct.size(); ++i) {
    correct[i] += o.correct[i];
    total[i] += o.total[i];
  }
  sys_len += o.sys_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_segment_stats(const std::vector<std::string>& hyp_tokens,
                             const std::vector<std::vector<std::string>>& ref_tokens, int max_ngram) {
  BleuStats s;
  s.correct.assign(max_ngram, 0);
  s.total.assign(max_ngram, 0);
  s.sys_len = static_cast<long>(hyp_tokens.size());

  long closest_diff = -1;
  long closest_len = -1;
  NgramCounts ref_max;
  for (const auto& ref : ref_tokens) {
    const long len = static_cast<long>(ref.size());
    const long diff = std::labs(s.sys_len - len);
    if (closest_diff == -1 || diff < closest_diff) {
      closest_diff = diff;
      closest_len = len;
    } else if (diff == closest_diff && len < closest_len) {
      closest_len = len;
    }
    for (const auto& [key, count] : count_ngrams(ref, max_ngram)) {
      long& slot = ref_max[key];
      slot = std::max(slot, count);
    }
  }
  s.ref_len = closest_len < 0 ? 0 : closest_len;

  for (const auto& [key, count] : count_ngrams(hyp_tokens, max_ngram)) {
    const int n = order_of(key) - 1;
    s.total[n] += count;
    if (auto it = ref_max.find(key); it != ref_max.end()) s.correct[n] += std::min(count, it->second);
  }
  return s;
}

double bleu_from_stats(const BleuStats& stats, const BleuConfig& cfg) {
  const int max_n = cfg.max_ngram;
  double bp = 1.0;
  if (stats.sys_len < stats.ref_len) {
    bp = stats.sys_len > 0 ? std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.sys_len))
                           : 0.0;
  }
  bool any_correct = false;
  for (int n = 0; n < max_n; ++n) any_correct = any_correct || stats.correct[n] > 0;
  if (!any_correct) return 0.0;

  // Precisions as fractions of 1 so a perfect match is exactly 100.
  std::vector<double> precision(max_n, 0.0);
  double smooth = 1.0;
  int eff_order = max_n;
  for (int n = 0; n < max_n; ++n) {
    if (stats.total[n] == 0) break;
    if (cfg.effective_order) eff_order = n + 1;
    if (stats.correct[n] == 0) {
      if (cfg.smoothing == Smoothing::Exp) {
        smooth *= 2.0;
        precision[n] = 1.0 / (smooth * static_cast<double>(stats.total[n]));
      }
    } else {
      precision[n] = static_cast<double>(stats.correct[n]) / static_cast<double>(stats.total[n]);
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < eff_order; ++n) {
    if (precision[n] <= 0.0) return 0.0;
    log_sum += std::log(precision[n]);
  }
  return 100.0 * bp * std::exp(log_sum / eff_order);
}

ScoreReport bleu_multi(std::span<const std::string> hypotheses,
                       const std::vector<std::vector<std::string>>& references, const BleuConfig& cfg,
                       const Tokenizer& tokenizer) {
  if (hypotheses.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                          std::to_string(references.size()) + " reference sets");
  }
  if (hypotheses.empty()) throw Error(Errc::EmptyCorpus, "bleu over zero segments");

  BleuStats corpus;
  corpus.correct.assign(cfg.max_ngram, 0);
  corpus.total.assign(cfg.max_ngram, 0);
  ScoreReport report;
  size_t max_refs = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references[i]) refs.push_back(prepare(r, cfg, tokenizer));
    max_refs = std::max(max_refs, refs.size());
    const auto seg = bleu_segment_stats(prepare(hypotheses[i], cfg, tokenizer), refs, cfg.max_ngram);
    report.per_sample.push_back(bleu_from_stats(seg, cfg));
    corpus += seg;
  }
  report.metric_id = "bleu";
  report.corpus_score = bleu_from_stats(corpus, cfg);
  report.config_echo = to_json(cfg);
  report.signature = bleu_signature(cfg, max_refs);
  report.components["sys_len"] = static_cast<double>(corpus.sys_len);
  report.components["ref_len"] = static_cast<double>(corpus.ref_len);
  return report;
}

ScoreReport bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const BleuConfig& cfg, const Tokenizer& tokenizer) {
  if (hypotheses.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                          std::to_string(references.size()) + " references");
  }
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back({r});
  return bleu_multi(hypotheses, refs, cfg, tokenizer);
}

ScoreReport self_bleu(std::span<const std::string> outputs, const BleuConfig& cfg, const Tokenizer& tokenizer) {
  if (outputs.size() < 2) throw Error(Errc::TooFewOutputs, "self-BLEU needs at least 2 outputs");
  std::vector<std::vector<std::string>> tokens;
  for (const auto& o : outputs) tokens.push_back(prepare(o, cfg, tokenizer));

  ScoreReport report;
  report.metric_id = "self_bleu";
  double sum = 0.0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    std::vector<std::vector<std::string>> rest;
    for (size_t j = 0; j < tokens.size(); ++j) {
      if (j != i) rest.push_back(tokens[j]);
    }
    const double s = bleu_from_stats(bleu_segment_stats(tokens[i], rest, cfg.max_ngram), cfg);
    report.per_sample.push_back(s);
    sum += s;
  }
  report.corpus_score = sum / static_cast<double>(tokens.size());
  report.config_echo = to_json(cfg);
  report.signature = bleu_signature(cfg, outputs.size() - 1);
  report.notes.push_back("higher self-BLEU means less diverse output");
  return report;
}

}  // namespace polyeval::metrics
