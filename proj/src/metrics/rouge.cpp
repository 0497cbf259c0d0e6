#include <map>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/text.hpp"

namespace polyeval::metrics {
namespace {

RougeTriple triple(size_t overlap, size_t hyp_count, size_t ref_count) {
  RougeTriple t;
  if (hyp_count > 0) t.precision = static_cast<double>(overlap) / static_cast<double>(hyp_count);
  if (ref_count > 0) t.recall = static_cast<double>(overlap) / static_cast<double>(ref_count);
  if (t.precision + t.recall > 0.0) t.f1 = 2.0 * t.precision * t.recall / (t.precision + t.recall);
  return t;
}

// Neither side has a unit of this order: equal texts score 1, others 0.
RougeTriple degenerate(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  const double v = hyp == ref ? 1.0 : 0.0;
  return {v, v, v};
}

std::string_view name_of(RougeVariant v) {
  switch (v) {
    case RougeVariant::R1: return "rouge1";
    case RougeVariant::R2: return "rouge2";
    case RougeVariant::RL: return "rougeL";
  }
  return "";
}

}  // namespace

std::vector<std::string> rouge_tokens(std::string_view s) { return text::split_whitespace(text::fold_case(s)); }

RougeTriple rouge_n_segment(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, int n) {
  const auto grams = [n](const std::vector<std::string>& toks) {
    std::map<std::vector<std::string>, size_t> c;
    for (size_t i = 0; i + n <= toks.size(); ++i) ++c[{toks.begin() + i, toks.begin() + i + n}];
    return c;
  };
  const size_t hyp_count = hyp.size() >= static_cast<size_t>(n) ? hyp.size() - n + 1 : 0;
  const size_t ref_count = ref.size() >= static_cast<size_t>(n) ? ref.size() - n + 1 : 0;
  if (hyp_count == 0 && ref_count == 0) return degenerate(hyp, ref);
  const auto h = grams(hyp);
  const auto r = grams(ref);
  size_t overlap = 0;
  for (const auto& [g, c] : h) {
    if (auto it = r.find(g); it != r.end()) overlap += std::min(c, it->second);
  }
  return triple(overlap, hyp_count, ref_count);
}

RougeTriple rouge_l_segment(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (hyp.empty() && ref.empty()) return degenerate(hyp, ref);
  std::vector<size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (size_t i = 1; i <= hyp.size(); ++i) {
    for (size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = hyp[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return triple(prev[ref.size()], hyp.size(), ref.size());
}

std::vector<ScoreReport> rouge(std::span<const std::string> hypotheses, std::span<const std::string> references,
                               const RougeConfig& cfg) {
  if (hypotheses.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                          std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) throw Error(Errc::EmptyCorpus, "ROUGE over zero segments");
  if (cfg.use_stemmer) throw Error(Errc::ConfigError, "ROUGE stemming is not supported");

  std::vector<std::vector<std::string>> hyp_tokens, ref_tokens;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_tokens.push_back(rouge_tokens(hypotheses[i]));
    ref_tokens.push_back(rouge_tokens(references[i]));
  }

  std::vector<ScoreReport> out;
  for (RougeVariant v : cfg.variants) {
    ScoreReport report;
    report.metric_id = std::string(name_of(v));
    report.config_echo = to_json(cfg);
    double p = 0.0, r = 0.0, f = 0.0;
    for (size_t i = 0; i < hyp_tokens.size(); ++i) {
      const RougeTriple t = v == RougeVariant::RL ? rouge_l_segment(hyp_tokens[i], ref_tokens[i])
                                                  : rouge_n_segment(hyp_tokens[i], ref_tokens[i],
                                                                    v == RougeVariant::R1 ? 1 : 2);
      report.per_sample.push_back(t.f1);
      p += t.precision;
      r += t.recall;
      f += t.f1;
    }
    const auto n = static_cast<double>(hyp_tokens.size());
    report.corpus_score = f / n;
    report.components["precision"] = p / n;
    report.components["recall"] = r / n;
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace polyeval::metrics
