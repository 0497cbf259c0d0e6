#include <optional>
#include <unordered_map>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/text.hpp"

namespace polyeval::metrics {
namespace {

using Counts = std::unordered_map<std::u32string, long>;

bool is_ascii_punct(char32_t c) {
  return c < 0x80 && std::string_view("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~").find(static_cast<char>(c)) !=
                         std::string_view::npos;
}

std::u32string strip_space(std::string_view s) {
  std::u32string out;
  for (char32_t c : text::to_u32(s)) {
    if (!text::is_space(c)) out.push_back(c);
  }
  return out;
}

Counts char_ngrams(const std::u32string& s, int n) {
  Counts c;
  if (s.size() < static_cast<size_t>(n)) return c;
  for (size_t i = 0; i + n <= s.size(); ++i) ++c[s.substr(i, n)];
  return c;
}

Counts word_ngrams(const std::vector<std::u32string>& words, int n) {
  Counts c;
  if (words.size() < static_cast<size_t>(n)) return c;
  for (size_t i = 0; i + n <= words.size(); ++i) {
    std::u32string key = words[i];
    for (int k = 1; k < n; ++k) {
      key.push_back(U' ');
      key += words[i + k];
    }
    ++c[key];
  }
  return c;
}

// Hypothesis n-grams are not counted when the reference has none of that order.
void match(const Counts& hyp, const Counts& ref, std::vector<long>& out) {
  long hyp_total = 0, ref_total = 0, matched = 0;
  for (const auto& [g, n] : hyp) {
    hyp_total += n;
    if (auto it = ref.find(g); it != ref.end()) matched += std::min(n, it->second);
  }
  for (const auto& [g, n] : ref) ref_total += n;
  out.push_back(ref.empty() ? 0 : hyp_total);
  out.push_back(ref_total);
  out.push_back(matched);
}

std::vector<std::u32string> word_units(std::string_view s) {
  std::vector<std::u32string> out;
  for (const auto& w : chrf_words(s)) out.push_back(text::to_u32(w));
  return out;
}

}  // namespace

std::vector<std::string> chrf_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& word : text::split_whitespace(s)) {
    const auto w = text::to_u32(word);
    if (w.size() == 1) {
      out.push_back(word);
    } else if (is_ascii_punct(w.back())) {
      out.push_back(text::to_utf8(std::u32string_view(w).substr(0, w.size() - 1)));
      out.push_back(text::to_utf8(w.back()));
    } else if (is_ascii_punct(w.front())) {
      out.push_back(text::to_utf8(w.front()));
      out.push_back(text::to_utf8(std::u32string_view(w).substr(1)));
    } else {
      out.push_back(word);
    }
  }
  return out;
}

std::vector<long> chrf_segment_stats(std::string_view hyp, std::string_view ref, const ChrfConfig& cfg) {
  std::vector<long> stats;
  stats.reserve(3 * (cfg.char_order + cfg.word_order));
  const auto h = cfg.whitespace_ignored ? strip_space(hyp) : text::to_u32(hyp);
  const auto r = cfg.whitespace_ignored ? strip_space(ref) : text::to_u32(ref);
  for (int n = 1; n <= cfg.char_order; ++n) match(char_ngrams(h, n), char_ngrams(r, n), stats);
  if (cfg.word_order > 0) {
    const auto hw = word_units(hyp);
    const auto rw = word_units(ref);
    for (int n = 1; n <= cfg.word_order; ++n) match(word_ngrams(hw, n), word_ngrams(rw, n), stats);
  }
  return stats;
}

double chrf_from_stats(std::span<const long> stats, const ChrfConfig& cfg) {
  const double factor = cfg.beta * cfg.beta;
  double avg_p = 0.0, avg_r = 0.0;
  int effective = 0;
  for (size_t i = 0; i + 2 < stats.size(); i += 3) {
    const long n_hyp = stats[i], n_ref = stats[i + 1], n_match = stats[i + 2];
    if (n_hyp > 0 && n_ref > 0) {
      avg_p += static_cast<double>(n_match) / static_cast<double>(n_hyp);
      avg_r += static_cast<double>(n_match) / static_cast<double>(n_ref);
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avg_p /= effective;
  avg_r /= effective;
  if (avg_p + avg_r == 0.0) return 0.0;
  return 100.0 * (1.0 + factor) * avg_p * avg_r / (factor * avg_p + avg_r);
}

ScoreReport chrf(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const ChrfConfig& cfg) {
  if (hypotheses.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                          std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) throw Error(Errc::EmptyCorpus, "chrF over zero segments");
  if (cfg.char_order < 1 || cfg.word_order < 0 || cfg.beta <= 0.0) {
    throw Error(Errc::ConfigError, "chrF orders must be positive and beta > 0");
  }

  ScoreReport report;
  report.metric_id = cfg.word_order > 0 ? "chrf++" : "chrf";
  std::vector<long> corpus(3 * (cfg.char_order + cfg.word_order), 0);
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const auto seg = chrf_segment_stats(hypotheses[i], references[i], cfg);
    report.per_sample.push_back(chrf_from_stats(seg, cfg));
    for (size_t k = 0; k < seg.size(); ++k) corpus[k] += seg[k];
  }
  report.corpus_score = chrf_from_stats(corpus, cfg);
  report.config_echo = to_json(cfg);
  report.signature = chrf_signature(cfg);
  return report;
}

ScoreReport chrf_by_gender(std::span<const GenderedPair> records, const ChrfConfig& cfg) {
  ScoreReport report;
  report.metric_id = "chrf_gender";
  report.config_echo = to_json(cfg);
  report.signature = chrf_signature(cfg);

  std::optional<double> scores[2];
  for (Gender g : {Gender::Masculine, Gender::Feminine}) {
    std::vector<std::string> hyps, refs;
    for (const auto& r : records) {
      if (r.gender == g) {
        hyps.push_back(r.hypothesis);
        refs.push_back(r.reference);
      }
    }
    const std::string name = g == Gender::Masculine ? "masculine" : "feminine";
    if (hyps.empty()) {
      report.notes.push_back("EmptySubgroup: " + name);
      continue;
    }
    scores[static_cast<int>(g)] = chrf(hyps, refs, cfg).corpus_score;
    report.subgroup_scores[name] = *scores[static_cast<int>(g)];
  }
  if (records.empty()) throw Error(Errc::EmptyCorpus, "chrF by gender over zero records");
  std::vector<std::string> hyps, refs;
  for (const auto& r : records) {
    hyps.push_back(r.hypothesis);
    refs.push_back(r.reference);
  }
  const auto all = chrf(hyps, refs, cfg);
  report.corpus_score = all.corpus_score;
  report.per_sample = all.per_sample;
  if (scores[0] && scores[1]) report.components["delta"] = *scores[0] - *scores[1];
  return report;
}

}  // namespace polyeval::metrics
