#include <set>
#include <tuple>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"

namespace polyeval::metrics {
namespace {

void check_shape(const TagSequences& predicted, const TagSequences& gold) {
  if (predicted.size() != gold.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(predicted.size()) + " predicted vs " +
                                          std::to_string(gold.size()) + " gold sentences");
  }
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i].size() != gold[i].size()) {
      throw Error(Errc::TagLengthMismatch, "sentence " + std::to_string(i) + ": " +
                                               std::to_string(predicted[i].size()) + " vs " +
                                               std::to_string(gold[i].size()) + " tags");
    }
  }
}

double f1_of(size_t tp, size_t n_pred, size_t n_gold) {
  if (n_pred == 0 && n_gold == 0) return 1.0;
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(n_pred + n_gold);
}

}  // namespace

BioDecode decode_bio(std::span<const std::string> tags) {
  BioDecode out;
  std::optional<Span> open;
  const auto close = [&](size_t end) {
    if (open) {
      open->end = end;
      out.spans.push_back(*open);
      open.reset();
    }
  };
  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (t == "O") {
      close(i);
      continue;
    }
    if (t.size() < 3 || t[1] != '-' || (t[0] != 'B' && t[0] != 'I')) {
      throw Error(Errc::MalformedTag, "'" + t + "' at position " + std::to_string(i));
    }
    std::string type = t.substr(2);
    if (t[0] == 'I' && open && open->type == type) continue;
    if (t[0] == 'I') ++out.repaired;
    close(i);
    open = Span{std::move(type), i, i};
  }
  close(tags.size());
  return out;
}

ScoreReport span_f1(const TagSequences& predicted, const TagSequences& gold) {
  check_shape(predicted, gold);
  if (gold.empty()) throw Error(Errc::EmptyCorpus, "span F1 over zero sentences");

  ScoreReport report;
  report.metric_id = "span_f1";
  size_t tp = 0, n_pred = 0, n_gold = 0, repaired = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto p = decode_bio(predicted[i]);
    const auto g = decode_bio(gold[i]);
    repaired += p.repaired + g.repaired;
    const std::set<Span> gs(g.spans.begin(), g.spans.end());
    size_t hits = 0;
    for (const auto& s : p.spans) hits += gs.count(s);
    report.per_sample.push_back(f1_of(hits, p.spans.size(), g.spans.size()));
    tp += hits;
    n_pred += p.spans.size();
    n_gold += g.spans.size();
  }
  report.corpus_score = f1_of(tp, n_pred, n_gold);
  report.components["precision"] = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  report.components["recall"] = n_gold ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  report.components["repaired_tags"] = static_cast<double>(repaired);
  if (repaired > 0) report.notes.push_back(std::to_string(repaired) + " I- tags without a preceding span read as B-");
  return report;
}

ScoreReport token_accuracy(const TagSequences& predicted, const TagSequences& gold) {
  check_shape(predicted, gold);
  ScoreReport report;
  report.metric_id = "token_accuracy";
  size_t correct = 0, total = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    size_t c = 0;
    for (size_t k = 0; k < gold[i].size(); ++k) c += predicted[i][k] == gold[i][k];
    report.per_sample.push_back(gold[i].empty() ? 1.0 : static_cast<double>(c) / static_cast<double>(gold[i].size()));
    correct += c;
    total += gold[i].size();
  }
  if (total == 0) throw Error(Errc::EmptyCorpus, "token accuracy over zero tokens");
  report.corpus_score = static_cast<double>(correct) / static_cast<double>(total);
  return report;
}

}  // namespace polyeval::metrics
