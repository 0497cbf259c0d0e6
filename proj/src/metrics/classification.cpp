#include <map>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"

namespace polyeval::metrics {

ClassificationScores classification_scores(std::span<const std::string> predictions,
                                           std::span<const std::string> gold) {
  if (predictions.size() != gold.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                          std::to_string(gold.size()) + " gold labels");
  }
  if (gold.empty()) throw Error(Errc::EmptyCorpus, "classification over zero samples");

  struct Cell {
    size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Cell, std::less<>> cells;
  ClassificationScores out;
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    const bool hit = predictions[i] == gold[i];
    out.accuracy.per_sample.push_back(hit ? 1.0 : 0.0);
    if (hit) {
      ++correct;
      ++cells[gold[i]].tp;
    } else {
      ++cells[gold[i]].fn;
      ++cells[predictions[i]].fp;
    }
  }

  out.accuracy.metric_id = "accuracy";
  out.accuracy.corpus_score = static_cast<double>(correct) / static_cast<double>(gold.size());

  // Classes that never occur in gold do not get an F1 of their own.
  double f1_sum = 0.0;
  size_t classes = 0;
  for (const auto& [label, c] : cells) {
    if (c.tp + c.fn == 0) continue;
    ++classes;
    const double f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    f1_sum += f1;
    out.macro_f1.components["f1:" + label] = f1;
  }
  out.macro_f1.metric_id = "macro_f1";
  out.macro_f1.corpus_score = f1_sum / static_cast<double>(classes);
  return out;
}

}  // namespace polyeval::metrics
