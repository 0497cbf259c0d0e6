#include <cmath>

#include "polyeval/error.hpp"
#include "polyeval/metrics.hpp"

namespace polyeval::metrics {

ScoreReport aggregate_nll(std::span<const double> window_nlls, std::span<const size_t> token_counts) {
  if (window_nlls.size() != token_counts.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(window_nlls.size()) + " window NLLs vs " +
                                          std::to_string(token_counts.size()) + " token counts");
  }
  double total = 0.0;
  size_t tokens = 0;
  for (size_t i = 0; i < window_nlls.size(); ++i) {
    total += window_nlls[i];
    tokens += token_counts[i];
  }
  if (tokens == 0) throw Error(Errc::EmptyCorpus, "NLL over zero tokens");

  ScoreReport report;
  report.metric_id = "nll";
  report.corpus_score = total;
  report.per_sample.assign(window_nlls.begin(), window_nlls.end());
  report.components["tokens"] = static_cast<double>(tokens);
  report.components["ppl"] = std::exp(total / static_cast<double>(tokens));
  return report;
}

}  // namespace polyeval::metrics
