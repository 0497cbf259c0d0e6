#include <algorithm>
#include <cmath>
#include <cstdio>

#include "polyeval/error.hpp"
#include "polyeval/inference.hpp"

namespace polyeval::inference {

RankResult rank_scores(const ChoiceScores& scores) {
  const auto& logits = scores.choice_logits;
  if (logits.empty()) throw Error(Errc::EmptyLabelSet, "no labels to rank");
  RankResult r;
  r.scores = logits;
  r.logprob_sums = scores.choice_logprob_sums;
  const double best = *std::max_element(logits.begin(), logits.end());
  std::vector<size_t> tied;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] == best) tied.push_back(i);
  }
  r.chosen = tied.front();
  if (tied.size() > 1) {
    r.tie_broken = true;
    for (size_t i : tied) {
      if (r.logprob_sums.at(i) > r.logprob_sums.at(r.chosen)) r.chosen = i;
    }
  }
  return r;
}

RankResult rank_labels(const ModelClient& client, const std::string& prompt, const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error(Errc::EmptyLabelSet, "no labels to rank");
  return rank_scores(client.score_choices(prompt, labels));
}

NllWindowPlan plan_nll_windows(size_t n_tokens, size_t window, size_t stride) {
  if (stride == 0 || window == 0 || stride > window) {
    throw Error(Errc::InvalidStride, "need 0 < stride <= window, got stride " + std::to_string(stride) +
                                         " and window " + std::to_string(window));
  }
  if (n_tokens == 0) throw Error(Errc::EmptyCorpus, "no tokens to plan windows over");
  NllWindowPlan plan;
  plan.window = window;
  plan.stride = stride;
  for (size_t i = 0;; ++i) {
    NllSegment s;
    s.start = i * stride;
    s.end = std::min(s.start + window, n_tokens);
    s.scored_from = i == 0 ? s.start : std::min(s.start + (window - stride), s.end);
    plan.segments.push_back(s);
    if (s.end == n_tokens) break;
  }
  return plan;
}

NllResult compute_nll(const ModelClient& client, const std::string& text, size_t window, size_t stride) {
  if (text.empty()) throw Error(Errc::EmptyCorpus, "NLL of empty text");
  if (stride == 0 || window == 0 || stride > window) plan_nll_windows(1, window, stride);

  // The first window also reports the text's token count.
  const auto first = client.token_nll(text, 0, window);
  NllResult out;
  out.n_tokens = first.total_tokens;
  if (out.n_tokens == 0) throw Error(Errc::EmptyCorpus, "text has no tokens");
  out.plan = plan_nll_windows(out.n_tokens, window, stride);
  for (size_t k = 0; k < out.plan.segments.size(); ++k) {
    const auto& seg = out.plan.segments[k];
    const auto res = k == 0 ? first : client.token_nll(text, seg.start, seg.end);
    if (res.token_logprobs.size() != seg.end - seg.start) {
      throw Error(Errc::ProtocolError, "/v1/token_nll: window [" + std::to_string(seg.start) + ", " +
                                           std::to_string(seg.end) + ") returned " +
                                           std::to_string(res.token_logprobs.size()) + " values");
    }
    double nll = 0.0;
    for (size_t i = seg.scored_from; i < seg.end; ++i) nll -= res.token_logprobs[i - seg.start];
    out.window_nlls.push_back(nll);
    out.window_tokens.push_back(seg.end - seg.scored_from);
    out.total_nll += nll;
  }
  return out;
}

double measure_throughput(size_t tokens, double seconds) {
  if (!(seconds > 0.0)) throw Error(Errc::ZeroWallTime, "wall time " + std::to_string(seconds) + " s");
  return static_cast<double>(tokens) / seconds;
}

std::string throughput_cell(size_t tokens, double seconds) {
  const double rate = measure_throughput(tokens, seconds);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu / %.2f = %.2f", tokens, seconds, rate);
  return buf;
}

}  // namespace polyeval::inference
