#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

// Model server client over the JSON wire protocol (/v1/generate,
// /v1/score_choices, /v1/token_nll, /v1/health).
namespace polyeval::inference {

struct ClientOptions {
  std::string base_url = "http://127.0.0.1:8000";
  double timeout_s = 120.0;
  int retries = 2;
  double backoff_s = 0.5;  // doubled after every retry
};

/// `POLYEVAL_BACKEND_URL` when set, else `configured`.
std::string backend_url(const std::string& configured);

struct GenerateResult {
  std::string output_text;
  size_t generated_token_count = 0;
  double wall_time = 0.0;  // seconds, successful attempt only
  int attempts = 1;
};

struct ChoiceScores {
  std::vector<double> choice_logits;        // first token
  std::vector<double> choice_logprob_sums;  // whole choice
};

struct TokenNllResult {
  std::vector<double> token_logprobs;
  size_t token_count = 0;
  size_t total_tokens = 0;  // tokens in the whole text
};

class ModelClient {
 public:
  explicit ModelClient(ClientOptions opts);

  const ClientOptions& options() const noexcept { return opts_; }

  /// GET /v1/health answered with 200.
  bool healthy() const;

  /// Output truncated client-side at the first stop string as well.
  GenerateResult generate(const std::string& prompt, size_t max_new_tokens, const std::vector<std::string>& stop) const;
  ChoiceScores score_choices(const std::string& prompt, const std::vector<std::string>& choices) const;
  /// Log-probabilities of tokens [start, end) given only tokens from
  /// `start` on as context. Without offsets the whole text is scored.
  TokenNllResult token_nll(const std::string& text, std::optional<size_t> start = std::nullopt,
                           std::optional<size_t> end = std::nullopt) const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body, int* attempts = nullptr) const;

  ClientOptions opts_;
};

/// Cuts `text` before the earliest occurrence of any stop string.
std::string truncate_at_stop(const std::string& text, const std::vector<std::string>& stop);

struct RankResult {
  size_t chosen = 0;
  std::vector<double> scores;         // first-token logits
  std::vector<double> logprob_sums;
  bool tie_broken = false;            // first-token logits did not decide
};

/// Argmax of first-token logits; equal maxima are settled by the
/// whole-choice log-probability sums, then by the lowest index.
RankResult rank_labels(const ModelClient& client, const std::string& prompt, const std::vector<std::string>& labels);
/// The decision rule alone, on scores already in hand.
RankResult rank_scores(const ChoiceScores& scores);

struct NllSegment {
  size_t start = 0;
  size_t end = 0;
  size_t scored_from = 0;
};

struct NllWindowPlan {
  size_t window = 1024;
  size_t stride = 512;
  std::vector<NllSegment> segments;
};

/// Segment i spans [i*stride, min(i*stride + window, n)); it scores from
/// its start (i = 0) or from start + window - stride. Scored ranges
/// partition [0, n).
NllWindowPlan plan_nll_windows(size_t n_tokens, size_t window = 1024, size_t stride = 512);

struct NllResult {
  double total_nll = 0.0;
  size_t n_tokens = 0;
  std::vector<double> window_nlls;
  std::vector<size_t> window_tokens;  // scored tokens per window
  NllWindowPlan plan;
};

NllResult compute_nll(const ModelClient& client, const std::string& text, size_t window = 1024, size_t stride = 512);

/// tokens / seconds; throws ZeroWallTime for seconds <= 0.
double measure_throughput(size_t tokens, double seconds);
/// `854 / 0.88 = 969.55`: seconds and rate to two decimals, the rate from
/// the unrounded time.
std::string throughput_cell(size_t tokens, double seconds);

/// Runs fn(0..n-1) on up to `parallelism` threads and returns results in
/// index order. If any call throws, the exception of the lowest failing
/// index is rethrown after all workers stop.
template <class T>
std::vector<T> run_ordered(size_t n, size_t parallelism, const std::function<T(size_t)>& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex mu;
  size_t next = 0;
  bool failed = false;
  const auto worker = [&] {
    for (;;) {
      size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || failed) return;
        i = next++;
      }
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
        std::lock_guard<std::mutex> lock(mu);
        failed = true;
      }
    }
  };
  const size_t threads = std::max<size_t>(1, std::min(parallelism, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace polyeval::inference
