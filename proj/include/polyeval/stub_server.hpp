#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>

#include "polyeval/langid.hpp"

// Deterministic in-process implementation of the model wire protocol and
// the /translate contract, for tests and offline runs.
namespace polyeval::inference {

enum class NllMode { Uniform, Bigram };
enum class FailureKind { None, Delay, Status500, BadJson };
enum class TranslateMode { Identity, Tagged };

struct StubOptions {
  size_t vocab = 8;
  NllMode nll_mode = NllMode::Uniform;
  /// Choice text -> first-token logit. Choices not listed get a hashed value.
  std::map<std::string, double> fixed_logits;
  /// The first `fail_requests` POSTs fail this way.
  FailureKind failure = FailureKind::None;
  int fail_requests = 0;
  double delay_s = 0.0;
  TranslateMode translate_mode = TranslateMode::Identity;
  std::set<std::string> drop_sentinel_targets;  // lose ⟦P0⟧ for these tags
  std::set<std::string> unsupported_targets;
};

/// Whitespace tokens; the stub's notion of a token.
std::vector<std::string> stub_tokens(const std::string& text);

/// Log-probability the stub assigns to token i of `tokens` when the
/// context window begins at `context_start`.
double stub_logprob(const StubOptions& opts, const std::vector<std::string>& tokens, size_t i, size_t context_start);

class StubServer {
 public:
  /// Binds 127.0.0.1 on `port` (0 picks a free port) and serves on a
  /// background thread until destruction.
  explicit StubServer(StubOptions opts = {}, int port = 0);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  int port() const noexcept { return port_; }
  std::string url() const;
  size_t requests() const noexcept { return requests_.load(); }
  /// Blocks until stopped (for the standalone binary).
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::atomic<size_t> requests_{0};
  std::thread thread_;
};

}  // namespace polyeval::inference
