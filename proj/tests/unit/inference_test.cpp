#include <doctest.h>

#include <cmath>
#include <random>

#include "polyeval/error.hpp"
#include "polyeval/inference.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/stub_server.hpp"

using namespace polyeval;
using namespace polyeval::inference;

namespace {

ClientOptions fast(const StubServer& s) {
  ClientOptions o;
  o.base_url = s.url();
  o.timeout_s = 5.0;
  o.backoff_s = 0.01;
  return o;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::ConfigError;
}

std::string words(size_t n) {
  std::string s;
  for (size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i % 37);
  return s;
}

// Oracle: every token scored by the stub with the full text as context.
double full_context_nll(const StubOptions& opts, const std::string& text) {
  const auto toks = stub_tokens(text);
  double nll = 0.0;
  for (size_t i = 0; i < toks.size(); ++i) nll -= stub_logprob(opts, toks, i, 0);
  return nll;
}

}  // namespace

TEST_CASE("generate against the echo stub") {
  StubServer stub;
  ModelClient client(fast(stub));
  CHECK(client.healthy());
  auto r = client.generate("abc", 16, {});
  CHECK(r.output_text == "abc");
  CHECK(r.generated_token_count == 1);
  CHECK(r.wall_time > 0.0);
  CHECK(r.attempts == 1);

  r = client.generate("instruction\nlast line here", 2, {});
  CHECK(r.output_text == "last line");
  CHECK(r.generated_token_count == 2);

  r = client.generate("abc", 0, {});
  CHECK(r.output_text.empty());
  CHECK(r.generated_token_count == 0);

  r = client.generate("x\nBonjour. || rest", 16, {"||"});
  CHECK(r.output_text == "Bonjour. ");
}

TEST_CASE("stop truncation") {
  CHECK(truncate_at_stop("a\n\nb", {"\n\n"}) == "a");
  CHECK(truncate_at_stop("a|b#c", {"#", "|"}) == "a");
  CHECK(truncate_at_stop("abc", {""}) == "abc");
  CHECK(truncate_at_stop("abc", {}) == "abc");
}

TEST_CASE("server and transport errors") {
  {
    StubOptions o;
    o.failure = FailureKind::Status500;
    o.fail_requests = 100;
    StubServer stub(o);
    ModelClient client(fast(stub));
    try {
      client.generate("x", 4, {});
      FAIL("expected ServerError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ServerError);
      CHECK(std::string(e.what()).find("500") != std::string::npos);
    }
  }
  {
    StubOptions o;
    o.failure = FailureKind::BadJson;
    o.fail_requests = 1;
    StubServer stub(o);
    ModelClient client(fast(stub));
    CHECK(code_of([&] { client.score_choices("p", {"a"}); }) == Errc::ProtocolError);
    CHECK(client.score_choices("p", {"a"}).choice_logits.size() == 1);
  }
  {
    ClientOptions o;
    o.base_url = "http://127.0.0.1:1";
    o.timeout_s = 1.0;
    o.retries = 1;
    o.backoff_s = 0.01;
    ModelClient client(o);
    CHECK_FALSE(client.healthy());
    CHECK(code_of([&] { client.generate("x", 1, {}); }) == Errc::BackendUnavailable);
  }
}

TEST_CASE("timeouts are retried") {
  StubOptions o;
  o.failure = FailureKind::Delay;
  o.delay_s = 0.6;
  o.fail_requests = 1;
  StubServer stub(o);
  auto opts = fast(stub);
  opts.timeout_s = 0.2;
  ModelClient client(opts);
  const auto r = client.generate("hello world", 8, {});
  CHECK(r.output_text == "hello world");
  CHECK(r.attempts == 2);
  // Only the successful attempt is timed and its tokens counted once.
  CHECK(r.generated_token_count == 2);
  CHECK(r.wall_time < 0.2);

  opts.retries = 0;
  StubServer slow(o);
  opts.base_url = slow.url();
  CHECK(code_of([&] { ModelClient(opts).generate("x", 1, {}); }) == Errc::Timeout);
}

TEST_CASE("label ranking") {
  StubOptions o;
  o.fixed_logits = {{"yes", 2.0}, {"no", 1.0}};
  StubServer stub(o);
  ModelClient client(fast(stub));
  auto r = rank_labels(client, "Is it?", {"yes", "no"});
  CHECK(r.chosen == 0);
  CHECK(r.scores == std::vector<double>{2.0, 1.0});
  CHECK_FALSE(r.tie_broken);
  CHECK(rank_labels(client, "Is it?", {"no", "yes"}).chosen == 1);
  CHECK(rank_labels(client, "Is it?", {"no"}).chosen == 0);
  CHECK(code_of([&] { rank_labels(client, "p", {}); }) == Errc::EmptyLabelSet);

  CHECK(rank_scores({{3.0, 3.0}, {-1.0, -1.0}}).chosen == 0);
  auto t = rank_scores({{3.0, 3.0, 1.0}, {-4.0, -2.0, 0.0}});
  CHECK(t.chosen == 1);
  CHECK(t.tie_broken);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    ChoiceScores s;
    const size_t n = 1 + rng() % 5;
    for (size_t k = 0; k < n; ++k) {
      s.choice_logits.push_back(std::round(u(rng)));
      s.choice_logprob_sums.push_back(std::round(u(rng)));
    }
    const auto base = rank_scores(s).chosen;
    for (double c : {-7.0, 0.5, 100.0}) {
      auto shifted = s;
      for (auto& x : shifted.choice_logits) x += c;
      CHECK(rank_scores(shifted).chosen == base);
    }
  }
}

TEST_CASE("window plans") {
  auto p = plan_nll_windows(800, 1024, 512);
  REQUIRE(p.segments.size() == 1);
  CHECK(p.segments[0].start == 0);
  CHECK(p.segments[0].scored_from == 0);
  CHECK(p.segments[0].end == 800);

  p = plan_nll_windows(1536, 1024, 512);
  REQUIRE(p.segments.size() == 2);
  CHECK(p.segments[0].end == 1024);
  CHECK(p.segments[1].start == 512);
  CHECK(p.segments[1].scored_from == 1024);
  CHECK(p.segments[1].end == 1536);

  CHECK(code_of([] { plan_nll_windows(10, 1024, 0); }) == Errc::InvalidStride);
  CHECK(code_of([] { plan_nll_windows(10, 4, 5); }) == Errc::InvalidStride);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const size_t window = 1 + rng() % 64;
    const size_t stride = 1 + rng() % window;
    const size_t n = 1 + rng() % 300;
    const auto plan = plan_nll_windows(n, window, stride);
    size_t next = 0;
    for (const auto& s : plan.segments) {
      CHECK(s.end - s.start <= window);
      CHECK(s.start <= s.scored_from);
      CHECK(s.scored_from == next);
      next = s.end;
    }
    CHECK(next == n);
  }
}

TEST_CASE("uniform NLL") {
  StubOptions o;
  o.vocab = 8;
  StubServer stub(o);
  ModelClient client(fast(stub));
  for (size_t n : {1, 1023, 1024, 1025, 4096}) {
    const auto r = compute_nll(client, words(n));
    CHECK(r.n_tokens == n);
    CHECK(std::abs(r.total_nll - static_cast<double>(n) * std::log(8.0)) <= 1e-9);
    const std::vector<double> w(r.window_nlls);
    const auto rep = metrics::aggregate_nll(w, r.window_tokens);
    CHECK(std::abs(std::log(rep.components.at("ppl")) - std::log(8.0)) <= 1e-12);
  }
  CHECK(code_of([&] { compute_nll(client, ""); }) == Errc::EmptyCorpus);

  const auto tok = client.token_nll("a b c");
  CHECK(tok.token_count == 3);
  CHECK(tok.total_tokens == 3);
}

TEST_CASE("windowed NLL against a full-context oracle") {
  StubOptions o;
  o.nll_mode = NllMode::Bigram;
  StubServer stub(o);
  ModelClient client(fast(stub));

  // Shorter than the window: one pass.
  auto text = words(300);
  CHECK(std::abs(compute_nll(client, text).total_nll - full_context_nll(o, text)) <= 1e-9);

  // The bigram stub only looks one token back, so scored ranges with at
  // least one token of context agree with the full-context oracle.
  text = words(1536);
  auto r = compute_nll(client, text);
  CHECK(r.window_nlls.size() == 2);
  CHECK(std::abs(r.total_nll - full_context_nll(o, text)) <= 1e-9);

  // stride == window: plain sum of independent windows.
  r = compute_nll(client, text, 512, 512);
  double independent = 0.0;
  for (size_t s = 0; s < 1536; s += 512) {
    const auto part = client.token_nll(text, s, s + 512);
    for (double lp : part.token_logprobs) independent -= lp;
  }
  CHECK(std::abs(r.total_nll - independent) <= 1e-9);
}

TEST_CASE("throughput") {
  CHECK(measure_throughput(100, 2.0) == 50.0);
  CHECK(measure_throughput(0, 1.0) == 0.0);
  CHECK(code_of([] { measure_throughput(5, 0.0); }) == Errc::ZeroWallTime);
  CHECK(throughput_cell(100, 2.0) == "100 / 2.00 = 50.00");
  // The published cell rounds seconds for display but divides by the
  // measured value.
  CHECK(throughput_cell(854, 854.0 / 969.55) == "854 / 0.88 = 969.55");
}

TEST_CASE("ordered parallel runs") {
  StubServer stub;
  ModelClient client(fast(stub));
  for (size_t p : {1, 2, 4, 8}) {
    const auto out = run_ordered<std::string>(40, p, [&](size_t i) {
      return client.generate("p\nitem " + std::to_string(i), 8, {}).output_text;
    });
    REQUIRE(out.size() == 40);
    for (size_t i = 0; i < 40; ++i) CHECK(out[i] == "item " + std::to_string(i));
  }
  try {
    run_ordered<int>(20, 4, [](size_t i) -> int {
      if (i == 7 || i == 13) throw Error(Errc::ServerError, std::to_string(i));
      return 0;
    });
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("backend url override") {
  ::setenv("POLYEVAL_BACKEND_URL", "http://example:9", 1);
  CHECK(backend_url("http://a:1") == "http://example:9");
  ::unsetenv("POLYEVAL_BACKEND_URL");
  CHECK(backend_url("http://a:1") == "http://a:1");
}
