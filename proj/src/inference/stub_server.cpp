#include <httplib.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "polyeval/error.hpp"
#include "polyeval/stub_server.hpp"

namespace polyeval::inference {
namespace {

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic value in [-10, 0).
double hashed_score(std::string_view a, std::string_view b) {
  const std::string key = std::string(a) + '\x1f' + std::string(b);
  return static_cast<double>(fnv1a(key) % 10000) / 1000.0 - 10.0;
}

std::string last_line(const std::string& s) {
  const size_t nl = s.rfind('\n');
  return nl == std::string::npos ? s : s.substr(nl + 1);
}

void reply(httplib::Response& res, const nlohmann::json& body) {
  res.set_content(body.dump(), "application/json");
}

void bad_request(httplib::Response& res, const std::string& why) {
  res.status = 400;
  reply(res, {{"error", why}});
}

}  // namespace

std::vector<std::string> stub_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double stub_logprob(const StubOptions& opts, const std::vector<std::string>& tokens, size_t i, size_t context_start) {
  const double base = -std::log(static_cast<double>(opts.vocab));
  if (opts.nll_mode == NllMode::Uniform || i <= context_start) return base;
  return base - 0.05 * static_cast<double>(fnv1a(tokens.at(i - 1) + " " + tokens.at(i)) % 20);
}

struct StubServer::Impl {
  StubOptions opts;
  httplib::Server svr;
  std::atomic<int> posts{0};

  // True when this POST was answered by failure injection.
  bool inject(httplib::Response& res) {
    if (opts.failure == FailureKind::None || posts.fetch_add(1) >= opts.fail_requests) return false;
    switch (opts.failure) {
      case FailureKind::Delay:
        std::this_thread::sleep_for(std::chrono::duration<double>(opts.delay_s));
        return false;
      case FailureKind::Status500:
        res.status = 500;
        reply(res, {{"error", "injected failure"}});
        return true;
      case FailureKind::BadJson:
        res.set_content("{not json", "application/json");
        return true;
      case FailureKind::None:
        break;
    }
    return false;
  }

  void generate(const nlohmann::json& req, httplib::Response& res) const {
    const auto prompt = req.at("prompt").get<std::string>();
    const auto max_new = req.value("max_new_tokens", size_t{128});
    const auto stop = req.value("stop", std::vector<std::string>{});
    std::string out = last_line(prompt);
    auto toks = stub_tokens(out);
    if (toks.size() > max_new) {
      out.clear();
      for (size_t i = 0; i < max_new; ++i) out += (i ? " " : "") + toks[i];
    }
    size_t cut = out.size();
    for (const auto& s : stop) {
      if (!s.empty()) cut = std::min(cut, out.find(s));
    }
    out.resize(cut);
    reply(res, {{"output_text", out}, {"generated_token_count", stub_tokens(out).size()}});
  }

  void score_choices(const nlohmann::json& req, httplib::Response& res) const {
    const std::string context = last_line(req.at("prompt").get<std::string>());
    std::vector<double> logits, sums;
    for (const auto& c : req.at("choices")) {
      const auto choice = c.get<std::string>();
      const auto toks = stub_tokens(choice);
      const std::string first = toks.empty() ? "" : toks.front();
      const auto fixed = opts.fixed_logits.find(choice);
      logits.push_back(fixed != opts.fixed_logits.end() ? fixed->second : hashed_score(context, first));
      double sum = 0.0;
      for (const auto& t : toks) sum += hashed_score(context + " " + t, "sum");
      sums.push_back(sum);
    }
    reply(res, {{"choice_logits", logits}, {"choice_logprob_sums", sums}});
  }

  void token_nll(const nlohmann::json& req, httplib::Response& res) const {
    const auto toks = stub_tokens(req.at("text").get<std::string>());
    const size_t n = toks.size();
    const size_t start = req.value("start", size_t{0});
    const size_t end = std::min(req.value("end", n), n);
    if (start > end || (start == end && n > 0)) return bad_request(res, "empty token range");
    std::vector<double> lp;
    for (size_t i = start; i < end; ++i) lp.push_back(stub_logprob(opts, toks, i, start));
    reply(res, {{"token_logprobs", lp}, {"token_count", lp.size()}, {"total_tokens", n}});
  }

  void translate(const nlohmann::json& req, httplib::Response& res) const {
    const auto texts = req.at("texts").get<std::vector<std::string>>();
    nlohmann::json out = nlohmann::json::array();
    for (const auto& to : req.at("to")) {
      const auto tag = to.get<std::string>();
      if (opts.unsupported_targets.count(tag)) continue;
      std::vector<std::string> translated;
      for (auto t : texts) {
        if (opts.translate_mode == TranslateMode::Tagged) t = "[" + tag + "] " + t;
        if (opts.drop_sentinel_targets.count(tag)) {
          const std::string s0 = "⟦P0⟧";
          for (size_t p; (p = t.find(s0)) != std::string::npos;) t.erase(p, s0.size());
        }
        translated.push_back(std::move(t));
      }
      out.push_back({{"to", tag}, {"texts", translated}});
    }
    reply(res, {{"translations", out}});
  }

  template <class F>
  httplib::Server::Handler handler(F method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      if (inject(res)) return;
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
        (this->*method)(body, res);
      } catch (const std::exception& e) {
        bad_request(res, e.what());
      }
    };
  }
};

StubServer::StubServer(StubOptions opts, int port) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(opts);
  auto& svr = impl_->svr;
  svr.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
    ++requests_;
    return httplib::Server::HandlerResponse::Unhandled;
  });
  svr.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) { reply(res, {{"status", "ok"}}); });
  svr.Post("/v1/generate", impl_->handler(&Impl::generate));
  svr.Post("/v1/score_choices", impl_->handler(&Impl::score_choices));
  svr.Post("/v1/token_nll", impl_->handler(&Impl::token_nll));
  svr.Post("/translate", impl_->handler(&Impl::translate));

  if (port == 0) {
    port_ = svr.bind_to_any_port("127.0.0.1");
  } else if (svr.bind_to_port("127.0.0.1", port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) throw Error(Errc::ConfigError, "stub server cannot bind 127.0.0.1:" + std::to_string(port));
  thread_ = std::thread([this] { impl_->svr.listen_after_bind(); });
  svr.wait_until_ready();
}

StubServer::~StubServer() {
  impl_->svr.stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void StubServer::wait() {
  if (thread_.joinable()) thread_.join();
}

}  // namespace polyeval::inference
