#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "polyeval/error.hpp"
#include "polyeval/inference.hpp"

namespace polyeval::inference {
namespace {

using Clock = std::chrono::steady_clock;

void set_timeouts(httplib::Client& cli, double seconds) {
  const auto s = static_cast<time_t>(seconds);
  const auto us = static_cast<time_t>((seconds - static_cast<double>(s)) * 1e6);
  cli.set_connection_timeout(s, us);
  cli.set_read_timeout(s, us);
  cli.set_write_timeout(s, us);
}

[[noreturn]] void protocol(const std::string& path, const std::string& why) {
  throw Error(Errc::ProtocolError, path + ": " + why);
}

std::vector<double> numbers(const nlohmann::json& body, const char* key, const std::string& path) {
  if (!body.contains(key) || !body.at(key).is_array()) protocol(path, std::string("missing array '") + key + "'");
  std::vector<double> out;
  for (const auto& v : body.at(key)) {
    if (!v.is_number()) protocol(path, std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

size_t count(const nlohmann::json& body, const char* key, const std::string& path) {
  if (!body.contains(key) || !body.at(key).is_number_integer() || body.at(key).get<long long>() < 0) {
    protocol(path, std::string("missing non-negative integer '") + key + "'");
  }
  return body.at(key).get<size_t>();
}

// Thread-local wall time of the last successful POST.
thread_local double last_wall_time = 0.0;

}  // namespace

std::string backend_url(const std::string& configured) {
  if (const char* env = std::getenv("POLYEVAL_BACKEND_URL"); env && *env) return env;
  return configured;
}

ModelClient::ModelClient(ClientOptions opts) : opts_(std::move(opts)) {}

bool ModelClient::healthy() const {
  httplib::Client cli(opts_.base_url);
  set_timeouts(cli, std::min(opts_.timeout_s, 10.0));
  const auto res = cli.Get("/v1/health");
  return res && res->status == 200;
}

nlohmann::json ModelClient::post(const std::string& path, const nlohmann::json& body, int* attempts) const {
  const std::string payload = body.dump();
  double backoff = opts_.backoff_s;
  for (int attempt = 0;; ++attempt) {
    httplib::Client cli(opts_.base_url);
    set_timeouts(cli, opts_.timeout_s);
    const auto t0 = Clock::now();
    const auto res = cli.Post(path, payload, "application/json");
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    if (res) {
      if (attempts) *attempts = attempt + 1;
      if (res->status != 200) {
        throw Error(Errc::ServerError, std::to_string(res->status) + " from " + opts_.base_url + path);
      }
      last_wall_time = elapsed;
      try {
        auto j = nlohmann::json::parse(res->body);
        if (!j.is_object()) protocol(path, "response is not a JSON object");
        return j;
      } catch (const nlohmann::json::parse_error& e) {
        protocol(path, std::string("malformed JSON: ") + e.what());
      }
    }
    const Errc code = res.error() == httplib::Error::Connection ? Errc::BackendUnavailable : Errc::Timeout;
    if (attempt >= opts_.retries) {
      throw Error(code, opts_.base_url + path + " after " + std::to_string(attempt + 1) + " attempts (" +
                            httplib::to_string(res.error()) + ")");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= 2.0;
  }
}

std::string truncate_at_stop(const std::string& text, const std::vector<std::string>& stop) {
  size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  return text.substr(0, cut);
}

GenerateResult ModelClient::generate(const std::string& prompt, size_t max_new_tokens,
                                     const std::vector<std::string>& stop) const {
  const std::string path = "/v1/generate";
  nlohmann::json req{{"prompt", prompt}, {"max_new_tokens", max_new_tokens}, {"stop", stop}};
  GenerateResult out;
  const auto body = post(path, req, &out.attempts);
  out.wall_time = last_wall_time;
  if (!body.contains("output_text") || !body.at("output_text").is_string()) protocol(path, "missing 'output_text'");
  out.output_text = truncate_at_stop(body.at("output_text").get<std::string>(), stop);
  out.generated_token_count = count(body, "generated_token_count", path);
  return out;
}

ChoiceScores ModelClient::score_choices(const std::string& prompt, const std::vector<std::string>& choices) const {
  const std::string path = "/v1/score_choices";
  const auto body = post(path, {{"prompt", prompt}, {"choices", choices}});
  ChoiceScores out;
  out.choice_logits = numbers(body, "choice_logits", path);
  out.choice_logprob_sums = numbers(body, "choice_logprob_sums", path);
  if (out.choice_logits.size() != choices.size() || out.choice_logprob_sums.size() != choices.size()) {
    protocol(path, "expected " + std::to_string(choices.size()) + " scores per list");
  }
  return out;
}

TokenNllResult ModelClient::token_nll(const std::string& text, std::optional<size_t> start,
                                      std::optional<size_t> end) const {
  const std::string path = "/v1/token_nll";
  nlohmann::json req{{"text", text}};
  if (start) req["start"] = *start;
  if (end) req["end"] = *end;
  const auto body = post(path, req);
  TokenNllResult out;
  out.token_logprobs = numbers(body, "token_logprobs", path);
  out.token_count = count(body, "token_count", path);
  out.total_tokens = body.contains("total_tokens") ? count(body, "total_tokens", path) : out.token_count;
  if (out.token_count != out.token_logprobs.size()) protocol(path, "token_count differs from |token_logprobs|");
  if (start && end) {
    const size_t hi = std::min(*end, out.total_tokens);
    const size_t expected = hi - std::min(hi, *start);
    if (out.token_count != expected) {
      protocol(path, "expected " + std::to_string(expected) + " log-probabilities");
    }
  }
  return out;
}

}  // namespace polyeval::inference
