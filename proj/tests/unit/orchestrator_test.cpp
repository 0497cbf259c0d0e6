#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "polyeval/error.hpp"
#include "polyeval/orchestrator.hpp"
#include "polyeval/stub_server.hpp"
#include "support/temp_dir.hpp"

using namespace polyeval;
using namespace polyeval::orchestrator;
using langid::LanguageTag;
using testing_support::fixtures_dir;
using testing_support::read_file;
using testing_support::TempDir;

namespace {

RunConfig fixture_config(const inference::StubServer& stub, const TempDir& out) {
  ::unsetenv("POLYEVAL_BACKEND_URL");
  auto c = load_config(fixtures_dir() / "run" / "golden.json");
  c.backend_url = stub.url();
  c.output_dir = out.path();
  return c;
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

const BenchmarkResult& bench(const RunSummary& s, const std::string& id) {
  for (const auto& b : s.benchmarks) {
    if (b.benchmark_id == id) return b;
  }
  throw std::runtime_error("no result for " + id);
}

std::vector<std::string> subset_names(const BenchmarkResult& b) {
  std::vector<std::string> out;
  for (const auto& s : b.subsets) out.push_back(s.subset);
  return out;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polyeval");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("postprocess") {
  CHECK(postprocess(" Bonjour.\n\nExtra", TaskKind::Translation).text == "Bonjour.");
  CHECK(postprocess("a ||b", TaskKind::Summarization, {"||"}).text == "a");
  CHECK(postprocess("line one\n  \nline two", TaskKind::OpenGeneration, {}).text == "line one");
  CHECK(postprocess("  two\nlines  ", TaskKind::Translation).text == "two\nlines");

  const auto letter = [](const std::string& raw) {
    const auto p = postprocess(raw, TaskKind::Comprehension);
    return p.unparsed ? std::string("<unparsed>") : p.text;
  };
  CHECK(letter("The answer is (B).") == "B");
  CHECK(letter("no option here") == "<unparsed>");
  CHECK(letter("C") == "C");
  CHECK(letter("c") == "C");
  CHECK(letter("(d)") == "D");
  CHECK(letter("a) first") == "A");
  CHECK(letter("Answer: b.") == "B");
  CHECK(letter("It is a dog") == "<unparsed>");
  CHECK(letter("E. none") == "<unparsed>");
  CHECK(letter("ABBA D") == "D");
  CHECK(letter("答案是B") == "B");
  CHECK(letter("") == "<unparsed>");
}

TEST_CASE("config files") {
  const auto c = load_config(fixtures_dir() / "run" / "golden.json");
  CHECK(c.registry_dir == fixtures_dir() / "run" / "../benchmarks");
  CHECK(c.pivot == LanguageTag("eng", "Latn"));
  CHECK(c.n_shot == 1);
  CHECK(c.timing.mode == Timing::Mode::Modeled);
  CHECK(c.benchmarks.size() == 4);

  CHECK(code_of([] { parse_config({{"colour", 1}}, {}); }) == Errc::ConfigError);
  CHECK(code_of([] { parse_config({{"pivot", "english"}}, {}); }) == Errc::ConfigError);
  CHECK(code_of([] { parse_config({{"window", 4}, {"stride", 8}}, {}); }) == Errc::ConfigError);
  CHECK(code_of([] { parse_config({{"parallelism", 0}}, {}); }) == Errc::ConfigError);
  CHECK(parse_config({{"langs", "zho, spa_Latn"}}, {}).langs == std::vector<std::string>{"zho", "spa_Latn"});
  CHECK(code_of([] { parse_config({{"prompt_strategy", "single"}}, {}).strategy(); }) == Errc::ConfigError);

  const auto echo = config_echo(c);
  CHECK_FALSE(echo.contains("output_dir"));
  CHECK_FALSE(echo.contains("backend_url"));
  CHECK_FALSE(echo.contains("parallelism"));
  CHECK_FALSE(echo.contains("timeout_s"));
  CHECK(echo.at("timing").at("mode") == "modeled");
}

TEST_CASE("fixture run") {
  inference::StubServer stub;
  TempDir out;
  const auto cfg = fixture_config(stub, out);
  const auto s = run(cfg);
  CHECK(s.ok());

  const auto& flores = bench(s, "flores_mini");
  CHECK(subset_names(flores) == std::vector<std::string>{"cmn_Hans-eng_Latn", "fin_Latn-eng_Latn", "fra_Latn-eng_Latn",
                                                          "eng_Latn-cmn_Hans", "eng_Latn-fin_Latn", "eng_Latn-fra_Latn"});
  // Completeness: min(limit, size) - n_shot records per subset.
  size_t expected = 0;
  for (const auto& b : s.benchmarks) {
    for (const auto& sub : b.subsets) {
      CHECK(sub.n_fewshot == 1);
      expected += sub.n_scored;
    }
  }
  CHECK(expected == 6 * 5 + (5 + 3) + (3 + 2) + (3 + 2));
  CHECK(s.records.size() == expected);

  // Multi: every flores source has a template; sib spa_Latn falls back.
  for (const auto& sub : flores.subsets) CHECK(sub.fallback_count == 0);
  const auto& sib = bench(s, "sib_mini");
  CHECK(sib.subsets.at(1).subset == "spa_Latn");
  CHECK(sib.subsets.at(1).prompt_language == "eng_Latn");
  CHECK(sib.subsets.at(1).fallback_count == 3);
  const auto fallbacks = summary_json(s).at("prompt_fallbacks");
  CHECK(fallbacks.at("by_benchmark").at("sib_mini") == 3);
  CHECK(fallbacks.at("by_benchmark").at("belebele_mini") == 0);
  CHECK(fallbacks.at("total") == 3 + 2);

  for (const auto& sub : flores.subsets) {
    REQUIRE(sub.throughput);
    CHECK(sub.throughput->cell == inference::throughput_cell(sub.throughput->tokens, sub.throughput->seconds));
  }
  const auto& text = bench(s, "textmini");
  REQUIRE(text.subsets.at(0).reports.size() == 1);
  CHECK(text.subsets.at(0).reports[0].metric_id == "nll");
  CHECK_FALSE(text.subsets.at(0).throughput);

  emit_reports(s, cfg);
  const auto csv = read_file(out.path() / "scores.csv");
  size_t reports = 0;
  for (const auto& b : s.benchmarks) {
    for (const auto& sub : b.subsets) reports += sub.reports.size();
  }
  CHECK(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) == reports + 1);
  const auto details = read_file(out.path() / "details.jsonl");
  CHECK(static_cast<size_t>(std::count(details.begin(), details.end(), '\n')) == s.records.size());
}

TEST_CASE("few-shot prompts") {
  inference::StubServer stub;
  TempDir out;
  auto cfg = fixture_config(stub, out);
  cfg.benchmarks = {"flores_mini"};
  cfg.n_shot = 3;
  const auto s = run(cfg);
  for (const auto& r : s.records) {
    if (r.subset != "fin_Latn-eng_Latn") continue;
    // Three demonstration blocks, then the instruction.
    size_t blocks = 0;
    for (size_t p = r.prompt.find("[Suomen kieli]: "); p != std::string::npos; p = r.prompt.find("[Suomen kieli]: ", p + 1)) {
      ++blocks;
    }
    CHECK(blocks == 4);
    CHECK(r.prompt.find("Käännä seuraava lause") != std::string::npos);
  }
  CHECK(s.records.size() == 6 * 3);
}

TEST_CASE("direction modes and language queries") {
  inference::StubServer stub;
  TempDir out;
  auto cfg = fixture_config(stub, out);
  cfg.benchmarks = {"flores_mini"};

  std::set<std::string> both, any, pivot;
  for (auto [mode, dst] : {std::pair{registry::DirectionMode::Both, &both},
                           std::pair{registry::DirectionMode::AnyToPivot, &any},
                           std::pair{registry::DirectionMode::PivotToAny, &pivot}}) {
    cfg.direction_mode = mode;
    const auto names = subset_names(run(cfg).benchmarks.at(0));
    dst->insert(names.begin(), names.end());
    CHECK(dst->size() == names.size());
  }
  std::set<std::string> uni = any;
  uni.insert(pivot.begin(), pivot.end());
  CHECK(both == uni);
  CHECK(any.size() + pivot.size() == both.size());

  cfg.direction_mode = registry::DirectionMode::Both;
  cfg.benchmarks = {"all"};
  cfg.langs = {"zho"};
  const auto s = run(cfg);
  REQUIRE(s.benchmarks.size() == 1);
  CHECK(subset_names(s.benchmarks[0]) == std::vector<std::string>{"cmn_Hans-eng_Latn", "eng_Latn-cmn_Hans"});

  cfg.langs = {"spa"};
  cfg.pivot.reset();
  const auto spa = run(cfg);
  REQUIRE(spa.benchmarks.size() == 2);
  CHECK(spa.warnings.empty());
  for (const auto& b : spa.benchmarks) CHECK(subset_names(b) == std::vector<std::string>{"spa_Latn"});
}

TEST_CASE("prompt strategies") {
  inference::StubServer stub;
  TempDir out;
  auto cfg = fixture_config(stub, out);
  cfg.benchmarks = {"flores_mini"};
  cfg.prompt_strategy = promptlib::StrategyMode::Single;
  cfg.prompt_lang = LanguageTag("fin", "Latn");
  const auto fin = run(cfg);
  for (const auto& sub : fin.benchmarks[0].subsets) {
    CHECK(sub.prompt_language == "fin_Latn");
    CHECK(sub.fallback_count == 0);
  }
  for (const auto& r : fin.records) {
    CHECK(r.prompt.find("Käännä seuraava lause") != std::string::npos);
    CHECK_FALSE(r.used_fallback_prompt);
  }

  // Single(eng_Latn) and Multi agree on eng_Latn subsets.
  cfg.benchmarks = {"sib_mini", "belebele_mini", "textmini"};
  cfg.prompt_lang = LanguageTag("eng", "Latn");
  const auto single = run(cfg);
  cfg.prompt_strategy = promptlib::StrategyMode::Multi;
  const auto multi = run(cfg);
  size_t compared = 0;
  for (size_t i = 0; i < single.records.size(); ++i) {
    if (single.records[i].subset != "eng_Latn") continue;
    CHECK(single.records[i].prompt == multi.records.at(i).prompt);
    ++compared;
  }
  CHECK(compared == 5 + 3 + 3);
}

TEST_CASE("run failures") {
  inference::StubServer stub;
  TempDir out;
  auto cfg = fixture_config(stub, out);

  auto bad = cfg;
  bad.benchmarks = {"nope"};
  CHECK(code_of([&] { run(bad); }) == Errc::NoBenchmarkMatched);
  bad = cfg;
  bad.langs = {"xho"};
  CHECK(code_of([&] { run(bad); }) == Errc::NoBenchmarkMatched);
  bad = cfg;
  bad.pivot.reset();
  CHECK(code_of([&] { run(bad); }) == Errc::ConfigError);
  bad = cfg;
  bad.backend_url = "http://127.0.0.1:1";
  bad.retries = 0;
  CHECK(code_of([&] { run(bad); }) == Errc::BackendUnavailable);

  // Pivot outside one benchmark aborts that benchmark only.
  bad = cfg;
  bad.benchmarks = {"flores_mini", "sib_mini"};
  bad.pivot = LanguageTag("deu", "Latn");
  const auto partial = run(bad);
  CHECK_FALSE(partial.ok());
  CHECK(bench(partial, "flores_mini").error.value().find("PivotNotInBenchmark") == 0);
  CHECK_FALSE(bench(partial, "sib_mini").error);
  CHECK(bench(partial, "sib_mini").subsets.size() == 2);

  // Output directory below a regular file.
  auto s = run(cfg);
  auto unwritable = cfg;
  unwritable.output_dir = out.write("file", "x") / "sub";
  CHECK(code_of([&] { emit_reports(s, unwritable); }) == Errc::OutputDirNotWritable);

  // store_details off: no details.jsonl, and a stale one is removed.
  out.write("details.jsonl", "old\n");
  cfg.store_details = false;
  emit_reports(run(cfg), cfg);
  CHECK(std::filesystem::exists(out.path() / "summary.json"));
  CHECK_FALSE(std::filesystem::exists(out.path() / "details.jsonl"));
}

TEST_CASE("backend retries keep token counts") {
  inference::StubOptions opts;
  opts.failure = inference::FailureKind::Status500;
  opts.fail_requests = 1;
  inference::StubServer flaky(opts);
  inference::StubServer clean;
  TempDir out;
  auto cfg = fixture_config(flaky, out);
  cfg.benchmarks = {"flores_mini"};
  // A 500 is not retried: the first direction aborts the benchmark.
  CHECK(bench(run(cfg), "flores_mini").error.value().find("ServerError") == 0);

  opts.failure = inference::FailureKind::Delay;
  opts.delay_s = 0.5;
  inference::StubServer slow(opts);
  cfg.backend_url = slow.url();
  cfg.timeout_s = 0.2;
  const auto retried = run(cfg);
  cfg.backend_url = clean.url();
  cfg.timeout_s = 120.0;
  const auto direct = run(cfg);
  CHECK(retried.ok());
  CHECK(summary_json(retried) == summary_json(direct));
}

TEST_CASE("golden run") {
  inference::StubServer stub;
  const auto golden = std::filesystem::path(POLYEVAL_GOLDEN_DIR);
  const auto config = (fixtures_dir() / "run" / "golden.json").string();
  ::unsetenv("POLYEVAL_BACKEND_URL");
  std::vector<std::string> summaries, details;
  for (const char* parallelism : {"1", "4", "1", "4"}) {
    TempDir out;
    CHECK(run_cli({"run", "--config", config, "--backend-url", stub.url(), "--out", out.path().string(),
                   "--parallelism", parallelism}) == 0);
    summaries.push_back(read_file(out.path() / "summary.json"));
    details.push_back(read_file(out.path() / "details.jsonl"));
  }
  for (size_t i = 1; i < summaries.size(); ++i) {
    CHECK(summaries[i] == summaries[0]);
    CHECK(details[i] == details[0]);
  }
  if (std::getenv("POLYEVAL_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(golden);
    std::ofstream(golden / "summary.json", std::ios::binary) << summaries[0];
    std::ofstream(golden / "details.jsonl", std::ios::binary) << details[0];
  }
  CHECK(summaries[0] == read_file(golden / "summary.json"));
  CHECK(details[0] == read_file(golden / "details.jsonl"));
}

TEST_CASE("cli") {
  inference::StubServer stub;
  TempDir out;
  const auto config = (fixtures_dir() / "run" / "golden.json").string();
  CHECK(run_cli({"run", "--config", config, "--backend-url", stub.url(), "--out", out.path().string(), "--benchmarks",
                 "nope"}) == 2);
  CHECK(run_cli({"run", "--config", config, "--backend-url", stub.url(), "--out", out.path().string(), "--benchmarks",
                 "sib_mini", "--langs", "spa", "--sample-limit", "3", "--n-shot", "0"}) == 0);
  const auto summary = nlohmann::json::parse(read_file(out.path() / "summary.json"));
  CHECK(summary.at("benchmarks").size() == 1);
  CHECK(summary.at("benchmarks")[0].at("subsets")[0].at("n_scored") == 3);
  CHECK(summary.at("config").at("langs") == nlohmann::json::array({"spa"}));

  CHECK(run_cli({"align", "--config", config, "--benchmark", "flores_mini"}) == 0);
  CHECK(run_cli({"align", "--config", config, "--benchmark", "nope"}) == 2);

  // Propagation into a scratch library.
  TempDir lib;
  for (const auto& f : std::filesystem::directory_iterator(fixtures_dir() / ".." / "prompts")) {
    std::filesystem::copy(f.path(), lib.path() / f.path().filename());
  }
  inference::StubOptions topts;
  topts.translate_mode = inference::TranslateMode::Tagged;
  topts.drop_sentinel_targets = {"deu_Latn"};
  inference::StubServer translator(topts);
  CHECK(run_cli({"prompts", "propagate", "--prompt-dir", lib.path().string(), "--task", "summarization", "--from",
                 "eng_Latn", "--to", "fra_Latn,deu_Latn", "--translator-url", translator.url()}) == 1);
  const auto saved = promptlib::PromptLibrary::load(lib.path());
  const auto* fra = saved.find(TaskKind::Summarization, LanguageTag("fra", "Latn"));
  REQUIRE(fra);
  CHECK(fra->provenance == "machine-translated");
  CHECK(fra->instruction.rfind("[fra_Latn] ", 0) == 0);
  CHECK(saved.find(TaskKind::Summarization, LanguageTag("deu", "Latn")) == nullptr);

  CHECK(run_cli({"prompts", "propagate", "--prompt-dir", lib.path().string(), "--task", "classification", "--from",
                 "eng_Latn", "--to", "all", "--registry", (fixtures_dir() / "benchmarks").string(), "--identity"}) == 0);
  const auto cls = promptlib::PromptLibrary::load(lib.path()).templates(TaskKind::Classification);
  CHECK(cls.size() >= 6);
}
