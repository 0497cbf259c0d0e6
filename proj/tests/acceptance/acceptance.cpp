// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "oracles/metric_oracles.hpp"
#include "oracles/random_corpus.hpp"
#include "oracles/random_templates.hpp"
#include "polyeval/error.hpp"
#include "polyeval/inference.hpp"
#include "polyeval/langid.hpp"
#include "polyeval/metrics.hpp"
#include "polyeval/orchestrator.hpp"
#include "polyeval/prompts.hpp"
#include "polyeval/registry.hpp"
#include "polyeval/stub_server.hpp"
#include "support/temp_dir.hpp"

using namespace polyeval;
using langid::LanguageTag;
using testing_support::TempDir;

namespace {

// Pinned tolerances.
constexpr double kOracleTol = 1e-9;
constexpr double kNllTol = 1e-9;
constexpr double kMetricBudgetS = 60.0;
constexpr double kGoldenBudgetS = 30.0;
constexpr int kInstancesPerMetric = 200;
constexpr int kPropagationCases = 120;
constexpr int kWindowTriples = 1000;

using Clock = std::chrono::steady_clock;

// Collects failures for one criterion.
struct Check {
  std::vector<std::string> failures;
  size_t checks = 0;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
};

bool report(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool ok = c.failures.empty();
  std::printf("%s  %-26s %zu checks, %.2f s", ok ? "PASS" : "FAIL", name.c_str(), c.checks, secs);
  for (const auto& f : c.failures) std::printf("\n      %s", f.c_str());
  std::printf("\n");
  std::fflush(stdout);
  return ok;
}

std::string joined(const std::vector<std::string>& toks) {
  std::string s;
  for (const auto& t : toks) s += (s.empty() ? "" : " ") + t;
  return s;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void metric_oracles(Check& c) {
  const auto t0 = Clock::now();
  const metrics::WhitespaceTokenizer ws;
  metrics::BleuConfig bleu_cfg;
  bleu_cfg.tokenizer_id = "none";
  oracle::CorpusGen gen(2024);

  for (int i = 0; i < kInstancesPerMetric; ++i) {
    const size_t n = gen.uniform(1, 8);
    std::vector<std::string> hyps, refs, shyp, sref;
    std::vector<std::vector<std::string>> th, tr;
    oracle::BleuCounts counts;
    std::vector<long> c0, c2;
    for (size_t k = 0; k < n; ++k) {
      th.push_back(gen.tokens(15));
      tr.push_back(gen.tokens(15));
      hyps.push_back(joined(th.back()));
      refs.push_back(joined(tr.back()));
      oracle::bleu_add(counts, th.back(), {tr.back()});
      shyp.push_back(gen.sentence(15));
      sref.push_back(gen.sentence(15));
      for (auto [order, acc] : {std::pair{0, &c0}, std::pair{2, &c2}}) {
        const auto cc = oracle::chrf_counts(shyp.back(), sref.back(), order);
        acc->resize(cc.size());
        for (size_t j = 0; j < cc.size(); ++j) (*acc)[j] += cc[j];
      }
    }
    const double b = metrics::bleu(hyps, refs, bleu_cfg, ws).corpus_score;
    c.expect(near(b, oracle::bleu_score(counts), kOracleTol), "bleu instance " + std::to_string(i) + ": " + num(b));

    metrics::ChrfConfig cf;
    const double f0 = metrics::chrf(shyp, sref, cf).corpus_score;
    c.expect(near(f0, oracle::chrf_score(c0), kOracleTol), "chrf instance " + std::to_string(i) + ": " + num(f0));
    cf.word_order = 2;
    const double f2 = metrics::chrf(shyp, sref, cf).corpus_score;
    c.expect(near(f2, oracle::chrf_score(c2), kOracleTol), "chrf++ instance " + std::to_string(i) + ": " + num(f2));

    const auto rouge = metrics::rouge(hyps, refs);
    double sums[3] = {0, 0, 0};
    for (size_t k = 0; k < n; ++k) {
      const auto h = metrics::rouge_tokens(hyps[k]), r = metrics::rouge_tokens(refs[k]);
      sums[0] += oracle::rouge_f1(h, r, 1);
      sums[1] += oracle::rouge_f1(h, r, 2);
      sums[2] += oracle::rouge_f1(h, r, 0);
    }
    for (int v = 0; v < 3; ++v) {
      c.expect(near(rouge[v].corpus_score, sums[v] / static_cast<double>(n), kOracleTol),
               rouge[v].metric_id + " instance " + std::to_string(i));
    }

    metrics::TagSequences pred, gold;
    for (size_t k = 0; k < n; ++k) {
      const size_t len = gen.uniform(0, 15);
      pred.push_back(gen.bio(len));
      gold.push_back(gen.bio(len));
    }
    c.expect(near(metrics::span_f1(pred, gold).corpus_score, oracle::span_f1(pred, gold), kOracleTol),
             "span_f1 instance " + std::to_string(i));

    // Perfect matches are exact fixed points.
    std::vector<std::string> nonempty;
    for (const auto& s : shyp) nonempty.push_back(s + " w x y z");
    c.expect(metrics::bleu(nonempty, nonempty, bleu_cfg, ws).corpus_score == 100.0, "bleu(x, x) != 100");
    c.expect(metrics::chrf(nonempty, nonempty, {}).corpus_score == 100.0, "chrf(x, x) != 100");
    for (const auto& r : metrics::rouge(nonempty, nonempty)) c.expect(r.corpus_score == 1.0, r.metric_id + "(x, x) != 1");
    c.expect(metrics::span_f1(gold, gold).corpus_score == 1.0, "span_f1(x, x) != 1");
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.expect(secs < kMetricBudgetS, "runtime " + num(secs) + " s");
}

void alignment(Check& c) {
  const auto& table = langid::IsoTable::bundled();
  for (const auto& row : table.rows()) {
    for (const auto* code : {&row.iso639_3, &row.iso639_2b, &row.iso639_2t, &row.iso639_1}) {
      if (code->empty()) continue;
      const auto r = langid::resolve_language(*code, table);
      c.expect(r.match_kind == langid::MatchKind::Exact && r.language == row.iso639_3,
               "code " + *code + " of " + row.iso639_3);
    }
  }
  for (const char* label : {"zh", "zho", "cmn", "Chinese", "Mandarin-CN"}) {
    const auto r = langid::resolve_language(label, table);
    c.expect(r.language && (*r.language == "zho" || *r.language == "cmn"), std::string("family label ") + label);
  }

  const std::vector<std::string> labels{"eng_Latn", "fra_Latn", "cmn_Hans", "zho_Hant", "srp_Cyrl", "srp_Latn",
                                        "en",       "Mandarin-CN", "xx"};
  // Corpus text written in the script each label names.
  const auto sampler = [](const std::string& l) -> std::vector<std::string> {
    if (l == "Mandarin-CN" || l.find("_Han") != std::string::npos) return {"我爱你"};
    if (l.find("_Cyrl") != std::string::npos) return {"привет мир"};
    return {"hello"};
  };
  const auto a = langid::align_labels(labels, {}, sampler, table);
  c.expect(a.report.size() == labels.size(), "one record per label");
  std::vector<std::string> canonical;
  for (const auto& [label, tag] : a.lang_dict) {
    if (LanguageTag::is_canonical(label)) c.expect(label == tag.str(), "canonical label " + label + " changed");
    canonical.push_back(tag.str());
  }
  const auto again = langid::align_labels(canonical, {}, sampler, table);
  for (const auto& [label, tag] : again.lang_dict) c.expect(label == tag.str(), "re-alignment moved " + label);
  c.expect(again.report.size() == canonical.size(), "one record per label (second pass)");
}

void pivot_enumeration(Check& c) {
  static const std::vector<std::string> all{"en", "fr", "fi", "de", "es", "sw"};
  for (size_t n = 2; n <= 6; ++n) {
    TempDir dir;
    nlohmann::json doc{{"id", "m" + std::to_string(n)},
                       {"task_kind", "translation"},
                       {"alignment_mode", "multi_aligned"},
                       {"data_format", "parallel_per_language_files"},
                       {"root_path", "data"},
                       {"labels", std::vector<std::string>(all.begin(), all.begin() + static_cast<long>(n))},
                       {"metrics", {"bleu"}}};
    for (size_t i = 0; i < n; ++i) dir.write("data/" + all[i] + ".txt", "a\nb\n");
    auto d = registry::parse_descriptor(doc, dir.path() / "m.benchmark.json");
    registry::align_benchmark(d);
    for (const auto& pivot : d.tags()) {
      const auto to = registry::enumerate_directions(d, pivot, registry::DirectionMode::AnyToPivot);
      const auto from = registry::enumerate_directions(d, pivot, registry::DirectionMode::PivotToAny);
      const auto both = registry::enumerate_directions(d, pivot, registry::DirectionMode::Both);
      const std::string where = "N=" + std::to_string(n) + " pivot " + pivot.str();
      c.expect(to.size() == n - 1, where + " any-to-pivot");
      c.expect(from.size() == n - 1, where + " pivot-to-any");
      c.expect(both.size() == 2 * (n - 1), where + " both");
    }
    bool threw = false;
    try {
      registry::enumerate_directions(d, LanguageTag("zul", "Latn"), registry::DirectionMode::Both);
    } catch (const Error& e) {
      threw = e.code() == Errc::PivotNotInBenchmark;
    }
    c.expect(threw, "invalid pivot accepted for N=" + std::to_string(n));
  }
}

void prompt_propagation(Check& c) {
  promptlib::IdentityTranslator identity;
  const std::vector<LanguageTag> targets{LanguageTag("fra", "Latn"), LanguageTag("deu", "Latn"),
                                         LanguageTag("fin", "Latn"), LanguageTag("swa", "Latn")};
  oracle::TemplateGen gen(99);
  for (int i = 0; i < kPropagationCases; ++i) {
    const auto t = gen.next();
    const auto r = promptlib::propagate_template(t, targets, identity);
    c.expect(r.failures.empty() && r.templates.size() == targets.size(), "identity case " + std::to_string(i));
    for (const auto& out : r.templates) {
      c.expect(promptlib::placeholder_multiset(out) == promptlib::placeholder_multiset(t),
               "multiset changed in case " + std::to_string(i));
    }
  }

  // Sentinel-dropping translator over HTTP: exactly the corrupted targets fail.
  std::mt19937_64 rng(5);
  for (int round = 0; round < 10; ++round) {
    inference::StubOptions opts;
    std::set<LanguageTag> corrupted;
    for (const auto& t : targets) {
      if (rng() % 2) {
        opts.drop_sentinel_targets.insert(t.str());
        corrupted.insert(t);
      }
    }
    inference::StubServer stub(opts);
    promptlib::HttpTranslationClient http(stub.url());
    const auto r = promptlib::propagate_template(gen.next(), targets, http);
    std::set<LanguageTag> lost;
    for (const auto& f : r.failures) {
      c.expect(f.code == Errc::PlaceholderLost, "unexpected failure " + f.detail);
      lost.insert(f.target);
    }
    c.expect(lost == corrupted, "PlaceholderLost set differs in round " + std::to_string(round));
    c.expect(r.templates.size() + lost.size() == targets.size(), "accepted + lost != targets");
  }
}

void nll_correctness(Check& c) {
  inference::StubOptions opts;
  opts.vocab = 8;
  inference::StubServer stub(opts);
  inference::ClientOptions copts;
  copts.base_url = stub.url();
  const inference::ModelClient client(copts);
  for (size_t n : {1, 1023, 1024, 1025, 4096}) {
    std::string text;
    for (size_t i = 0; i < n; ++i) text += (i ? " t" : "t") + std::to_string(i % 50);
    const auto r = inference::compute_nll(client, text);
    const double expected = static_cast<double>(n) * std::log(8.0);
    c.expect(r.n_tokens == n && near(r.total_nll, expected, kNllTol),
             "n=" + std::to_string(n) + ": " + num(r.total_nll) + " vs " + num(expected));
    const auto rep = metrics::aggregate_nll(r.window_nlls, r.window_tokens);
    const double ppl = rep.components.at("ppl");
    c.expect(near(ppl, std::exp(r.total_nll / static_cast<double>(n)), 1e-12 * ppl), "ppl definition n=" + std::to_string(n));
    c.expect(near(std::log(ppl) * static_cast<double>(n), r.total_nll, kNllTol * std::max(1.0, r.total_nll)),
             "ppl round trip n=" + std::to_string(n));
  }

  std::mt19937_64 rng(17);
  for (int k = 0; k < kWindowTriples; ++k) {
    const size_t window = 1 + rng() % 2048;
    const size_t stride = 1 + rng() % window;
    const size_t n = 1 + rng() % 5000;
    const auto plan = inference::plan_nll_windows(n, window, stride);
    size_t next = 0;
    bool ok = true;
    for (const auto& s : plan.segments) {
      ok = ok && s.scored_from == next && s.end - s.start <= window && s.start <= s.scored_from && s.scored_from <= s.end;
      next = s.end;
    }
    c.expect(ok && next == n, "plan (" + std::to_string(n) + ", " + std::to_string(window) + ", " +
                                  std::to_string(stride) + ") does not partition");
  }
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polyeval");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // Keep the CLI's own progress lines out of the report.
  std::streambuf* saved = std::cout.rdbuf();
  std::ostringstream sink;
  std::cout.rdbuf(sink.rdbuf());
  const int rc = cli::main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(saved);
  return rc;
}

void golden_run(Check& c) {
  const auto t0 = Clock::now();
  ::unsetenv("POLYEVAL_BACKEND_URL");
  inference::StubServer stub;
  const auto config = (testing_support::fixtures_dir() / "run" / "golden.json").string();
  const auto golden = std::filesystem::path(POLYEVAL_GOLDEN_DIR);
  const auto want_summary = testing_support::read_file(golden / "summary.json");
  const auto want_details = testing_support::read_file(golden / "details.jsonl");
  c.expect(!want_summary.empty() && !want_details.empty(), "golden files missing");

  for (const char* parallelism : {"1", "4", "1", "4"}) {
    TempDir out;
    const int rc = run_cli({"run", "--config", config, "--backend-url", stub.url(), "--out", out.path().string(),
                            "--parallelism", parallelism});
    c.expect(rc == 0, std::string("exit code ") + std::to_string(rc) + " at parallelism " + parallelism);
    c.expect(testing_support::read_file(out.path() / "summary.json") == want_summary,
             std::string("summary.json differs at parallelism ") + parallelism);
    c.expect(testing_support::read_file(out.path() / "details.jsonl") == want_details,
             std::string("details.jsonl differs at parallelism ") + parallelism);
  }

  const auto summary = nlohmann::json::parse(want_summary);
  std::set<std::string> kinds;
  const std::regex cell(R"(^\d+ / \d+\.\d{2} = \d+\.\d{2}$)");
  size_t cells = 0;
  for (const auto& b : summary.at("benchmarks")) {
    kinds.insert(b.at("task_kind").get<std::string>());
    if (b.at("id") == "flores_mini") c.expect(b.at("lang_dict").size() == 4, "translation fixture has 4 languages");
    for (const auto& s : b.at("subsets")) {
      if (!s.contains("throughput")) continue;
      ++cells;
      c.expect(std::regex_match(s.at("throughput").at("cell").get<std::string>(), cell),
               "cell " + s.at("throughput").at("cell").get<std::string>());
    }
  }
  c.expect(kinds == std::set<std::string>{"translation", "classification", "comprehension", "intrinsic"},
           "task kinds covered");
  c.expect(cells > 0, "no throughput cells");
  c.expect(inference::throughput_cell(854, 854.0 / 969.55) == "854 / 0.88 = 969.55", "published cell format");
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.expect(secs < kGoldenBudgetS, "runtime " + num(secs) + " s");
}

void prompt_strategy(Check& c) {
  ::unsetenv("POLYEVAL_BACKEND_URL");
  inference::StubServer stub;
  TempDir out;
  auto cfg = orchestrator::load_config(testing_support::fixtures_dir() / "run" / "golden.json");
  cfg.backend_url = stub.url();
  cfg.output_dir = out.path();

  // Multi: classification has only an English template.
  cfg.benchmarks = {"sib_mini"};
  const auto multi = orchestrator::run(cfg);
  for (const auto& s : multi.benchmarks.at(0).subsets) {
    const bool english = s.subset == "eng_Latn";
    c.expect(s.prompt_language == "eng_Latn", "multi " + s.subset + " used " + s.prompt_language);
    c.expect(english ? s.fallback_count == 0 : s.fallback_count == s.n_scored, "fallback flag for " + s.subset);
  }
  for (const auto& r : multi.records) c.expect(r.used_fallback_prompt == (r.subset != "eng_Latn"), "record flag");

  // Single(fin_Latn): the Finnish template for every direction.
  cfg.benchmarks = {"flores_mini"};
  cfg.prompt_strategy = promptlib::StrategyMode::Single;
  cfg.prompt_lang = LanguageTag("fin", "Latn");
  const auto fin = orchestrator::run(cfg);
  c.expect(fin.benchmarks.at(0).subsets.size() == 6, "six directions");
  for (const auto& s : fin.benchmarks.at(0).subsets) {
    c.expect(s.prompt_language == "fin_Latn" && s.fallback_count == 0, "single fin_Latn on " + s.subset);
  }
  for (const auto& r : fin.records) {
    c.expect(r.prompt.find("Käännä seuraava lause") != std::string::npos, "Finnish instruction in " + r.subset);
  }
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report("metric-oracle-suite", metric_oracles);
  ok &= report("alignment-suite", alignment);
  ok &= report("pivot-enumeration", pivot_enumeration);
  ok &= report("prompt-propagation", prompt_propagation);
  ok &= report("nll-correctness", nll_correctness);
  ok &= report("end-to-end-golden-run", golden_run);
  ok &= report("prompt-strategy", prompt_strategy);
  std::printf("%s\n", ok ? "all acceptance criteria pass" : "acceptance criteria FAILED");
  return ok ? 0 : 1;
}
