#include <chrono>
#include <set>

#include "polyeval/error.hpp"
#include "polyeval/orchestrator.hpp"

namespace polyeval::orchestrator {
namespace {

using Clock = std::chrono::steady_clock;
using promptlib::Bindings;
using registry::BenchmarkDescriptor;
using registry::Direction;
using registry::Sample;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string format_choices(const std::vector<std::string>& choices) {
  std::string out;
  for (size_t i = 0; i < choices.size(); ++i) {
    out += (i ? "\n" : "") + std::string(1, static_cast<char>('A' + i)) + ". " + choices[i];
  }
  return out;
}

struct Context {
  const RunConfig& cfg;
  const inference::ModelClient& client;
  const promptlib::PromptLibrary& lib;
  const metrics::Tokenizer& tokenizer;
  promptlib::PromptStrategy strategy;
};

// One unit of model work and what it produced.
struct Call {
  std::string prompt;
  std::string raw;
  size_t tokens = 0;
  double seconds = 0.0;
};

double charge(const Context& ctx, size_t tokens, double measured) {
  if (ctx.cfg.timing.mode == Timing::Mode::Wall) return measured;
  return ctx.cfg.timing.per_request_s + ctx.cfg.timing.per_token_s * static_cast<double>(tokens);
}

std::vector<Call> generate_all(const Context& ctx, const BenchmarkDescriptor& d, const std::vector<std::string>& prompts) {
  return inference::run_ordered<Call>(prompts.size(), ctx.cfg.parallelism, [&](size_t i) {
    const auto g = ctx.client.generate(prompts[i], static_cast<size_t>(d.max_new_tokens), d.stop);
    return Call{prompts[i], g.output_text, g.generated_token_count, charge(ctx, g.generated_token_count, g.wall_time)};
  });
}

std::vector<Call> rank_all(const Context& ctx, const std::vector<std::string>& prompts,
                           const std::vector<std::string>& labels) {
  return inference::run_ordered<Call>(prompts.size(), ctx.cfg.parallelism, [&](size_t i) {
    const auto t0 = Clock::now();
    const auto r = inference::rank_labels(ctx.client, prompts[i], labels);
    const double measured = std::chrono::duration<double>(Clock::now() - t0).count();
    return Call{prompts[i], labels.at(r.chosen), 0, charge(ctx, 0, measured)};
  });
}

void set_throughput(SubsetResult& sub, const std::vector<Call>& calls) {
  Throughput t;
  for (const auto& c : calls) {
    t.tokens += c.tokens;
    t.seconds += c.seconds;
  }
  if (t.seconds > 0.0) {
    t.cell = inference::throughput_cell(t.tokens, t.seconds);
    sub.throughput = t;
  }
}

// Metric computation with failures kept as notes on the subset.
template <class F>
void score(SubsetResult& sub, const std::string& metric, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    sub.notes.push_back(metric + ": " + e.what());
  }
}

void text_metrics(const Context& ctx, const BenchmarkDescriptor& d, SubsetResult& sub,
                  const std::vector<std::string>& hyps, const std::vector<Sample>& samples) {
  std::vector<std::vector<std::string>> refs;
  std::vector<std::string> first_refs;
  for (const auto& s : samples) {
    refs.push_back(s.references);
    first_refs.push_back(s.references.empty() ? "" : s.references.front());
  }
  metrics::BleuConfig bleu_cfg;
  bleu_cfg.tokenizer_id = std::string(ctx.tokenizer.id());
  metrics::RougeConfig rouge_cfg;
  rouge_cfg.variants.clear();

  for (const auto& m : d.metrics) {
    if (m == "bleu") {
      score(sub, m, [&] { sub.reports.push_back(metrics::bleu_multi(hyps, refs, bleu_cfg, ctx.tokenizer)); });
    } else if (m == "chrf" || m == "chrf++") {
      metrics::ChrfConfig c;
      c.word_order = m == "chrf" ? 0 : 2;
      score(sub, m, [&] { sub.reports.push_back(metrics::chrf(hyps, first_refs, c)); });
    } else if (m == "chrf_gender") {
      std::vector<metrics::GenderedPair> pairs;
      for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].gender) pairs.push_back({hyps[i], first_refs[i], *samples[i].gender});
      }
      score(sub, m, [&] { sub.reports.push_back(metrics::chrf_by_gender(pairs)); });
    } else if (m == "self_bleu") {
      score(sub, m, [&] { sub.reports.push_back(metrics::self_bleu(hyps, bleu_cfg, ctx.tokenizer)); });
    } else if (m == "rouge1") {
      rouge_cfg.variants.push_back(metrics::RougeVariant::R1);
    } else if (m == "rouge2") {
      rouge_cfg.variants.push_back(metrics::RougeVariant::R2);
    } else if (m == "rougeL") {
      rouge_cfg.variants.push_back(metrics::RougeVariant::RL);
    } else if (metrics::is_external_metric(m)) {
      sub.notes.push_back(m + ": scored out of process from details.jsonl");
    }
  }
  if (!rouge_cfg.variants.empty()) {
    score(sub, "rouge", [&] {
      for (auto& r : metrics::rouge(hyps, first_refs, rouge_cfg)) sub.reports.push_back(std::move(r));
    });
  }
}

struct SubsetRun {
  SubsetResult result;
  std::vector<EvalRecord> records;
};

class BenchmarkRunner {
 public:
  BenchmarkRunner(const Context& ctx, const BenchmarkDescriptor& d) : ctx_(ctx), d_(d) {}

  SubsetRun direction(const Direction& dir) {
    SubsetRun run;
    run.result.subset = dir.str();
    run.result.source = dir.source;
    run.result.target = dir.target;
    auto samples = registry::load_direction_samples(d_, dir, ctx_.cfg.sample_limit);
    auto demos = reserve(samples, run.result);
    const auto sel = select(dir.source, run.result);

    const auto bind = [&](const Sample& s, bool demo) {
      Bindings b{{"src_text", s.input_text},
                 {"src_lang", promptlib::language_name(sel.tmpl, dir.source)},
                 {"tgt_lang", promptlib::language_name(sel.tmpl, dir.target)},
                 {"src_code", dir.source.str()},
                 {"tgt_code", dir.target.str()}};
      if (demo) b["tgt_text"] = s.references.empty() ? "" : s.references.front();
      return b;
    };
    const auto shots = fewshot(sel, demos, bind, run.result);
    std::vector<std::string> prompts;
    for (const auto& s : samples) prompts.push_back(promptlib::render_prompt(sel.tmpl, bind(s, false), shots));

    const auto calls = generate_all(ctx_, d_, prompts);
    auto hyps = finish_generation(run, samples, calls, sel);
    text_metrics(ctx_, d_, run.result, hyps, samples);
    attach_sample_scores(run);
    return run;
  }

  SubsetRun subset(const LanguageTag& tag) {
    SubsetRun run;
    run.result.subset = tag.str();
    auto samples = registry::load_samples(d_, tag, ctx_.cfg.sample_limit);
    auto demos = reserve(samples, run.result);
    const auto sel = select(tag, run.result);

    switch (d_.task_kind) {
      case TaskKind::Summarization:
      case TaskKind::OpenGeneration: {
        const bool summ = d_.task_kind == TaskKind::Summarization;
        const auto bind = [&](const Sample& s, bool demo) {
          Bindings b{{summ ? "text" : "prompt", s.input_text}};
          if (demo) b[summ ? "summary" : "response"] = s.references.empty() ? "" : s.references.front();
          return b;
        };
        const auto shots = fewshot(sel, demos, bind, run.result);
        std::vector<std::string> prompts;
        for (const auto& s : samples) prompts.push_back(promptlib::render_prompt(sel.tmpl, bind(s, false), shots));
        const auto calls = generate_all(ctx_, d_, prompts);
        auto hyps = finish_generation(run, samples, calls, sel);
        text_metrics(ctx_, d_, run.result, hyps, samples);
        break;
      }
      case TaskKind::Classification: {
        const auto bind = [&](const Sample& s, bool demo) {
          Bindings b{{"text", s.input_text}, {"labels", join(d_.label_set, ", ")}};
          if (demo) b["label"] = s.label.value_or("");
          return b;
        };
        const auto shots = fewshot(sel, demos, bind, run.result);
        std::vector<std::string> prompts;
        for (const auto& s : samples) prompts.push_back(promptlib::render_prompt(sel.tmpl, bind(s, false), shots));
        const auto calls = rank_all(ctx_, prompts, d_.label_set);
        std::vector<std::string> preds, gold;
        for (size_t i = 0; i < samples.size(); ++i) {
          auto& rec = record(run, samples[i], calls[i], sel);
          rec.postprocessed_output = calls[i].raw;
          if (samples[i].label) rec.references = {*samples[i].label};
          preds.push_back(calls[i].raw);
          gold.push_back(samples[i].label.value_or(""));
        }
        classification_metrics(run.result, preds, gold);
        break;
      }
      case TaskKind::Comprehension: {
        const auto bind = [&](const Sample& s, bool demo) {
          Bindings b{{"question", s.input_text}, {"choices", format_choices(s.choices)}};
          if (demo) b["answer"] = s.label.value_or("");
          return b;
        };
        const auto shots = fewshot(sel, demos, bind, run.result);
        std::vector<std::string> prompts;
        for (const auto& s : samples) prompts.push_back(promptlib::render_prompt(sel.tmpl, bind(s, false), shots));
        const auto calls = generate_all(ctx_, d_, prompts);
        std::vector<std::string> preds, gold;
        size_t unparsed = 0;
        for (size_t i = 0; i < samples.size(); ++i) {
          auto& rec = record(run, samples[i], calls[i], sel);
          const auto pp = postprocess(calls[i].raw, TaskKind::Comprehension, d_.stop);
          rec.postprocessed_output = pp.text;
          rec.unparsed = pp.unparsed;
          unparsed += pp.unparsed;
          if (samples[i].label) rec.references = {*samples[i].label};
          preds.push_back(pp.unparsed ? "<unparsed>" : pp.text);
          gold.push_back(samples[i].label.value_or(""));
        }
        if (unparsed) run.result.notes.push_back("unparsed answers scored as wrong: " + std::to_string(unparsed));
        set_throughput(run.result, calls);
        classification_metrics(run.result, preds, gold);
        break;
      }
      case TaskKind::TokenClassification:
        token_classification(run, samples, demos, sel);
        break;
      case TaskKind::Intrinsic:
        intrinsic(run, samples, sel);
        break;
      case TaskKind::Translation:
        throw Error(Errc::ConfigError, d_.id + ": translation subsets run per direction");
    }
    attach_sample_scores(run);
    return run;
  }

 private:
  // First n_shot samples become demonstrations and are not scored.
  std::vector<Sample> reserve(std::vector<Sample>& samples, SubsetResult& sub) const {
    const size_t n = std::min(ctx_.cfg.n_shot, samples.size());
    std::vector<Sample> demos(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n));
    samples.erase(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n));
    sub.n_fewshot = n;
    sub.n_scored = samples.size();
    if (samples.empty()) throw Error(Errc::ConfigError, d_.id + "/" + sub.subset + ": no samples left to score");
    return demos;
  }

  promptlib::Selection select(const LanguageTag& tag, SubsetResult& sub) const {
    auto sel = promptlib::select_template(ctx_.lib, ctx_.strategy, d_.task_kind, tag);
    sub.prompt_language = sel.tmpl.tag.str();
    return sel;
  }

  template <class Bind>
  std::vector<Bindings> fewshot(const promptlib::Selection& sel, const std::vector<Sample>& demos, Bind&& bind,
                                SubsetResult& sub) const {
    std::vector<Bindings> out;
    if (demos.empty()) return out;
    if (!sel.tmpl.fewshot_item) {
      sub.notes.push_back("template " + sel.tmpl.tag.str() + " has no few-shot form; demonstrations unused");
      return out;
    }
    for (const auto& s : demos) out.push_back(bind(s, true));
    return out;
  }

  EvalRecord& record(SubsetRun& run, const Sample& s, const Call& c, const promptlib::Selection& sel) const {
    EvalRecord r;
    r.benchmark_id = d_.id;
    r.sample_index = s.index;
    r.subset = run.result.subset;
    r.prompt = c.prompt;
    r.raw_output = c.raw;
    r.references = s.references;
    r.used_fallback_prompt = sel.used_fallback;
    r.wall_time = c.seconds;
    if (sel.used_fallback) ++run.result.fallback_count;
    run.records.push_back(std::move(r));
    return run.records.back();
  }

  std::vector<std::string> finish_generation(SubsetRun& run, const std::vector<Sample>& samples,
                                             const std::vector<Call>& calls, const promptlib::Selection& sel) const {
    std::vector<std::string> hyps;
    for (size_t i = 0; i < samples.size(); ++i) {
      auto& rec = record(run, samples[i], calls[i], sel);
      rec.postprocessed_output = postprocess(calls[i].raw, d_.task_kind, d_.stop).text;
      hyps.push_back(rec.postprocessed_output);
    }
    set_throughput(run.result, calls);
    return hyps;
  }

  void classification_metrics(SubsetResult& sub, const std::vector<std::string>& preds,
                              const std::vector<std::string>& gold) const {
    score(sub, "classification", [&] {
      auto s = metrics::classification_scores(preds, gold);
      for (const auto& m : d_.metrics) {
        if (m == "accuracy") sub.reports.push_back(s.accuracy);
        if (m == "macro_f1") sub.reports.push_back(s.macro_f1);
      }
    });
  }

  void token_classification(SubsetRun& run, const std::vector<Sample>& samples, const std::vector<Sample>& demos,
                            const promptlib::Selection& sel) const {
    const std::string tags = join(d_.label_set, ", ");
    std::vector<Bindings> shots;
    for (const auto& s : demos) {
      if (s.tokens.empty()) continue;
      shots.push_back({{"sentence", join(s.tokens, " ")}, {"token", s.tokens[0]}, {"tags", tags}, {"tag", s.tags[0]}});
    }
    if (!shots.empty() && !sel.tmpl.fewshot_item) {
      run.result.notes.push_back("template " + sel.tmpl.tag.str() + " has no few-shot form; demonstrations unused");
      shots.clear();
    }
    // One ranking request per token, flattened across sentences.
    std::vector<std::string> prompts;
    std::vector<size_t> first;
    for (const auto& s : samples) {
      first.push_back(prompts.size());
      const std::string sentence = join(s.tokens, " ");
      for (const auto& tok : s.tokens) {
        prompts.push_back(promptlib::render_prompt(sel.tmpl, {{"sentence", sentence}, {"token", tok}, {"tags", tags}},
                                                   shots));
      }
    }
    const auto calls = rank_all(ctx_, prompts, d_.label_set);
    metrics::TagSequences predicted, gold;
    for (size_t i = 0; i < samples.size(); ++i) {
      const size_t n = samples[i].tokens.size();
      std::vector<std::string> pred;
      Call summary;
      summary.prompt = n ? calls[first[i]].prompt : "";
      for (size_t k = 0; k < n; ++k) {
        pred.push_back(calls[first[i] + k].raw);
        summary.seconds += calls[first[i] + k].seconds;
      }
      summary.raw = join(pred, " ");
      auto& rec = record(run, samples[i], summary, sel);
      rec.postprocessed_output = summary.raw;
      rec.references = {join(samples[i].tags, " ")};
      predicted.push_back(std::move(pred));
      gold.push_back(samples[i].tags);
    }
    for (const auto& m : d_.metrics) {
      if (m == "span_f1") score(run.result, m, [&] { run.result.reports.push_back(metrics::span_f1(predicted, gold)); });
      if (m == "token_accuracy") {
        score(run.result, m, [&] { run.result.reports.push_back(metrics::token_accuracy(predicted, gold)); });
      }
    }
  }

  void intrinsic(SubsetRun& run, const std::vector<Sample>& samples, const promptlib::Selection& sel) const {
    std::vector<std::string> texts;
    for (const auto& s : samples) texts.push_back(promptlib::render_prompt(sel.tmpl, {{"text", s.input_text}}));
    const auto& cfg = ctx_.cfg;
    const auto per_sample = inference::run_ordered<inference::NllResult>(
        texts.size(), cfg.parallelism, [&](size_t i) { return inference::compute_nll(ctx_.client, texts[i], cfg.window, cfg.stride); });
    const auto corpus = inference::compute_nll(ctx_.client, join(texts, "\n"), cfg.window, cfg.stride);

    for (size_t i = 0; i < samples.size(); ++i) {
      Call c{texts[i], "", 0, charge(ctx_, 0, 0.0) * static_cast<double>(per_sample[i].plan.segments.size())};
      auto& rec = record(run, samples[i], c, sel);
      rec.per_metric_scores["nll"] = per_sample[i].total_nll;
      rec.per_metric_scores["tokens"] = static_cast<double>(per_sample[i].n_tokens);
    }
    score(run.result, "nll", [&] {
      auto rep = metrics::aggregate_nll(corpus.window_nlls, corpus.window_tokens);
      rep.notes.push_back("corpus text: subset samples joined with a single newline");
      rep.notes.push_back("window " + std::to_string(cfg.window) + ", stride " + std::to_string(cfg.stride) +
                          "; ppl is derived and tokenizer-dependent");
      rep.per_sample.clear();
      run.result.reports.push_back(std::move(rep));
    });
  }

  void attach_sample_scores(SubsetRun& run) const {
    for (const auto& rep : run.result.reports) {
      if (rep.per_sample.size() != run.records.size()) continue;
      for (size_t i = 0; i < run.records.size(); ++i) run.records[i].per_metric_scores[rep.metric_id] = rep.per_sample[i];
    }
  }

  const Context& ctx_;
  const BenchmarkDescriptor& d_;
};

bool needs_pivot(const BenchmarkDescriptor& d) {
  return d.task_kind == TaskKind::Translation && d.alignment_mode == registry::AlignmentMode::MultiAligned;
}

}  // namespace

bool RunSummary::ok() const {
  return std::none_of(benchmarks.begin(), benchmarks.end(), [](const BenchmarkResult& b) { return b.error.has_value(); });
}

RunSummary run(const RunConfig& cfg) {
  if (cfg.n_shot > 0 && cfg.sample_limit && cfg.n_shot >= *cfg.sample_limit) {
    throw Error(Errc::ConfigError, "n_shot must be below sample_limit");
  }
  const auto strategy = cfg.strategy();
  auto registry = registry::load_registry(cfg.registry_dir);

  std::vector<BenchmarkDescriptor> selected;
  if (cfg.benchmarks.size() == 1 && cfg.benchmarks[0] == "all") {
    selected = registry;
  } else {
    for (const auto& id : cfg.benchmarks) {
      const auto it = std::find_if(registry.begin(), registry.end(), [&](const auto& d) { return d.id == id; });
      if (it == registry.end()) throw Error(Errc::NoBenchmarkMatched, "unknown benchmark '" + id + "'");
      if (std::none_of(selected.begin(), selected.end(), [&](const auto& d) { return d.id == id; })) {
        selected.push_back(*it);
      }
    }
  }

  RunSummary summary;
  summary.config = config_echo(cfg);
  langid::AlignOptions align_opts;
  align_opts.seed = cfg.seed;
  for (auto& d : selected) {
    const auto alignment = registry::align_benchmark(d, langid::IsoTable::bundled(), align_opts);
    for (const auto& rec : alignment.report) {
      if (!rec.resolved) summary.warnings.push_back(d.id + ": label '" + rec.source_label() + "' not aligned: " + rec.note);
    }
  }

  // Language query: keep benchmarks with a matching subset, and remember
  // which tags matched.
  std::map<std::string, std::set<LanguageTag>> wanted;
  if (!cfg.langs.empty()) {
    const std::set<std::string> query(cfg.langs.begin(), cfg.langs.end());
    const auto hits = langid::match_query(query, registry::language_view(selected));
    std::vector<BenchmarkDescriptor> kept;
    for (auto& d : selected) {
      const auto it = hits.find(d.id);
      if (it == hits.end()) continue;
      for (const auto& label : it->second) wanted[d.id].insert(d.lang_dict.at(label));
      kept.push_back(std::move(d));
    }
    selected = std::move(kept);
  }
  if (selected.empty()) throw Error(Errc::NoBenchmarkMatched, "no benchmark subset matches the selection");

  const bool pivot_needed = std::any_of(selected.begin(), selected.end(), needs_pivot);
  if (pivot_needed && !cfg.pivot) throw Error(Errc::ConfigError, "pivot: required for multi-aligned translation benchmarks");
  if (!pivot_needed && cfg.pivot) summary.warnings.push_back("pivot " + cfg.pivot->str() + " unused by the selected benchmarks");

  inference::ClientOptions copts;
  copts.base_url = inference::backend_url(cfg.backend_url);
  copts.timeout_s = cfg.timeout_s;
  copts.retries = cfg.retries;
  const inference::ModelClient client(copts);
  if (!client.healthy()) throw Error(Errc::BackendUnavailable, copts.base_url + "/v1/health did not answer 200");

  const auto lib = promptlib::PromptLibrary::load(cfg.prompt_dir);
  const auto tokenizer = metrics::make_tokenizer(cfg.tokenizer, cfg.tokenizer_model);
  const Context ctx{cfg, client, lib, *tokenizer, strategy};

  for (const auto& d : selected) {
    BenchmarkResult res;
    res.benchmark_id = d.id;
    res.task_kind = d.task_kind;
    res.lang_dict = d.lang_dict;
    const auto filter = wanted.find(d.id);
    const auto keep = [&](const LanguageTag& t) { return filter == wanted.end() || filter->second.count(t) > 0; };
    BenchmarkRunner runner(ctx, d);
    try {
      if (d.task_kind == TaskKind::Translation) {
        const auto dirs = needs_pivot(d) ? registry::enumerate_directions(d, *cfg.pivot, cfg.direction_mode)
                                         : registry::declared_directions(d);
        for (const auto& dir : dirs) {
          if (!keep(dir.source) && !keep(dir.target)) continue;
          auto sub = runner.direction(dir);
          res.subsets.push_back(std::move(sub.result));
          for (auto& r : sub.records) summary.records.push_back(std::move(r));
        }
      } else {
        for (const auto& tag : d.tags()) {
          if (!keep(tag)) continue;
          auto sub = runner.subset(tag);
          res.subsets.push_back(std::move(sub.result));
          for (auto& r : sub.records) summary.records.push_back(std::move(r));
        }
      }
    } catch (const Error& e) {
      res.error = e.what();
    }
    summary.benchmarks.push_back(std::move(res));
  }
  return summary;
}

}  // namespace polyeval::orchestrator
