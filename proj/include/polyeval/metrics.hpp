#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyeval/tokenizer.hpp"

// Corpus scoring kernels. All functions are pure.
namespace polyeval::metrics {

enum class Smoothing { Exp, None };

struct BleuConfig {
  int max_ngram = 4;
  Smoothing smoothing = Smoothing::Exp;
  bool case_sensitive = true;
  bool effective_order = false;
  std::string tokenizer_id = "test-ws";
};

struct ChrfConfig {
  int char_order = 6;
  int word_order = 0;  // 0 = chrF, 2 = chrF++
  double beta = 2.0;
  bool whitespace_ignored = true;
};

enum class RougeVariant { R1, R2, RL };

struct RougeConfig {
  std::vector<RougeVariant> variants{RougeVariant::R1, RougeVariant::R2, RougeVariant::RL};
  bool use_stemmer = false;
};

nlohmann::json to_json(const BleuConfig& c);
nlohmann::json to_json(const ChrfConfig& c);
nlohmann::json to_json(const RougeConfig& c);

/// `nrefs:1|case:mixed|eff:no|tok:<id>|smooth:exp|version:<v>`
std::string bleu_signature(const BleuConfig& c, size_t nrefs = 1);
std::string chrf_signature(const ChrfConfig& c);

struct ScoreReport {
  std::string metric_id;
  double corpus_score = 0.0;
  std::vector<double> per_sample;
  std::map<std::string, double> subgroup_scores;
  std::map<std::string, double> components;
  nlohmann::json config_echo;
  std::string signature;
  std::vector<std::string> notes;
};

nlohmann::json to_json(const ScoreReport& r);

/// Inclusive score range of a metric id.
std::pair<double, double> score_range(std::string_view metric_id);

/// Ids accepted in benchmark descriptors.
const std::vector<std::string>& metric_ids();
bool is_known_metric(std::string_view id);
/// Metrics computed outside this library (merged back by sample index).
bool is_external_metric(std::string_view id);

// ---- BLEU -----------------------------------------------------------------

/// Sufficient statistics of corpus BLEU, summable across segments.
struct BleuStats {
  std::vector<long> correct;
  std::vector<long> total;
  long sys_len = 0;
  long ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

/// One hypothesis against one or more references (clipped by the maximum
/// reference count; closest reference length, shorter on ties).
BleuStats bleu_segment_stats(const std::vector<std::string>& hyp_tokens,
                             const std::vector<std::vector<std::string>>& ref_tokens, int max_ngram);

/// Score in [0, 100] from statistics, following SacreBLEU's rules: zero
/// matches give 0, zero-count orders use exponential smoothing.
double bleu_from_stats(const BleuStats& stats, const BleuConfig& cfg);

ScoreReport bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const BleuConfig& cfg, const Tokenizer& tokenizer);

/// Multi-reference form; references[i] are the references of hypothesis i.
ScoreReport bleu_multi(std::span<const std::string> hypotheses,
                       const std::vector<std::vector<std::string>>& references, const BleuConfig& cfg,
                       const Tokenizer& tokenizer);

// ---- chrF / chrF++ ----------------------------------------------------------

/// Flattened [hyp, ref, match] counts per order (char orders, then word).
std::vector<long> chrf_segment_stats(std::string_view hyp, std::string_view ref, const ChrfConfig& cfg);
double chrf_from_stats(std::span<const long> stats, const ChrfConfig& cfg);

/// chrF's word splitter: whitespace split with one leading or trailing
/// ASCII punctuation mark split off.
std::vector<std::string> chrf_words(std::string_view s);

ScoreReport chrf(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const ChrfConfig& cfg);

enum class Gender { Masculine, Feminine };

struct GenderedPair {
  std::string hypothesis;
  std::string reference;
  Gender gender;
};

/// chrF per gender subgroup (`masculine`, `feminine`) plus component
/// `delta` = masculine - feminine; corpus_score is chrF over all records.
/// A gender with no records is absent from subgroup_scores and noted.
ScoreReport chrf_by_gender(std::span<const GenderedPair> records, const ChrfConfig& cfg = {});

// ---- ROUGE -----------------------------------------------------------------

struct RougeTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeTriple rouge_n_segment(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, int n);
RougeTriple rouge_l_segment(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

/// Lowercased whitespace tokens.
std::vector<std::string> rouge_tokens(std::string_view s);

/// One report per configured variant (`rouge1`, `rouge2`, `rougeL`); corpus
/// value is the mean per-sample F1.
std::vector<ScoreReport> rouge(std::span<const std::string> hypotheses,
                               std::span<const std::string> references, const RougeConfig& cfg = {});

// ---- classification ---------------------------------------------------------

struct ClassificationScores {
  ScoreReport accuracy;
  ScoreReport macro_f1;
};

ClassificationScores classification_scores(std::span<const std::string> predictions,
                                           std::span<const std::string> gold);

// ---- sequence labelling -----------------------------------------------------

struct Span {
  std::string type;
  size_t start = 0;
  size_t end = 0;  // exclusive
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct BioDecode {
  std::vector<Span> spans;
  size_t repaired = 0;  // I-X not continuing an X span, read as B-X
};

/// Throws MalformedTag for tags that are not O, B-X or I-X.
BioDecode decode_bio(std::span<const std::string> tags);

using TagSequences = std::vector<std::vector<std::string>>;

/// Micro-F1 over exact (sentence, type, start, end) spans.
ScoreReport span_f1(const TagSequences& predicted, const TagSequences& gold);
ScoreReport token_accuracy(const TagSequences& predicted, const TagSequences& gold);

// ---- open generation --------------------------------------------------------

/// Mean over outputs of BLEU(output i, all other outputs as references).
/// Higher means less diverse.
ScoreReport self_bleu(std::span<const std::string> outputs, const BleuConfig& cfg,
                      const Tokenizer& tokenizer);

// ---- intrinsic --------------------------------------------------------------

/// Total NLL over windows; `ppl` component = exp(total / total tokens).
ScoreReport aggregate_nll(std::span<const double> window_nlls, std::span<const size_t> token_counts);

// ---- external scores --------------------------------------------------------

/// Reads `{"sample_index": i, "score": x}` JSONL rows written by an
/// out-of-process scorer.
std::map<size_t, double> read_external_scores(std::istream& in);

}  // namespace polyeval::metrics
