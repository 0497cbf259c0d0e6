#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace polyeval::metrics {

/// Splits text into the units BLEU counts n-grams over.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string_view id() const noexcept = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

/// Whitespace split, then every punctuation code point becomes its own
/// token. Id `test-ws`.
class WhitespacePunctTokenizer final : public Tokenizer {
 public:
  std::string_view id() const noexcept override { return "test-ws"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
};

/// Plain whitespace split. Id `none`, for pre-tokenized input.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string_view id() const noexcept override { return "none"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
};

/// Unigram subword segmentation over a piece vocabulary in the
/// `piece<TAB>log-prob` format SentencePiece writes next to its models
/// (`*.vocab`). Words are prefixed with U+2581 and segmented by Viterbi
/// search; code points outside the vocabulary become single-character
/// pieces scored below every known piece.
class SubwordTokenizer final : public Tokenizer {
 public:
  SubwordTokenizer(std::string id, const std::filesystem::path& vocab_file);
  SubwordTokenizer(std::string id, std::vector<std::pair<std::string, double>> pieces);

  std::string_view id() const noexcept override { return id_; }
  std::vector<std::string> tokenize(std::string_view text) const override;

 private:
  void build(std::vector<std::pair<std::string, double>> pieces);

  std::string id_;
  std::unordered_map<std::u32string, double> scores_;
  size_t max_piece_len_ = 1;
  double unknown_score_ = -20.0;
};

/// `test-ws` and `none` need no model; any other id loads `model` as a
/// subword vocabulary.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view id,
                                                const std::filesystem::path& model = {});

}  // namespace polyeval::metrics
