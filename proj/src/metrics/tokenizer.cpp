#include "polyeval/tokenizer.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "polyeval/error.hpp"
#include "polyeval/text.hpp"

namespace polyeval::metrics {

std::vector<std::string> WhitespacePunctTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& word : text::split_whitespace(text)) {
    std::u32string cur;
    for (char32_t cp : text::to_u32(word)) {
      if (u_ispunct(static_cast<UChar32>(cp))) {
        if (!cur.empty()) out.push_back(text::to_utf8(cur));
        cur.clear();
        out.push_back(text::to_utf8(cp));
      } else {
        cur.push_back(cp);
      }
    }
    if (!cur.empty()) out.push_back(text::to_utf8(cur));
  }
  return out;
}

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
  return text::split_whitespace(text);
}

namespace {
constexpr char32_t kWordBoundary = U'▁';
}

SubwordTokenizer::SubwordTokenizer(std::string id, const std::filesystem::path& vocab_file) : id_(std::move(id)) {
  std::ifstream in(vocab_file);
  if (!in) throw Error(Errc::MissingFile, vocab_file.string());
  std::vector<std::pair<std::string, double>> pieces;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw Error(Errc::MalformedRow, vocab_file.string() + ":" + std::to_string(line_no));
    }
    try {
      pieces.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw Error(Errc::MalformedRow, vocab_file.string() + ":" + std::to_string(line_no));
    }
  }
  build(std::move(pieces));
}

SubwordTokenizer::SubwordTokenizer(std::string id, std::vector<std::pair<std::string, double>> pieces)
    : id_(std::move(id)) {
  build(std::move(pieces));
}

void SubwordTokenizer::build(std::vector<std::pair<std::string, double>> pieces) {
  double min_score = 0.0;
  for (auto& [piece, score] : pieces) {
    // Control symbols such as <unk>, <s> never match text.
    if (piece.size() > 1 && piece.front() == '<' && piece.back() == '>') continue;
    auto cps = text::to_u32(piece);
    if (cps.empty()) continue;
    max_piece_len_ = std::max(max_piece_len_, cps.size());
    min_score = std::min(min_score, score);
    scores_.emplace(std::move(cps), score);
  }
  unknown_score_ = min_score - 10.0;
}

std::vector<std::string> SubwordTokenizer::tokenize(std::string_view text) const {
  std::u32string input;
  for (const auto& word : text::split_whitespace(text)) {
    input.push_back(kWordBoundary);
    input += text::to_u32(word);
  }
  const size_t n = input.size();
  if (n == 0) return {};

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kNegInf);
  std::vector<size_t> back(n + 1, 0);
  best[0] = 0.0;
  for (size_t end = 1; end <= n; ++end) {
    const size_t lo = end > max_piece_len_ ? end - max_piece_len_ : 0;
    for (size_t start = lo; start < end; ++start) {
      if (best[start] == kNegInf) continue;
      double score;
      auto it = scores_.find(input.substr(start, end - start));
      if (it != scores_.end()) {
        score = it->second;
      } else if (end - start == 1) {
        score = unknown_score_;
      } else {
        continue;
      }
      if (best[start] + score > best[end]) {
        best[end] = best[start] + score;
        back[end] = start;
      }
    }
  }
  std::vector<std::string> pieces;
  for (size_t end = n; end > 0; end = back[end]) {
    pieces.push_back(text::to_utf8(std::u32string_view(input).substr(back[end], end - back[end])));
  }
  std::reverse(pieces.begin(), pieces.end());
  return pieces;
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view id, const std::filesystem::path& model) {
  if (id == "test-ws") return std::make_shared<WhitespacePunctTokenizer>();
  if (id == "none") return std::make_shared<WhitespaceTokenizer>();
  if (model.empty()) {
    throw Error(Errc::ConfigError, "tokenizer '" + std::string(id) + "' needs a subword vocabulary file");
  }
  return std::make_shared<SubwordTokenizer>(std::string(id), model);
}

}  // namespace polyeval::metrics
