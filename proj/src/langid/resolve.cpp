#include <unicode/uchar.h>
#include <unicode/uscript.h>

#include <algorithm>
#include <cctype>

#include "polyeval/error.hpp"
#include "polyeval/langid.hpp"
#include "polyeval/text.hpp"

namespace polyeval::langid {
namespace {

bool is_region_suffix(std::string_view s) {
  return s.size() == 2 && std::isupper(static_cast<unsigned char>(s[0])) &&
         std::isupper(static_cast<unsigned char>(s[1]));
}

bool is_known_script(std::string_view s) {
  if (!is_script_code(s)) return false;
  const std::string name(s);
  const int32_t code = u_getPropertyValueEnum(UCHAR_SCRIPT, name.c_str());
  if (code == UCHAR_INVALID_CODE) return false;
  const char* short_name = uscript_getShortName(static_cast<UScriptCode>(code));
  return short_name != nullptr && name == short_name;
}

// Peels trailing `-XX`/`_XX` regions and `_Xxxx` scripts off a label.
std::string strip_suffixes(std::string label, Resolution& res) {
  for (int round = 0; round < 2; ++round) {
    const size_t pos = label.find_last_of("-_ ");
    if (pos == std::string::npos || pos == 0) break;
    const std::string tail = label.substr(pos + 1);
    if (is_region_suffix(tail)) {
      res.stripped_suffixes.insert(res.stripped_suffixes.begin(), label.substr(pos));
    } else if (is_known_script(tail)) {
      res.stripped_suffixes.insert(res.stripped_suffixes.begin(), label.substr(pos));
      if (!res.advertised_script) res.advertised_script = tail;
    } else {
      break;
    }
    label.resize(pos);
  }
  return label;
}

std::vector<std::u32string> words_of(std::u32string_view s) {
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t cp : s) {
    if (cp == U' ' || cp == U',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Best of whole-name similarity and similarity against every contiguous
// run of name words as long as the label (so "mandarin" meets
// "chinese, mandarin").
double score_name(const std::u32string& label, const std::vector<std::u32string>& label_words,
                  const IsoTable::NameEntry& name) {
  double best = name_similarity(label, name.normalized);
  const size_t k = label_words.size();
  if (k == 0 || name.words.size() <= k) return best;
  std::u32string span;
  for (size_t start = 0; start + k <= name.words.size(); ++start) {
    span.clear();
    for (size_t j = 0; j < k; ++j) {
      if (j) span.push_back(U' ');
      span += name.words[start + j];
    }
    best = std::max(best, name_similarity(label, span));
  }
  return best;
}

struct Ranked {
  size_t row;
  double score;
};

void sort_ranked(std::vector<Ranked>& ranked, const IsoTable& table) {
  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& ra = table.row(a.row);
    const auto& rb = table.row(b.row);
    const bool ia = ra.scope == Scope::Individual;
    const bool ib = rb.scope == Scope::Individual;
    if (ia != ib) return ia;
    return ra.iso639_3 < rb.iso639_3;
  });
}

}  // namespace

double name_similarity(std::u32string_view a, std::u32string_view b) {
  const size_t max_len = std::max(a.size(), b.size());
  if (max_len == 0) return 1.0;
  std::vector<size_t> prev(b.size() + 1);
  std::vector<size_t> cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return 1.0 - static_cast<double>(prev[b.size()]) / static_cast<double>(max_len);
}

Resolution resolve_language(std::string_view label, const IsoTable& table, const ResolveOptions& opts) {
  const std::string_view trimmed = text::trim(label);
  if (trimmed.empty()) throw Error(Errc::EmptyLabel, "label is empty after trimming");

  Resolution res;
  res.source_label = std::string(label);
  const std::string core = strip_suffixes(std::string(trimmed), res);
  const std::string norm = normalize_name(core);

  auto finish_exact = [&](const IsoRow& row, std::string form) {
    res.language = row.iso639_3;
    res.match_kind = MatchKind::Exact;
    res.scope = row.scope;
    res.confidence = 1.0;
    res.matched_form = std::move(form);
    res.candidates = {{row.iso639_3, 1.0}};
    return res;
  };

  if (norm.find(' ') == std::string::npos && (norm.size() == 2 || norm.size() == 3)) {
    if (const IsoRow* row = table.find_code(norm)) return finish_exact(*row, norm);
  }

  if (auto named = table.rows_named(norm); !named.empty()) {
    std::vector<Ranked> ranked;
    for (size_t r : named) ranked.push_back({r, 1.0});
    sort_ranked(ranked, table);
    finish_exact(table.row(ranked.front().row), norm);
    res.candidates.clear();
    for (const auto& r : ranked) res.candidates.push_back({table.row(r.row).iso639_3, 1.0});
    return res;
  }

  const std::u32string label32 = text::to_u32(norm);
  const auto label_words = words_of(label32);
  std::vector<double> best(table.rows().size(), -1.0);
  for (const auto& name : table.names()) {
    best[name.row] = std::max(best[name.row], score_name(label32, label_words, name));
  }
  std::vector<Ranked> ranked;
  ranked.reserve(best.size());
  for (size_t r = 0; r < best.size(); ++r) {
    if (best[r] > 0.0) ranked.push_back({r, best[r]});
  }
  sort_ranked(ranked, table);

  for (size_t i = 0; i < ranked.size() && i < opts.max_candidates; ++i) {
    res.candidates.push_back({table.row(ranked[i].row).iso639_3, ranked[i].score});
  }
  if (!ranked.empty() && ranked.front().score >= opts.fuzzy_threshold) {
    const IsoRow& row = table.row(ranked.front().row);
    res.language = row.iso639_3;
    res.match_kind = MatchKind::Fuzzy;
    res.scope = row.scope;
    res.confidence = ranked.front().score;
    res.matched_form = row.reference_name;
  }
  return res;
}

}  // namespace polyeval::langid
