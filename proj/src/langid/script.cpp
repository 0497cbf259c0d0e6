#include <unicode/uscript.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "polyeval/error.hpp"
#include "polyeval/langid.hpp"
#include "polyeval/text.hpp"

namespace polyeval::langid {
namespace {

// Uniform integer in [0, bound) without relying on the
// implementation-defined std::uniform_int_distribution.
uint64_t bounded(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::string script_of(char32_t cp) {
  UErrorCode err = U_ZERO_ERROR;
  const UScriptCode code = uscript_getScript(static_cast<UChar32>(cp), &err);
  if (U_FAILURE(err)) return "Zzzz";
  const char* name = uscript_getShortName(code);
  return name ? std::string(name) : std::string("Zzzz");
}

ScriptDetection detect_script(std::span<const std::string> lines, size_t sample_size, uint64_t seed) {
  std::vector<size_t> candidates;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!text::trim(lines[i]).empty()) candidates.push_back(i);
  }
  if (candidates.empty()) throw Error(Errc::NoScriptEvidence, "no non-empty lines");

  const size_t take = std::min(sample_size, candidates.size());
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(bounded(rng, candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }

  std::map<std::string, size_t> counts;
  for (size_t i = 0; i < take; ++i) {
    for (char32_t cp : text::to_u32(lines[candidates[i]])) {
      std::string sc = script_of(cp);
      if (sc == "Zyyy" || sc == "Zinh" || sc == "Zzzz") continue;
      ++counts[sc];
    }
  }
  if (counts.empty()) throw Error(Errc::NoScriptEvidence, "sampled lines carry only common/inherited characters");

  auto count_of = [&](const char* sc) {
    auto it = counts.find(sc);
    return it == counts.end() ? size_t{0} : it->second;
  };
  if (count_of("Hani") > 0 && count_of("Hira") + count_of("Kana") > 0) {
    counts["Jpan"] = count_of("Hani") + count_of("Hira") + count_of("Kana");
    counts.erase("Hani");
    counts.erase("Hira");
    counts.erase("Kana");
  } else if (count_of("Hani") > 0 && count_of("Hang") > 0) {
    counts["Kore"] = count_of("Hani") + count_of("Hang");
    counts.erase("Hani");
    counts.erase("Hang");
  }

  const size_t total = std::accumulate(counts.begin(), counts.end(), size_t{0},
                                       [](size_t acc, const auto& kv) { return acc + kv.second; });
  // std::map iterates in code order, so ties go to the smallest code.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  ScriptDetection out;
  out.script = best->first;
  out.confidence = static_cast<double>(best->second) / static_cast<double>(total);
  out.sampled_lines = take;
  out.counted_chars = total;
  return out;
}

}  // namespace polyeval::langid
