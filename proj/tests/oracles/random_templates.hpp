#pragma once

#include <random>
#include <string>
#include <vector>

#include "polyeval/prompts.hpp"

namespace oracle {

/// Random translation templates: literal words, stray braces and repeated
/// placeholders from the translation vocabulary, with or without a few-shot
/// form. `{src_text}` always appears at least once.
class TemplateGen {
 public:
  explicit TemplateGen(uint64_t seed) : rng_(seed) {}

  polyeval::promptlib::PromptTemplate next() {
    polyeval::promptlib::PromptTemplate t;
    t.instruction = text(true);
    if (coin()) t.fewshot_item = text(false);
    return t;
  }

 private:
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

  std::string text(bool need_src) {
    static const std::vector<std::string> names{"src_text", "src_lang", "tgt_lang", "tgt_text", "src_code",
                                                "tgt_code"};
    static const std::vector<std::string> words{"Translate", "from", "to", "[", "]:", "{", "}", "{ not }", "→",
                                                "⟦x⟧", "phrase", "{1bad}", "\n", "Käännä", "翻译"};
    const int n = std::uniform_int_distribution<int>(0, 12)(rng_);
    std::string out;
    bool has_src = false;
    for (int i = 0; i < n; ++i) {
      if (coin()) {
        const auto& name = names[std::uniform_int_distribution<size_t>(0, names.size() - 1)(rng_)];
        has_src |= name == "src_text";
        out += "{" + name + "}";
      } else {
        out += words[std::uniform_int_distribution<size_t>(0, words.size() - 1)(rng_)];
      }
      if (coin()) out += " ";
    }
    if (need_src && !has_src) out += " {src_text}";
    return out;
  }

  std::mt19937_64 rng_;
};

}  // namespace oracle
