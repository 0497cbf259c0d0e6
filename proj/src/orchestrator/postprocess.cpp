#include "polyeval/orchestrator.hpp"

namespace polyeval::orchestrator {
namespace {

bool ascii_alnum(unsigned char c) { return c < 0x80 && std::isalnum(c); }

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n\f\v";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Position of the first line break that starts a blank line.
size_t blank_line(const std::string& s) {
  for (size_t i = s.find('\n'); i != std::string::npos; i = s.find('\n', i + 1)) {
    size_t j = i + 1;
    while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
    if (j < s.size() && s[j] == '\n') return i;
  }
  return std::string::npos;
}

std::optional<char> option_letter(const std::string& raw) {
  const std::string whole = trim(raw);
  for (size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up < 'A' || up > 'D') continue;
    const unsigned char prev = i ? static_cast<unsigned char>(raw[i - 1]) : ' ';
    const unsigned char next = i + 1 < raw.size() ? static_cast<unsigned char>(raw[i + 1]) : ' ';
    if (ascii_alnum(prev) || ascii_alnum(next)) continue;
    // A bare lowercase letter is usually the article "a", so it needs a
    // marker or to be the whole answer.
    const bool marked = (prev == '(' && next == ')') || next == '.' || next == ')' || next == ':';
    if (c == up || marked || whole.size() == 1) return up;
  }
  return std::nullopt;
}

}  // namespace

Postprocessed postprocess(const std::string& raw, TaskKind kind, const std::vector<std::string>& stop) {
  Postprocessed out;
  if (kind == TaskKind::Comprehension) {
    const auto letter = option_letter(raw);
    if (letter) out.text = std::string(1, *letter);
    out.unparsed = !letter;
    return out;
  }
  std::string s = trim(inference::truncate_at_stop(raw, stop));
  if (const size_t cut = blank_line(s); cut != std::string::npos) s.resize(cut);
  out.text = trim(s);
  return out;
}

}  // namespace polyeval::orchestrator
