#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "polyeval/error.hpp"
#include "polyeval/langid.hpp"
#include "polyeval/text.hpp"

namespace polyeval::langid {

std::string_view to_string(Scope s) noexcept {
  switch (s) {
    case Scope::Individual: return "Individual";
    case Scope::Macrolanguage: return "Macrolanguage";
    case Scope::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(MatchKind k) noexcept {
  switch (k) {
    case MatchKind::Exact: return "Exact";
    case MatchKind::Fuzzy: return "Fuzzy";
    case MatchKind::NoMatch: return "NoMatch";
  }
  return "NoMatch";
}

bool is_language_code(std::string_view s) noexcept {
  if (s.size() != 3) return false;
  for (char c : s) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

bool is_script_code(std::string_view s) noexcept {
  if (s.size() != 4 || s[0] < 'A' || s[0] > 'Z') return false;
  for (size_t i = 1; i < 4; ++i) {
    if (s[i] < 'a' || s[i] > 'z') return false;
  }
  return true;
}

LanguageTag::LanguageTag(std::string language, std::string script)
    : language_(std::move(language)), script_(std::move(script)) {
  if (!is_language_code(language_) || !is_script_code(script_)) {
    throw Error(Errc::InvalidTag, "'" + language_ + "_" + script_ + "'");
  }
}

bool LanguageTag::is_canonical(std::string_view s) noexcept {
  return s.size() == 8 && s[3] == '_' && is_language_code(s.substr(0, 3)) &&
         is_script_code(s.substr(4));
}

LanguageTag LanguageTag::parse(std::string_view canonical) {
  if (!is_canonical(canonical)) {
    throw Error(Errc::InvalidTag, "'" + std::string(canonical) + "' is not <iso639-3>_<Script>");
  }
  return {std::string(canonical.substr(0, 3)), std::string(canonical.substr(4))};
}

std::ostream& operator<<(std::ostream& os, const LanguageTag& tag) { return os << tag.str(); }

IsoTable IsoTable::parse(std::istream& in) {
  IsoTable table;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cols = text::split(line, '\t');
    if (!header_seen) {
      header_seen = true;
      if (cols.size() == 8 && cols[0] == "iso639_3") continue;
    }
    if (cols.size() != 8) {
      throw Error(Errc::TableFormat, "line " + std::to_string(line_no) + ": expected 8 columns");
    }
    IsoRow row;
    row.iso639_3 = cols[0];
    row.iso639_2b = cols[1];
    row.iso639_2t = cols[2];
    row.iso639_1 = cols[3];
    if (cols[4] == "Individual") {
      row.scope = Scope::Individual;
    } else if (cols[4] == "Macrolanguage") {
      row.scope = Scope::Macrolanguage;
    } else {
      throw Error(Errc::TableFormat, "line " + std::to_string(line_no) + ": bad scope '" + cols[4] + "'");
    }
    row.macro_parent = cols[5];
    row.reference_name = cols[6];
    if (!cols[7].empty()) row.alternate_names = text::split(cols[7], ';');
    if (!is_language_code(row.iso639_3)) {
      throw Error(Errc::TableFormat, "line " + std::to_string(line_no) + ": bad code '" + row.iso639_3 + "'");
    }
    table.rows_.push_back(std::move(row));
  }
  table.index();
  return table;
}

IsoTable IsoTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, path.string());
  return parse(in);
}

std::filesystem::path IsoTable::bundled_path() {
  if (const char* dir = std::getenv("POLYEVAL_DATA_DIR")) {
    return std::filesystem::path(dir) / "iso639-3.tsv";
  }
  return std::filesystem::path(POLYEVAL_DATA_DIR) / "iso639-3.tsv";
}

const IsoTable& IsoTable::bundled() {
  static const IsoTable table = load(bundled_path());
  return table;
}

void IsoTable::index() {
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!by_code3_.emplace(r.iso639_3, i).second) {
      throw Error(Errc::TableFormat, "duplicate iso639_3 '" + r.iso639_3 + "'");
    }
  }
  // 639-3 codes take precedence over the older parts when they collide.
  for (size_t i = 0; i < rows_.size(); ++i) by_any_code_.emplace(rows_[i].iso639_3, i);
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    for (const auto* code : {&r.iso639_2t, &r.iso639_2b, &r.iso639_1}) {
      if (!code->empty()) by_any_code_.emplace(*code, i);
    }
  }
  for (const auto& r : rows_) {
    if (r.macro_parent.empty()) continue;
    auto it = by_code3_.find(r.macro_parent);
    if (it == by_code3_.end() || rows_[it->second].scope != Scope::Macrolanguage) {
      throw Error(Errc::TableFormat, r.iso639_3 + ": macro_parent '" + r.macro_parent + "' is not a macrolanguage row");
    }
    members_[r.macro_parent].push_back(r.iso639_3);
  }
  for (size_t i = 0; i < rows_.size(); ++i) {
    auto add = [&](const std::string& name) {
      if (name.empty()) return;
      std::string norm = normalize_name(name);
      NameEntry entry;
      entry.row = i;
      entry.normalized = text::to_u32(norm);
      std::u32string word;
      for (char32_t cp : entry.normalized) {
        if (cp == U' ' || cp == U',') {
          if (!word.empty()) entry.words.push_back(std::move(word));
          word.clear();
        } else {
          word.push_back(cp);
        }
      }
      if (!word.empty()) entry.words.push_back(std::move(word));
      by_name_.emplace(std::move(norm), i);
      names_.push_back(std::move(entry));
    };
    add(rows_[i].reference_name);
    for (const auto& alt : rows_[i].alternate_names) add(alt);
  }
}

std::vector<size_t> IsoTable::rows_named(std::string_view normalized) const {
  std::vector<size_t> out;
  auto [b, e] = by_name_.equal_range(std::string(normalized));
  for (auto it = b; it != e; ++it) out.push_back(it->second);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string normalize_name(std::string_view s) {
  std::string folded = text::fold_case(s);
  std::string out;
  bool pending_space = false;
  for (char32_t cp : text::to_u32(folded)) {
    if (cp == U'-' || cp == U'_' || text::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out += text::to_utf8(cp);
  }
  return out;
}

const IsoRow* IsoTable::find(std::string_view iso639_3) const noexcept {
  auto it = by_code3_.find(std::string(iso639_3));
  return it == by_code3_.end() ? nullptr : &rows_[it->second];
}

const IsoRow& IsoTable::at(std::string_view iso639_3) const {
  const IsoRow* row = find(iso639_3);
  if (!row) throw Error(Errc::UnknownQueryCode, std::string(iso639_3));
  return *row;
}

const IsoRow* IsoTable::find_code(std::string_view code) const noexcept {
  auto it = by_any_code_.find(std::string(code));
  return it == by_any_code_.end() ? nullptr : &rows_[it->second];
}

const std::vector<std::string>& IsoTable::members(std::string_view macro) const {
  static const std::vector<std::string> kNone;
  auto it = members_.find(std::string(macro));
  return it == members_.end() ? kNone : it->second;
}

}  // namespace polyeval::langid
