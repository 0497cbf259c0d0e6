#include <algorithm>
#include <fstream>

#include "polyeval/error.hpp"
#include "polyeval/registry.hpp"
#include "polyeval/text.hpp"

namespace polyeval::registry {
namespace fs = std::filesystem;
namespace {

std::string_view extension(DataFormat f) {
  switch (f) {
    case DataFormat::ParallelPerLanguageFiles: return ".txt";
    case DataFormat::JsonlRecords: return ".jsonl";
    case DataFormat::TokenTag2Col: return ".conll";
  }
  return "";
}

std::ifstream open(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::MissingFile, p.string());
  return in;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string where(const fs::path& p, size_t line_no) { return p.string() + ":" + std::to_string(line_no); }

std::vector<std::string> read_lines(const fs::path& p, std::optional<size_t> limit) {
  auto in = open(p);
  std::vector<std::string> out;
  std::string line;
  while ((!limit || out.size() < *limit) && next_line(in, line)) out.push_back(line);
  return out;
}

size_t count_lines(const fs::path& p) { return read_lines(p, std::nullopt).size(); }

std::vector<Sample> parallel_samples(const BenchmarkDescriptor& d, const fs::path& p, std::optional<size_t> limit) {
  std::vector<Sample> out;
  for (auto& line : read_lines(p, limit)) {
    Sample s;
    s.benchmark_id = d.id;
    s.index = out.size();
    s.input_text = std::move(line);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> text_list(const nlohmann::json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw std::invalid_argument("expected a string or an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw std::invalid_argument("expected a string or an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

std::vector<Sample> jsonl_samples(const BenchmarkDescriptor& d, const fs::path& p, std::optional<size_t> limit) {
  auto in = open(p);
  const auto k_input = field_key(d, "input"), k_ref = field_key(d, "reference"), k_label = field_key(d, "label"),
             k_gender = field_key(d, "gender"), k_choices = field_key(d, "choices");
  std::vector<Sample> out;
  std::string line;
  size_t line_no = 0;
  while ((!limit || out.size() < *limit) && next_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Sample s;
    s.benchmark_id = d.id;
    s.index = out.size();
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains(k_input) || !j.at(k_input).is_string()) {
        throw std::invalid_argument("missing string field '" + k_input + "'");
      }
      s.input_text = j.at(k_input).get<std::string>();
      if (j.contains(k_ref)) s.references = text_list(j.at(k_ref));
      if (j.contains(k_label)) {
        if (!j.at(k_label).is_string()) throw std::invalid_argument("'" + k_label + "' is not a string");
        s.label = j.at(k_label).get<std::string>();
      }
      if (j.contains(k_choices)) s.choices = text_list(j.at(k_choices));
      if (j.contains(k_gender)) {
        if (!j.at(k_gender).is_string()) throw std::invalid_argument("'" + k_gender + "' is not a string");
        s.gender = parse_gender(j.at(k_gender).get<std::string>());
        if (!s.gender) throw std::invalid_argument("unknown gender '" + j.at(k_gender).get<std::string>() + "'");
      }
    } catch (const std::exception& e) {
      throw Error(Errc::MalformedRow, where(p, line_no) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> conll_samples(const BenchmarkDescriptor& d, const fs::path& p, std::optional<size_t> limit) {
  auto in = open(p);
  std::vector<Sample> out;
  Sample cur;
  const auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.benchmark_id = d.id;
    cur.index = out.size();
    cur.input_text = text::join(cur.tokens, " ");
    out.push_back(std::move(cur));
    cur = Sample{};
  };
  std::string line;
  size_t line_no = 0;
  while ((!limit || out.size() < *limit) && next_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw Error(Errc::MalformedRow, where(p, line_no) + ": expected token<TAB>tag");
    }
    cur.tokens.push_back(line.substr(0, tab));
    cur.tags.push_back(line.substr(tab + 1));
  }
  if (!limit || out.size() < *limit) flush();
  return out;
}

std::vector<Sample> read_samples(const BenchmarkDescriptor& d, const fs::path& p, std::optional<size_t> limit) {
  switch (d.data_format) {
    case DataFormat::ParallelPerLanguageFiles: return parallel_samples(d, p, limit);
    case DataFormat::JsonlRecords: return jsonl_samples(d, p, limit);
    case DataFormat::TokenTag2Col: return conll_samples(d, p, limit);
  }
  return {};
}

void check_multi_aligned(const BenchmarkDescriptor& d) {
  if (d.alignment_mode != AlignmentMode::MultiAligned) return;
  std::optional<size_t> expected;
  std::string first;
  for (const auto& label : d.labels) {
    const auto p = label_file(d, label);
    const size_t n = count_lines(p);
    if (!expected) {
      expected = n;
      first = label;
    } else if (n != *expected) {
      throw Error(Errc::RaggedParallelData, d.id + ": '" + first + "' has " + std::to_string(*expected) +
                                                " lines but '" + label + "' has " + std::to_string(n));
    }
  }
}

// Several labels may align to one tag; the first listed one supplies the data.
std::string first_label(const BenchmarkDescriptor& d, const LanguageTag& tag) {
  const auto labels = d.labels_for(tag);
  if (labels.empty()) throw Error(Errc::ConfigError, d.id + " has no subset aligned to " + tag.str());
  return labels.front();
}

}  // namespace

Direction::Direction(LanguageTag src, LanguageTag tgt) : source(std::move(src)), target(std::move(tgt)) {
  if (source == target) throw Error(Errc::ConfigError, "direction source equals target: " + source.str());
}

std::string field_key(const BenchmarkDescriptor& d, std::string_view field) {
  if (auto it = d.field_map.find(std::string(field)); it != d.field_map.end()) return it->second;
  return std::string(field);
}

fs::path label_file(const BenchmarkDescriptor& d, const std::string& label) {
  return d.root_path / (label + std::string(extension(d.data_format)));
}

fs::path pair_file(const BenchmarkDescriptor& d, const std::string& src_label, const std::string& tgt_label,
                   const std::string& side_label) {
  const std::string dir = src_label + "-" + tgt_label;
  if (d.data_format == DataFormat::JsonlRecords) return d.root_path / (dir + ".jsonl");
  return d.root_path / dir / (side_label + std::string(extension(d.data_format)));
}

std::vector<Sample> load_label_samples(const BenchmarkDescriptor& d, const std::string& label,
                                       std::optional<size_t> limit) {
  return read_samples(d, label_file(d, label), limit);
}

std::vector<Sample> load_samples(const BenchmarkDescriptor& d, const LanguageTag& tag, std::optional<size_t> limit) {
  const auto label = first_label(d, tag);
  check_multi_aligned(d);
  return load_label_samples(d, label, limit);
}

std::vector<Sample> load_direction_samples(const BenchmarkDescriptor& d, const Direction& dir,
                                           std::optional<size_t> limit) {
  if (d.task_kind != TaskKind::Translation) throw Error(Errc::NotATranslationBenchmark, d.id);

  std::vector<Sample> src, tgt;
  if (d.alignment_mode == AlignmentMode::MultiAligned) {
    check_multi_aligned(d);
    src = load_label_samples(d, first_label(d, dir.source), limit);
    tgt = load_label_samples(d, first_label(d, dir.target), limit);
  } else {
    const std::pair<std::string, std::string>* pair = nullptr;
    for (const auto& p : d.pairs) {
      const auto s = d.lang_dict.find(p.first), t = d.lang_dict.find(p.second);
      if (s != d.lang_dict.end() && t != d.lang_dict.end() && s->second == dir.source && t->second == dir.target) {
        pair = &p;
        break;
      }
    }
    if (!pair) throw Error(Errc::ConfigError, d.id + " declares no pair " + dir.str());
    if (d.data_format == DataFormat::JsonlRecords) {
      src = read_samples(d, pair_file(d, pair->first, pair->second, pair->first), limit);
      for (auto& s : src) {
        s.source_tag = dir.source;
        s.target_tag = dir.target;
      }
      return src;
    }
    const auto sp = pair_file(d, pair->first, pair->second, pair->first);
    const auto tp = pair_file(d, pair->first, pair->second, pair->second);
    if (count_lines(sp) != count_lines(tp)) {
      throw Error(Errc::RaggedParallelData, sp.string() + " and " + tp.string() + " differ in line count");
    }
    src = read_samples(d, sp, limit);
    tgt = read_samples(d, tp, limit);
  }
  for (size_t i = 0; i < src.size(); ++i) {
    src[i].references = {tgt[i].input_text};
    src[i].source_tag = dir.source;
    src[i].target_tag = dir.target;
  }
  return src;
}

std::vector<Direction> enumerate_directions(const BenchmarkDescriptor& d, const LanguageTag& pivot,
                                            DirectionMode mode) {
  if (d.task_kind != TaskKind::Translation) throw Error(Errc::NotATranslationBenchmark, d.id);
  const auto tags = d.tags();
  if (std::find(tags.begin(), tags.end(), pivot) == tags.end()) {
    throw Error(Errc::PivotNotInBenchmark, pivot.str() + " is not aligned in " + d.id);
  }
  std::vector<Direction> out;
  if (mode != DirectionMode::PivotToAny) {
    for (const auto& t : tags) {
      if (t != pivot) out.emplace_back(t, pivot);
    }
  }
  if (mode != DirectionMode::AnyToPivot) {
    for (const auto& t : tags) {
      if (t != pivot) out.emplace_back(pivot, t);
    }
  }
  return out;
}

std::vector<Direction> declared_directions(const BenchmarkDescriptor& d) {
  std::vector<Direction> out;
  for (const auto& [s, t] : d.pairs) {
    const auto si = d.lang_dict.find(s), ti = d.lang_dict.find(t);
    if (si == d.lang_dict.end() || ti == d.lang_dict.end() || si->second == ti->second) continue;
    Direction dir(si->second, ti->second);
    if (std::find(out.begin(), out.end(), dir) == out.end()) out.push_back(std::move(dir));
  }
  return out;
}

std::vector<std::string> sample_text(const BenchmarkDescriptor& d, const std::string& label) {
  fs::path p = label_file(d, label);
  if (d.alignment_mode == AlignmentMode::Pairwise) {
    for (const auto& [s, t] : d.pairs) {
      if (s == label || t == label) {
        p = pair_file(d, s, t, label);
        break;
      }
    }
    if (d.data_format == DataFormat::JsonlRecords) {
      // Pair files hold both sides: input is the source, reference the target.
      for (const auto& [s, t] : d.pairs) {
        if (s != label && t != label) continue;
        std::vector<std::string> out;
        for (const auto& sample : read_samples(d, pair_file(d, s, t, label), std::nullopt)) {
          if (s == label) out.push_back(sample.input_text);
          else out.insert(out.end(), sample.references.begin(), sample.references.end());
        }
        return out;
      }
    }
  }
  std::vector<std::string> out;
  for (const auto& sample : read_samples(d, p, std::nullopt)) out.push_back(sample.input_text);
  return out;
}

langid::Alignment align_benchmark(BenchmarkDescriptor& d, const langid::IsoTable& table,
                                  const langid::AlignOptions& opts) {
  const langid::CorpusSampler sampler = [&d](const std::string& label) { return sample_text(d, label); };
  auto a = langid::align_labels(d.labels, d.script_overrides, sampler, table, opts);
  d.lang_dict = a.lang_dict;
  return a;
}

}  // namespace polyeval::registry
