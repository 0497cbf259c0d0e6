#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the scoring kernels and the language tables.
namespace polyeval::text {

/// Decodes UTF-8; ill-formed sequences become U+FFFD.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);
std::string to_utf8(char32_t cp);

/// Unicode White_Space property.
bool is_space(char32_t cp) noexcept;

/// Simple (1:1) Unicode case folding.
std::string fold_case(std::string_view utf8);

std::string_view trim(std::string_view s) noexcept;

/// Splits on runs of Unicode whitespace, dropping empty fields.
std::vector<std::string> split_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;

}  // namespace polyeval::text
