#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vlct {

std::string to_lower(std::string_view s);

/// Collapses runs of whitespace to single spaces and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// Splits on whitespace; no empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

/// Lowercase word tokens: maximal runs of alphanumeric characters.
std::vector<std::string> word_tokenize(std::string_view s);

/// Lowercase + whitespace split + ASCII punctuation stripped from token edges.
/// Shared tokenization for the text-overlap metrics.
std::vector<std::string> metric_tokenize(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace vlct
