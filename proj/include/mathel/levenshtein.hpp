#pragma once

#include <cstddef>
#include <string_view>

namespace mathel {

// Byte-level edit distance (unit-cost insert, delete, substitute).
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - levenshtein / max(len); two empty strings are identical (1.0).
double normalized_similarity(std::string_view a, std::string_view b);

}  // namespace mathel
