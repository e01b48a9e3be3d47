#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace labelforge {

std::string_view Trim(std::string_view s);
std::string AsciiLower(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> SplitOn(std::string_view s, char sep);

// True iff the Levenshtein distance between a and b is exactly 1.
bool WithinOneEdit(std::string_view a, std::string_view b);

// RFC 4180 field quoting: quoted only when it contains ',', '"' or a newline.
std::string CsvField(std::string_view field);

}  // namespace labelforge
