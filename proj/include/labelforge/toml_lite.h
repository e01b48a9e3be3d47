#pragma once

#include <filesystem>
#include <iosfwd>

#include "json.hpp"

namespace labelforge {

// Reads the subset of TOML used by our config files into a JSON object:
// [table] headers (dotted names allowed), bare or quoted keys, basic and
// literal strings, integers, floats, booleans, and (possibly multi-line)
// arrays of those. Inline tables, dates and multi-line strings are rejected.
// Throws Error(kInvalidConfig) with the offending line.
nlohmann::json ParseTomlLite(std::istream& in);
nlohmann::json LoadTomlLite(const std::filesystem::path& path);

}  // namespace labelforge
