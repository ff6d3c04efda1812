#pragma once

#include <map>
#include <string>

namespace starc {

// Parses a plain-text config of `key = value` lines. Blank lines and lines
// starting with '#' are ignored. Throws FormatError on malformed lines,
// reporting the line number.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

double to_double(const std::string& key, const std::string& value);
long long to_int(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);

} // namespace starc
