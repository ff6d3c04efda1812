#include "starc/kv_config.hpp"

#include <cstdlib>
#include <fstream>
#include <string>

#include "starc/errors.hpp"

namespace starc {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("config: cannot open '" + path + "'");
    }
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw FormatError("config: line " + std::to_string(line_no) +
                              " is not a key=value pair: '" + t + "'");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw FormatError("config: line " + std::to_string(line_no) + " has an empty key");
        }
        out[key] = value;
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
        throw FormatError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
    return v;
}

long long to_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') {
        throw FormatError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw FormatError("config: key '" + key + "' has non-boolean value '" + value + "'");
}

} // namespace starc
