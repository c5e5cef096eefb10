#include "srg/text.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

namespace srg::text {

std::string g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string trim(std::string_view s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string_view::npos)
        return {};
    const auto to = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(from, to - from + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
            ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r')
            ++i;
        if (i > start)
            out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == delim) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    const std::string tmp(trim(s));
    if (tmp.empty())
        return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return end == tmp.c_str() + tmp.size() && errno != ERANGE;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
    const std::string tmp(trim(s));
    if (tmp.empty() || tmp[0] == '-' || tmp[0] == '+')
        return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtoull(tmp.c_str(), &end, 10);
    return end == tmp.c_str() + tmp.size() && errno != ERANGE;
}

}  // namespace srg::text
