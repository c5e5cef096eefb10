#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace srg::text {

/// %.17g rendering: shortest form that still round-trips a double exactly.
[[nodiscard]] std::string g17(double value);

[[nodiscard]] std::string trim(std::string_view s);

/// Whitespace-separated tokens, empty tokens dropped.
[[nodiscard]] std::vector<std::string> split_ws(std::string_view s);

/// Split at every delimiter, keeping empty fields.
[[nodiscard]] std::vector<std::string> split(std::string_view s, char delim);

/// Strict full-string numeric parses; reject trailing junk and empty input.
[[nodiscard]] bool parse_double(std::string_view s, double& out);
[[nodiscard]] bool parse_u64(std::string_view s, std::uint64_t& out);

}  // namespace srg::text
