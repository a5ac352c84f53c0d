#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace regmine::text {

/// Collapse runs of whitespace to one space and trim both ends.
std::string normalize_whitespace(std::string_view s);

/// ASCII upper-casing; bytes >= 0x80 are left untouched.
std::string to_upper(std::string_view s);

std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Quote a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Parse one CSV line (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> csv_split(std::string_view line);

/// printf-style "%.Nf" without locale surprises.
std::string format_fixed(double value, int decimals);

} // namespace regmine::text
