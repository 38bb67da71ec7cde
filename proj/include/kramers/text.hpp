#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kramers/measures.hpp"

namespace kramers {

/// Shortest round-trip decimal form of a double ("inf", "-inf", "nan" for
/// non-finite values).
std::string format_double(double v);
std::string format_list(const std::vector<double>& values, std::string_view sep = ", ");
std::string format_vec(const Vec& v, std::string_view sep = " ");

double parse_double(std::string_view text);
std::vector<double> parse_list(std::string_view text, char sep = ',');
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

}  // namespace kramers
