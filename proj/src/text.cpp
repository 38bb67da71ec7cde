#include "kramers/text.hpp"

#include <charconv>
#include <cmath>

#include "kramers/errors.hpp"

namespace kramers {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& values, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_double(values[i]);
  }
  return out;
}

std::string format_vec(const Vec& v, std::string_view sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v(i));
  }
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return kInfinite;
  if (t == "-inf") return -kInfinite;
  if (t == "nan") return std::nan("");
  double v = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  auto res = std::from_chars(begin, end, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("not a number: '" + t + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view text, char sep) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, sep)) out.push_back(parse_double(item));
  return out;
}

}  // namespace kramers
