#include "kramers/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/text.hpp"

namespace kramers {

Report::Report() { entries_.emplace_back("schema_version", std::to_string(kSchemaVersion)); }

void Report::set(const std::string& key, std::string value) {
  if (key.empty() || key.find('=') != std::string::npos) throw ConfigError("invalid report key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw ConfigError("report value for '" + key + "' spans lines");
  if (has(key)) throw ConfigError("duplicate report key '" + key + "'");
  entries_.emplace_back(key, std::move(value));
}

void Report::set(const std::string& key, double value) { set(key, format_double(value)); }

void Report::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void Report::append(const std::vector<std::pair<std::string, std::string>>& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

bool Report::has(const std::string& key) const {
  for (const auto& kv : entries_) {
    if (kv.first == key) return true;
  }
  return false;
}

const std::string& Report::get(const std::string& key) const {
  for (const auto& kv : entries_) {
    if (kv.first == key) return kv.second;
  }
  throw ConfigError("report has no key '" + key + "'");
}

double Report::get_double(const std::string& key) const { return parse_double(get(key)); }

std::vector<std::pair<std::string, std::string>> Report::with_prefix(const std::string& prefix) const {
  std::vector<std::pair<std::string, std::string>> out;
  const std::string p = prefix + ".";
  for (const auto& kv : entries_) {
    if (kv.first.compare(0, p.size(), p) == 0) out.push_back(kv);
  }
  return out;
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

Report Report::parse(std::string_view text) {
  Report rep;
  rep.entries_.clear();
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("report line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    for (const auto& kv : rep.entries_) {
      if (kv.first == key) throw ConfigError("report line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    rep.entries_.emplace_back(key, value);
  }
  if (!rep.has("schema_version")) throw ConfigError("report has no schema_version");
  if (rep.get("schema_version") != std::to_string(kSchemaVersion)) {
    throw ConfigError("unsupported report schema_version " + rep.get("schema_version"));
  }
  return rep;
}

void Report::write(const std::string& path) const { write_file(path, str()); }

Report Report::read(const std::string& path) { return parse(read_file(path)); }

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw ConfigError("table row has the wrong number of columns");
  rows_.push_back(std::move(row));
}

std::string Table::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

}  // namespace kramers
