#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kramers {

inline constexpr int kSchemaVersion = 1;

/// Ordered "key = value" document. Every report starts with schema_version.
class Report {
 public:
  Report();

  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void append(const std::vector<std::pair<std::string, std::string>>& entries);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  /// Entries under `prefix.`, keyed by the full key.
  std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;

  std::string str() const;
  /// Rejects documents of another schema version.
  static Report parse(std::string_view text);
  void write(const std::string& path) const;
  static Report read(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Comma-separated table with a header row and LF line endings.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::string& path) const { write_file(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace kramers
