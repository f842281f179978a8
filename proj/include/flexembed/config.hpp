#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flexembed::config {

/// Flat key-value run configuration. Every key has a documented default
/// (see `schema()`); unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Lines of `key = value`; '#' starts a comment.
  static RunConfig from_file(const std::filesystem::path& path);
  void merge_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  bool is_set(const std::string& key) const;  // explicitly assigned, not defaulted

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<long> int_list(const std::string& key) const;

  /// The seed is mandatory: throws ConfigError unless it was assigned.
  std::uint64_t seed() const;

  /// FNV-1a 64 of the sorted `key=value` lines, path keys excluded, as hex.
  std::string hash() const;
  std::string dump() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> assigned_;
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string description;
  bool path = false;  // excluded from the config hash
};

const std::vector<KeySpec>& schema();

}  // namespace flexembed::config
