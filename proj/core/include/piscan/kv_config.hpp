#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace piscan {

// Flat `key = value` configuration document.
//
//   # comment (only when '#' is the first non-blank character)
//   micro_window_chars = 20
//   context_words = isbn, doi, "#", " wo "
//
// A value wrapped in double quotes is taken verbatim. List values are
// comma-separated; a list item may itself be double-quoted to keep leading or
// trailing spaces. Later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  std::optional<std::vector<std::string>> get_list(std::string_view key) const;
  std::optional<double> get_double(std::string_view key) const;
  std::optional<long long> get_int(std::string_view key) const;
  std::optional<bool> get_bool(std::string_view key) const;

  void set(std::string key, std::string value);
  // Keys in `overrides` replace keys here.
  void merge(const KeyValueConfig& overrides);

  // Keys starting with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  // Directory of the file this was loaded from; relative paths in values
  // resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::filesystem::path base_dir_;
  std::string origin_ = "<string>";
};

// Splits a comma-separated list honouring double-quoted items.
std::vector<std::string> split_config_list(std::string_view value);

}  // namespace piscan
