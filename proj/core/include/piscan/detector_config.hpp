#pragma once

#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "piscan/kv_config.hpp"

namespace piscan {

// Set of assigned 3-digit NANP area codes. File format: one code per line,
// '#' comments, optional "# snapshot: <date>" line naming the source date.
class AreaCodeAllowlist {
 public:
  AreaCodeAllowlist() = default;

  static AreaCodeAllowlist parse(std::string_view text, std::string_view origin = "<string>");
  static AreaCodeAllowlist load(const std::string& path);
  // The list compiled in from data/nanp_area_codes.txt.
  static const AreaCodeAllowlist& builtin();

  void insert(std::string_view code);
  bool contains(std::string_view code) const;
  std::size_t size() const { return codes_.count(); }
  const std::string& snapshot() const { return snapshot_; }

 private:
  std::bitset<1000> codes_;
  std::string snapshot_;
};

std::vector<std::string> default_context_words();
std::vector<std::string> default_placeholder_numbers();

struct DetectorConfig {
  std::vector<std::string> context_words = default_context_words();
  std::size_t micro_window_chars = 20;
  std::size_t alpha_window_chars = 50;
  double alpha_min_ratio = 0.10;
  std::vector<std::string> placeholder_numbers = default_placeholder_numbers();
  AreaCodeAllowlist area_code_allowlist = AreaCodeAllowlist::builtin();
  bool case_insensitive_email = true;
  // Width of Detection::context_before / context_after, in characters.
  std::size_t report_context_chars = 50;

  // Throws ArgumentError on a malformed config.
  void validate() const;

  // Overrides defaults with any of: context_words, micro_window_chars,
  // alpha_window_chars, alpha_min_ratio, placeholder_numbers,
  // area_code_allowlist (path, relative to the config file), case_insensitive_email,
  // report_context_chars. Unknown keys are ignored so one file can carry
  // settings for several subcommands.
  static DetectorConfig from_config(const KeyValueConfig& kv);
};

}  // namespace piscan
