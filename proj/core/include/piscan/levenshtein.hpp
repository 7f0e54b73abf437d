#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

namespace piscan {

// Unit-cost edit distance (insert, delete, substitute) over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
// UTF-8 convenience overload; distances count Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Distance from a fixed pattern to many texts. For patterns of up to 64 code
// points this uses the bit-parallel recurrence (one machine word per column,
// O(|text|) per call); longer patterns fall back to the row DP.
class PatternDistance {
 public:
  explicit PatternDistance(std::u32string pattern);

  std::size_t distance(std::u32string_view text) const;
  const std::u32string& pattern() const { return pattern_; }

 private:
  std::uint64_t match_mask(char32_t c) const;

  std::u32string pattern_;
  std::uint64_t ascii_[128] = {};
  std::unordered_map<char32_t, std::uint64_t> other_;
};

}  // namespace piscan
