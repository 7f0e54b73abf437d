#include "piscan/levenshtein.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "piscan/text.hpp"

namespace piscan {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

PatternDistance::PatternDistance(std::u32string pattern) : pattern_(std::move(pattern)) {
  if (pattern_.size() > 64) return;
  for (std::size_t i = 0; i < pattern_.size(); ++i) {
    const char32_t c = pattern_[i];
    const std::uint64_t bit = std::uint64_t{1} << i;
    if (c < 128) {
      ascii_[c] |= bit;
    } else {
      other_[c] |= bit;
    }
  }
}

std::uint64_t PatternDistance::match_mask(char32_t c) const {
  if (c < 128) return ascii_[c];
  auto it = other_.find(c);
  return it == other_.end() ? 0 : it->second;
}

std::size_t PatternDistance::distance(std::u32string_view text) const {
  const std::size_t m = pattern_.size();
  if (m == 0) return text.size();
  if (m > 64) return levenshtein(pattern_, text);

  // Hyyrö's formulation of Myers' bit-vector recurrence: VP/VN hold the
  // vertical +1/-1 deltas of the current DP column.
  const std::uint64_t last = std::uint64_t{1} << (m - 1);
  std::uint64_t vp = m == 64 ? ~std::uint64_t{0} : (last << 1) - 1;
  std::uint64_t vn = 0;
  std::size_t dist = m;
  for (char32_t c : text) {
    const std::uint64_t eq = match_mask(c);
    const std::uint64_t d0 = (((eq & vp) + vp) ^ vp) | eq | vn;
    std::uint64_t hp = vn | ~(d0 | vp);
    std::uint64_t hn = d0 & vp;
    if (hp & last) ++dist;
    if (hn & last) --dist;
    hp = (hp << 1) | 1;
    hn <<= 1;
    vp = hn | ~(d0 | hp);
    vn = hp & d0;
  }
  return dist;
}

}  // namespace piscan
