#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>

#include "piscan/levenshtein.hpp"
#include "piscan/text.hpp"

namespace piscan {
namespace {

// Plain recursive definition.
std::size_t naive(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = naive(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  return std::min({sub, naive(a.substr(1), b) + 1, naive(a, b.substr(1)) + 1});
}

// Same recursion, memoized on suffix lengths.
std::size_t memo(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> table((a.size() + 1) * (b.size() + 1), SIZE_MAX);
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto& slot = table[i * (b.size() + 1) + j];
    if (slot != SIZE_MAX) return slot;
    return slot = std::min({go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1), go(i + 1, j) + 1, go(i, j + 1) + 1});
  };
  return go(0, 0);
}

std::vector<std::u32string> all_strings(std::size_t max_len, std::u32string_view alphabet) {
  std::vector<std::u32string> out = {U""};
  for (std::size_t begin = 0, len = 0; len < max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char32_t c : alphabet) out.push_back(out[i] + c);
    }
    begin = end;
  }
  return out;
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("flaw", "lawn"), 2u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", ""), 3u);
  EXPECT_EQ(levenshtein("same", "same"), 0u);
  EXPECT_EQ(levenshtein("", ""), 0u);
}

TEST(Levenshtein, CountsCodePoints) {
  EXPECT_EQ(levenshtein("café", "cafe"), 1u);
  EXPECT_EQ(levenshtein("😀", "x"), 1u);
  EXPECT_EQ(levenshtein("日本", "日本語"), 1u);
}

TEST(Levenshtein, ExhaustiveSmallAlphabet) {
  const auto strings = all_strings(5, U"abc");
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      ASSERT_EQ(levenshtein(a, b), memo(a, b)) << utf8::encode(a) << " / " << utf8::encode(b);
    }
  }
}

TEST(Levenshtein, MemoMatchesNaiveAtLength7) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> len(0, 7), ch(0, 2);
  for (int i = 0; i < 300; ++i) {
    std::u32string a, b;
    for (int k = len(rng); k > 0; --k) a += static_cast<char32_t>('a' + ch(rng));
    for (int k = len(rng); k > 0; --k) b += static_cast<char32_t>('a' + ch(rng));
    ASSERT_EQ(memo(a, b), naive(a, b));
    ASSERT_EQ(levenshtein(a, b), naive(a, b));
  }
}

TEST(Levenshtein, MetricProperties) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> len(0, 20), ch(0, 4);
  auto rnd = [&] {
    std::u32string s;
    for (int k = len(rng); k > 0; --k) s += static_cast<char32_t>(U"ab1.é"[ch(rng)]);
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    auto a = rnd(), b = rnd(), c = rnd();
    const auto ab = levenshtein(a, b);
    EXPECT_EQ(ab, levenshtein(b, a));
    EXPECT_LE(levenshtein(a, c), ab + levenshtein(b, c));
    EXPECT_LE(ab, std::max(a.size(), b.size()));
    EXPECT_GE(ab, a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
    EXPECT_EQ(levenshtein(a, a), 0u);
  }
}

TEST(PatternDistance, MatchesDp) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> ch(0, 5);
  const std::u32string alphabet = U"ab.:@中";
  for (std::size_t plen : {1, 2, 7, 31, 63, 64, 65, 90}) {
    std::u32string p;
    for (std::size_t k = 0; k < plen; ++k) p += alphabet[ch(rng)];
    PatternDistance pd(p);
    for (int i = 0; i < 200; ++i) {
      std::u32string t;
      for (std::size_t k = 0, n = rng() % (plen + 10); k < n; ++k) t += alphabet[ch(rng)];
      ASSERT_EQ(pd.distance(t), levenshtein(p, t)) << plen;
    }
  }
}

TEST(PatternDistance, ExhaustiveSmall) {
  const auto strings = all_strings(4, U"abc");
  for (const auto& p : strings) {
    PatternDistance pd(p);
    for (const auto& t : strings) ASSERT_EQ(pd.distance(t), memo(p, t));
  }
}

}  // namespace
}  // namespace piscan
