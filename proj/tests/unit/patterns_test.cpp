#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "piscan/patterns.hpp"
#include "test_paths.hpp"

namespace piscan {
namespace {

using nlohmann::json;

const std::map<std::string, PatternKind>& kinds() {
  static const std::map<std::string, PatternKind> m = {{"email", PatternKind::Email},
                                                       {"ipv4", PatternKind::Ipv4},
                                                       {"ipv6", PatternKind::Ipv6},
                                                       {"phone", PatternKind::Phone},
                                                       {"phone_plus_one", PatternKind::PhonePlusOne}};
  return m;
}

std::vector<json> conformance_cases() {
  std::ifstream in(testing::data_dir() / "conformance.jsonl");
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> spans(const std::vector<RawMatch>& ms) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& m : ms) out.emplace_back(m.span.start, m.span.end);
  return out;
}

TEST(Patterns, ReassembledTextIsPinned) {
  const auto pinned = json::parse(testing::read_file(testing::data_dir() / "patterns.json"));
  for (const auto& [name, kind] : kinds()) {
    EXPECT_EQ(full_pattern(kind), pinned.at(name).get<std::string>()) << name;
  }
}

TEST(Patterns, ConformanceFile) {
  const auto cases = conformance_cases();
  ASSERT_GE(cases.size(), 200u);
  const auto& ps = PatternSet::shared();
  for (const auto& c : cases) {
    const std::string text = c.at("text");
    for (const auto& [name, kind] : kinds()) {
      std::vector<std::pair<std::size_t, std::size_t>> want;
      for (const auto& s : c.at("regex").at(name)) want.emplace_back(s[0], s[1]);
      EXPECT_EQ(spans(ps.find(kind, text)), want) << c.at("id") << " " << name;
      EXPECT_EQ(spans(ps.find_reference(kind, text)), want) << c.at("id") << " " << name << " (reference)";
    }
  }
}

TEST(Patterns, PhoneGroups) {
  const std::string text = "call (415) 555-0134 now";
  auto ms = PatternSet::shared().find(PatternKind::Phone, text);
  ASSERT_EQ(ms.size(), 1u);
  auto g = [&](int i) { return text.substr(ms[0].groups[i].start, ms[0].groups[i].size()); };
  EXPECT_EQ(g(0), "415");
  EXPECT_EQ(g(1), "555");
  EXPECT_EQ(g(2), "0134");
  EXPECT_EQ(ms[0].span.start, 4u);  // leading \s+ is part of the raw match
}

TEST(Patterns, EmailCaseFolding) {
  const auto& ps = PatternSet::shared();
  EXPECT_EQ(ps.find(PatternKind::Email, "Bob@Example.COM", true).size(), 1u);
  EXPECT_TRUE(ps.find(PatternKind::Email, "BOB@EXAMPLE.COM", false).empty());
}

TEST(Patterns, Ipv6NeedsWhitespaceBoundaries) {
  const auto& ps = PatternSet::shared();
  EXPECT_EQ(ps.find(PatternKind::Ipv6, "at 2001:db8::1 now").size(), 1u);
  EXPECT_EQ(ps.find(PatternKind::Ipv6, "2001:db8::1").size(), 1u);
  EXPECT_TRUE(ps.find(PatternKind::Ipv6, "x2001:db8::1,").empty());
  EXPECT_EQ(ps.find(PatternKind::Ipv6, "fe80::1%eth0 up").size(), 1u);
}

// Fast segment search against whole-text search on text built to sit near
// the patterns.
std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms = {
      " ", " ", "  ", "\t", "\n", ".", ".", ":", "::", "@", "-", "(", ")", "+", "+1", "1", "0",
      "9", "25", "255", "192", "168", "415", "555", "0134", "2001", "db8", "fe80", "%eth0", "ffff",
      "a", "b", "Z", "x.y", "com", "[", "]", "\"", "é", "中", "😀", "_", "!", "#", "1234567890",
      "0000", "abc", "ISBN"};
  std::uniform_int_distribution<std::size_t> len(0, 30);
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::string s;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) s += atoms[pick(rng)];
  return s;
}

TEST(Patterns, FastPathMatchesReference) {
  std::mt19937_64 rng(20231);
  const auto& ps = PatternSet::shared();
  for (int i = 0; i < 4000; ++i) {
    const auto text = random_text(rng);
    for (const auto& [name, kind] : kinds()) {
      ASSERT_EQ(ps.find(kind, text), ps.find_reference(kind, text)) << name << " on '" << text << "'";
    }
  }
}

}  // namespace
}  // namespace piscan
