#pragma once

#include <array>
#include <memory>
#include <string_view>
#include <vector>

#include "piscan/types.hpp"

namespace piscan {

// The R&R regular expressions, reassembled from their line-wrapped printed
// form. tests/data/conformance.jsonl pins their behaviour.
namespace patterns {

inline constexpr std::string_view kEmail =
    R"re((?:[a-z0-9]+(?:\.[a-z0-9!#$%&'*+/=?^_`{|}~-]+)*|"(?:[\x01-\x08\x0b\x0c)re"
    R"re(\x0e-\x1f\x21\x23-\x5b\x5d-\x7f]|\\[\x01-\x09\x0b\x0c\x0e-\x7f])*")@(?)re"
    R"re(:(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+[a-z0-9](?:[a-z0-9-]*[a-z0-9])?)re"
    R"re(|\[(?:(?:2(?:5[0-5]|[0-4][0-9])|1[0-9][0-9]|[1-9]?[0-9])\.){3}(?:2(?:5)re"
    R"re([0-5]|[0-4][0-9])|1[0-9][0-9]|[1-9]?[0-9])|[a-z0-9-]*[a-z0-9]:(?:[\x01)re"
    R"re(-\x08\x0b\x0c\x0e-\x1f\x21-\x5a\x53-\x7f]|\\[\x01-\x09\x0b\x0c\x0e-\x7f])+\]))re";

inline constexpr std::string_view kIpv4 =
    R"re((?:(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)\.){3}(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?))re";

// Address alternatives of the IPv6 pattern, without the surrounding
// whitespace lookarounds. The fe80 branch carries the zone index
// (`%eth0`).
inline constexpr std::string_view kIpv6Body =
    R"re((?:(?:[0-9a-fA-F]{1,4}:){7,7}[0-9a-fA-F]{1,4}|(?:[0-9a-fA-F]{1,4}:){1,7}:)re"
    R"re(|(?:[0-9a-fA-F]{1,4}:){1,6}:[0-9a-fA-F]{1,4}|(?:[0-9a-fA-F]{1,4}:){1,5}(?::[0-9a-fA-F]{1,4}){1,2})re"
    R"re(|(?:[0-9a-fA-F]{1,4}:){1,4}(?::[0-9a-fA-F]{1,4}){1,3}|(?:[0-9a-fA-F]{1,4}:){1,3}(?::[0-9a-fA-F]{1,4}){1,4})re"
    R"re(|(?:[0-9a-fA-F]{1,4}:){1,2}(?::[0-9a-fA-F]{1,4}){1,5}|[0-9a-fA-F]{1,4}:(?:(?::[0-9a-fA-F]{1,4}){1,6}))re"
    R"re(|:(?:(?::[0-9a-fA-F]{1,4}){1,7}|:)|fe80:(?:(?::[0-9a-fA-F]{0,4}){0,4}%[0-9a-zA-Z]{1,}))re"
    R"re(|::(?:ffff(?::0{1,4}){0,1}:){0,1}(?:(?:(?:25[0-5]|(?:2[0-4]|1{0,1}[0-9]){0,1}[0-9])\.){3,3})re"
    R"re((?:25[0-5]|(?:2[0-4]|1{0,1}[0-9]){0,1}[0-9]))|(?:(?:[0-9a-fA-F]{1,4}:){1,4}(?:(?:25[0-5])re"
    R"re(|(?:2[0-4]|1{0,1}[0-9]){0,1}[0-9])\.){3,3}(?:25[0-5]|(?:2[0-4]|1{0,1}[0-9]){0,1}[0-9]))))re";

inline constexpr std::string_view kIpv6Prefix = R"re((?:^|(?<=\s)))re";
inline constexpr std::string_view kIpv6Suffix = R"re((?=\s|$))re";

inline constexpr std::string_view kPhone =
    R"re(\s+\(?(\d{3})\)?[-\. ]*(\d{3})[-. ]?(\d{4})(?!\d))re";

inline constexpr std::string_view kPhonePlusOne =
    R"re(\s+(?:\+1|1)[-\. ]*\(?(\d{3})\)?[-\. ]*(\d{3})[-\. ]?(\d{4})(?!\d))re";

}  // namespace patterns

enum class PatternKind { Email, Ipv4, Ipv6, Phone, PhonePlusOne };

// One regex match. `span` is the whole match; `groups` holds the three
// capture groups (area code, exchange, line number) for the phone patterns
// and is empty otherwise.
struct RawMatch {
  Span span;
  std::array<Span, 3> groups{};

  friend bool operator==(const RawMatch&, const RawMatch&) = default;
};

// Compiled pattern set. Immutable after construction and safe to share
// between threads.
class PatternSet {
 public:
  PatternSet();
  ~PatternSet();
  PatternSet(const PatternSet&) = delete;
  PatternSet& operator=(const PatternSet&) = delete;

  // Process-wide instance, compiled on first use.
  static const PatternSet& shared();

  // All non-overlapping, leftmost-first matches of `kind` in `text`. The
  // regex only runs on byte segments that can hold a match; results are
  // identical to a whole-text search. With `lowercase` set, ASCII letters
  // are folded before matching (email only; byte offsets are unchanged).
  std::vector<RawMatch> find(PatternKind kind, std::string_view text, bool lowercase = true) const;

  // Whole-text search with the verbatim patterns, lookarounds included.
  // Slow; it is the behavioural reference for find().
  std::vector<RawMatch> find_reference(PatternKind kind, std::string_view text,
                                       bool lowercase = true) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Full pattern text for `kind` (for IPv6, with the lookarounds).
std::string full_pattern(PatternKind kind);

}  // namespace piscan
