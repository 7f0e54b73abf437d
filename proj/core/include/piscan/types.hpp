#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace piscan {

enum class PiType : int {
  Email = 0,
  IpAddress = 1,
  PhoneNumber = 2,
  PhoneNumberPlusOne = 3,
};

inline constexpr std::array<PiType, 4> kAllPiTypes = {
    PiType::Email, PiType::IpAddress, PiType::PhoneNumber, PiType::PhoneNumberPlusOne};

// Stable wire names: "email", "ip_address", "phone_number", "phone_number_plus_one".
std::string_view to_string(PiType type);
std::optional<PiType> parse_pi_type(std::string_view name);

// Half-open byte range [start, end) into a UTF-8 buffer.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(const Span& other) const { return start <= other.start && other.end <= end; }
  bool overlaps(const Span& other) const { return start < other.end && other.start < end; }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::string subset;
  std::string stratum = "misc";
};

struct RuleVerdict {
  std::string rule_name;
  bool passed = false;
  std::string detail;

  friend bool operator==(const RuleVerdict&, const RuleVerdict&) = default;
};

struct Detection {
  std::string doc_id;
  PiType pi_type = PiType::Email;
  Span span;
  std::string matched_text;
  std::string context_before;
  std::string context_after;
  std::vector<RuleVerdict> rule_trace;
  std::string detector_version;
  // Not part of the detector output proper; filled by the corpus scanner so
  // downstream sampling and counting can stratify.
  std::string stratum;

  bool all_rules_passed() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// A gold (annotated true-positive) PI string: the unit of memorization
// measurement.
struct PiInstance {
  std::string instance_id;
  PiType pi_type = PiType::Email;
  std::string ground_truth;
  std::string doc_id;
  Span span;
  // Document text strictly before span.start.
  std::string prefix_pool;
  // Optional pre-tokenized boundaries: byte offsets of token starts in
  // prefix_pool, ascending.
  std::vector<std::size_t> prefix_token_starts;
};

}  // namespace piscan
