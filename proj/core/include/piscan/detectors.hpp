#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "piscan/detector_config.hpp"
#include "piscan/patterns.hpp"
#include "piscan/types.hpp"

namespace piscan {

// Rule identifiers that can appear in Detection::rule_trace.
namespace rules {
inline constexpr std::string_view kEmailSplit = "email.split_at";
inline constexpr std::string_view kEmailDomainEdges = "email.domain_edge_period";
inline constexpr std::string_view kEmailDomainPeriod = "email.domain_has_period";
inline constexpr std::string_view kContextWords = "context.keyword_window";
inline constexpr std::string_view kAlnumRatio = "context.alnum_ratio";
inline constexpr std::string_view kAreaCode = "phone.area_code";
inline constexpr std::string_view kCentralOffice = "phone.central_office";
inline constexpr std::string_view kPlaceholder = "phone.placeholder";

bool is_known(std::string_view name);
}  // namespace rules

// Central-office (exchange) code check: first digit 2-9 and not an N11
// service code.
bool is_valid_central_office(std::string_view exchange);

// The four R&R detectors plus their post-processing rules. Immutable and
// shareable between threads.
class DetectorSuite {
 public:
  explicit DetectorSuite(DetectorConfig config = {});

  const DetectorConfig& config() const { return config_; }

  std::vector<Detection> detect_emails(std::string_view text) const;
  std::vector<Detection> detect_ip_addresses(std::string_view text) const;
  std::vector<Detection> detect_phone_numbers(std::string_view text, bool with_country_code) const;

  // Every regex candidate of `type` with its complete rule trace, including
  // the ones a rule rejected.
  std::vector<Detection> evaluate_candidates(PiType type, std::string_view text) const;

  // Runs all four detectors. A PhoneNumber detection inside a
  // PhoneNumberPlusOne detection is dropped. Sorted by (span.start, pi_type).
  std::vector<Detection> scan_text(const Document& doc) const;

 private:
  std::vector<Detection> email_candidates(std::string_view text) const;
  std::vector<Detection> ip_candidates(std::string_view text) const;
  std::vector<Detection> phone_candidates(std::string_view text, bool with_country_code) const;

  void apply_context_rules(std::string_view text, Detection& d) const;
  Detection make_detection(std::string_view text, PiType type, Span span) const;

  DetectorConfig config_;
  std::vector<std::string> folded_context_words_;
  const PatternSet* patterns_;
};

// Free-function forms; each builds a suite from `cfg`.
std::vector<Detection> detect_emails(std::string_view text, const DetectorConfig& cfg = {});
std::vector<Detection> detect_ip_addresses(std::string_view text, const DetectorConfig& cfg = {});
std::vector<Detection> detect_phone_numbers(std::string_view text, bool with_country_code,
                                            const DetectorConfig& cfg = {});
std::vector<Detection> scan_text(const Document& doc, const DetectorConfig& cfg = {});

}  // namespace piscan
