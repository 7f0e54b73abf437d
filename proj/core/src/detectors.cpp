#include "piscan/detectors.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "piscan/text.hpp"
#include "piscan/version.hpp"

namespace piscan {

namespace rules {

bool is_known(std::string_view name) {
  static constexpr std::array kAll = {kEmailSplit,   kEmailDomainEdges, kEmailDomainPeriod,
                                      kContextWords, kAlnumRatio,       kAreaCode,
                                      kCentralOffice, kPlaceholder};
  return std::find(kAll.begin(), kAll.end(), name) != kAll.end();
}

}  // namespace rules

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

void add_verdict(Detection& d, std::string_view rule, bool passed, std::string detail) {
  d.rule_trace.push_back(RuleVerdict{std::string(rule), passed, std::move(detail)});
}

// Offset of the '@' separating local part and domain in an email match: the
// first '@' after the (possibly quoted) local part.
std::size_t email_separator(std::string_view match) {
  if (!match.empty() && match.front() == '"') {
    for (std::size_t i = 1; i < match.size(); ++i) {
      if (match[i] == '\\') {
        ++i;
      } else if (match[i] == '"') {
        return match.find('@', i + 1);
      }
    }
    return std::string_view::npos;
  }
  return match.find('@');
}

std::vector<Detection> survivors(std::vector<Detection> candidates) {
  std::erase_if(candidates, [](const Detection& d) { return !d.all_rules_passed(); });
  return candidates;
}

}  // namespace

bool is_valid_central_office(std::string_view exchange) {
  if (exchange.size() != 3) return false;
  if (exchange[0] < '2' || exchange[0] > '9') return false;
  return !(exchange[1] == '1' && exchange[2] == '1');
}

DetectorSuite::DetectorSuite(DetectorConfig config)
    : config_(std::move(config)), patterns_(&PatternSet::shared()) {
  config_.validate();
  folded_context_words_.reserve(config_.context_words.size());
  for (const auto& w : config_.context_words) folded_context_words_.push_back(ascii_lower(w));
}

Detection DetectorSuite::make_detection(std::string_view text, PiType type, Span span) const {
  Detection d;
  d.pi_type = type;
  d.span = span;
  d.matched_text = std::string(text.substr(span.start, span.size()));
  auto [before, after] =
      context_window(text, span, config_.report_context_chars, config_.report_context_chars);
  d.context_before = std::move(before);
  d.context_after = std::move(after);
  d.detector_version = kDetectorVersion;
  return d;
}

void DetectorSuite::apply_context_rules(std::string_view text, Detection& d) const {
  // Filter words in the micro window preceding the span.
  {
    const std::size_t b = utf8::back_chars(text, d.span.start, config_.micro_window_chars);
    const std::string window = ascii_lower(text.substr(b, d.span.start - b));
    std::string hit;
    for (std::size_t i = 0; i < folded_context_words_.size(); ++i) {
      if (window.find(folded_context_words_[i]) != std::string::npos) {
        hit = config_.context_words[i];
        break;
      }
    }
    add_verdict(d, rules::kContextWords, hit.empty(),
                hit.empty() ? std::string() : "found '" + hit + "'");
  }
  // Share of alphanumeric characters among the preceding characters.
  {
    const std::size_t b = utf8::back_chars(text, d.span.start, config_.alpha_window_chars);
    const std::string_view window = text.substr(b, d.span.start - b);
    const std::size_t chars = utf8::count_chars(window);
    const auto alnum = static_cast<std::size_t>(std::count_if(window.begin(), window.end(), is_ascii_alnum));
    const bool ok = static_cast<double>(alnum) >= config_.alpha_min_ratio * static_cast<double>(chars);
    char detail[64];
    std::snprintf(detail, sizeof detail, "%zu/%zu alphanumeric", alnum, chars);
    add_verdict(d, rules::kAlnumRatio, ok, detail);
  }
}

std::vector<Detection> DetectorSuite::email_candidates(std::string_view text) const {
  std::vector<Detection> out;
  for (const RawMatch& m : patterns_->find(PatternKind::Email, text, config_.case_insensitive_email)) {
    Detection d = make_detection(text, PiType::Email, m.span);
    const std::string_view match = d.matched_text;
    const std::size_t at = email_separator(match);
    const std::string_view local = at == std::string_view::npos ? match : match.substr(0, at);
    const std::string_view domain =
        at == std::string_view::npos ? std::string_view() : match.substr(at + 1);
    add_verdict(d, rules::kEmailSplit, at != std::string_view::npos && !local.empty() && !domain.empty(),
                {});
    const bool edge = !domain.empty() && (domain.front() == '.' || domain.back() == '.');
    add_verdict(d, rules::kEmailDomainEdges, !domain.empty() && !edge, {});
    add_verdict(d, rules::kEmailDomainPeriod, domain.find('.') != std::string_view::npos, {});
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> DetectorSuite::ip_candidates(std::string_view text) const {
  std::vector<RawMatch> raw = patterns_->find(PatternKind::Ipv4, text);
  std::vector<RawMatch> v6 = patterns_->find(PatternKind::Ipv6, text);
  raw.insert(raw.end(), v6.begin(), v6.end());
  std::sort(raw.begin(), raw.end(), [](const RawMatch& a, const RawMatch& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.span.size() > b.span.size();
  });
  // Overlapping IPv4/IPv6 candidates collapse to the longer span.
  std::vector<Span> kept;
  for (const RawMatch& m : raw) {
    if (!kept.empty() && kept.back().overlaps(m.span)) {
      if (m.span.size() > kept.back().size()) kept.back() = m.span;
      continue;
    }
    kept.push_back(m.span);
  }
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (const Span& s : kept) {
    Detection d = make_detection(text, PiType::IpAddress, s);
    apply_context_rules(text, d);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> DetectorSuite::phone_candidates(std::string_view text, bool with_country_code) const {
  const PatternKind kind = with_country_code ? PatternKind::PhonePlusOne : PatternKind::Phone;
  const PiType type = with_country_code ? PiType::PhoneNumberPlusOne : PiType::PhoneNumber;
  std::vector<Detection> out;
  for (const RawMatch& m : patterns_->find(kind, text)) {
    // The pattern consumes the whitespace run in front of the number; the
    // reported span starts at the number itself.
    Span span = m.span;
    while (span.start < span.end && is_ascii_space(text[span.start])) ++span.start;
    Detection d = make_detection(text, type, span);
    apply_context_rules(text, d);

    const std::string digits = normalize_digits(d.matched_text);
    const std::string_view area = text.substr(m.groups[0].start, m.groups[0].size());
    const std::string_view exchange = text.substr(m.groups[1].start, m.groups[1].size());

    const bool area_ok = area[0] != '0' && area[0] != '1' && config_.area_code_allowlist.contains(area);
    add_verdict(d, rules::kAreaCode, area_ok, std::string(area));
    add_verdict(d, rules::kCentralOffice, is_valid_central_office(exchange), std::string(exchange));

    std::string placeholder;
    const std::string_view stripped =
        !digits.empty() && digits.front() == '1' ? std::string_view(digits).substr(1) : std::string_view();
    for (const auto& p : config_.placeholder_numbers) {
      if (digits == p || (!stripped.empty() && stripped == p)) {
        placeholder = p;
        break;
      }
    }
    add_verdict(d, rules::kPlaceholder, placeholder.empty(), placeholder);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> DetectorSuite::evaluate_candidates(PiType type, std::string_view text) const {
  switch (type) {
    case PiType::Email: return email_candidates(text);
    case PiType::IpAddress: return ip_candidates(text);
    case PiType::PhoneNumber: return phone_candidates(text, false);
    case PiType::PhoneNumberPlusOne: return phone_candidates(text, true);
  }
  return {};
}

std::vector<Detection> DetectorSuite::detect_emails(std::string_view text) const {
  return survivors(email_candidates(text));
}

std::vector<Detection> DetectorSuite::detect_ip_addresses(std::string_view text) const {
  return survivors(ip_candidates(text));
}

std::vector<Detection> DetectorSuite::detect_phone_numbers(std::string_view text, bool with_country_code) const {
  return survivors(phone_candidates(text, with_country_code));
}

std::vector<Detection> DetectorSuite::scan_text(const Document& doc) const {
  const std::string_view text = doc.text;
  std::vector<Detection> all = detect_emails(text);
  auto append = [&all](std::vector<Detection>&& more) {
    all.insert(all.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  append(detect_ip_addresses(text));
  std::vector<Detection> plus_one = detect_phone_numbers(text, true);
  std::vector<Detection> ten_digit = detect_phone_numbers(text, false);
  std::erase_if(ten_digit, [&plus_one](const Detection& d) {
    return std::any_of(plus_one.begin(), plus_one.end(), [&d](const Detection& p) {
      return p.span.contains(d.span) && p.span.size() > d.span.size();
    });
  });
  append(std::move(ten_digit));
  append(std::move(plus_one));

  std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return static_cast<int>(a.pi_type) < static_cast<int>(b.pi_type);
  });
  for (Detection& d : all) {
    d.doc_id = doc.doc_id;
    d.stratum = doc.stratum;
  }
  return all;
}

std::vector<Detection> detect_emails(std::string_view text, const DetectorConfig& cfg) {
  return DetectorSuite(cfg).detect_emails(text);
}

std::vector<Detection> detect_ip_addresses(std::string_view text, const DetectorConfig& cfg) {
  return DetectorSuite(cfg).detect_ip_addresses(text);
}

std::vector<Detection> detect_phone_numbers(std::string_view text, bool with_country_code,
                                            const DetectorConfig& cfg) {
  return DetectorSuite(cfg).detect_phone_numbers(text, with_country_code);
}

std::vector<Detection> scan_text(const Document& doc, const DetectorConfig& cfg) {
  return DetectorSuite(cfg).scan_text(doc);
}

}  // namespace piscan
