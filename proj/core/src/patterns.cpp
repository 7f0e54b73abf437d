#include "piscan/patterns.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include <boost/regex.hpp>

#include "piscan/error.hpp"

namespace piscan {

namespace {

using ByteTable = std::array<bool, 256>;

constexpr bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

constexpr bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Bytes that can occur inside an email match: every class in the pattern is a
// subset of [\x01-\x7f] without \n and \r.
constexpr ByteTable make_email_table() {
  ByteTable t{};
  for (int c = 0x01; c <= 0x7f; ++c) t[c] = (c != '\n' && c != '\r');
  return t;
}

constexpr ByteTable make_ipv4_table() {
  ByteTable t{};
  for (int c = '0'; c <= '9'; ++c) t[c] = true;
  t['.'] = true;
  return t;
}

// Bytes that can occur inside either phone match.
constexpr ByteTable make_phone_table() {
  ByteTable t{};
  for (int c = '0'; c <= '9'; ++c) t[c] = true;
  for (unsigned char c : {' ', '\t', '\n', '\v', '\f', '\r', '(', ')', '-', '.', '+'}) t[c] = true;
  return t;
}

constexpr ByteTable kEmailBytes = make_email_table();
constexpr ByteTable kIpv4Bytes = make_ipv4_table();
constexpr ByteTable kPhoneBytes = make_phone_table();

// Extends [pos, pos+1) to the maximal run of bytes accepted by `table`.
std::pair<std::size_t, std::size_t> expand_run(std::string_view text, std::size_t pos,
                                                const ByteTable& table) {
  std::size_t b = pos;
  while (b > 0 && table[static_cast<unsigned char>(text[b - 1])]) --b;
  std::size_t e = pos + 1;
  while (e < text.size() && table[static_cast<unsigned char>(text[e])]) ++e;
  return {b, e};
}

void fold_ascii(std::string& s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
}

RawMatch to_raw(const boost::cmatch& m, const char* base, std::size_t offset, bool with_groups) {
  RawMatch r;
  r.span = Span{static_cast<std::size_t>(m[0].first - base) + offset,
                static_cast<std::size_t>(m[0].second - base) + offset};
  if (with_groups) {
    for (int g = 1; g <= 3; ++g) {
      r.groups[g - 1] = Span{static_cast<std::size_t>(m[g].first - base) + offset,
                             static_cast<std::size_t>(m[g].second - base) + offset};
    }
  }
  return r;
}

// Appends every non-overlapping match of `re` in [begin, end). `base` and
// `offset` translate pointers back to offsets in the caller's text.
void search_all(const boost::regex& re, const char* begin, const char* end, const char* base,
                std::size_t offset, bool with_groups, std::vector<RawMatch>& out) {
  boost::cmatch m;
  auto flags = boost::match_default;
  const char* cur = begin;
  while (cur < end && boost::regex_search(cur, end, m, re, flags)) {
    out.push_back(to_raw(m, base, offset, with_groups));
    cur = m[0].second;
    flags |= boost::match_prev_avail;
  }
}

}  // namespace

std::string full_pattern(PatternKind kind) {
  switch (kind) {
    case PatternKind::Email: return std::string(patterns::kEmail);
    case PatternKind::Ipv4: return std::string(patterns::kIpv4);
    case PatternKind::Ipv6:
      return std::string(patterns::kIpv6Prefix) + std::string(patterns::kIpv6Body) +
             std::string(patterns::kIpv6Suffix);
    case PatternKind::Phone: return std::string(patterns::kPhone);
    case PatternKind::PhonePlusOne: return std::string(patterns::kPhonePlusOne);
  }
  throw ArgumentError("unknown pattern kind");
}

struct PatternSet::Impl {
  static constexpr auto kSyntax = boost::regex::perl;
  boost::regex email{std::string(patterns::kEmail), kSyntax};
  boost::regex ipv4{std::string(patterns::kIpv4), kSyntax};
  boost::regex ipv6_body{std::string(patterns::kIpv6Body), kSyntax};
  boost::regex ipv6_full{full_pattern(PatternKind::Ipv6), kSyntax};
  boost::regex phone{std::string(patterns::kPhone), kSyntax};
  boost::regex phone_plus_one{std::string(patterns::kPhonePlusOne), kSyntax};

  const boost::regex& reference(PatternKind kind) const {
    switch (kind) {
      case PatternKind::Email: return email;
      case PatternKind::Ipv4: return ipv4;
      case PatternKind::Ipv6: return ipv6_full;
      case PatternKind::Phone: return phone;
      case PatternKind::PhonePlusOne: return phone_plus_one;
    }
    throw ArgumentError("unknown pattern kind");
  }

  std::vector<RawMatch> find_email(std::string_view text, bool lowercase) const {
    std::vector<RawMatch> out;
    std::string buffer;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const void* at = std::memchr(text.data() + pos, '@', text.size() - pos);
      if (!at) break;
      const auto at_pos = static_cast<std::size_t>(static_cast<const char*>(at) - text.data());
      const auto [b, e] = expand_run(text, at_pos, kEmailBytes);
      buffer.assign(text.substr(b, e - b));
      if (lowercase) fold_ascii(buffer);
      search_all(email, buffer.data(), buffer.data() + buffer.size(), buffer.data(), b, false, out);
      pos = e;
    }
    return out;
  }

  std::vector<RawMatch> find_ipv4(std::string_view text) const {
    std::vector<RawMatch> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
      if (!kIpv4Bytes[static_cast<unsigned char>(text[i])]) {
        ++i;
        continue;
      }
      std::size_t e = i;
      int dots = 0;
      while (e < n && kIpv4Bytes[static_cast<unsigned char>(text[e])]) {
        dots += text[e] == '.';
        ++e;
      }
      if (dots >= 3 && e - i >= 7) {
        search_all(ipv4, text.data() + i, text.data() + e, text.data(), 0, false, out);
      }
      i = e;
    }
    return out;
  }

  std::vector<RawMatch> find_ipv6(std::string_view text) const {
    std::vector<RawMatch> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const void* colon = std::memchr(text.data() + pos, ':', text.size() - pos);
      if (!colon) break;
      const auto c = static_cast<std::size_t>(static_cast<const char*>(colon) - text.data());
      std::size_t b = c;
      while (b > 0 && !is_ascii_space(static_cast<unsigned char>(text[b - 1]))) --b;
      std::size_t e = c + 1;
      while (e < text.size() && !is_ascii_space(static_cast<unsigned char>(text[e]))) ++e;
      if (boost::regex_match(text.data() + b, text.data() + e, ipv6_body)) {
        out.push_back(RawMatch{Span{b, e}, {}});
      }
      pos = e;
    }
    return out;
  }

  std::vector<RawMatch> find_phone(std::string_view text, const boost::regex& re) const {
    std::vector<RawMatch> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
      if (!kPhoneBytes[static_cast<unsigned char>(text[i])]) {
        ++i;
        continue;
      }
      std::size_t e = i;
      int digits = 0;
      bool space = false;
      while (e < n && kPhoneBytes[static_cast<unsigned char>(text[e])]) {
        const auto ch = static_cast<unsigned char>(text[e]);
        digits += is_digit(ch);
        space = space || is_ascii_space(ch);
        ++e;
      }
      if (digits >= 10 && space) {
        search_all(re, text.data() + i, text.data() + e, text.data(), 0, true, out);
      }
      i = e;
    }
    return out;
  }
};

PatternSet::PatternSet() : impl_(std::make_unique<Impl>()) {}
PatternSet::~PatternSet() = default;

const PatternSet& PatternSet::shared() {
  static const PatternSet instance;
  return instance;
}

std::vector<RawMatch> PatternSet::find(PatternKind kind, std::string_view text, bool lowercase) const {
  switch (kind) {
    case PatternKind::Email: return impl_->find_email(text, lowercase);
    case PatternKind::Ipv4: return impl_->find_ipv4(text);
    case PatternKind::Ipv6: return impl_->find_ipv6(text);
    case PatternKind::Phone: return impl_->find_phone(text, impl_->phone);
    case PatternKind::PhonePlusOne: return impl_->find_phone(text, impl_->phone_plus_one);
  }
  throw ArgumentError("unknown pattern kind");
}

std::vector<RawMatch> PatternSet::find_reference(PatternKind kind, std::string_view text,
                                                 bool lowercase) const {
  std::vector<RawMatch> out;
  const bool groups = kind == PatternKind::Phone || kind == PatternKind::PhonePlusOne;
  if (kind == PatternKind::Email && lowercase) {
    std::string folded(text);
    fold_ascii(folded);
    search_all(impl_->email, folded.data(), folded.data() + folded.size(), folded.data(), 0, false, out);
    return out;
  }
  search_all(impl_->reference(kind), text.data(), text.data() + text.size(), text.data(), 0, groups, out);
  return out;
}

}  // namespace piscan
