#include "piscan/text.hpp"

#include <algorithm>

#include "piscan/error.hpp"

namespace piscan {

namespace {

constexpr std::array<std::string_view, 4> kPiTypeNames = {
    "email", "ip_address", "phone_number", "phone_number_plus_one"};

}  // namespace

std::string_view to_string(PiType type) { return kPiTypeNames[static_cast<int>(type)]; }

std::optional<PiType> parse_pi_type(std::string_view name) {
  for (PiType t : kAllPiTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

bool Detection::all_rules_passed() const {
  return std::all_of(rule_trace.begin(), rule_trace.end(),
                     [](const RuleVerdict& v) { return v.passed; });
}

std::string normalize_digits(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c >= '0' && c <= '9') out.push_back(c);
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

namespace utf8 {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

bool is_boundary(std::string_view text, std::size_t offset) {
  if (offset == 0 || offset == text.size()) return true;
  if (offset > text.size()) return false;
  return !is_continuation(static_cast<unsigned char>(text[offset]));
}

namespace {

// Length of the well-formed sequence starting at i, or 0 if malformed.
std::size_t sequence_length(std::string_view text, std::size_t i, char32_t* cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 0;
  char32_t value = 0;
  char32_t min = 0;
  if (b0 < 0x80) {
    if (cp) *cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2, value = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, value = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, value = b0 & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > text.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if (!is_continuation(b)) return 0;
    value = (value << 6) | (b & 0x3F);
  }
  if (value < min || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return 0;
  if (cp) *cp = value;
  return len;
}

}  // namespace

bool is_valid(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = sequence_length(text, i, nullptr);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

std::size_t back_chars(std::string_view text, std::size_t offset, std::size_t chars) {
  std::size_t pos = std::min(offset, text.size());
  while (chars > 0 && pos > 0) {
    --pos;
    while (pos > 0 && is_continuation(static_cast<unsigned char>(text[pos]))) --pos;
    --chars;
  }
  return pos;
}

std::size_t forward_chars(std::string_view text, std::size_t offset, std::size_t chars) {
  std::size_t pos = std::min(offset, text.size());
  while (chars > 0 && pos < text.size()) {
    ++pos;
    while (pos < text.size() && is_continuation(static_cast<unsigned char>(text[pos]))) ++pos;
    --chars;
  }
  return pos;
}

std::size_t count_chars(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return !is_continuation(static_cast<unsigned char>(c));
  }));
}

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    const std::size_t len = sequence_length(text, i, &cp);
    if (len == 0) {
      out.push_back(U'\uFFFD');
      ++i;
    } else {
      out.push_back(cp);
      i += len;
    }
  }
  return out;
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace utf8

void validate_span(std::string_view text, Span span) {
  if (span.start >= span.end || span.end > text.size()) {
    throw SpanError("span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                    ") out of range for text of " + std::to_string(text.size()) + " bytes");
  }
  if (!utf8::is_boundary(text, span.start) || !utf8::is_boundary(text, span.end)) {
    throw SpanError("span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                    ") splits a UTF-8 sequence");
  }
}

std::pair<std::string, std::string> context_window(std::string_view text, Span span,
                                                   std::size_t before_chars,
                                                   std::size_t after_chars) {
  validate_span(text, span);
  const std::size_t b = utf8::back_chars(text, span.start, before_chars);
  const std::size_t a = utf8::forward_chars(text, span.end, after_chars);
  return {std::string(text.substr(b, span.start - b)), std::string(text.substr(span.end, a - span.end))};
}

}  // namespace piscan
