#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "piscan/types.hpp"

namespace piscan {

// Keeps only the ASCII decimal digits of s, in order.
std::string normalize_digits(std::string_view s);

// Returns up to before_chars characters preceding span.start and up to
// after_chars characters following span.end. Characters are Unicode scalar
// values; windows never split a code point. Throws SpanError if span is not a
// valid, boundary-aligned range of text.
std::pair<std::string, std::string> context_window(std::string_view text, Span span,
                                                   std::size_t before_chars,
                                                   std::size_t after_chars);

namespace utf8 {

bool is_continuation(unsigned char c);
bool is_boundary(std::string_view text, std::size_t offset);
bool is_valid(std::string_view text);

// Byte offset of the position `chars` scalar values before `offset`, clamped
// at 0. `offset` must be a boundary.
std::size_t back_chars(std::string_view text, std::size_t offset, std::size_t chars);
// Byte offset `chars` scalar values after `offset`, clamped at text.size().
std::size_t forward_chars(std::string_view text, std::size_t offset, std::size_t chars);

std::size_t count_chars(std::string_view text);

// Decodes to code points. Invalid sequences decode byte-wise as U+FFFD so the
// function is total.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view cps);

}  // namespace utf8

// ASCII-only lower-casing; byte offsets are preserved.
std::string ascii_lower(std::string_view s);

// Throws SpanError unless 0 <= start < end <= text.size() and both ends fall
// on character boundaries.
void validate_span(std::string_view text, Span span);

}  // namespace piscan
