#pragma once

#include <string>

#include "piscan/rng.hpp"

namespace piscan::bench {

// Filler prose with a PI-shaped token roughly every `every` words.
inline std::string prose(std::size_t bytes, std::size_t every, std::uint64_t seed = 1) {
  static const char* words[] = {"the", "river", "quiet", "morning", "table", "letter", "station", "garden",
                                "across", "simple", "between", "review", "method", "harbor", "signal"};
  static const char* pis[] = {"jane.roe@example.org", "192.168.4.21", "(415) 555-0134", "+1 212 555 0198",
                              "2001:db8::7", "10.0.0.1", "ISBN 12.3.4.5", "call 123-456-7890"};
  SeededRng rng(seed);
  std::string s;
  s.reserve(bytes + 32);
  std::size_t n = 0;
  while (s.size() < bytes) {
    if (!s.empty()) s += ' ';
    if (every && ++n % every == 0) {
      s += pis[rng.below(std::size(pis))];
    } else {
      s += words[rng.below(std::size(words))];
    }
  }
  return s;
}

}  // namespace piscan::bench
