#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "piscan/types.hpp"

namespace piscan {

// Token-boundary provider. Implementations return the byte offsets at which
// tokens of instance.prefix_pool start, ascending; offsets need not land on
// character boundaries (byte-level BPE), extract_prefix snaps them.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::size_t> token_starts(const PiInstance& instance) const = 0;
  virtual std::string name() const = 0;
};

// A token is a maximal run of non-whitespace bytes.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::size_t> token_starts(const PiInstance& instance) const override;
  std::string name() const override { return "whitespace"; }

  static std::vector<std::size_t> starts(std::string_view text);
};

// Uses instance.prefix_token_starts; an instance without them is a FormatError.
class PretokenizedTokenizer final : public Tokenizer {
 public:
  std::vector<std::size_t> token_starts(const PiInstance& instance) const override;
  std::string name() const override { return "pretokenized"; }
};

// POST <url> {"text": str} -> {"token_starts": [int]} or {"offsets": [[s, e], ...]}.
class HttpTokenizer final : public Tokenizer {
 public:
  explicit HttpTokenizer(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::vector<std::size_t> token_starts(const PiInstance& instance) const override;
  std::string name() const override { return "http"; }

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

// kind: "whitespace", "pretokenized" or "http" (needs endpoint).
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view kind, const std::string& endpoint = "",
                                          std::chrono::milliseconds timeout = std::chrono::seconds(30));

// The last min(p, token count) tokens of instance.prefix_pool, as a verbatim
// suffix of the pool. Token starts are snapped back to a character boundary.
std::string extract_prefix(const PiInstance& instance, std::size_t p, const Tokenizer& tokenizer);
std::string extract_prefix(std::string_view pool, const std::vector<std::size_t>& token_starts, std::size_t p);

}  // namespace piscan
