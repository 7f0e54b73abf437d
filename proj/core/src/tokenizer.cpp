#include "piscan/tokenizer.hpp"

#include <httplib.h>

#include <algorithm>
#include <json.hpp>

#include "http_util.hpp"
#include "piscan/error.hpp"
#include "piscan/text.hpp"

namespace piscan {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::size_t> WhitespaceTokenizer::starts(std::string_view text) {
  std::vector<std::size_t> out;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool space = is_space(static_cast<unsigned char>(text[i]));
    if (!space && !in_token) out.push_back(i);
    in_token = !space;
  }
  return out;
}

std::vector<std::size_t> WhitespaceTokenizer::token_starts(const PiInstance& instance) const {
  return starts(instance.prefix_pool);
}

std::vector<std::size_t> PretokenizedTokenizer::token_starts(const PiInstance& instance) const {
  if (instance.prefix_token_starts.empty() && !instance.prefix_pool.empty()) {
    throw FormatError("instance " + instance.instance_id + " has no prefix_token_starts");
  }
  return instance.prefix_token_starts;
}

HttpTokenizer::HttpTokenizer(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
  detail::split_http_url(url_);
}

std::vector<std::size_t> HttpTokenizer::token_starts(const PiInstance& instance) const {
  const auto [base, path] = detail::split_http_url(url_);
  httplib::Client client(base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const nlohmann::json body = {{"text", instance.prefix_pool}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw IoError("tokenizer endpoint " + url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw IoError("tokenizer endpoint " + url_ + " returned HTTP " + std::to_string(res->status));
  }
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("tokenizer endpoint returned malformed JSON");
  std::vector<std::size_t> starts;
  try {
    if (j.contains("token_starts")) {
      starts = j["token_starts"].get<std::vector<std::size_t>>();
    } else if (j.contains("offsets")) {
      for (const auto& pair : j["offsets"]) starts.push_back(pair.at(0).get<std::size_t>());
    } else {
      throw FormatError("tokenizer response lacks token_starts/offsets");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("tokenizer response: ") + e.what());
  }
  return starts;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view kind, const std::string& endpoint,
                                          std::chrono::milliseconds timeout) {
  if (kind == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  if (kind == "pretokenized") return std::make_unique<PretokenizedTokenizer>();
  if (kind == "http") {
    if (endpoint.empty()) throw ArgumentError("http tokenizer needs tokenizer_endpoint");
    return std::make_unique<HttpTokenizer>(endpoint, timeout);
  }
  throw ArgumentError("unknown tokenizer: " + std::string(kind));
}

std::string extract_prefix(std::string_view pool, const std::vector<std::size_t>& token_starts, std::size_t p) {
  if (p == 0) return {};
  if (token_starts.size() <= p) return std::string(pool);
  if (!std::is_sorted(token_starts.begin(), token_starts.end())) {
    throw FormatError("token starts must be ascending");
  }
  std::size_t cut = token_starts[token_starts.size() - p];
  if (cut > pool.size()) throw FormatError("token start beyond prefix pool");
  while (cut > 0 && !utf8::is_boundary(pool, cut)) --cut;
  return std::string(pool.substr(cut));
}

std::string extract_prefix(const PiInstance& instance, std::size_t p, const Tokenizer& tokenizer) {
  if (instance.prefix_pool.empty()) return {};
  return extract_prefix(instance.prefix_pool, tokenizer.token_starts(instance), p);
}

}  // namespace piscan
