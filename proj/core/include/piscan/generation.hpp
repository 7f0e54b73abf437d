#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "piscan/error.hpp"

namespace piscan {

struct GenerationRecord {
  std::string instance_id;
  std::string model;
  std::string checkpoint;
  std::size_t prefix_len = 0;
  std::string prefix_text;
  std::string generation_text;
  std::string decode_mode = "greedy";

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

std::string generation_record_to_json(const GenerationRecord& r);
GenerationRecord generation_record_from_json(std::string_view line);

struct GenerationRequest {
  std::string instance_id;
  std::string model;
  std::string checkpoint;
  std::size_t prefix_len = 0;
  std::string prompt;
  std::size_t max_new_tokens = 64;
};

// Raised when a generation could not be obtained (endpoint gave up after
// retries, non-retryable HTTP status, malformed response).
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Replay lookups that miss. Replay files must be complete, so the harness
// treats this as fatal rather than as a per-instance failure.
class ReplayMissError : public Error {
 public:
  using Error::Error;
};

class Generator {
 public:
  virtual ~Generator() = default;
  // Must be safe to call concurrently.
  virtual GenerationRecord generate(const GenerationRequest& request) = 0;
};

struct EndpointOptions {
  std::string url;  // http://host:port/path
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds max_backoff{8000};
  // Request/response field names, for servers with other schemas.
  std::string prompt_field = "prompt";
  std::string max_tokens_field = "max_new_tokens";
  std::string sample_field = "do_sample";
  std::string response_field = "text";
};

// Text-generation endpoint client:
//   POST {"prompt": str, "max_new_tokens": int, "do_sample": false} -> {"text": str}
// Connection failures, timeouts, 429 and 5xx are retried with exponential
// backoff up to max_attempts; an echoed prompt is stripped from the reply.
class HttpGenerator final : public Generator {
 public:
  using EventSink = std::function<void(std::string_view)>;

  explicit HttpGenerator(EndpointOptions options, EventSink on_event = {});
  GenerationRecord generate(const GenerationRequest& request) override;

  std::size_t retries() const { return retries_.load(); }

 private:
  EndpointOptions options_;
  std::string host_;
  std::string path_;
  EventSink on_event_;
  std::atomic<std::size_t> retries_{0};
};

// Serves generations from JSONL GenerationRecord files, keyed by
// (instance_id, model, checkpoint, prefix_len).
class ReplayGenerator final : public Generator {
 public:
  ReplayGenerator() = default;
  void load(const std::filesystem::path& path);
  void add(GenerationRecord record);
  std::size_t size() const { return records_.size(); }

  GenerationRecord generate(const GenerationRequest& request) override;

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::size_t>;
  std::map<Key, GenerationRecord> records_;
};

// Removes a leading copy of `prompt` from `text`, if present.
std::string strip_prompt_echo(std::string_view text, std::string_view prompt);

}  // namespace piscan
