#include "piscan/generation.hpp"

#include <httplib.h>

#include <algorithm>
#include <json.hpp>
#include <thread>

#include "http_util.hpp"
#include "piscan/corpus.hpp"

namespace piscan {

std::string generation_record_to_json(const GenerationRecord& r) {
  nlohmann::ordered_json j;
  j["instance_id"] = r.instance_id;
  j["model"] = r.model;
  j["checkpoint"] = r.checkpoint;
  j["prefix_len"] = r.prefix_len;
  j["prefix_text"] = r.prefix_text;
  j["generation_text"] = r.generation_text;
  j["decode_mode"] = r.decode_mode;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

GenerationRecord generation_record_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("generation record is not a JSON object");
  try {
    GenerationRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.checkpoint = j.value("checkpoint", std::string());
    r.prefix_len = j.at("prefix_len").get<std::size_t>();
    r.prefix_text = j.value("prefix_text", std::string());
    r.generation_text = j.at("generation_text").get<std::string>();
    r.decode_mode = j.value("decode_mode", std::string("greedy"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed generation record: ") + e.what());
  }
}

std::string strip_prompt_echo(std::string_view text, std::string_view prompt) {
  if (!prompt.empty() && text.substr(0, prompt.size()) == prompt) text.remove_prefix(prompt.size());
  return std::string(text);
}

HttpGenerator::HttpGenerator(EndpointOptions options, EventSink on_event)
    : options_(std::move(options)), on_event_(std::move(on_event)) {
  if (options_.max_attempts < 1) throw ArgumentError("max_attempts must be at least 1");
  std::tie(host_, path_) = detail::split_http_url(options_.url);
}

GenerationRecord HttpGenerator::generate(const GenerationRequest& request) {
  nlohmann::json body;
  body[options_.prompt_field] = request.prompt;
  body[options_.max_tokens_field] = request.max_new_tokens;
  body[options_.sample_field] = false;
  const std::string payload = body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      if (on_event_) {
        on_event_("retry " + std::to_string(attempt - 1) + " for " + request.instance_id + " (" +
                  request.model + "): " + last_error);
      }
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, options_.max_backoff);
    }

    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw GenerationError("endpoint returned HTTP " + std::to_string(res->status), attempt);
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains(options_.response_field) ||
        !j[options_.response_field].is_string()) {
      throw GenerationError("endpoint response lacks string field \"" + options_.response_field + "\"", attempt);
    }
    GenerationRecord r;
    r.instance_id = request.instance_id;
    r.model = request.model;
    r.checkpoint = request.checkpoint;
    r.prefix_len = request.prefix_len;
    r.prefix_text = request.prompt;
    r.generation_text = strip_prompt_echo(j[options_.response_field].get<std::string>(), request.prompt);
    return r;
  }
  throw GenerationError("endpoint failed after " + std::to_string(options_.max_attempts) +
                            " attempts: " + last_error,
                        options_.max_attempts);
}

void ReplayGenerator::load(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      add(generation_record_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
}

void ReplayGenerator::add(GenerationRecord record) {
  Key key{record.instance_id, record.model, record.checkpoint, record.prefix_len};
  records_.insert_or_assign(std::move(key), std::move(record));
}

GenerationRecord ReplayGenerator::generate(const GenerationRequest& request) {
  auto it = records_.find(Key{request.instance_id, request.model, request.checkpoint, request.prefix_len});
  if (it == records_.end()) {
    throw ReplayMissError("replay has no generation for instance " + request.instance_id + ", model " +
                          request.model + ", checkpoint " + request.checkpoint + ", prefix_len " +
                          std::to_string(request.prefix_len));
  }
  return it->second;
}

}  // namespace piscan
