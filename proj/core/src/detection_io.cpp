#include "piscan/detection_io.hpp"

#include <ostream>

#include <json.hpp>

#include "piscan/corpus.hpp"
#include "piscan/error.hpp"

namespace piscan {

using ordered_json = nlohmann::ordered_json;

std::string detection_to_json(const Detection& d) {
  ordered_json j;
  j["doc_id"] = d.doc_id;
  j["pi_type"] = std::string(to_string(d.pi_type));
  j["start"] = d.span.start;
  j["end"] = d.span.end;
  j["text"] = d.matched_text;
  j["context_before"] = d.context_before;
  j["context_after"] = d.context_after;
  ordered_json trace = ordered_json::array();
  for (const auto& v : d.rule_trace) {
    ordered_json r;
    r["rule"] = v.rule_name;
    r["passed"] = v.passed;
    trace.push_back(std::move(r));
  }
  j["rule_trace"] = std::move(trace);
  j["detector_version"] = d.detector_version;
  j["stratum"] = d.stratum;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

Detection detection_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    Detection d;
    d.doc_id = j.at("doc_id").get<std::string>();
    const auto type_name = j.at("pi_type").get<std::string>();
    auto type = parse_pi_type(type_name);
    if (!type) throw FormatError("unknown pi_type '" + type_name + "'");
    d.pi_type = *type;
    d.span.start = j.at("start").get<std::size_t>();
    d.span.end = j.at("end").get<std::size_t>();
    d.matched_text = j.at("text").get<std::string>();
    d.context_before = j.value("context_before", std::string());
    d.context_after = j.value("context_after", std::string());
    if (auto it = j.find("rule_trace"); it != j.end()) {
      for (const auto& r : *it) {
        d.rule_trace.push_back(RuleVerdict{r.at("rule").get<std::string>(), r.at("passed").get<bool>(), {}});
      }
    }
    d.detector_version = j.value("detector_version", std::string());
    d.stratum = j.value("stratum", std::string("misc"));
    if (d.span.end <= d.span.start) throw FormatError("empty or inverted span");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed detection record: ") + e.what());
  }
}

std::string detection_id(const Detection& d) {
  return d.doc_id + ":" + std::to_string(d.span.start) + "-" + std::to_string(d.span.end);
}

void for_each_detection(const std::filesystem::path& path,
                        const std::function<void(const Detection&)>& fn) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    try {
      fn(detection_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::vector<Detection> out;
  for_each_detection(path, [&out](const Detection& d) { out.push_back(d); });
  return out;
}

void write_detections(std::ostream& out, const std::vector<Detection>& detections) {
  for (const auto& d : detections) out << detection_to_json(d) << '\n';
}

}  // namespace piscan
