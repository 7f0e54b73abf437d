#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "piscan/types.hpp"

namespace piscan {

// One detections-JSONL record, without the trailing newline. Field order is
// fixed: doc_id, pi_type, start, end, text, context_before, context_after,
// rule_trace [{rule, passed}], detector_version, stratum.
std::string detection_to_json(const Detection& d);

// Parses one record. Throws FormatError on malformed input.
Detection detection_from_json(std::string_view line);

// "<doc_id>:<start>-<end>", the key annotation files refer to.
std::string detection_id(const Detection& d);

// Streams a detections file; throws FormatError naming the line on the first
// malformed record. Files ending in .gz are decompressed transparently.
void for_each_detection(const std::filesystem::path& path,
                        const std::function<void(const Detection&)>& fn);
std::vector<Detection> read_detections(const std::filesystem::path& path);

void write_detections(std::ostream& out, const std::vector<Detection>& detections);

}  // namespace piscan
