#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "piscan/corpus.hpp"
#include "piscan/detector_config.hpp"
#include "piscan/types.hpp"

namespace piscan {

struct CorpusStats {
  // (pi_type, stratum) -> surviving detections. Zero cells are absent.
  std::map<std::pair<PiType, std::string>, std::uint64_t> detections;
  std::map<std::string, std::uint64_t> documents;  // per stratum
  std::map<std::string, std::uint64_t> bytes;      // text bytes per stratum
  double wall_seconds = 0.0;
  double throughput_bytes_per_sec = 0.0;

  std::uint64_t total_detections(PiType type) const;
  std::uint64_t total_detections() const;
  std::uint64_t total_documents() const;
  std::uint64_t total_bytes() const;

  void add_detection(PiType type, const std::string& stratum, std::uint64_t n = 1);
  // Adds counts; timing fields are left alone.
  CorpusStats& operator+=(const CorpusStats& other);

  std::string to_json() const;
  static CorpusStats from_json(std::string_view text);
};

struct ScanJob {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output;
  DetectorConfig detector;
  StratumConfig strata = StratumConfig::builtin();
  std::size_t parallelism = 1;
  bool strict = false;
  // Documents are handed to workers in batches of roughly this many bytes.
  std::size_t batch_bytes = 1 << 20;
};

struct ScanResult {
  CorpusStats stats;
  std::size_t ingest_errors = 0;
  std::filesystem::path detections_path;
  std::filesystem::path errors_path;  // <output>.errors.jsonl
  std::filesystem::path stats_path;   // <output>.stats.json
};

// Runs the detector suite over every document of every input with up to
// job.parallelism workers. One reader, N workers, one writer; the writer
// emits batches in input order so the detections file is byte-identical for
// any parallelism. Output is staged in <output>.partial and renamed on
// success; on an I/O failure the .partial file is left behind as a marker.
ScanResult scan_corpus(const ScanJob& job);

// Detection counts per (pi_type, stratum) from one or more detections files.
// Document and byte counts are not recoverable from detections and stay empty.
CorpusStats aggregate_counts(const std::vector<std::filesystem::path>& detection_files);
CorpusStats aggregate_counts(const std::filesystem::path& detection_file);

}  // namespace piscan
