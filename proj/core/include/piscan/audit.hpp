#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "piscan/scanner.hpp"
#include "piscan/types.hpp"

namespace piscan::audit {

enum class Label { TruePositive, FalsePositive };
enum class SpanQuality { Perfect, Partial, NotApplicable };

// A human label for one sampled detection. span_quality is NotApplicable
// exactly when the label is FalsePositive.
struct AnnotationRecord {
  std::string detection_id;
  PiType pi_type = PiType::Email;
  std::string stratum;
  Label label = Label::FalsePositive;
  SpanQuality span_quality = SpanQuality::NotApplicable;
  std::string annotator;
  std::string system = "rnr";
};

std::string annotation_to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(std::string_view line);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stratified sampling

struct Shortfall {
  PiType pi_type;
  std::string stratum;
  std::size_t quota = 0;
  std::size_t available = 0;
};

struct SampleResult {
  // Selected detections: by pi_type, then stratum in configured order, then
  // input order.
  std::vector<Detection> sample;
  std::vector<Shortfall> shortfalls;
  std::vector<std::string> warnings;
};

// Draws k_per_type detections per PI type spread over `strata`: each stratum
// gets floor(k/S), the first k mod S strata one more. A stratum that cannot
// fill its quota gives the remainder to the others (again evenly, in
// configured order). Within a stratum the draw is uniform without
// replacement. Deterministic for a fixed seed.
SampleResult stratified_sample(const std::vector<Detection>& detections, std::size_t k_per_type,
                               const std::vector<std::string>& strata, std::uint64_t seed);

// File form: reads a detections file and writes the sample as detections
// JSONL with a leading "detection_id" field.
SampleResult stratified_sample(const std::filesystem::path& detections_file,
                               const std::filesystem::path& sample_file, std::size_t k_per_type,
                               const std::vector<std::string>& strata, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Precision

struct PrecisionCell {
  std::size_t n = 0;
  std::size_t true_positives = 0;
  double precision() const { return n == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(n); }
};

struct PrecisionReport {
  // (system, pi_type, stratum)
  std::map<std::tuple<std::string, PiType, std::string>, PrecisionCell> cells;
  // (system, pi_type), pooling counts across strata.
  std::map<std::pair<std::string, PiType>, PrecisionCell> pooled;
  std::vector<std::string> warnings;

  std::optional<double> pooled_precision(const std::string& system, PiType type) const;
  std::vector<std::string> systems() const;

  std::string to_json() const;
  static PrecisionReport from_json(std::string_view text);
};

// `expected_strata`, when given, lists the strata every (system, pi_type)
// should cover; missing cells are reported in warnings.
PrecisionReport compute_precision(const std::vector<AnnotationRecord>& records,
                                  const std::vector<std::string>& expected_strata = {});

// ---------------------------------------------------------------------------
// Permutation test

enum class Alternative { Greater, Less, TwoSided };

struct PermutationResult {
  double p_value = 1.0;
  double observed_difference = 0.0;  // mean(a) - mean(b)
  std::size_t resamples = 0;
  std::size_t extreme = 0;  // resampled statistics at least as extreme
};

// Two-sample difference-of-means permutation test on 0/1 labels:
// p = (1 + #{d* at least as extreme as d}) / (1 + resamples).
PermutationResult permutation_test(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                   std::size_t resamples, std::uint64_t seed,
                                   Alternative alternative = Alternative::Greater);

// ---------------------------------------------------------------------------
// Expected counts

std::uint64_t expected_count(std::uint64_t total_detections, double precision);

struct ExpectedCount {
  PiType pi_type;
  std::uint64_t total_detections = 0;
  double precision = 0.0;
  std::uint64_t expected = 0;
};

struct ExpectedCounts {
  std::vector<ExpectedCount> rows;
  std::vector<std::string> warnings;
  std::string to_json() const;
};

// round(total detections x pooled precision) per PI type in `stats`. If
// `system` is empty and the report holds a single system, that one is used.
ExpectedCounts expected_counts(const CorpusStats& stats, const PrecisionReport& report,
                               const std::string& system = "");

}  // namespace piscan::audit
