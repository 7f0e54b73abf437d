#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piscan/generation.hpp"
#include "piscan/kv_config.hpp"
#include "piscan/parrot.hpp"
#include "piscan/tokenizer.hpp"
#include "piscan/types.hpp"

namespace piscan {

// One (model, checkpoint) pair under test. Generations come from `endpoint`
// in HTTP mode and from `replay` in replay mode.
struct ModelSpec {
  std::string tag;
  std::string checkpoint;
  std::string endpoint;
  std::filesystem::path replay;
};

// Config keys (flat key = value):
//   prefix_lengths = 80, 40, 20, 10
//   generation_length = 64
//   max_inflight = 4
//   timeout_ms = 30000, max_attempts = 4, backoff_ms = 250
//   tokenizer = whitespace | pretokenized | http
//   tokenizer_endpoint = http://host:port/tokenize
//   replay = <file>                     (default replay file for every model)
//   failure_threshold = 0.10
//   field.prompt / field.max_new_tokens / field.do_sample / field.text
//   model.<name>.tag / .checkpoint / .endpoint / .replay
// Models are ordered by <name>.
struct HarnessConfig {
  std::vector<std::size_t> prefix_lengths{80, 40, 20, 10};
  std::size_t generation_length = 64;
  std::vector<ModelSpec> models;
  std::string tokenizer = "whitespace";
  std::string tokenizer_endpoint;
  std::size_t max_inflight = 4;
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  EndpointOptions endpoint_template;
  double failure_threshold = 0.10;

  // Sorts prefix lengths descending and drops duplicates, then checks ranges.
  void normalize();
  static HarnessConfig from_config(const KeyValueConfig& kv);
};

std::string pi_instance_to_json(const PiInstance& instance);
PiInstance pi_instance_from_json(std::string_view line);
std::vector<PiInstance> read_instances(const std::filesystem::path& path);

// Number of leading characters of the generation used for constituent flags.
std::size_t constituent_window_chars(std::string_view truth);

// ParrotScore over the full generation; constituent flags over its first
// constituent_window_chars(truth) characters. Non-greedy records are an
// ArgumentError.
ParrotResult evaluate_instance(const PiInstance& instance, const GenerationRecord& generation);

struct CellResult {
  std::string model;
  std::string checkpoint;
  std::size_t prefix_len = 0;
  ParrotResult result;
};

struct FailureRecord {
  std::string instance_id;
  PiType pi_type = PiType::Email;
  std::string model;
  std::string checkpoint;
  std::size_t prefix_len = 0;
  std::string error;
  int attempts = 0;
};

struct ExperimentRow {
  std::string model;
  std::string checkpoint;
  std::size_t prefix_len = 0;
  PiType pi_type = PiType::Email;
  std::size_t n = 0;       // scored instances
  std::size_t failed = 0;  // instances whose generation failed
  double mean_score = 0.0;
  double verbatim_rate = 0.0;
  // Per constituent group; empty when no instance had constituents (IPv6).
  std::vector<double> constituent_rates;
  std::size_t constituent_n = 0;
};

std::string experiment_row_to_json(const ExperimentRow& row);
ExperimentRow experiment_row_from_json(std::string_view line);
std::vector<ExperimentRow> read_rows(const std::filesystem::path& path);

struct ExperimentOutput {
  std::vector<ExperimentRow> rows;
  std::vector<CellResult> results;
  std::vector<GenerationRecord> generations;
  std::vector<FailureRecord> failures;
  // "model/checkpoint/p=N" cells whose failure rate exceeded the threshold.
  std::vector<std::string> unreliable_cells;
  std::vector<std::string> warnings;
};

enum class HarnessMode { Http, Replay };

// One generator per entry of config.models, in the same order.
using GeneratorSet = std::vector<std::shared_ptr<Generator>>;
GeneratorSet make_generators(const HarnessConfig& config, HarnessMode mode,
                             HttpGenerator::EventSink on_event = {});

// Evaluates instances x models x prefix lengths with at most
// config.max_inflight concurrent generations. Results, rows and ledgers are
// ordered by (model, prefix length descending, instance order), independent
// of completion order. A ReplayMissError aborts the run.
ExperimentOutput run_experiment(const std::vector<PiInstance>& instances, const HarnessConfig& config,
                                const GeneratorSet& generators, const Tokenizer& tokenizer);

// Groups cell results into rows by (model, checkpoint, prefix_len, pi_type).
std::vector<ExperimentRow> aggregate_rows(const std::vector<CellResult>& results,
                                          const std::vector<FailureRecord>& failures);

// Writes rows.jsonl, results.jsonl, generations.jsonl and failures.jsonl.
void write_experiment(const ExperimentOutput& output, const std::filesystem::path& out_dir);

}  // namespace piscan
